var a = ee.Image(1); // crlf
print(a.log());
