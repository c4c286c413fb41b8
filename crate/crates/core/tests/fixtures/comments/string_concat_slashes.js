var u = 'a' + '//' + "b" + '/*'; // concat
print(ee.String(u));
