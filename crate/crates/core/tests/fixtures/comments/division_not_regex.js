var a = ee.Number(10).divide(2) / 5 / 1; // divisions
print(a);
