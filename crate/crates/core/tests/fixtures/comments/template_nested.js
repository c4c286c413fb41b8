var y = 2020;
var s = `year ${`${y} // nested`} done`; // c
print(ee.String(s).length());
