var o = {a: 1};
var t = `${ ({b: o.a}).b } // ok`; // drop
print(t);
