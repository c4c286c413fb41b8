var f = function (a /* first */, b // second
) {
  return ee.Number(a).add(b);
};
print(f(1, 2));
