var v = ee.Number(1);
if (true) { // branch a
  print(v.add(1));
} else { /* branch b */
  print(v.subtract(1));
}
