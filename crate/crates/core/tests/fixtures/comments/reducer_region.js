var stats = ee.Image('x').reduceRegion({
  reducer: ee.Reducer.mean(), // mean
  geometry: ee.Geometry.Rectangle([0, 0, 1, 1]), /* box */
  scale: 100
});
print(stats);
