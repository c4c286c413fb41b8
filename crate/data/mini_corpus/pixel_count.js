var lc = ee.ImageCollection('ESA/WorldCover/v200').first();
var region = ee.Geometry.Rectangle([5, 50, 6, 51]);
var counts = lc.reduceRegion({
  reducer: ee.Reducer.frequencyHistogram(),
  geometry: region,
  scale: 100,
  maxPixels: 1e9
});
print(counts.get('Map'));
