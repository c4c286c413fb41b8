var points = ee.FeatureCollection.randomPoints(ee.Geometry.Rectangle([0, 40, 2, 42]), 50);
var dem = ee.Image('USGS/SRTMGL1_003');
var sampled = dem.sampleRegions({collection: points, scale: 30});
print(sampled.limit(5));
Map.addLayer(points, {color: 'red'}, 'Points');
