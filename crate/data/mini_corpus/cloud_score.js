var l8 = ee.ImageCollection('LANDSAT/LC08/C02/T1_TOA')
  .filterDate('2019-01-01', '2020-01-01')
  .filterBounds(ee.Geometry.Point(-122.26, 37.87));
var scored = l8.map(function(img) {
  var score = ee.Algorithms.Landsat.simpleCloudScore(img).select('cloud');
  return img.updateMask(score.lt(20));
});
var composite = scored.median();
Map.addLayer(composite, {bands: ['B4', 'B3', 'B2'], max: 0.3}, 'Composite');
