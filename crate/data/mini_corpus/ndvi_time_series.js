var point = ee.Geometry.Point([-121.9, 37.4]);

var addNDVI = function(img) {
  var ndvi = img.normalizedDifference(['SR_B5', 'SR_B4']).rename('NDVI');
  return img.addBands(ndvi);
};

var l8 = ee.ImageCollection('LANDSAT/LC08/C02/T1_L2')
  .filterBounds(point)
  .filterDate('2019-01-01', '2020-12-31')
  .map(addNDVI);

var chart = ui.Chart.image.series({
  imageCollection: l8.select('NDVI'),
  region: point,
  reducer: ee.Reducer.mean(),
  scale: 30
}).setOptions({title: 'NDVI over time'});

print(chart);
