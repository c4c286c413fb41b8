var s2 = ee.ImageCollection('COPERNICUS/S2_SR_HARMONIZED')
  .filterDate('2022-06-01', '2022-09-01')
  .filterBounds(ee.Geometry.Point(8.54, 47.37));
var img = s2.sort('CLOUDY_PIXEL_PERCENTAGE').first();
Map.centerObject(img, 10);
Map.addLayer(img, {bands: ['B4', 'B3', 'B2'], min: 0, max: 3000}, 'RGB');
