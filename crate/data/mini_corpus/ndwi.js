var img = ee.ImageCollection('COPERNICUS/S2_SR_HARMONIZED')
  .filterDate('2021-05-01', '2021-06-01')
  .median();
var ndwi = img.normalizedDifference(['B3', 'B8']);
var water = ndwi.gt(0).selfMask();
Map.addLayer(water, {palette: ['0000ff']}, 'NDWI water');
