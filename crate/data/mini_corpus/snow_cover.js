var modis = ee.ImageCollection('MODIS/061/MOD10A1')
  .filterDate('2021-01-01', '2021-03-01')
  .select('NDSI_Snow_Cover');
var snow = modis.mean().gt(40).selfMask();
Map.addLayer(snow, {palette: ['ffffff']}, 'Snow');
