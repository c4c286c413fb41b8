var lst = ee.ImageCollection('MODIS/061/MOD11A2')
  .filterDate('2020-01-01', '2021-01-01')
  .select('LST_Day_1km');
var celsius = lst.mean().multiply(0.02).subtract(273.15);
Map.addLayer(celsius, {min: -10, max: 40, palette: ['blue', 'yellow', 'red']}, 'LST');
