var lake = ee.FeatureCollection('users/example/lake_boundary');
var jrc = ee.Image('JRC/GSW1_4/GlobalSurfaceWater');
var occurrence = jrc.select('occurrence');
var water = occurrence.gt(50).selfMask();

var area = water.multiply(ee.Image.pixelArea()).reduceRegion({
  reducer: ee.Reducer.sum(),
  geometry: lake.geometry(),
  scale: 30,
  maxPixels: 1e10
});
var km2 = ee.Number(area.get('occurrence')).divide(1e6);
print('Water area (km2):', km2);

Map.addLayer(water, {palette: ['0000ff']}, 'Water');
