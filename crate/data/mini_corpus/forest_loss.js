var gfc = ee.Image('UMD/hansen/global_forest_change_2022_v1_10');
var loss = gfc.select('lossyear');
var recent = loss.gt(15).selfMask();
var region = ee.Geometry.Rectangle([-62, -10, -60, -8]);
var stats = recent.multiply(ee.Image.pixelArea()).reduceRegion({
  reducer: ee.Reducer.sum(),
  geometry: region,
  scale: 30,
  maxPixels: 1e9
});
print(stats);
Map.addLayer(recent, {palette: ['ff0000']}, 'Loss');
