var dem = ee.Image('USGS/SRTMGL1_003');
var slope = ee.Terrain.slope(dem);
var steep = slope.gt(30);
Map.addLayer(steep.selfMask(), {palette: 'ff0000'}, 'Steep');
