var lc = ee.ImageCollection('ESA/WorldCover/v200').first();
var urban = lc.eq(50).selfMask();
var region = ee.Geometry.Point(2.35, 48.85).buffer(20000);
Map.centerObject(region, 10);
Map.addLayer(urban.clip(region), {palette: ['808080']}, 'Urban');
