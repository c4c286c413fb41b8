var dem = ee.Image('USGS/SRTMGL1_003');
var terrain = ee.Terrain.products(dem);
var slope = terrain.select('slope');
var hillshade = ee.Terrain.hillshade(dem, 315, 35);

// Two independent layers from the same DEM.
Map.addLayer(slope, {min: 0, max: 60}, 'Slope');
Map.addLayer(hillshade, {min: 0, max: 255}, 'Hillshade');
