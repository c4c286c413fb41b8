var image1 = ee.Image('LANDSAT/LC08/C01/T1_SR/LC08_044034_20140318');
var image2 = ee.Image('LANDSAT/LC08/C01/T1_SR/LC08_044035_20140318');
var ndvi1 = image1.normalizedDifference(['B5', 'B4']);
var ndvi2 = image2.normalizedDifference(['B5', 'B4']);
Map.addLayer(ndvi1, {min: 0, max: 1}, 'NDVI1');
Map.addLayer(ndvi2, {min: 0, max: 1}, 'NDVI2');
