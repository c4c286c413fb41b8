var image = ee.Image('LANDSAT/LC08/C01/T1_SR/LC08_044034_20140318');
var ndvi = image.normalizedDifference(['B5', 'B4']);
Map.addLayer(ndvi, {min: 0, max: 1}, 'NDVI');
