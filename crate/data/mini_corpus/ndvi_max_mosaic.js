var collection = ee.ImageCollection('LANDSAT/LC08/C01/T1_SR')
  .filterBounds(ee.Geometry.Point(-122.262, 37.8719))
  .map(function(image) {
    var ndvi = image.normalizedDifference(['B5', 'B4']);
    return ndvi;
  });
var maxNDVI = collection.qualityMosaic('nd');
Map.addLayer(maxNDVI, {min: 0, max: 1}, 'Max NDVI');
