var image = ee.Image('LANDSAT/LC08/C02/T1_TOA/LC08_044034_20140318').select('B5');
var canny = ee.Algorithms.CannyEdgeDetector({image: image, threshold: 0.7, sigma: 1});
var hough = ee.Algorithms.HoughTransform(canny, 256, 600, 100);

Map.setCenter(-122.054, 37.7295, 10);
Map.addLayer(image, {min: 0, max: 0.4}, 'B5');
Map.addLayer(canny.updateMask(canny), {min: 0, max: 1, palette: 'FF0000'}, 'Canny');
Map.addLayer(hough.updateMask(hough), {min: 0, max: 1, palette: '00FF00'}, 'Hough');
