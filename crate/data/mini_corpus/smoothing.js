var img = ee.Image('USGS/SRTMGL1_003');
var kernel = ee.Kernel.gaussian({radius: 3, sigma: 2});
var smooth = img.convolve(kernel);
var diff = img.subtract(smooth);
Map.addLayer(diff, {min: -20, max: 20}, 'Detail');
