var pre = ee.ImageCollection('COPERNICUS/S2_SR_HARMONIZED')
  .filterDate('2021-06-01', '2021-07-01').median();
var post = ee.ImageCollection('COPERNICUS/S2_SR_HARMONIZED')
  .filterDate('2021-09-01', '2021-10-01').median();
var nbrPre = pre.normalizedDifference(['B8', 'B12']);
var nbrPost = post.normalizedDifference(['B8', 'B12']);
var dnbr = nbrPre.subtract(nbrPost);
Map.addLayer(dnbr, {min: -0.5, max: 1, palette: ['green', 'yellow', 'red']}, 'dNBR');
