var years = [2016, 2017, 2018, 2019, 2020];
var modis = ee.ImageCollection('MODIS/006/MOD13Q1');

for (var i = 0; i < years.length; i++) {
  var y = years[i];
  var start = ee.Date.fromYMD(y, 1, 1);
  var annual = modis.filterDate(start, start.advance(1, 'year')).select('NDVI').mean();
  Map.addLayer(annual, {min: 0, max: 8000}, 'NDVI ' + y);
}

var count = modis.size();
if (count.getInfo() > 0) {
  print('Images:', count);
} else {
  print('No images');
}
