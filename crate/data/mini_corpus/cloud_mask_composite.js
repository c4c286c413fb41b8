// Sentinel-2 cloud-masked median composite over a study area.
var roi = ee.Geometry.Rectangle([116.0, 39.6, 116.8, 40.2]);

function maskS2clouds(image) {
  var qa = image.select('QA60');
  var cloudBitMask = 1 << 10;
  var cirrusBitMask = 1 << 11;
  var mask = qa.bitwiseAnd(cloudBitMask).eq(0)
      .and(qa.bitwiseAnd(cirrusBitMask).eq(0));
  return image.updateMask(mask).divide(10000);
}

var dataset = ee.ImageCollection('COPERNICUS/S2_SR')
    .filterDate('2021-05-01', '2021-09-30')
    .filterBounds(roi)
    // Pre-filter to get less cloudy granules.
    .filter(ee.Filter.lt('CLOUDY_PIXEL_PERCENTAGE', 20))
    .map(maskS2clouds);

var composite = dataset.median().clip(roi);
var rgbVis = {min: 0.0, max: 0.3, bands: ['B4', 'B3', 'B2']};

Map.centerObject(roi, 9);
Map.addLayer(composite, rgbVis, 'RGB');
