var img = ee.Image('LANDSAT/LC08/C02/T1_TOA/LC08_044034_20140318');
var evi = img.expression(
  '2.5 * ((NIR - RED) / (NIR + 6 * RED - 7.5 * BLUE + 1))', {
    NIR: img.select('B5'),
    RED: img.select('B4'),
    BLUE: img.select('B2')
  });
Map.addLayer(evi, {min: -1, max: 1, palette: ['red', 'white', 'green']}, 'EVI');
