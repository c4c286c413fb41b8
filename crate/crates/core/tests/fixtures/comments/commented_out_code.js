var img = ee.Image('x');
// Map.addLayer(img.select('B1'));
/* print(img.bandNames()); */
print(img.select('B2'));
