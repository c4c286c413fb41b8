var dem = ee.Image('USGS/SRTMGL1_003');
var region = ee.Geometry.Rectangle([-120, 37, -119, 38]);
var chart = ui.Chart.image.histogram(dem, region, 500);
print(chart);
