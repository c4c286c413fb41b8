var viirs = ee.ImageCollection('NOAA/VIIRS/DNB/MONTHLY_V1/VCMSLCFG')
  .filterDate('2021-01-01', '2022-01-01')
  .select('avg_rad');
var mean = viirs.mean();
Map.addLayer(mean, {min: 0, max: 60}, 'Night lights');
