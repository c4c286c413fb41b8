var dem = ee.Image('USGS/SRTMGL1_003');
var region = ee.Geometry.Rectangle([10, 45, 11, 46]);
var out = dem.clip(region).reproject('EPSG:32632', null, 90);
Export.image.toDrive({
  image: out,
  description: 'dem_utm',
  region: region,
  scale: 90
});
