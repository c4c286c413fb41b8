var counties = ee.FeatureCollection('TIGER/2018/Counties')
  .filter(ee.Filter.eq('STATEFP', '06'));
var dem = ee.Image('USGS/SRTMGL1_003');
var means = dem.reduceRegions({
  collection: counties,
  reducer: ee.Reducer.mean(),
  scale: 1000
});
Export.table.toDrive({collection: means, description: 'county_elevation'});
