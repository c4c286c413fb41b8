var counties = ee.FeatureCollection('TIGER/2018/Counties')
    .filter(ee.Filter.eq('STATEFP', '06'));
var precip = ee.ImageCollection('IDAHO_EPSCOR/TERRACLIMATE')
    .filterDate('2020-01-01', '2021-01-01')
    .select('pr')
    .sum();

var stats = precip.reduceRegions({
  collection: counties,
  reducer: ee.Reducer.mean(),
  scale: 4000
});

Export.table.toDrive({collection: stats, description: 'ca_precip', fileFormat: 'CSV'});
