var chirps = ee.ImageCollection('UCSB-CHG/CHIRPS/DAILY');
var months = ee.List.sequence(1, 12);
var monthly = ee.ImageCollection.fromImages(months.map(function(m) {
  return chirps.filter(ee.Filter.calendarRange(m, m, 'month'))
    .filterDate('2020-01-01', '2021-01-01')
    .sum()
    .set('month', m);
}));
print(monthly.size());
