var cities = ee.FeatureCollection('users/example/cities')
  .filter(ee.Filter.gt('population', 1000000));

var buffered = cities.map(function(f) {
  return f.buffer(5000).set('area', f.buffer(5000).area());
});

var total = buffered.aggregate_sum('area');
print('Total buffered area', total);
Map.addLayer(buffered, {color: 'red'}, 'Buffers');
Map.centerObject(buffered);
