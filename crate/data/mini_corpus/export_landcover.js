/* Export a land-cover map for a region to Drive and as an asset. */
var region = ee.Geometry.Polygon([[[-60.5, -3.5], [-60.5, -2.5], [-59.5, -2.5], [-59.5, -3.5]]]);
var landcover = ee.Image('ESA/WorldCover/v100/2020').select('Map').clip(region);

Export.image.toDrive({
  image: landcover,
  description: 'worldcover_region',
  region: region,
  scale: 10,
  maxPixels: 1e13
});

Export.image.toAsset({
  image: landcover,
  description: 'worldcover_asset',
  region: region,
  scale: 10
});
