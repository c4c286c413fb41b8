var geom = /* point */ ee.Geometry.Point(10, 20);
var buf = geom.buffer(100); // metres
Map.addLayer(buf);
