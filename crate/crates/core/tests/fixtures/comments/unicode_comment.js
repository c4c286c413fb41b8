var a = ee.Image(3); // Höhenmodell über alles
/* 数据 */ print(a.exp());
