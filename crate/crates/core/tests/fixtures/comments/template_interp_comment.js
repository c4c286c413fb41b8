var band = 'B4';
var expr = `${ /* inside interpolation */ band.toLowerCase() }_mean`;
print(ee.String(expr));
