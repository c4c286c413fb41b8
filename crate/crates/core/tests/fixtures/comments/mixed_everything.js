/* mixed */ var col = ee.ImageCollection("a//b") // src
  .filter(ee.Filter.stringContains('id', '/*')) /* filter */
  .map(function (i) { return i.set('t', `${i.id()} //t`); }); // map
var re = /\/\*.*\*\//; print(re, col.size()); // end
