/**
 * Masks clouds.
 * @param {ee.Image} img
 */
function mask(img) {
  return img.updateMask(img.select('QA').eq(0));
}
print(mask(ee.Image('x')));
