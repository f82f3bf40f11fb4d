use super::raster::BinaryImage;

/// Sets every 0-pixel that is not 4-connected to the image border to 1.
///
/// The background flood uses 4-connectivity so that 8-connected foreground
/// curves, including one-pixel Bresenham lines, close off the regions they
/// surround.
pub fn fill_holes(img: &BinaryImage) -> BinaryImage {
    let (w, h) = img.dims();
    let data = img.data();
    let mut reached = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    let seed = |i: usize, reached: &mut [bool], stack: &mut Vec<usize>| {
        if data[i] == 0 && !reached[i] {
            reached[i] = true;
            stack.push(i);
        }
    };
    for x in 0..w {
        seed(x, &mut reached, &mut stack);
        seed((h - 1) * w + x, &mut reached, &mut stack);
    }
    for y in 0..h {
        seed(y * w, &mut reached, &mut stack);
        seed(y * w + w - 1, &mut reached, &mut stack);
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        if x > 0 {
            seed(i - 1, &mut reached, &mut stack);
        }
        if x + 1 < w {
            seed(i + 1, &mut reached, &mut stack);
        }
        if y > 0 {
            seed(i - w, &mut reached, &mut stack);
        }
        if y + 1 < h {
            seed(i + w, &mut reached, &mut stack);
        }
    }
    let out = reached.iter().map(|&r| u8::from(!r)).collect();
    BinaryImage::from_vec(w, h, out).expect("same dims")
}
