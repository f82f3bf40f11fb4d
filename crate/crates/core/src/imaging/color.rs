use rayon::prelude::*;

use super::raster::{GrayImage, HsvImage, RgbImage};

/// Hexcone HSV of one pixel: hue in half degrees `[0, 179]`, saturation and
/// value in `[0, 255]`. Achromatic pixels get hue 0.
///
/// Integer arithmetic with round-half-up, so the result is exact and
/// platform independent.
#[inline]
pub fn hsv_pixel([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (i32::from(r), i32::from(g), i32::from(b));
    let v = r.max(g).max(b);
    let min = r.min(g).min(b);
    let diff = v - min;
    if diff == 0 {
        return [0, 0, v as u8];
    }
    let s = (2 * 255 * diff + v) / (2 * v);
    // hue * diff, in half degrees
    let mut scaled = if v == r {
        30 * (g - b)
    } else if v == g {
        60 * diff + 30 * (b - r)
    } else {
        120 * diff + 30 * (r - g)
    };
    if scaled < 0 {
        scaled += 180 * diff;
    }
    let mut h = (2 * scaled + diff) / (2 * diff);
    if h >= 180 {
        h -= 180;
    }
    [h as u8, s as u8, v as u8]
}

/// Converts an RGB image to HSV planes.
pub fn rgb_to_hsv(img: &RgbImage) -> HsvImage {
    let (w, h) = img.dims();
    let mut hue = vec![0u8; w * h];
    let mut sat = vec![0u8; w * h];
    let mut val = vec![0u8; w * h];
    hue.par_chunks_mut(w)
        .zip(sat.par_chunks_mut(w))
        .zip(val.par_chunks_mut(w))
        .zip(img.data().par_chunks(w * 3))
        .for_each(|(((hr, sr), vr), src)| {
            for (i, px) in src.chunks_exact(3).enumerate() {
                let [hh, ss, vv] = hsv_pixel([px[0], px[1], px[2]]);
                hr[i] = hh;
                sr[i] = ss;
                vr[i] = vv;
            }
        });
    HsvImage {
        hue: GrayImage::from_vec(w, h, hue).expect("dims from source"),
        saturation: GrayImage::from_vec(w, h, sat).expect("dims from source"),
        value: GrayImage::from_vec(w, h, val).expect("dims from source"),
    }
}

/// Inverse conversion used by the scene generator. Hue in degrees `[0, 360)`,
/// saturation and value in `[0, 1]`.
pub fn hsv_to_rgb(hue_deg: f64, sat: f64, val: f64) -> [u8; 3] {
    let s = sat.clamp(0.0, 1.0);
    let v = val.clamp(0.0, 1.0);
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let q = |t: f64| ((t + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r), q(g), q(b)]
}

/// Rec. 601 luma, used when baselines run on intensity instead of hue.
pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    let (w, h) = img.dims();
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let y = 299 * u32::from(p[0]) + 587 * u32::from(p[1]) + 114 * u32::from(p[2]);
            ((y + 500) / 1000) as u8
        })
        .collect();
    GrayImage::from_vec(w, h, data).expect("dims from source")
}
