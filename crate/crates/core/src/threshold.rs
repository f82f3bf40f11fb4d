//! Global Otsu thresholding and local adaptive thresholding.

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, GrayImage};

/// 256-bin intensity histogram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram256 {
    bins: [u64; 256],
    total: u64,
}

impl Histogram256 {
    pub fn from_counts(bins: [u64; 256]) -> Self {
        let total = bins.iter().sum();
        Histogram256 { bins, total }
    }

    pub fn from_samples(samples: &[u8]) -> Self {
        let mut bins = [0u64; 256];
        for &v in samples {
            bins[v as usize] += 1;
        }
        Histogram256 { bins, total: samples.len() as u64 }
    }

    pub fn from_image(img: &GrayImage) -> Self {
        Self::from_samples(img.data())
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Largest histogram total for which the exact comparison below cannot overflow.
pub const MAX_OTSU_SAMPLES: u64 = 1 << 28;

/// `a * b` as a 256-bit `(high, low)` pair.
fn widening_mul(a: u128, b: u64) -> (u128, u128) {
    let lo_half = (a as u64) as u128 * b as u128;
    let hi_half = (a >> 64) * b as u128;
    let (low, carry) = lo_half.overflowing_add(hi_half << 64);
    ((hi_half >> 64) + carry as u128, low)
}

/// Otsu threshold `t*`: the smallest `t` maximizing the between-class
/// variance of the split `{v < t}` / `{v >= t}`.
///
/// The between-class variance is proportional to `(N*S0 - n0*S)^2 / (n0*n1)`
/// with `n0, S0` the count and sum of the lower class and `N, S` the totals;
/// candidates are compared on that quantity with exact integer arithmetic so
/// ties resolve deterministically. A histogram with a single populated value
/// returns that value, which classifies every sample as `>= t*`.
pub fn otsu_threshold(hist: &Histogram256) -> Result<u8> {
    let n = hist.total;
    if n == 0 {
        return Err(Error::InvalidArgument("Otsu threshold of an empty histogram".into()));
    }
    if n > MAX_OTSU_SAMPLES {
        return Err(Error::InvalidArgument(format!("histogram total {n} exceeds {MAX_OTSU_SAMPLES}")));
    }
    let s: u64 = hist.bins.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best_t: Option<u8> = None;
    // score numerator X^2 and denominator D of the current best
    let mut best = (0u128, 1u64);
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    for t in 0..256usize {
        if t > 0 {
            n0 += hist.bins[t - 1];
            s0 += (t as u64 - 1) * hist.bins[t - 1];
        }
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let x = (n as i128 * s0 as i128 - n0 as i128 * s as i128).unsigned_abs();
        let num = x * x;
        let den = n0 * n1;
        // num/den > best.0/best.1
        if widening_mul(num, best.1) > widening_mul(best.0, den) {
            best = (num, den);
            best_t = Some(t as u8);
        }
    }
    match best_t {
        Some(t) => Ok(t),
        // single populated value
        None => Ok(hist.bins.iter().position(|&c| c > 0).expect("non-empty") as u8),
    }
}

pub fn otsu_threshold_image(img: &GrayImage) -> Result<u8> {
    otsu_threshold(&Histogram256::from_image(img))
}

/// `T_i = 1` iff `v_i >= t`.
pub fn binarize(img: &GrayImage, t: u8) -> BinaryImage {
    let data = img.data().iter().map(|&v| u8::from(v >= t)).collect();
    BinaryImage::from_vec(img.width(), img.height(), data).expect("same dims")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptiveMethod {
    Gaussian,
    Mean,
}

/// Gaussian sigma used for a given block size.
pub fn gaussian_sigma(block_size: usize) -> f64 {
    0.3 * ((block_size as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

fn kernel(method: AdaptiveMethod, block_size: usize) -> Vec<f64> {
    let r = (block_size / 2) as isize;
    match method {
        AdaptiveMethod::Mean => vec![1.0 / block_size as f64; block_size],
        AdaptiveMethod::Gaussian => {
            let sigma = gaussian_sigma(block_size);
            let raw: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        }
    }
}

/// Mirror index without repeating the edge sample (`dcb|abcd|cba`).
fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * n - 2 - i;
        } else {
            return i as usize;
        }
    }
}

/// Local threshold `(weighted block mean) - c`; the output is 1 where the
/// pixel is strictly greater than its local threshold.
pub fn adaptive_threshold(img: &GrayImage, method: AdaptiveMethod, block_size: usize, c: f64) -> Result<BinaryImage> {
    if block_size < 3 || block_size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("block size must be odd and >= 3, got {block_size}")));
    }
    let (w, h) = img.dims();
    let k = kernel(method, block_size);
    let r = (block_size / 2) as isize;
    let src = img.data();

    let mut horiz = vec![0f64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &wk) in k.iter().enumerate() {
                acc += wk * f64::from(row[reflect101(x as isize + j as isize - r, w)]);
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, &wk) in k.iter().enumerate() {
                acc += wk * horiz[reflect101(y as isize + j as isize - r, h) * w + x];
            }
            out[y * w + x] = u8::from(f64::from(src[y * w + x]) > acc - c);
        }
    }
    BinaryImage::from_vec(w, h, out)
}
