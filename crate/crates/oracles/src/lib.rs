//! Slow, direct reference implementations. They share no code with
//! `treeseg` and operate on plain slices so test suites can cross-check the
//! library against them.

use num_bigint::BigInt;
use num_rational::BigRational;

/// Otsu threshold by exhaustive search over `t` of the between-class variance
/// `w0*w1*(mu0 - mu1)^2` in exact rationals; the first maximizing `t` wins.
/// Returns the only populated value when there is no valid split.
pub fn otsu(bins: &[u64; 256]) -> u8 {
    let n: u64 = bins.iter().sum();
    assert!(n > 0, "empty histogram");
    let r = |a: u64, b: u64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let mut best: Option<(BigRational, u8)> = None;
    for t in 1..256usize {
        let n0: u64 = bins[..t].iter().sum();
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s0: u64 = bins[..t].iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
        let s1: u64 = bins[t..].iter().enumerate().map(|(v, &c)| (v + t) as u64 * c).sum();
        let d = r(s0, n0) - r(s1, n1);
        let score = r(n0, n) * r(n1, n) * d.clone() * d;
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, t as u8));
        }
    }
    best.map(|(_, t)| t).unwrap_or_else(|| bins.iter().position(|&c| c > 0).unwrap() as u8)
}

fn neighbors8(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    (-1isize..=1).flat_map(move |dy| (-1isize..=1).map(move |dx| (dx, dy))).filter_map(move |(dx, dy)| {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        ((dx, dy) != (0, 0) && nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h)
            .then_some((nx as usize, ny as usize))
    })
}

/// 8-connected labeling by recursive flood fill; labels start at 1 in raster
/// order of each component's first pixel, 0 marks unset pixels.
pub fn flood_labels(w: usize, h: usize, set: &[bool]) -> Vec<u32> {
    fn flood(w: usize, h: usize, set: &[bool], labels: &mut [u32], x: usize, y: usize, id: u32) {
        labels[y * w + x] = id;
        for (nx, ny) in neighbors8(x, y, w, h) {
            if set[ny * w + nx] && labels[ny * w + nx] == 0 {
                flood(w, h, set, labels, nx, ny, id);
            }
        }
    }
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    for y in 0..h {
        for x in 0..w {
            if set[y * w + x] && labels[y * w + x] == 0 {
                next += 1;
                flood(w, h, set, &mut labels, x, y, next);
            }
        }
    }
    labels
}

/// Unset pixels 4-connected to the frame border.
pub fn exterior(w: usize, h: usize, set: &[bool]) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let mut stack: Vec<(usize, usize)> =
        (0..w).flat_map(|x| [(x, 0), (x, h - 1)]).chain((0..h).flat_map(|y| [(0, y), (w - 1, y)])).collect();
    while let Some((x, y)) = stack.pop() {
        let i = y * w + x;
        if set[i] || out[i] {
            continue;
        }
        out[i] = true;
        if x > 0 {
            stack.push((x - 1, y));
        }
        if x + 1 < w {
            stack.push((x + 1, y));
        }
        if y > 0 {
            stack.push((x, y - 1));
        }
        if y + 1 < h {
            stack.push((x, y + 1));
        }
    }
    out
}

/// `(tp, fp, fn, tn)` by direct counting.
pub fn confusion(pred: &[bool], truth: &[bool]) -> (u64, u64, u64, u64) {
    assert_eq!(pred.len(), truth.len());
    let mut c = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.0 += 1,
            (true, false) => c.1 += 1,
            (false, true) => c.2 += 1,
            (false, false) => c.3 += 1,
        }
    }
    c
}

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Univariate Gaussian mixture as parallel vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl Mixture {
    pub fn pdf(&self, x: f64) -> f64 {
        (0..self.weights.len())
            .map(|j| {
                let v = self.variances[j];
                let z = x - self.means[j];
                self.weights[j] * (-(z * z) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
            })
            .sum()
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.pdf(x).ln()).sum()
    }
}

/// Expectation-maximization fit of a `k`-component mixture, initialized at
/// evenly spaced sample quantiles, with variances kept at or above `floor`.
pub fn em_fit(samples: &[f64], k: usize, floor: f64, iterations: usize) -> Mixture {
    assert!(!samples.is_empty() && k >= 1);
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let means = (0..k).map(|j| sorted[((2 * j + 1) * n) / (2 * k)]).collect();
    em_from(samples, means, floor, iterations)
}

/// Best-likelihood E-M fit over the quantile start and `restarts` starts
/// whose means are samples picked by a fixed xorshift sequence.
pub fn em_fit_best(samples: &[f64], k: usize, floor: f64, iterations: usize, restarts: usize) -> Mixture {
    let mut best = em_fit(samples, k, floor, iterations);
    let mut best_ll = best.log_likelihood(samples);
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    for _ in 0..restarts {
        let means = (0..k)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                samples[(state % samples.len() as u64) as usize]
            })
            .collect();
        let m = em_from(samples, means, floor, iterations);
        let ll = m.log_likelihood(samples);
        if ll > best_ll {
            best = m;
            best_ll = ll;
        }
    }
    best
}

fn em_from(samples: &[f64], means: Vec<f64>, floor: f64, iterations: usize) -> Mixture {
    let n = samples.len();
    let k = means.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).max(floor);
    let mut m = Mixture { weights: vec![1.0 / k as f64; k], means, variances: vec![var; k] };
    let mut resp = vec![0.0; n * k];
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..iterations {
        for (i, &x) in samples.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut total = 0.0;
            for (j, r) in row.iter_mut().enumerate() {
                let v = m.variances[j];
                let z = x - m.means[j];
                *r = m.weights[j] * (-(z * z) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
                total += *r;
            }
            for r in row.iter_mut() {
                *r = if total > 0.0 { *r / total } else { 1.0 / k as f64 };
            }
        }
        for j in 0..k {
            let nj: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if nj < 1e-12 {
                continue;
            }
            let mu = (0..n).map(|i| resp[i * k + j] * samples[i]).sum::<f64>() / nj;
            let v = (0..n).map(|i| resp[i * k + j] * (samples[i] - mu).powi(2)).sum::<f64>() / nj;
            m.weights[j] = nj / n as f64;
            m.means[j] = mu;
            m.variances[j] = v.max(floor);
        }
        let total: f64 = m.weights.iter().sum();
        m.weights.iter_mut().for_each(|w| *w /= total);
        let ll = m.log_likelihood(samples);
        if (ll - prev).abs() < 1e-10 * ll.abs().max(1.0) {
            break;
        }
        prev = ll;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn otsu_two_values() {
        let mut bins = [0u64; 256];
        bins[10] = 3;
        bins[200] = 3;
        assert_eq!(otsu(&bins), 11);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn em_separates_two_clusters() {
        let samples: Vec<f64> = (0..100).map(|i| if i < 50 { 10.0 + (i % 3) as f64 } else { 90.0 - (i % 2) as f64 }).collect();
        let m = em_fit(&samples, 2, 0.25, 200);
        let mut means = m.means.clone();
        means.sort_by(f64::total_cmp);
        assert!((means[0] - 11.0).abs() < 0.1 && (means[1] - 89.5).abs() < 0.1, "{means:?}");
    }

    #[test]
    fn flood_and_exterior() {
        // ring with a hole
        let set: Vec<bool> = (0..25).map(|i| {
            let (x, y) = (i % 5, i / 5);
            (1..=3).contains(&x) && (1..=3).contains(&y) && (x, y) != (2, 2)
        }).collect();
        let labels = flood_labels(5, 5, &set);
        assert_eq!(labels.iter().copied().max(), Some(1));
        let ext = exterior(5, 5, &set);
        assert!(!ext[12] && ext[0]);
    }
}
