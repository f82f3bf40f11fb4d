use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treeseg::imaging::GrayImage;
use treeseg::threshold::{adaptive_threshold, gaussian_sigma, otsu_threshold, AdaptiveMethod, Histogram256};

fn random_histogram(rng: &mut ChaCha8Rng) -> [u64; 256] {
    let mut bins = [0u64; 256];
    match rng.random_range(0..4) {
        // sparse, few populated values: many exact ties
        0 => {
            for _ in 0..rng.random_range(1..5) {
                bins[rng.random_range(0..256)] += rng.random_range(1..4);
            }
        }
        // symmetric pairs produce equal scores at different t
        1 => {
            let c = rng.random_range(1..50);
            let a = rng.random_range(0..128);
            let b = rng.random_range(128..256);
            bins[a] = c;
            bins[b] = c;
            bins[rng.random_range(0..256)] += rng.random_range(0..2);
        }
        2 => {
            for b in bins.iter_mut() {
                *b = rng.random_range(0..1000);
            }
        }
        _ => {
            for _ in 0..rng.random_range(1..5000) {
                bins[rng.random_range(0..256)] += 1;
            }
        }
    }
    bins
}

#[test]
fn otsu_matches_exact_oracle_on_random_histograms() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..1000 {
        let bins = random_histogram(&mut rng);
        let got = otsu_threshold(&Histogram256::from_counts(bins)).unwrap();
        assert_eq!(got, treeseg_oracles::otsu(&bins), "histogram {i}");
    }
}

#[test]
fn otsu_tie_resolves_to_smallest_threshold() {
    // two values: every t in 11..=20 splits identically
    let mut bins = [0u64; 256];
    bins[10] = 5;
    bins[20] = 5;
    assert_eq!(otsu_threshold(&Histogram256::from_counts(bins)).unwrap(), 11);
}

fn arb_gray(w: usize, h: usize) -> impl Strategy<Value = GrayImage> {
    prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| GrayImage::from_vec(w, h, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_threshold_matches_exact_block_sum(img in arb_gray(23, 19), half in 1usize..5) {
        let b = 2 * half + 1;
        let out = adaptive_threshold(&img, AdaptiveMethod::Mean, b, 2.0).unwrap();
        let (w, h) = img.dims();
        for y in half..h.saturating_sub(half) {
            for x in half..w.saturating_sub(half) {
                let mut sum = 0i64;
                for yy in y - half..=y + half {
                    for xx in x - half..=x + half {
                        sum += i64::from(img.get(xx, yy));
                    }
                }
                let n = (b * b) as i64;
                // v > sum/n - 2  <=>  v*n + 2n > sum
                let lhs = i64::from(img.get(x, y)) * n + 2 * n;
                if lhs != sum {
                    prop_assert_eq!(out.is_set(x, y), lhs > sum, "({}, {})", x, y);
                }
            }
        }
    }

    #[test]
    fn adaptive_threshold_is_translation_equivariant(
        img in arb_gray(40, 30),
        dx in 0usize..8,
        dy in 0usize..8,
        gaussian in any::<bool>(),
    ) {
        let method = if gaussian { AdaptiveMethod::Gaussian } else { AdaptiveMethod::Mean };
        let (w, h) = img.dims();
        let shifted = GrayImage::from_fn(w + dx, h + dy, |x, y| {
            if x >= dx && y >= dy { img.get(x - dx, y - dy) } else { 0 }
        }).unwrap();
        let a = adaptive_threshold(&img, method, 11, 2.0).unwrap();
        let b = adaptive_threshold(&shifted, method, 11, 2.0).unwrap();
        let r = 5;
        for y in r..h - r {
            for x in r..w - r {
                prop_assert_eq!(a.get(x, y), b.get(x + dx, y + dy));
            }
        }
    }

    #[test]
    fn gaussian_threshold_matches_direct_convolution(img in arb_gray(21, 21)) {
        let out = adaptive_threshold(&img, AdaptiveMethod::Gaussian, 7, 2.0).unwrap();
        let sigma = gaussian_sigma(7);
        let k: Vec<f64> = (-3i32..=3).map(|i| (-(f64::from(i * i)) / (2.0 * sigma * sigma)).exp()).collect();
        let norm: f64 = k.iter().sum::<f64>().powi(2);
        for y in 3..18usize {
            for x in 3..18usize {
                let mut acc = 0.0;
                for j in 0..7 {
                    for i in 0..7 {
                        acc += k[i] * k[j] * f64::from(img.get(x + i - 3, y + j - 3));
                    }
                }
                let diff = f64::from(img.get(x, y)) - (acc / norm - 2.0);
                if diff.abs() > 1e-9 {
                    prop_assert_eq!(out.is_set(x, y), diff > 0.0);
                }
            }
        }
    }
}
