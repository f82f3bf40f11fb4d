//! Background superpixel selection and the hue mixture model fitted to it.
//!
//! The mixture is not fitted by expectation-maximization. Instead the mean
//! hues of the background superpixels are clustered with kmeans++ seeding and
//! Lloyd iterations, and each cluster becomes one component whose mean and
//! variance are taken over every pixel of its superpixels. A component's
//! weight is the fraction of background superpixels in its cluster.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::BinaryImage;
use crate::superpixels::SuperpixelPartition;

/// Lower bound on component variance, in squared hue units.
pub const VARIANCE_FLOOR: f64 = 0.25;

/// Lloyd iteration cap.
pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Component {
    pub fn pdf(&self, h: f64) -> f64 {
        let sigma = self.variance.sqrt();
        let z = h - self.mean;
        (-(z * z) / (2.0 * self.variance)).exp() / (sigma * (2.0 * PI).sqrt())
    }
}

/// Weighted sum of univariate normal densities over hue.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    components: Vec<Component>,
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        for c in &components {
            if !(c.weight > 0.0) || !(c.variance > 0.0) || !c.mean.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid mixture component {c:?}")));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}")));
        }
        Ok(GaussianMixture { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Mixture density `p(h) = sum_j w_j N(h; mu_j, sigma_j^2)`.
    pub fn pdf(&self, h: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(h)).sum()
    }

    pub fn log_likelihood(&self, samples: impl IntoIterator<Item = f64>) -> f64 {
        samples.into_iter().map(|h| self.pdf(h).ln()).sum()
    }
}

/// One component per line: `weight mean variance`.
impl fmt::Display for GaussianMixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            writeln!(f, "{} {} {}", c.weight, c.mean, c.variance)?;
        }
        Ok(())
    }
}

impl FromStr for GaussianMixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut comps = Vec::new();
        for (n, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("mixture line {}: {e}", n + 1)))?;
            let [weight, mean, variance] = vals[..] else {
                return Err(Error::InvalidArgument(format!("mixture line {}: expected 3 fields", n + 1)));
            };
            comps.push(Component { weight, mean, variance });
        }
        GaussianMixture::new(comps)
    }
}

/// Superpixels judged to be background.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundSet {
    /// Member ids in increasing order.
    pub ids: Vec<u32>,
    /// Membership flag indexed by superpixel id.
    pub member: Vec<bool>,
    pub pixel_count: usize,
    /// Mean hue of each member, parallel to `ids`.
    pub hue_means: Vec<f64>,
}

impl BackgroundSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.member.get(id as usize).copied().unwrap_or(false)
    }
}

/// Keeps the superpixels of `rectangular` whose fraction of white pixels in
/// `thresholded` is strictly greater than `zeta`.
pub fn select_background_superpixels(
    rectangular: &[u32],
    partition: &SuperpixelPartition,
    thresholded: &BinaryImage,
    zeta: f64,
) -> Result<BackgroundSet> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidArgument(format!("zeta = {zeta} outside [0, 1]")));
    }
    if thresholded.dims() != partition.dims() {
        return Err(Error::DimensionMismatch { left: partition.dims(), right: thresholded.dims() });
    }
    let mut white = vec![0usize; partition.len()];
    for (&l, &t) in partition.labels().iter().zip(thresholded.data()) {
        white[l as usize] += usize::from(t);
    }
    let mut ids: Vec<u32> = rectangular
        .iter()
        .copied()
        .filter(|&id| {
            let area = partition.cell(id).count;
            area > 0 && white[id as usize] as f64 / area as f64 > zeta
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    let mut member = vec![false; partition.len()];
    for &id in &ids {
        member[id as usize] = true;
    }
    let pixel_count = ids.iter().map(|&id| partition.cell(id).count).sum();
    let hue_means = ids.iter().map(|&id| partition.cell(id).hue_mean()).collect();
    Ok(BackgroundSet { ids, member, pixel_count, hue_means })
}

/// kmeans++ seeding followed by Lloyd iterations on scalar values.
///
/// `k` is reduced to the number of distinct values; clusters that end up
/// empty are dropped. Returns per-value cluster index and the number of
/// clusters.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> (Vec<usize>, usize) {
    assert!(!values.is_empty() && k >= 1);
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = k.min(distinct.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if d > 0.0 && acc > target {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave `target` at the very end of the cumulative sum
        let pick = pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"));
        let c = values[pick];
        centers.push(c);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c).powi(2));
        }
    }

    let nearest = |v: f64, centers: &[f64]| -> usize {
        let mut best = 0;
        for (j, c) in centers.iter().enumerate().skip(1) {
            if (v - c).abs() < (v - centers[best]).abs() {
                best = j;
            }
        }
        best
    };
    let mut assign: Vec<usize> = values.iter().map(|&v| nearest(v, &centers)).collect();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![0.0; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (&a, &v) in assign.iter().zip(values) {
            sums[a] += v;
            counts[a] += 1;
        }
        // drop empty clusters
        let keep: Vec<usize> = (0..centers.len()).filter(|&j| counts[j] > 0).collect();
        centers = keep.iter().map(|&j| sums[j] / counts[j] as f64).collect();
        let next: Vec<usize> = values.iter().map(|&v| nearest(v, &centers)).collect();
        let stable = next == assign && keep.len() == counts.len();
        assign = next;
        if stable {
            break;
        }
    }

    // relabel so cluster ids follow increasing center and are dense
    let mut used: Vec<usize> = assign.clone();
    used.sort_unstable();
    used.dedup();
    let mut order: Vec<usize> = used.clone();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let mut remap = vec![usize::MAX; centers.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new;
    }
    let assign = assign.into_iter().map(|a| remap[a]).collect();
    (assign, order.len())
}

/// Mixture over hue estimated from the background superpixels.
///
/// Partition statistics (`count`, `hue_sum`, `hue_sq_sum`) must be current,
/// which holds for partitions returned by `refine`.
pub fn estimate_gmm(
    background: &BackgroundSet,
    partition: &SuperpixelPartition,
    k: usize,
    seed: u64,
) -> Result<GaussianMixture> {
    if background.is_empty() {
        return Err(Error::NoBackground);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let (assign, clusters) = kmeans_1d(&background.hue_means, k, seed);

    let mut n = vec![0u128; clusters];
    let mut s = vec![0u128; clusters];
    let mut q = vec![0u128; clusters];
    let mut members = vec![0usize; clusters];
    for (&id, &j) in background.ids.iter().zip(&assign) {
        let c = partition.cell(id);
        n[j] += c.count as u128;
        s[j] += u128::from(c.hue_sum);
        q[j] += u128::from(c.hue_sq_sum);
        members[j] += 1;
    }
    let total = background.len() as f64;
    let components = (0..clusters)
        .map(|j| {
            let mean = s[j] as f64 / n[j] as f64;
            // n*q - s^2 >= 0 by Cauchy-Schwarz
            let var = (n[j] * q[j] - s[j] * s[j]) as f64 / (n[j] as f64 * n[j] as f64);
            Component { weight: members[j] as f64 / total, mean, variance: var.max(VARIANCE_FLOOR) }
        })
        .collect();
    GaussianMixture::new(components)
}
