//! End-to-end segmentation: superpixels and Otsu in parallel, background
//! model, per-pixel labeling and the panel mask.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::background::{estimate_gmm, select_background_superpixels, BackgroundSet, GaussianMixture};
use crate::error::{Error, Result};
use crate::imaging::{
    connected_components, draw_line, fill_holes, paint_component, rgb_to_hsv, trace_contour, BinaryImage, GrayImage,
    Point, RgbImage,
};
use crate::superpixels::{init_grid, rectangular_subset, refine, SeedsConfig, SuperpixelPartition};
use crate::threshold::{binarize, otsu_threshold_image};

/// What happens to label pixels outside the mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskPolicy {
    /// Set to 0.
    Zero,
    /// Set to the given marker value (in an additional label plane).
    Marker(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Minimum white fraction of a rectangular superpixel in the Otsu image.
    pub zeta: f64,
    /// Mask components smaller than this many pixels are discarded.
    pub min_area: usize,
    /// Density at or below which a pixel is labeled foreground.
    pub pt: f64,
    /// Number of mixture components.
    pub k: usize,
    pub seeds: SeedsConfig,
    pub mask_policy: MaskPolicy,
    /// Seed of the kmeans++ generator.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            zeta: 0.8,
            min_area: 2000,
            pt: 0.003,
            k: 10,
            seeds: SeedsConfig::default(),
            mask_policy: MaskPolicy::Zero,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(Error::InvalidConfig(format!("zeta = {} outside [0, 1]", self.zeta)));
        }
        if !(self.pt > 0.0) || !self.pt.is_finite() {
            return Err(Error::InvalidConfig(format!("pt = {} must be positive", self.pt)));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        self.seeds.validate()
    }
}

/// Mixture density at every integer hue.
pub fn density_table(gmm: &GaussianMixture) -> [f64; 256] {
    std::array::from_fn(|h| gmm.pdf(h as f64))
}

fn label_rows(hue: &GrayImage, eligible: impl Fn(usize) -> bool + Sync, lut: &[f64; 256], pt: f64) -> BinaryImage {
    let (w, h) = hue.dims();
    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w).zip(hue.data().par_chunks(w)).enumerate().for_each(|(y, (row, src))| {
        for (x, (o, &v)) in row.iter_mut().zip(src).enumerate() {
            *o = u8::from(eligible(y * w + x) && lut[v as usize] <= pt);
        }
    });
    BinaryImage::from_vec(w, h, out).expect("same dims")
}

/// Density labeling on every pixel: 1 where `p(h) <= pt`.
pub fn label_by_density(hue: &GrayImage, gmm: &GaussianMixture, pt: f64) -> BinaryImage {
    label_rows(hue, |_| true, &density_table(gmm), pt)
}

/// Density labeling with background superpixels set to 0 without evaluating the density.
pub fn assign_labels(
    hue: &GrayImage,
    partition: &SuperpixelPartition,
    gmm: &GaussianMixture,
    background: &BackgroundSet,
    pt: f64,
) -> Result<BinaryImage> {
    if hue.dims() != partition.dims() {
        return Err(Error::DimensionMismatch { left: partition.dims(), right: hue.dims() });
    }
    let labels = partition.labels();
    let member = &background.member;
    Ok(label_rows(hue, |i| !member[labels[i] as usize], &density_table(gmm), pt))
}

/// Result of the mask step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskOutcome {
    pub mask: BinaryImage,
    /// Components of `NOT L` that survived the area filter.
    pub components: usize,
}

impl MaskOutcome {
    pub fn background_found(&self) -> bool {
        self.components > 0
    }
}

/// Builds the mask `M` from a label image.
pub trait MaskStep: Sync {
    fn build(&self, labels: &BinaryImage, min_area: usize) -> MaskOutcome;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NearestSearch {
    /// Uniform grid over contour points.
    #[default]
    Grid,
    /// Every pair of contour points.
    BruteForce,
}

/// Inversion, small-component removal, contour bridging and hole filling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContourBridging {
    pub search: NearestSearch,
}

impl MaskStep for ContourBridging {
    fn build(&self, labels: &BinaryImage, min_area: usize) -> MaskOutcome {
        build_mask_with(labels, min_area, self.search)
    }
}

pub fn build_mask(labels: &BinaryImage, min_area: usize) -> MaskOutcome {
    build_mask_with(labels, min_area, NearestSearch::Grid)
}

fn build_mask_with(labels: &BinaryImage, min_area: usize, search: NearestSearch) -> MaskOutcome {
    let (w, h) = labels.dims();
    let mut mask = labels.invert();
    let mut kept = Vec::new();
    for comp in connected_components(&mask, 1) {
        if comp.area < min_area {
            paint_component(&mut mask, &comp, 0);
        } else {
            kept.push(comp);
        }
    }
    if kept.is_empty() {
        return MaskOutcome { mask: BinaryImage::new(w, h).expect("valid dims"), components: 0 };
    }
    if kept.len() >= 2 {
        let contours: Vec<Vec<Point>> = kept
            .iter()
            .map(|c| {
                let mut pts = trace_contour(c, &mask).points;
                pts.sort_unstable();
                pts.dedup();
                pts
            })
            .collect();
        let pairs = nearest_pairs(&contours, search, w, h);
        for (p, q) in pairs {
            draw_line(&mut mask, p, q, 1);
        }
    }
    MaskOutcome { mask: fill_holes(&mask), components: kept.len() }
}

/// Ordering used to pick among equidistant candidates.
fn key(p: Point, q: Point) -> (u64, usize, usize) {
    (p.dist2(&q), q.y, q.x)
}

const GRID_CELL: usize = 32;

/// Contour points bucketed by grid cell (compressed row storage).
struct PointGrid {
    cols: usize,
    rows: usize,
    start: Vec<usize>,
    points: Vec<Point>,
}

impl PointGrid {
    fn new(points: &[Point], w: usize, h: usize) -> Self {
        let cols = w.div_ceil(GRID_CELL);
        let rows = h.div_ceil(GRID_CELL);
        let cell = |p: &Point| (p.y / GRID_CELL) * cols + p.x / GRID_CELL;
        let mut start = vec![0usize; cols * rows + 1];
        for p in points {
            start[cell(p) + 1] += 1;
        }
        for i in 0..cols * rows {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut sorted = vec![Point::new(0, 0); points.len()];
        for p in points {
            let c = cell(p);
            sorted[fill[c]] = *p;
            fill[c] += 1;
        }
        PointGrid { cols, rows, start, points: sorted }
    }

    fn cell_points(&self, cx: usize, cy: usize) -> &[Point] {
        let c = cy * self.cols + cx;
        &self.points[self.start[c]..self.start[c + 1]]
    }

    /// Improves `best` with the nearest point of this grid to `p`.
    fn nearest(&self, p: Point, best: &mut Option<(u64, usize, usize)>) {
        let (pcx, pcy) = ((p.x / GRID_CELL) as isize, (p.y / GRID_CELL) as isize);
        let max_r = self.cols.max(self.rows) as isize;
        for r in 0..=max_r {
            let mut visit = |cx: isize, cy: isize| {
                if cx < 0 || cy < 0 || cx >= self.cols as isize || cy >= self.rows as isize {
                    return;
                }
                for &q in self.cell_points(cx as usize, cy as usize) {
                    let k = key(p, q);
                    if best.is_none_or(|b| k < b) {
                        *best = Some(k);
                    }
                }
            };
            if r == 0 {
                visit(pcx, pcy);
            } else {
                for cx in pcx - r..=pcx + r {
                    visit(cx, pcy - r);
                    visit(cx, pcy + r);
                }
                for cy in pcy - r + 1..pcy + r {
                    visit(pcx - r, cy);
                    visit(pcx + r, cy);
                }
            }
            // everything beyond ring r is farther than r * GRID_CELL
            let reach = (r as u64 * GRID_CELL as u64).pow(2);
            if best.is_some_and(|b| b.0 <= reach) {
                return;
            }
        }
    }
}

/// For each point of each contour, the nearest point on any other contour.
fn nearest_pairs(contours: &[Vec<Point>], search: NearestSearch, w: usize, h: usize) -> Vec<(Point, Point)> {
    let grids: Vec<PointGrid> = match search {
        NearestSearch::Grid => contours.iter().map(|c| PointGrid::new(c, w, h)).collect(),
        NearestSearch::BruteForce => Vec::new(),
    };
    contours
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, own)| {
            let grids = &grids;
            own.iter().map(move |&p| {
                let mut best = None;
                for (j, other) in contours.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    match search {
                        NearestSearch::Grid => grids[j].nearest(p, &mut best),
                        NearestSearch::BruteForce => {
                            for &q in other {
                                let k = key(p, q);
                                if best.is_none_or(|b| k < b) {
                                    best = Some(k);
                                }
                            }
                        }
                    }
                }
                let (_, y, x) = best.expect("at least two non-empty contours");
                (p, Point::new(x, y))
            })
        })
        .collect()
}

/// `L AND M`.
pub fn apply_mask(labels: &BinaryImage, mask: &BinaryImage) -> Result<BinaryImage> {
    if labels.dims() != mask.dims() {
        return Err(Error::DimensionMismatch { left: labels.dims(), right: mask.dims() });
    }
    let data = labels.data().iter().zip(mask.data()).map(|(&l, &m)| l & m).collect();
    BinaryImage::from_vec(labels.width(), labels.height(), data)
}

/// `L` where `M` is set, `marker` elsewhere.
pub fn apply_mask_marker(labels: &BinaryImage, mask: &BinaryImage, marker: u8) -> Result<GrayImage> {
    if labels.dims() != mask.dims() {
        return Err(Error::DimensionMismatch { left: labels.dims(), right: mask.dims() });
    }
    let data = labels.data().iter().zip(mask.data()).map(|(&l, &m)| if m == 1 { l } else { marker }).collect();
    GrayImage::from_vec(labels.width(), labels.height(), data)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentStatus {
    Ok,
    /// No background superpixel or no mask component was found.
    NoBackground,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageTimings {
    pub hsv: Duration,
    pub superpixels: Duration,
    pub otsu: Duration,
    pub background: Duration,
    pub labels: Duration,
    pub mask: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationResult {
    /// Final label image (1 = object), after masking.
    pub labels: BinaryImage,
    /// Labels before masking.
    pub raw_labels: BinaryImage,
    pub mask: BinaryImage,
    /// Three-valued label plane when the marker policy is active.
    pub marked: Option<GrayImage>,
    pub mixture: Option<GaussianMixture>,
    pub status: SegmentStatus,
    pub otsu_threshold: u8,
    pub rectangular: usize,
    pub background_superpixels: usize,
    pub timings: StageTimings,
}

/// Step 5 and mask application shared by the pipeline and the baselines.
pub fn finish_with_mask(
    raw: BinaryImage,
    cfg: &PipelineConfig,
    mask_step: &dyn MaskStep,
) -> Result<(BinaryImage, BinaryImage, Option<GrayImage>, bool)> {
    let outcome = mask_step.build(&raw, cfg.min_area);
    let labels = apply_mask(&raw, &outcome.mask)?;
    let marked = match cfg.mask_policy {
        MaskPolicy::Zero => None,
        MaskPolicy::Marker(m) => Some(apply_mask_marker(&raw, &outcome.mask, m)?),
    };
    let found = outcome.background_found();
    Ok((labels, outcome.mask, marked, found))
}

pub fn segment(img: &RgbImage, cfg: &PipelineConfig) -> Result<SegmentationResult> {
    segment_with(img, cfg, &ContourBridging::default())
}

/// Runs the whole pipeline with a caller-supplied mask step.
pub fn segment_with(img: &RgbImage, cfg: &PipelineConfig, mask_step: &dyn MaskStep) -> Result<SegmentationResult> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut timings = StageTimings::default();
    let (w, h) = img.dims();

    let hsv = rgb_to_hsv(img);
    timings.hsv = t0.elapsed();

    let (sp, otsu) = rayon::join(
        || -> Result<_> {
            let t = Instant::now();
            let grid = init_grid(w, h, &cfg.seeds)?;
            let partition = refine(grid, &hsv, &cfg.seeds)?;
            let rect = rectangular_subset(&partition);
            Ok((partition, rect, t.elapsed()))
        },
        || -> Result<_> {
            let t = Instant::now();
            let th = otsu_threshold_image(&hsv.hue)?;
            let bin = binarize(&hsv.hue, th);
            Ok((th, bin, t.elapsed()))
        },
    );
    let (partition, rect, sp_time) = sp?;
    let (otsu_threshold, thresholded, otsu_time) = otsu?;
    timings.superpixels = sp_time;
    timings.otsu = otsu_time;

    let t = Instant::now();
    let background = select_background_superpixels(&rect, &partition, &thresholded, cfg.zeta)?;
    let mixture = match estimate_gmm(&background, &partition, cfg.k, cfg.seed) {
        Ok(g) => Some(g),
        Err(Error::NoBackground) => None,
        Err(e) => return Err(e),
    };
    timings.background = t.elapsed();

    let empty = BinaryImage::new(w, h)?;
    let Some(mixture) = mixture else {
        timings.total = t0.elapsed();
        let marked = match cfg.mask_policy {
            MaskPolicy::Zero => None,
            MaskPolicy::Marker(m) => Some(apply_mask_marker(&empty, &empty, m)?),
        };
        return Ok(SegmentationResult {
            labels: empty.clone(),
            raw_labels: empty.clone(),
            mask: empty,
            marked,
            mixture: None,
            status: SegmentStatus::NoBackground,
            otsu_threshold,
            rectangular: rect.len(),
            background_superpixels: 0,
            timings,
        });
    };

    let t = Instant::now();
    let raw = assign_labels(&hsv.hue, &partition, &mixture, &background, cfg.pt)?;
    timings.labels = t.elapsed();

    let t = Instant::now();
    let (labels, mask, marked, found) = finish_with_mask(raw.clone(), cfg, mask_step)?;
    timings.mask = t.elapsed();
    timings.total = t0.elapsed();

    Ok(SegmentationResult {
        labels,
        raw_labels: raw,
        mask,
        marked,
        mixture: Some(mixture),
        status: if found { SegmentStatus::Ok } else { SegmentStatus::NoBackground },
        otsu_threshold,
        rectangular: rect.len(),
        background_superpixels: background.len(),
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::Component;

    fn single(mean: f64, variance: f64) -> GaussianMixture {
        GaussianMixture::new(vec![Component { weight: 1.0, mean, variance }]).unwrap()
    }

    #[test]
    fn default_parameters() {
        let c = PipelineConfig::default();
        assert_eq!((c.zeta, c.min_area, c.pt, c.k), (0.8, 2000, 0.003, 10));
        assert_eq!(c.seeds, SeedsConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        for c in [
            PipelineConfig { zeta: 1.5, ..Default::default() },
            PipelineConfig { pt: 0.0, ..Default::default() },
            PipelineConfig { k: 0, ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn density_labels_at_mean_and_far_tail() {
        let g = single(120.0, 25.0);
        let hue = GrayImage::from_fn(2, 1, |x, _| if x == 0 { 120 } else { 90 }).unwrap();
        let l = label_by_density(&hue, &g, 0.003);
        assert!((g.pdf(120.0) - 0.0798).abs() < 1e-4);
        assert!(g.pdf(90.0) < 1.3e-9);
        assert_eq!(l.data(), &[0, 1]);
    }

    #[test]
    fn density_equal_to_threshold_is_foreground() {
        let g = single(120.0, 25.0);
        let pt = g.pdf(110.0);
        let hue = GrayImage::from_fn(3, 1, |x, _| [110, 120, 111][x]).unwrap();
        assert_eq!(label_by_density(&hue, &g, pt).data(), &[1, 0, 0]);
    }

    #[test]
    fn all_zero_labels_give_full_mask() {
        let l = BinaryImage::new(60, 50).unwrap();
        let m = build_mask(&l, 2000);
        assert_eq!(m.mask.count_ones(), 3000);
        assert_eq!(m.components, 1);
    }

    #[test]
    fn small_component_removed() {
        // 10x10 background component inside a foreground frame
        let l = BinaryImage::from_fn(30, 30, |x, y| !((10..20).contains(&x) && (10..20).contains(&y))).unwrap();
        let m = build_mask(&l, 2000);
        assert_eq!(m.components, 0);
        assert_eq!(m.mask.count_ones(), 0);
    }

    #[test]
    fn two_blobs_get_bridged() {
        // two 50x50 background blocks separated by a 6-px foreground wall
        let l = BinaryImage::from_fn(106, 50, |x, _| (50..56).contains(&x)).unwrap();
        let m = build_mask(&l, 2000);
        assert_eq!(m.components, 2);
        assert_eq!(connected_components(&m.mask, 1).len(), 1);
        // the wall is between contour points on both sides, so it is covered
        assert_eq!(m.mask.count_ones(), 106 * 50);
    }

    #[test]
    fn grid_and_brute_force_agree() {
        let l = BinaryImage::from_fn(150, 120, |x, y| {
            let d = |cx: f64, cy: f64, r: f64| ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() < r;
            !(d(30.0, 30.0, 25.0) || d(110.0, 40.0, 28.0) || d(70.0, 100.0, 20.0))
        })
        .unwrap();
        let a = ContourBridging { search: NearestSearch::Grid }.build(&l, 500);
        let b = ContourBridging { search: NearestSearch::BruteForce }.build(&l, 500);
        assert_eq!(a.components, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn marker_policy_marks_outside() {
        let l = BinaryImage::from_fn(4, 1, |x, _| x % 2 == 0).unwrap();
        let m = BinaryImage::from_fn(4, 1, |x, _| x < 2).unwrap();
        assert_eq!(apply_mask(&l, &m).unwrap().data(), &[1, 0, 0, 0]);
        assert_eq!(apply_mask_marker(&l, &m, 128).unwrap().data(), &[1, 0, 128, 128]);
        assert!(apply_mask(&l, &BinaryImage::new(3, 1).unwrap()).is_err());
    }
}
