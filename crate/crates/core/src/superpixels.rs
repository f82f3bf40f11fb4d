//! Energy-driven grid superpixels (SEEDS-style pixel updates) on the hue plane,
//! and extraction of the superpixels that never left their initial grid cell.
//!
//! Each superpixel keeps a hue histogram with `num_histogram_bins` bins over
//! `[0, 179]`. The color energy of a partition is
//!
//! ```text
//! E = sum over superpixels s of  sum_b c_s(b)^2 / |s|
//! ```
//!
//! which is `|s|` times the self-intersection of the normalized histogram.
//! It is maximal when every superpixel is a single color, and a pixel move
//! between two superpixels that are pure in the same bin leaves it unchanged.
//! Boundary pixels are only moved when `E` strictly increases, so uniform
//! regions keep their grid rectangles.

use crate::error::{Error, Result};
use crate::imaging::{HsvImage, Rect, RgbImage};

/// Superpixel parameters. Only single-level, single-step updates without a
/// shape prior are supported.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedsConfig {
    pub num_superpixels: usize,
    pub num_iterations: usize,
    pub num_histogram_bins: usize,
    pub num_levels: usize,
    pub prior: u32,
    pub double_step: bool,
}

impl Default for SeedsConfig {
    fn default() -> Self {
        SeedsConfig {
            num_superpixels: 16_000,
            num_iterations: 10,
            num_histogram_bins: 2,
            num_levels: 1,
            prior: 0,
            double_step: false,
        }
    }
}

impl SeedsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_superpixels == 0 {
            return Err(Error::InvalidConfig("num_superpixels must be at least 1".into()));
        }
        if self.num_histogram_bins == 0 || self.num_histogram_bins > 180 {
            return Err(Error::InvalidConfig("num_histogram_bins must be in [1, 180]".into()));
        }
        if self.num_levels != 1 {
            return Err(Error::InvalidConfig(format!(
                "num_levels = {} is not supported (only 1)",
                self.num_levels
            )));
        }
        if self.prior != 0 {
            return Err(Error::InvalidConfig(format!("prior = {} is not supported (only 0)", self.prior)));
        }
        if self.double_step {
            return Err(Error::InvalidConfig("double_step = true is not supported".into()));
        }
        Ok(())
    }
}

/// Per-superpixel record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub count: usize,
    pub bbox: Rect,
    /// Grid rectangle the superpixel started from.
    pub initial: Rect,
    pub hue_sum: u64,
    pub hue_sq_sum: u64,
}

impl Cell {
    pub fn hue_mean(&self) -> f64 {
        self.hue_sum as f64 / self.count as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperpixelPartition {
    width: usize,
    height: usize,
    grid_cols: usize,
    grid_rows: usize,
    labels: Vec<u32>,
    cells: Vec<Cell>,
}

impl SuperpixelPartition {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn grid_cols(&self) -> usize {
        self.grid_cols
    }

    pub fn grid_rows(&self) -> usize {
        self.grid_rows
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Per-pixel superpixel id, row-major.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: u32) -> &Cell {
        &self.cells[id as usize]
    }

    /// Recomputes counts, bounding boxes and hue sums from the label map.
    pub fn update_stats(&mut self, hue: &[u8]) {
        for c in &mut self.cells {
            c.count = 0;
            c.hue_sum = 0;
            c.hue_sq_sum = 0;
            c.bbox = Rect { x0: usize::MAX, y0: usize::MAX, x1: 0, y1: 0 };
        }
        for y in 0..self.height {
            for x in 0..self.width {
                let i = y * self.width + x;
                let c = &mut self.cells[self.labels[i] as usize];
                let h = u64::from(hue[i]);
                c.count += 1;
                c.hue_sum += h;
                c.hue_sq_sum += h * h;
                c.bbox.include(x, y);
            }
        }
    }

    /// Builds a partition from an explicit label map, with the given initial
    /// rectangles. Used by tests and tools that construct partitions by hand.
    pub fn from_labels(
        width: usize,
        height: usize,
        grid_cols: usize,
        grid_rows: usize,
        labels: Vec<u32>,
        initial: Vec<Rect>,
        hue: &[u8],
    ) -> Result<Self> {
        if labels.len() != width * height || hue.len() != labels.len() {
            return Err(Error::InvalidDimensions { width, height, len: labels.len() });
        }
        if labels.iter().any(|&l| l as usize >= initial.len()) {
            return Err(Error::InvalidArgument("label outside the cell table".into()));
        }
        let cells = initial
            .into_iter()
            .map(|r| Cell { count: 0, bbox: r, initial: r, hue_sum: 0, hue_sq_sum: 0 })
            .collect();
        let mut p = SuperpixelPartition { width, height, grid_cols, grid_rows, labels, cells };
        p.update_stats(hue);
        if p.cells.iter().any(|c| c.count == 0) {
            return Err(Error::InvalidArgument("every superpixel must be non-empty".into()));
        }
        Ok(p)
    }
}

/// Cell boundaries `[start, end)` splitting `len` into `parts` nearly equal spans.
fn spans(len: usize, parts: usize) -> Vec<(usize, usize)> {
    (0..parts).map(|i| (i * len / parts, (i + 1) * len / parts)).collect()
}

/// Regular grid with roughly `cfg.num_superpixels` cells whose widths (and
/// heights) differ by at most one pixel.
pub fn init_grid(width: usize, height: usize, cfg: &SeedsConfig) -> Result<SuperpixelPartition> {
    cfg.validate()?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height, len: 0 });
    }
    let n = width * height;
    if cfg.num_superpixels > n {
        return Err(Error::InvalidConfig(format!(
            "num_superpixels = {} exceeds the pixel count {n}",
            cfg.num_superpixels
        )));
    }
    let side = (n as f64 / cfg.num_superpixels as f64).sqrt();
    let cols = ((width as f64 / side).round() as usize).clamp(1, width);
    let rows = ((height as f64 / side).round() as usize).clamp(1, height);

    let xs = spans(width, cols);
    let ys = spans(height, rows);
    let mut cells = Vec::with_capacity(cols * rows);
    for &(y0, y1) in &ys {
        for &(x0, x1) in &xs {
            let r = Rect { x0, y0, x1: x1 - 1, y1: y1 - 1 };
            cells.push(Cell { count: r.area(), bbox: r, initial: r, hue_sum: 0, hue_sq_sum: 0 });
        }
    }
    let mut col_of = vec![0u32; width];
    for (c, &(x0, x1)) in xs.iter().enumerate() {
        col_of[x0..x1].fill(c as u32);
    }
    let mut labels = vec![0u32; n];
    for (r, &(y0, y1)) in ys.iter().enumerate() {
        for y in y0..y1 {
            let row = &mut labels[y * width..(y + 1) * width];
            for (l, &c) in row.iter_mut().zip(&col_of) {
                *l = r as u32 * cols as u32 + c;
            }
        }
    }
    Ok(SuperpixelPartition { width, height, grid_cols: cols, grid_rows: rows, labels, cells })
}

#[inline]
fn hue_bin(h: u8, bins: usize) -> usize {
    (usize::from(h.min(179)) * bins) / 180
}

/// Histogram state used during refinement.
struct Histograms {
    bins: usize,
    counts: Vec<i64>,
    sizes: Vec<i64>,
    // sum of squared bin counts per superpixel
    sq: Vec<i64>,
}

impl Histograms {
    fn build(labels: &[u32], pixel_bins: &[u8], n_cells: usize, bins: usize) -> Self {
        let mut counts = vec![0i64; n_cells * bins];
        let mut sizes = vec![0i64; n_cells];
        for (&l, &b) in labels.iter().zip(pixel_bins) {
            counts[l as usize * bins + b as usize] += 1;
            sizes[l as usize] += 1;
        }
        let sq = (0..n_cells)
            .map(|c| counts[c * bins..(c + 1) * bins].iter().map(|v| v * v).sum())
            .collect();
        Histograms { bins, counts, sizes, sq }
    }

    /// Exact energy change of moving one pixel of bin `b` from `from` to `to`,
    /// as `(numerator, denominator)` with a positive denominator.
    #[inline]
    fn move_gain(&self, from: usize, to: usize, b: usize) -> (i128, i128) {
        let a = i128::from(self.sizes[from]);
        let ca = i128::from(self.counts[from * self.bins + b]);
        let sa = i128::from(self.sq[from]);
        let n = i128::from(self.sizes[to]);
        let cb = i128::from(self.counts[to * self.bins + b]);
        let sb = i128::from(self.sq[to]);
        // donor: (S - 2c + 1)/(a - 1) - S/a ; receiver: (S + 2c + 1)/(n + 1) - S/n
        let num_a = sa + a - 2 * a * ca;
        let den_a = a * (a - 1);
        let num_b = 2 * n * cb + n - sb;
        let den_b = n * (n + 1);
        (num_a * den_b + num_b * den_a, den_a * den_b)
    }

    fn apply(&mut self, from: usize, to: usize, b: usize) {
        let ia = from * self.bins + b;
        self.sq[from] -= 2 * self.counts[ia] - 1;
        self.counts[ia] -= 1;
        self.sizes[from] -= 1;
        let ib = to * self.bins + b;
        self.sq[to] += 2 * self.counts[ib] + 1;
        self.counts[ib] += 1;
        self.sizes[to] += 1;
    }
}

// 3x3 ring, clockwise from the top-left corner.
const RING: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];

/// Whether the superpixel `label` stays 4-connected once the pixel at
/// `(x, y)` leaves it, judged from the 3x3 neighborhood only. Consecutive
/// ring positions are 4-adjacent, so the 4-neighbors still in the
/// superpixel must all lie on one run of the ring.
fn removal_keeps_connected(labels: &[u32], width: usize, height: usize, x: usize, y: usize, label: u32) -> bool {
    let mut member = [false; 8];
    for (k, &(dx, dy)) in RING.iter().enumerate() {
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        member[k] = nx >= 0
            && ny >= 0
            && (nx as usize) < width
            && (ny as usize) < height
            && labels[ny as usize * width + nx as usize] == label;
    }
    let Some(gap) = member.iter().position(|m| !m) else {
        return true;
    };
    let mut run_of_edge = None;
    let mut run = 0;
    let mut in_run = false;
    for step in 1..=8 {
        let k = (gap + step) % 8;
        if member[k] {
            if !in_run {
                run += 1;
                in_run = true;
            }
            // odd positions are the 4-neighbors
            if k % 2 == 1 {
                match run_of_edge {
                    None => run_of_edge = Some(run),
                    Some(r) if r != run => return false,
                    _ => {}
                }
            }
        } else {
            in_run = false;
        }
    }
    true
}

/// Runs `cfg.num_iterations` scanline sweeps of pixel-level boundary updates.
///
/// A boundary pixel moves to the 4-neighboring superpixel with the largest
/// strictly positive energy gain; moves that would empty the donor or break
/// its 4-connectivity are skipped. Statistics are refreshed before returning.
pub fn refine(mut partition: SuperpixelPartition, img: &HsvImage, cfg: &SeedsConfig) -> Result<SuperpixelPartition> {
    cfg.validate()?;
    if img.dims() != partition.dims() {
        return Err(Error::DimensionMismatch { left: partition.dims(), right: img.dims() });
    }
    let (w, h) = partition.dims();
    let hue = img.hue.data();
    if cfg.num_iterations > 0 {
        let bins = cfg.num_histogram_bins;
        let pixel_bins: Vec<u8> = hue.iter().map(|&v| hue_bin(v, bins) as u8).collect();
        let mut hist = Histograms::build(&partition.labels, &pixel_bins, partition.cells.len(), bins);
        let labels = &mut partition.labels;
        for _ in 0..cfg.num_iterations {
            let mut moved = 0usize;
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let own = labels[i];
                    let mut cand = [u32::MAX; 4];
                    let mut nc = 0;
                    let mut push = |l: u32| {
                        if l != own && !cand[..nc].contains(&l) {
                            cand[nc] = l;
                            nc += 1;
                        }
                    };
                    if y > 0 {
                        push(labels[i - w]);
                    }
                    if x > 0 {
                        push(labels[i - 1]);
                    }
                    if x + 1 < w {
                        push(labels[i + 1]);
                    }
                    if y + 1 < h {
                        push(labels[i + w]);
                    }
                    if nc == 0 || hist.sizes[own as usize] <= 1 {
                        continue;
                    }
                    let b = pixel_bins[i] as usize;
                    let mut best: Option<(u32, f64)> = None;
                    for &c in &cand[..nc] {
                        let (num, den) = hist.move_gain(own as usize, c as usize, b);
                        if num <= 0 {
                            continue;
                        }
                        let g = num as f64 / den as f64;
                        if best.is_none_or(|(_, bg)| g > bg) {
                            best = Some((c, g));
                        }
                    }
                    let Some((target, _)) = best else { continue };
                    if !removal_keeps_connected(labels, w, h, x, y, own) {
                        continue;
                    }
                    hist.apply(own as usize, target as usize, b);
                    labels[i] = target;
                    moved += 1;
                }
            }
            if moved == 0 {
                break;
            }
        }
    }
    partition.update_stats(hue);
    Ok(partition)
}

/// Ids of superpixels whose pixel set is exactly their initial grid cell.
pub fn rectangular_subset(partition: &SuperpixelPartition) -> Vec<u32> {
    let w = partition.width;
    (0..partition.cells.len() as u32)
        .filter(|&id| {
            let c = &partition.cells[id as usize];
            let r = c.initial;
            c.count == r.area()
                && c.bbox == r
                && (r.y0..=r.y1).all(|y| partition.labels[y * w + r.x0..=y * w + r.x1].iter().all(|&l| l == id))
        })
        .collect()
}

/// Copy of `img` with superpixel boundaries drawn in red.
pub fn boundary_overlay(img: &RgbImage, partition: &SuperpixelPartition) -> Result<RgbImage> {
    if img.dims() != partition.dims() {
        return Err(Error::DimensionMismatch { left: img.dims(), right: partition.dims() });
    }
    let (w, h) = img.dims();
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let l = partition.label(x, y);
            let edge = (x + 1 < w && partition.label(x + 1, y) != l) || (y + 1 < h && partition.label(x, y + 1) != l);
            if edge {
                out.put(x, y, [255, 0, 0]);
            }
        }
    }
    Ok(out)
}
