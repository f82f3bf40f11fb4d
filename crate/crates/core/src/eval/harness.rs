//! Method comparison, parameter sweeps and batch timing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::metrics::{compute_metrics, mean, median, Metrics};
use crate::error::{Error, Result};
use crate::imaging::{io, rgb_to_gray, rgb_to_hsv, BinaryImage, GrayImage, RgbImage};
use crate::pipeline::{finish_with_mask, segment_with, ContourBridging, MaskStep, PipelineConfig, SegmentStatus};
use crate::threshold::{adaptive_threshold, binarize, otsu_threshold_image, AdaptiveMethod};

/// One image with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalItem {
    pub name: String,
    pub image: RgbImage,
    pub truth: BinaryImage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Agt,
    Amt,
    Otsu,
    Ours,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Agt, Method::Amt, Method::Otsu, Method::Ours];

    pub fn name(self) -> &'static str {
        match self {
            Method::Agt => "AGT",
            Method::Amt => "AMT",
            Method::Otsu => "Otsu",
            Method::Ours => "Ours",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineOptions {
    /// Threshold grayscale intensity instead of hue.
    pub gray: bool,
    pub block_size: usize,
    pub c: f64,
    /// Skip the mask step for the baselines.
    pub no_mask: bool,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions { gray: false, block_size: 11, c: 2.0, no_mask: false }
    }
}

/// Unmasked tree prediction of a baseline: the pixels its threshold puts on
/// the low side, where the panel is on the high side.
pub fn baseline_raw(method: Method, img: &RgbImage, opts: &BaselineOptions) -> Result<BinaryImage> {
    let plane: GrayImage = if opts.gray { rgb_to_gray(img) } else { rgb_to_hsv(img).hue };
    let high = match method {
        Method::Agt => adaptive_threshold(&plane, AdaptiveMethod::Gaussian, opts.block_size, opts.c)?,
        Method::Amt => adaptive_threshold(&plane, AdaptiveMethod::Mean, opts.block_size, opts.c)?,
        Method::Otsu => binarize(&plane, otsu_threshold_image(&plane)?),
        Method::Ours => return Err(Error::InvalidArgument("Ours is not a baseline".into())),
    };
    Ok(high.invert())
}

/// Final prediction of any method on one image.
pub fn predict(
    method: Method,
    img: &RgbImage,
    cfg: &PipelineConfig,
    opts: &BaselineOptions,
    mask_step: &dyn MaskStep,
) -> Result<BinaryImage> {
    match method {
        Method::Ours => Ok(segment_with(img, cfg, mask_step)?.labels),
        _ => {
            let raw = baseline_raw(method, img, opts)?;
            if opts.no_mask {
                Ok(raw)
            } else {
                Ok(finish_with_mask(raw, cfg, mask_step)?.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageRow {
    pub name: String,
    /// Parallel to `ComparisonReport::methods`.
    pub metrics: Vec<Metrics>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub methods: Vec<Method>,
    pub rows: Vec<ImageRow>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ComparisonReport {
    fn column(&self, m: usize, f: impl Fn(&Metrics) -> f64) -> Vec<f64> {
        self.rows.iter().map(|r| f(&r.metrics[m])).collect()
    }

    fn aggregate(&self, m: usize, agg: fn(&[f64]) -> f64) -> Aggregate {
        Aggregate {
            precision: agg(&self.column(m, |x| x.precision)),
            recall: agg(&self.column(m, |x| x.recall)),
            f1: agg(&self.column(m, |x| x.f1)),
        }
    }

    pub fn index(&self, method: Method) -> Option<usize> {
        self.methods.iter().position(|&m| m == method)
    }

    pub fn mean(&self, method: Method) -> Option<Aggregate> {
        self.index(method).map(|m| self.aggregate(m, mean))
    }

    pub fn median(&self, method: Method) -> Option<Aggregate> {
        self.index(method).map(|m| self.aggregate(m, median))
    }

    fn grid(&self) -> Vec<(String, Vec<[f64; 3]>)> {
        let triple = |a: Aggregate| [a.precision, a.recall, a.f1];
        let mut out: Vec<(String, Vec<[f64; 3]>)> = self
            .rows
            .iter()
            .map(|r| (r.name.clone(), r.metrics.iter().map(|m| [m.precision, m.recall, m.f1]).collect()))
            .collect();
        out.push(("Mean".into(), (0..self.methods.len()).map(|m| triple(self.aggregate(m, mean))).collect()));
        out.push(("Median".into(), (0..self.methods.len()).map(|m| triple(self.aggregate(m, median))).collect()));
        out
    }

    /// Columns: image, then precision, recall and F-score for every method.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("image");
        for q in ["precision", "recall", "f1"] {
            for m in &self.methods {
                let _ = write!(s, ",{}_{}", m.name(), q);
            }
        }
        s.push('\n');
        for (name, vals) in self.grid() {
            s.push_str(&name);
            for q in 0..3 {
                for v in &vals {
                    let _ = write!(s, ",{:.3}", v[q]);
                }
            }
            s.push('\n');
        }
        s
    }

    /// Aligned text table with the same layout as the CSV.
    pub fn to_table(&self) -> String {
        let name_w = self.grid().iter().map(|(n, _)| n.len()).max().unwrap_or(5).max(5);
        let k = self.methods.len();
        let block = k * 7;
        let mut s = format!("{:name_w$} | {:^block$} | {:^block$} | {:^block$}\n", "", "Precision", "Recall", "F-score");
        let _ = write!(s, "{:name_w$}", "Image");
        for _ in 0..3 {
            s.push_str(" |");
            for m in &self.methods {
                let _ = write!(s, " {:>6}", m.name());
            }
        }
        s.push('\n');
        for (name, vals) in self.grid() {
            let _ = write!(s, "{name:name_w$}");
            for q in 0..3 {
                s.push_str(" |");
                for v in &vals {
                    let _ = write!(s, " {:>6.3}", v[q]);
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Scores every method on every item; baselines go through the same mask
/// step as the proposed method unless `opts.no_mask` is set.
pub fn compare_methods(
    corpus: &[EvalItem],
    cfg: &PipelineConfig,
    methods: &[Method],
    opts: &BaselineOptions,
    mask_step: &dyn MaskStep,
) -> Result<ComparisonReport> {
    let rows = corpus
        .par_iter()
        .map(|item| -> Result<ImageRow> {
            let metrics = methods
                .iter()
                .map(|&m| compute_metrics(&predict(m, &item.image, cfg, opts, mask_step)?, &item.truth))
                .collect::<Result<Vec<_>>>()?;
            Ok(ImageRow { name: item.name.clone(), metrics })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport { methods: methods.to_vec(), rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Pt,
    K,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Pt => "pt",
            SweepParam::K => "k",
        }
    }
}

/// One configuration per grid value, differing from `cfg` only in `param`.
pub fn sweep_configs(cfg: &PipelineConfig, param: SweepParam, grid: &[f64]) -> Result<Vec<PipelineConfig>> {
    grid.iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match param {
                SweepParam::Pt => c.pt = v,
                SweepParam::K => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::InvalidConfig(format!("k = {v} must be a positive integer")));
                    }
                    c.k = v as usize;
                }
            }
            c.validate()?;
            Ok(c)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Every image's metrics were degenerate.
    pub degenerate: bool,
}

pub fn sweep(corpus: &[EvalItem], cfg: &PipelineConfig, param: SweepParam, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let configs = sweep_configs(cfg, param, grid)?;
    configs
        .iter()
        .zip(grid)
        .map(|(c, &value)| {
            let report = compare_methods(corpus, c, &[Method::Ours], &BaselineOptions::default(), &ContourBridging::default())?;
            let agg = report.mean(Method::Ours).expect("single method");
            Ok(SweepRow {
                value,
                precision: agg.precision,
                recall: agg.recall,
                f1: agg.f1,
                degenerate: report.rows.iter().all(|r| r.metrics[0].degenerate),
            })
        })
        .collect()
}

pub fn sweep_pt(corpus: &[EvalItem], cfg: &PipelineConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    sweep(corpus, cfg, SweepParam::Pt, grid)
}

pub fn sweep_k(corpus: &[EvalItem], cfg: &PipelineConfig, grid: &[usize]) -> Result<Vec<SweepRow>> {
    let grid: Vec<f64> = grid.iter().map(|&k| k as f64).collect();
    sweep(corpus, cfg, SweepParam::K, &grid)
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut s = format!("{},precision,recall,f1,degenerate\n", param.name());
    for r in rows {
        let _ = writeln!(s, "{},{:.4},{:.4},{:.4},{}", r.value, r.precision, r.recall, r.f1, r.degenerate);
    }
    s
}

/// Max minus min of the mean F1 over sweep rows.
pub fn f1_spread(rows: &[SweepRow]) -> f64 {
    let f = rows.iter().map(|r| r.f1);
    f.clone().fold(f64::NEG_INFINITY, f64::max) - f.fold(f64::INFINITY, f64::min)
}

/// Output file names for an input image.
pub fn output_paths(input: &Path, out_dir: &Path) -> (PathBuf, PathBuf) {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    (out_dir.join(format!("{stem}_mask.png")), out_dir.join(format!("{stem}_masked.png")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FileOutcome {
    pub status: SegmentStatus,
    pub elapsed: Duration,
}

/// Path of the three-valued label plane written under the marker policy.
pub fn labels_path(input: &Path, out_dir: &Path) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out_dir.join(format!("{stem}_labels.png"))
}

/// Loads, segments and writes the binary result and the masked original
/// (plus the label plane when the marker policy is active).
pub fn process_file(
    input: &Path,
    out_dir: &Path,
    cfg: &PipelineConfig,
    baseline: Option<(Method, &BaselineOptions)>,
) -> Result<FileOutcome> {
    let t = Instant::now();
    let img = io::load_rgb(input)?;
    let (labels, marked, status) = match baseline {
        None | Some((Method::Ours, _)) => {
            let r = segment_with(&img, cfg, &ContourBridging::default())?;
            (r.labels, r.marked, r.status)
        }
        Some((m, opts)) => {
            let raw = baseline_raw(m, &img, opts)?;
            if opts.no_mask {
                (raw, None, SegmentStatus::Ok)
            } else {
                let (labels, _, marked, found) = finish_with_mask(raw, cfg, &ContourBridging::default())?;
                (labels, marked, if found { SegmentStatus::Ok } else { SegmentStatus::NoBackground })
            }
        }
    };
    let (mask_path, masked_path) = output_paths(input, out_dir);
    io::save_binary(&mask_path, &labels)?;
    io::save_rgb(&masked_path, &img.masked(&labels)?)?;
    if let Some(plane) = marked {
        io::save_gray(labels_path(input, out_dir), &plane)?;
    }
    Ok(FileOutcome { status, elapsed: t.elapsed() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub name: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
    pub wall: Duration,
}

impl TimingTable {
    pub fn count(&self) -> usize {
        self.rows.len()
    }

    pub fn total_seconds(&self) -> f64 {
        self.wall.as_secs_f64()
    }

    pub fn average_ms(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.elapsed.as_secs_f64() * 1e3).sum::<f64>() / self.rows.len() as f64
    }

    /// Dataset summary row: image count, total seconds, mean milliseconds.
    pub fn summary(&self, dataset: &str) -> String {
        format!(
            "Dataset,Number of images,Total run time (s),Average time per image (ms)\n{dataset},{},{:.3},{:.1}\n",
            self.count(),
            self.total_seconds(),
            self.average_ms()
        )
    }

    pub fn per_image_csv(&self) -> String {
        let mut s = String::from("image,ms\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.1}", r.name, r.elapsed.as_secs_f64() * 1e3);
        }
        s
    }
}

/// Wall-clock timing of `process_file` over `inputs`, including image I/O.
pub fn time_batch(inputs: &[PathBuf], out_dir: &Path, cfg: &PipelineConfig) -> Result<TimingTable> {
    let t = Instant::now();
    let rows = inputs
        .par_iter()
        .map(|p| {
            let o = process_file(p, out_dir, cfg, None)?;
            Ok(TimingRow { name: p.file_name().unwrap_or_default().to_string_lossy().into_owned(), elapsed: o.elapsed })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimingTable { rows, wall: t.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::Confusion;

    fn item(name: &str) -> EvalItem {
        let truth = BinaryImage::from_fn(8, 8, |x, y| x < 4 && y < 4).unwrap();
        EvalItem { name: name.into(), image: RgbImage::new(8, 8).unwrap(), truth }
    }

    fn report_for(m: &[Metrics]) -> ComparisonReport {
        ComparisonReport { methods: Method::ALL[..m.len()].to_vec(), rows: vec![ImageRow { name: "a".into(), metrics: m.to_vec() }] }
    }

    #[test]
    fn csv_and_table_have_all_columns_and_aggregates() {
        let m = Metrics::from_confusion(&Confusion { tp: 3, fp: 1, fn_: 1, tn: 5 });
        let r = report_for(&[m; 4]);
        let csv = r.to_csv();
        let header = csv.lines().next().unwrap();
        for name in ["AGT", "AMT", "Otsu", "Ours"] {
            assert!(header.contains(&format!("{name}_f1")));
        }
        assert!(csv.lines().any(|l| l.starts_with("Mean,")));
        assert!(csv.lines().any(|l| l.starts_with("Median,")));
        let t = r.to_table();
        assert!(t.contains("Precision") && t.contains("Median"));
        assert_eq!(t.lines().count(), 2 + 3);
    }

    #[test]
    fn sweep_configs_change_one_field() {
        let base = PipelineConfig::default();
        let cs = sweep_configs(&base, SweepParam::Pt, &[0.001, 0.01]).unwrap();
        for (c, v) in cs.iter().zip([0.001, 0.01]) {
            assert_eq!(*c, PipelineConfig { pt: v, ..base.clone() });
        }
        let cs = sweep_configs(&base, SweepParam::K, &[3.0]).unwrap();
        assert_eq!(cs[0], PipelineConfig { k: 3, ..base.clone() });
        assert!(sweep_configs(&base, SweepParam::Pt, &[0.0]).is_err());
        assert!(sweep_configs(&base, SweepParam::K, &[2.5]).is_err());
    }

    #[test]
    fn ours_is_not_a_baseline() {
        let it = item("x");
        assert!(baseline_raw(Method::Ours, &it.image, &BaselineOptions::default()).is_err());
    }

    #[test]
    fn output_names() {
        let (a, b) = output_paths(Path::new("/in/tree_01.jpg"), Path::new("/out"));
        assert_eq!(a, PathBuf::from("/out/tree_01_mask.png"));
        assert_eq!(b, PathBuf::from("/out/tree_01_masked.png"));
    }

    #[test]
    fn spread_of_rows() {
        let row = |f1| SweepRow { value: 0.0, precision: 0.0, recall: 0.0, f1, degenerate: false };
        assert!((f1_spread(&[row(0.9), row(0.95), row(0.93)]) - 0.05).abs() < 1e-12);
    }
}
