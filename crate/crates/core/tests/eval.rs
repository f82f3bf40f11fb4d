use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use treeseg::eval::harness::{
    compare_methods, output_paths, process_file, sweep, sweep_configs, sweep_k, sweep_pt, time_batch, BaselineOptions,
    EvalItem, Method, SweepParam,
};
use treeseg::eval::metrics::{compute_metrics, Confusion};
use treeseg::eval::synth::{default_corpus, generate_scene, SceneParams};
use treeseg::imaging::{io, BinaryImage, RgbImage};
use treeseg::pipeline::{ContourBridging, MaskOutcome, MaskStep, PipelineConfig};
use treeseg_oracles as oracles;

fn arb_pair() -> impl Strategy<Value = (BinaryImage, BinaryImage)> {
    (prop::collection::vec(any::<bool>(), 1024), prop::collection::vec(any::<bool>(), 1024)).prop_map(|(a, b)| {
        (
            BinaryImage::from_fn(32, 32, |x, y| a[y * 32 + x]).unwrap(),
            BinaryImage::from_fn(32, 32, |x, y| b[y * 32 + x]).unwrap(),
        )
    })
}

fn bits(img: &BinaryImage) -> Vec<bool> {
    img.data().iter().map(|&v| v == 1).collect()
}

proptest! {
    #[test]
    fn confusion_matches_direct_count((p, t) in arb_pair()) {
        let c = Confusion::count(&p, &t).unwrap();
        prop_assert_eq!((c.tp, c.fp, c.fn_, c.tn), oracles::confusion(&bits(&p), &bits(&t)));
        let m = compute_metrics(&p, &t).unwrap();
        for v in [m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if m.precision + m.recall > 0.0 {
            prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-12);
        }
    }
}

fn small_corpus() -> Vec<EvalItem> {
    [(SceneParams::default(), 1u64), (SceneParams { ramp: 0.5, gray_level: 0.6, ..SceneParams::default() }, 2)]
        .iter()
        .enumerate()
        .map(|(i, (p, seed))| {
            let s = generate_scene(p, *seed).unwrap();
            EvalItem { name: format!("s{i}"), image: s.image, truth: s.truth }
        })
        .collect()
}

/// Mask step returning an empty mask and counting its calls.
struct Sentinel(AtomicUsize);

impl MaskStep for Sentinel {
    fn build(&self, labels: &BinaryImage, _min_area: usize) -> MaskOutcome {
        self.0.fetch_add(1, Ordering::SeqCst);
        MaskOutcome { mask: BinaryImage::new(labels.width(), labels.height()).unwrap(), components: 0 }
    }
}

#[test]
fn every_method_goes_through_the_injected_mask_step() {
    let corpus = small_corpus();
    let sentinel = Sentinel(AtomicUsize::new(0));
    let cfg = PipelineConfig::default();
    let report = compare_methods(&corpus, &cfg, &Method::ALL, &BaselineOptions::default(), &sentinel).unwrap();
    assert_eq!(sentinel.0.load(Ordering::SeqCst), corpus.len() * Method::ALL.len());
    // identical (empty) predictions give identical metric rows
    for row in &report.rows {
        assert!(row.metrics.windows(2).all(|w| w[0] == w[1]));
        assert!(row.metrics[0].degenerate);
    }
    let unmasked = Sentinel(AtomicUsize::new(0));
    let opts = BaselineOptions { no_mask: true, ..BaselineOptions::default() };
    compare_methods(&corpus, &cfg, &Method::ALL, &opts, &unmasked).unwrap();
    // only Ours still uses the mask step
    assert_eq!(unmasked.0.load(Ordering::SeqCst), corpus.len());
}

#[test]
fn report_shape_and_library_cross_check() {
    let corpus = small_corpus();
    let cfg = PipelineConfig::default();
    let report =
        compare_methods(&corpus, &cfg, &Method::ALL, &BaselineOptions::default(), &ContourBridging::default()).unwrap();
    assert_eq!(report.methods.len(), 4);
    let csv = report.to_csv();
    for name in ["AGT", "AMT", "Otsu", "Ours", "Mean", "Median"] {
        assert!(csv.contains(name), "{name} missing from\n{csv}");
    }
    let ours = report.index(Method::Ours).unwrap();
    for (item, row) in corpus.iter().zip(&report.rows) {
        let direct = treeseg::pipeline::segment(&item.image, &cfg).unwrap();
        assert_eq!(row.metrics[ours], compute_metrics(&direct.labels, &item.truth).unwrap());
    }
}

#[test]
fn single_value_sweep_equals_evaluation() {
    let corpus = small_corpus();
    let cfg = PipelineConfig::default();
    let report =
        compare_methods(&corpus, &cfg, &[Method::Ours], &BaselineOptions::default(), &ContourBridging::default())
            .unwrap();
    let mean = report.mean(Method::Ours).unwrap();
    for rows in [sweep_pt(&corpus, &cfg, &[cfg.pt]).unwrap(), sweep_k(&corpus, &cfg, &[cfg.k]).unwrap()] {
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].precision, rows[0].recall, rows[0].f1), (mean.precision, mean.recall, mean.f1));
    }
}

#[test]
fn invalid_grids_are_rejected() {
    let cfg = PipelineConfig::default();
    assert!(sweep_configs(&cfg, SweepParam::Pt, &[0.003, 0.0]).is_err());
    assert!(sweep_configs(&cfg, SweepParam::Pt, &[-1.0]).is_err());
    assert!(sweep_configs(&cfg, SweepParam::K, &[2.5]).is_err());
    assert!(sweep_configs(&cfg, SweepParam::K, &[0.0]).is_err());
}

#[test]
fn uniform_panel_corpus_is_degenerate_for_every_pt() {
    let blue = RgbImage::from_fn(320, 240, |_, _| [40, 40, 200]).unwrap();
    let corpus = vec![EvalItem { name: "blue".into(), image: blue, truth: BinaryImage::new(320, 240).unwrap() }];
    let rows = sweep(&corpus, &PipelineConfig::default(), SweepParam::Pt, &[0.001, 0.003, 0.01]).unwrap();
    assert!(rows.iter().all(|r| r.degenerate && r.f1 == 0.0));
}

#[test]
fn k_one_matches_k_ten_on_single_hue_panel() {
    let p = SceneParams { noise: 0.0, hue_spread: 0.0, environment: false, ..SceneParams::default() };
    let s = generate_scene(&p, 3).unwrap();
    let corpus = vec![EvalItem { name: "flat".into(), image: s.image, truth: s.truth }];
    let rows = sweep_k(&corpus, &PipelineConfig::default(), &[1, 10, 500]).unwrap();
    assert_eq!(rows[0].f1, rows[1].f1);
    assert_eq!(rows[1].f1, rows[2].f1);
}

#[test]
fn files_are_written_and_timed() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tree.png");
    let s = generate_scene(&SceneParams::default(), 4).unwrap();
    io::save_rgb(&input, &s.image).unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    let cfg = PipelineConfig::default();
    process_file(&input, &out, &cfg, None).unwrap();
    let (mask, masked) = output_paths(&input, &out);
    let m = io::load_binary(&mask).unwrap();
    assert_eq!(m, treeseg::pipeline::segment(&s.image, &cfg).unwrap().labels);
    assert_eq!(io::load_rgb(&masked).unwrap(), s.image.masked(&m).unwrap());
    let table = time_batch(&[input.clone(), input], &out, &cfg).unwrap();
    assert_eq!(table.count(), 2);
    assert!(table.summary("d").lines().nth(1).unwrap().starts_with("d,2,"));
}

#[test]
fn default_corpus_matches_its_analytic_areas() {
    let corpus = default_corpus(0).unwrap();
    assert_eq!(corpus.len(), 12);
    for (i, s) in corpus.iter().enumerate() {
        let area = s.truth.count_ones() as f64;
        let analytic = s.analytic_area();
        assert!((area / analytic - 1.0).abs() <= 0.05, "scene {i}: {area} vs {analytic}");
        let p = s.params.panel;
        for y in 0..s.truth.height() {
            for x in 0..s.truth.width() {
                assert!(!s.truth.is_set(x, y) || p.contains(x, y));
            }
        }
    }
}
