//! Subcommand implementations. Each returns the process exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use treeseg::eval::harness::{
    compare_methods, process_file, sweep, sweep_csv, f1_spread, BaselineOptions, EvalItem, Method, SweepParam,
    TimingRow, TimingTable,
};
use treeseg::eval::synth::{default_corpus_params, generate_scene, scene_seed};
use treeseg::imaging::io;
use treeseg::pipeline::{ContourBridging, SegmentStatus};

use crate::args::{Cli, Command, EvaluateArgs, SegmentArgs, SweepArgs, SynthArgs};
use crate::manifest::{ImageStatus, RunManifest};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const TIMING_FILE: &str = "timing.csv";
pub const TIMING_SUMMARY_FILE: &str = "timing_summary.csv";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_TABLE: &str = "comparison.txt";

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Segment(a) => cmd_segment(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Worker pool; `None` or 0 means one thread per hardware thread.
pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build().context("building worker pool")
}

fn is_image(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// PNG/JPEG files of a directory sorted by name, or the path itself if it is a file.
pub fn list_images(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(input).with_context(|| format!("reading directory {}", input.display()))? {
        let p = entry?.path();
        if p.is_file() && is_image(&p) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn file_name(p: &Path) -> String {
    p.file_name().unwrap_or_default().to_string_lossy().into_owned()
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<u8> {
    let (cfg, config_source) = args.config.resolve()?;
    let method = args.method_name()?;
    let opts = args.baseline.options();
    let baseline = args.baseline.baseline.map(|b| (Method::from(b), &opts));
    let inputs = list_images(&args.input)?;
    if inputs.is_empty() {
        bail!("no PNG or JPEG images in {}", args.input.display());
    }
    fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;

    let pool = thread_pool(args.jobs)?;
    let start = Instant::now();
    let results: Vec<_> = pool.install(|| {
        inputs.par_iter().map(|p| (file_name(p), process_file(p, &args.output, &cfg, baseline))).collect()
    });
    let wall = start.elapsed();

    let mut images = Vec::with_capacity(results.len());
    let mut rows = Vec::new();
    for (name, r) in results {
        let status = match r {
            Ok(o) => {
                rows.push(TimingRow { name: name.clone(), elapsed: o.elapsed });
                match o.status {
                    SegmentStatus::Ok => ImageStatus::Ok,
                    SegmentStatus::NoBackground => ImageStatus::NoBackground,
                }
            }
            Err(e) => {
                eprintln!("{name}: {e}");
                ImageStatus::IoError(e.to_string())
            }
        };
        images.push((name, status));
    }
    let manifest = RunManifest {
        config: cfg,
        input: args.input.clone(),
        output: args.output.clone(),
        config_source,
        method,
        images,
    };
    fs::write(args.output.join(MANIFEST_FILE), manifest.render())?;
    let timing = TimingTable { rows, wall };
    fs::write(args.output.join(TIMING_FILE), timing.per_image_csv())?;
    let dataset = file_name(&args.input);
    let summary = timing.summary(&dataset);
    fs::write(args.output.join(TIMING_SUMMARY_FILE), &summary)?;
    print!("{summary}");
    Ok(manifest.exit_code() as u8)
}

/// Images of `images` paired with `truth/<stem>.png`; missing or unreadable
/// pairs are returned as errors next to the loaded items.
pub fn load_pairs(images: &Path, truth: &Path) -> Result<(Vec<EvalItem>, Vec<String>)> {
    let inputs = list_images(images)?;
    let loaded: Vec<std::result::Result<EvalItem, String>> = inputs
        .par_iter()
        .map(|p| {
            let name = stem(p);
            let truth_path = truth.join(format!("{name}.png"));
            if !truth_path.is_file() {
                return Err(format!("{}: missing truth file {}", file_name(p), truth_path.display()));
            }
            let image = io::load_rgb(p).map_err(|e| format!("{}: {e}", file_name(p)))?;
            let truth = io::load_binary(&truth_path).map_err(|e| format!("{}: {e}", truth_path.display()))?;
            if image.dims() != truth.dims() {
                return Err(format!("{}: image and truth sizes differ", file_name(p)));
            }
            Ok(EvalItem { name, image, truth })
        })
        .collect();
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for r in loaded {
        match r {
            Ok(i) => items.push(i),
            Err(e) => errors.push(e),
        }
    }
    Ok((items, errors))
}

fn report_errors(errors: &[String]) {
    for e in errors {
        eprintln!("{e}");
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<u8> {
    let (cfg, _) = args.config.resolve()?;
    let opts = BaselineOptions { gray: args.gray, no_mask: args.no_mask, ..BaselineOptions::default() };
    let pool = thread_pool(args.jobs)?;
    let (items, errors) = pool.install(|| load_pairs(&args.images, &args.truth))?;
    report_errors(&errors);
    if items.is_empty() {
        bail!("no image/truth pairs to evaluate");
    }
    let report = pool.install(|| compare_methods(&items, &cfg, &Method::ALL, &opts, &ContourBridging::default()))?;
    fs::create_dir_all(&args.output)?;
    fs::write(args.output.join(COMPARISON_CSV), report.to_csv())?;
    let table = report.to_table();
    fs::write(args.output.join(COMPARISON_TABLE), &table)?;
    print!("{table}");
    Ok(u8::from(!errors.is_empty()))
}

pub fn sweep_file(param: SweepParam) -> String {
    format!("sweep_{}.csv", param.name())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let (cfg, _) = args.config.resolve()?;
    let param = SweepParam::from(args.param);
    let grid = args.grid();
    // reject a bad grid before loading anything
    treeseg::eval::harness::sweep_configs(&cfg, param, &grid)?;
    let pool = thread_pool(args.jobs)?;
    let (items, errors) = pool.install(|| load_pairs(&args.images, &args.truth))?;
    report_errors(&errors);
    if items.is_empty() {
        bail!("no image/truth pairs to sweep over");
    }
    let rows = pool.install(|| sweep(&items, &cfg, param, &grid))?;
    fs::create_dir_all(&args.output)?;
    let csv = sweep_csv(param, &rows);
    fs::write(args.output.join(sweep_file(param)), &csv)?;
    print!("{csv}");
    println!("F1 spread: {:.4}", f1_spread(&rows));
    Ok(u8::from(!errors.is_empty()))
}

pub fn scene_name(index: usize) -> String {
    format!("scene_{index:02}")
}

pub fn cmd_synth(args: &SynthArgs) -> Result<u8> {
    let params = default_corpus_params();
    let images = args.output.join("images");
    let truth = args.output.join("truth");
    fs::create_dir_all(&images)?;
    fs::create_dir_all(&truth)?;
    let pool = thread_pool(args.jobs)?;
    pool.install(|| {
        (0..args.count).into_par_iter().try_for_each(|i| -> Result<()> {
            let scene = generate_scene(&params[i % params.len()], scene_seed(args.seed, i))?;
            let name = format!("{}.png", scene_name(i));
            io::save_rgb(images.join(&name), &scene.image)?;
            io::save_binary(truth.join(&name), &scene.truth)?;
            Ok(())
        })
    })?;
    println!("wrote {} scenes to {}", args.count, args.output.display());
    Ok(0)
}
