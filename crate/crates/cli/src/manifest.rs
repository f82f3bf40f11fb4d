//! Run manifest: the effective configuration followed by run details and
//! one status line per input image.

use std::fmt::Write as _;
use std::path::PathBuf;

use treeseg::pipeline::PipelineConfig;

use crate::config::format_config;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ImageStatus {
    Ok,
    NoBackground,
    IoError(String),
}

impl ImageStatus {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(ImageStatus::Ok),
            "no-background" => Some(ImageStatus::NoBackground),
            _ => s.strip_prefix("io-error").map(|m| ImageStatus::IoError(m.trim_start_matches(':').trim().to_string())),
        }
    }
}

impl std::fmt::Display for ImageStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImageStatus::Ok => f.write_str("ok"),
            ImageStatus::NoBackground => f.write_str("no-background"),
            // keep the entry on one line
            ImageStatus::IoError(m) => write!(f, "io-error: {}", m.replace(['\n', '\r'], " ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub input: PathBuf,
    pub output: PathBuf,
    /// Where the configuration came from: defaults, a file and/or flags.
    pub config_source: String,
    /// `ours` or the baseline name, with `+no-mask` / `+gray` modifiers.
    pub method: String,
    pub images: Vec<(String, ImageStatus)>,
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = String::from("# treeseg run manifest; the lines up to [run] are a valid config file\n");
        s.push_str(&format_config(&self.config));
        s.push_str("\n[run]\n");
        let _ = writeln!(s, "input = {}", self.input.display());
        let _ = writeln!(s, "output = {}", self.output.display());
        let _ = writeln!(s, "config_source = {}", self.config_source);
        let _ = writeln!(s, "method = {}", self.method);
        s.push_str("\n[images]\n");
        for (name, status) in &self.images {
            let _ = writeln!(s, "{name} = {status}");
        }
        s
    }

    /// 1 if any image failed to load or save, else 2 if any image had no
    /// background, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.images.iter().any(|(_, s)| matches!(s, ImageStatus::IoError(_))) {
            1
        } else if self.images.iter().any(|(_, s)| *s == ImageStatus::NoBackground) {
            2
        } else {
            0
        }
    }
}

/// Status entries of a rendered manifest.
pub fn parse_images(text: &str) -> Vec<(String, ImageStatus)> {
    text.lines()
        .skip_while(|l| l.trim() != "[images]")
        .skip(1)
        .filter_map(|l| {
            let (name, status) = l.split_once(" = ")?;
            Some((name.to_string(), ImageStatus::parse(status.trim())?))
        })
        .collect()
}
