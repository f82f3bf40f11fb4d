//! `key = value` configuration files.
//!
//! Keys are exactly the pipeline parameters. Blank lines and `#` comments are
//! ignored and reading stops at the first `[section]` header, so a run
//! manifest can be fed back in as a configuration file.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use treeseg::pipeline::{MaskPolicy, PipelineConfig};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "TREESEG_CONFIG";

pub const KEYS: [&str; 12] = [
    "zeta",
    "eps_area",
    "pt",
    "k",
    "seed",
    "marker_policy",
    "num_superpixels",
    "num_iterations",
    "num_histogram_bins",
    "num_levels",
    "prior",
    "double_step",
];

/// `zero` or `marker:<value>`.
pub fn parse_marker_policy(s: &str) -> Result<MaskPolicy> {
    match s.trim() {
        "zero" => Ok(MaskPolicy::Zero),
        other => {
            let v = other
                .strip_prefix("marker:")
                .ok_or_else(|| anyhow!("marker policy must be `zero` or `marker:<0-255>`, got `{other}`"))?;
            Ok(MaskPolicy::Marker(v.trim().parse().with_context(|| format!("bad marker value `{v}`"))?))
        }
    }
}

pub fn format_marker_policy(p: MaskPolicy) -> String {
    match p {
        MaskPolicy::Zero => "zero".into(),
        MaskPolicy::Marker(v) => format!("marker:{v}"),
    }
}

fn set(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
    where
        T::Err: std::error::Error + Send + Sync + 'static,
    {
        v.parse::<T>().with_context(|| format!("invalid value `{v}` for `{key}`"))
    }
    match key {
        "zeta" => cfg.zeta = num(key, value)?,
        "eps_area" => cfg.min_area = num(key, value)?,
        "pt" => cfg.pt = num(key, value)?,
        "k" => cfg.k = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "marker_policy" => cfg.mask_policy = parse_marker_policy(value)?,
        "num_superpixels" => cfg.seeds.num_superpixels = num(key, value)?,
        "num_iterations" => cfg.seeds.num_iterations = num(key, value)?,
        "num_histogram_bins" => cfg.seeds.num_histogram_bins = num(key, value)?,
        "num_levels" => cfg.seeds.num_levels = num(key, value)?,
        "prior" => cfg.seeds.prior = num(key, value)?,
        "double_step" => cfg.seeds.double_step = num(key, value)?,
        _ => bail!("unknown configuration key `{key}`"),
    }
    Ok(())
}

/// Applies the settings in `text` on top of `base`.
pub fn parse_config(text: &str, base: PipelineConfig) -> Result<PipelineConfig> {
    let mut cfg = base;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            break;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
        set(&mut cfg, key.trim(), value.trim()).with_context(|| format!("line {}", n + 1))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path, base: PipelineConfig) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text, base).with_context(|| format!("in config {}", path.display()))
}

/// Every key with its value, one per line, in `KEYS` order.
pub fn format_config(cfg: &PipelineConfig) -> String {
    let s = &cfg.seeds;
    let values = [
        cfg.zeta.to_string(),
        cfg.min_area.to_string(),
        cfg.pt.to_string(),
        cfg.k.to_string(),
        cfg.seed.to_string(),
        format_marker_policy(cfg.mask_policy),
        s.num_superpixels.to_string(),
        s.num_iterations.to_string(),
        s.num_histogram_bins.to_string(),
        s.num_levels.to_string(),
        s.prior.to_string(),
        s.double_step.to_string(),
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = PipelineConfig { pt: 0.0025, k: 7, mask_policy: MaskPolicy::Marker(200), ..Default::default() };
        let text = format_config(&cfg);
        assert_eq!(parse_config(&text, PipelineConfig::default()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = parse_config("zeta = 0.8\nptt = 0.1\n", PipelineConfig::default()).unwrap_err();
        assert!(format!("{err:#}").contains("unknown configuration key `ptt`"));
    }

    #[test]
    fn comments_and_sections() {
        let cfg = parse_config("# c\nk = 3  # three\n\n[images]\nk = 9\n", PipelineConfig::default()).unwrap();
        assert_eq!(cfg.k, 3);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_config("pt = 0", PipelineConfig::default()).is_err());
        assert!(parse_config("k = x", PipelineConfig::default()).is_err());
        assert!(parse_config("zeta", PipelineConfig::default()).is_err());
        assert!(parse_marker_policy("marker:300").is_err());
        assert_eq!(parse_marker_policy("marker:7").unwrap(), MaskPolicy::Marker(7));
    }
}
