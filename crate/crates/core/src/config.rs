//! Pipeline configuration and validation of raw command-line values.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::cluster::{
    DEFAULT_MAX_ITER, DEFAULT_NOISE_MAD_FACTOR, DEFAULT_TOL, DEFAULT_VARIANCE_FLOOR,
};
use crate::measures::VarianceMode;
use crate::prune::DEFAULT_THRESHOLD;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 15;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_CV_MAX_POINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterChoice {
    Fixed(usize),
    Auto { k_min: usize, k_max: usize },
}

impl Default for ClusterChoice {
    fn default() -> Self {
        ClusterChoice::Auto {
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
        }
    }
}

impl fmt::Display for ClusterChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterChoice::Fixed(k) => write!(f, "{k}"),
            ClusterChoice::Auto { k_min, k_max } => write!(f, "auto({k_min}..={k_max})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub stoplist: PathBuf,
    pub out: PathBuf,
    pub min_count: u64,
    pub clusters: ClusterChoice,
    pub threshold: f64,
    pub noise_mad_factor: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub variance: VarianceMode,
    pub folds: usize,
    pub cv_max_points: usize,
    pub variance_floor: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: PathBuf::new(),
            stoplist: PathBuf::new(),
            out: PathBuf::new(),
            min_count: 1,
            clusters: ClusterChoice::default(),
            threshold: DEFAULT_THRESHOLD,
            noise_mad_factor: DEFAULT_NOISE_MAD_FACTOR,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: DEFAULT_SEED,
            variance: VarianceMode::Full,
            folds: DEFAULT_FOLDS,
            cv_max_points: DEFAULT_CV_MAX_POINTS,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }
}

/// Unparsed flag values, as typed by the user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawFlags {
    pub corpus: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub min_count: Option<String>,
    pub clusters: Option<String>,
    pub threshold: Option<String>,
    pub noise_mad_factor: Option<String>,
    pub tol: Option<String>,
    pub max_iter: Option<String>,
    pub seed: Option<String>,
    pub variance: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

fn parse_into<T: FromStr>(
    raw: &Option<String>,
    name: &str,
    slot: &mut T,
    errors: &mut Vec<String>,
) {
    if let Some(text) = raw {
        match text.trim().parse() {
            Ok(v) => *slot = v,
            Err(_) => errors.push(format!("{name}: cannot parse {text:?}")),
        }
    }
}

fn parse_clusters(text: &str) -> Result<ClusterChoice, String> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("auto") {
        return Ok(ClusterChoice::default());
    }
    match text.parse::<usize>() {
        Ok(0) => Err("clusters must be >= 1".to_owned()),
        Ok(k) => Ok(ClusterChoice::Fixed(k)),
        Err(_) => Err(format!(
            "clusters: expected a count or \"auto\", got {text:?}"
        )),
    }
}

/// Parses and range-checks every flag, reporting all problems at once.
pub fn validate_config(raw: &RawFlags) -> Result<PipelineConfig, ConfigErrors> {
    let mut cfg = PipelineConfig::default();
    let mut errors = Vec::new();

    if let Some(p) = &raw.corpus {
        cfg.corpus = p.clone();
    }
    if let Some(p) = &raw.stoplist {
        cfg.stoplist = p.clone();
    }
    if let Some(p) = &raw.out {
        cfg.out = p.clone();
    }
    parse_into(&raw.min_count, "min-count", &mut cfg.min_count, &mut errors);
    parse_into(&raw.threshold, "threshold", &mut cfg.threshold, &mut errors);
    parse_into(
        &raw.noise_mad_factor,
        "noise-mad-factor",
        &mut cfg.noise_mad_factor,
        &mut errors,
    );
    parse_into(&raw.tol, "tol", &mut cfg.tol, &mut errors);
    parse_into(&raw.max_iter, "max-iter", &mut cfg.max_iter, &mut errors);
    parse_into(&raw.seed, "seed", &mut cfg.seed, &mut errors);
    if let Some(text) = &raw.clusters {
        match parse_clusters(text) {
            Ok(c) => cfg.clusters = c,
            Err(e) => errors.push(e),
        }
    }
    if let Some(text) = &raw.variance {
        match text.trim().parse() {
            Ok(v) => cfg.variance = v,
            Err(e) => errors.push(format!("variance: {e}")),
        }
    }

    if raw.min_count.is_some() && cfg.min_count == 0 {
        errors.push("min-count must be >= 1".to_owned());
    }
    if !(0.0..=1.0).contains(&cfg.threshold) {
        errors.push("threshold out of [0,1]".to_owned());
    }
    if cfg.noise_mad_factor.is_nan() || cfg.noise_mad_factor < 0.0 {
        errors.push("noise-mad-factor must be >= 0 (inf disables the noise rule)".to_owned());
    }
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        errors.push("tol must be a positive finite number".to_owned());
    }
    if raw.max_iter.is_some() && cfg.max_iter == 0 {
        errors.push("max-iter must be >= 1".to_owned());
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}
