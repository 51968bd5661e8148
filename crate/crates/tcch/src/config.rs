//! Flat key-value run configuration for the experiment harness.
//!
//! A config file is plain text: one `key=value` assignment per line, with `#`
//! comments and blank lines ignored. Keys are dotted (`grid.n=2048`,
//! `train.speeds=2,3`); unknown keys are errors so that typos fail loudly.
//! Command-line `--override key=value` assignments reuse the same parser.

use crate::error::{Error, Result};
use crate::wave::TrainSpec;
use std::path::Path;
use std::str::FromStr;

/// How the initial train is perturbed before evolving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbKind {
    /// Multiply the train by 1 + scalar, scaled so the distance is eps.
    ScaledProfile,
    /// Add a Gaussian bump of norm eps to u between the first two crests.
    LocalizedBump,
    /// Add seeded band-limited noise of norm eps to both components.
    RandomSmooth,
}

impl FromStr for PerturbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<PerturbKind> {
        match s {
            "scaled-profile" => Ok(PerturbKind::ScaledProfile),
            "localized-bump" => Ok(PerturbKind::LocalizedBump),
            "random-smooth" => Ok(PerturbKind::RandomSmooth),
            other => Err(Error::Config(format!(
                "unknown perturbation kind '{other}' \
                 (expected scaled-profile, localized-bump or random-smooth)"
            ))),
        }
    }
}

impl std::fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PerturbKind::ScaledProfile => "scaled-profile",
            PerturbKind::LocalizedBump => "localized-bump",
            PerturbKind::RandomSmooth => "random-smooth",
        };
        f.write_str(s)
    }
}

/// Fully resolved configuration of one experiment run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Grid resolution (`grid.n`).
    pub n: usize,
    /// Periodic domain length (`grid.length`).
    pub length: f64,
    /// Wave speeds, strictly increasing (`train.speeds`).
    pub speeds: Vec<f64>,
    /// Initial crest positions (`train.centers`); evenly spaced when absent.
    pub centers: Option<Vec<f64>>,
    /// Perturbation kind (`perturb.kind`).
    pub kind: PerturbKind,
    /// Perturbation size in the energy norm (`perturb.eps`).
    pub eps: f64,
    /// Seed for the perturbation noise (`perturb.seed`).
    pub seed: u64,
    /// Time step (`stepper.dt`).
    pub dt: f64,
    /// Final time (`stepper.t_end`).
    pub t_end: f64,
    /// Steps between diagnostic checkpoints (`stepper.stride`).
    pub stride: usize,
    /// Weight scale K (`weights.k`); `max(5, round(sqrt(separation)))` when
    /// absent.
    pub k: Option<f64>,
    /// Perturbation sizes for the stability sweep (`sweep.eps`).
    pub sweep_eps: Vec<f64>,
    /// Separations for the monotonicity sweep (`sweep.lengths`).
    pub sweep_lengths: Vec<f64>,
    /// Speeds certified by the coercivity run (`coercivity.speeds`).
    pub coercivity_speeds: Vec<f64>,
    /// Grid resolution for the coercivity run (`coercivity.n`).
    pub coercivity_n: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            n: 2048,
            length: 200.0,
            speeds: vec![2.0, 3.0],
            centers: None,
            kind: PerturbKind::RandomSmooth,
            eps: 1e-3,
            seed: 0,
            dt: 1e-3,
            t_end: 30.0,
            stride: 100,
            k: None,
            sweep_eps: vec![1e-4, 4e-4, 1.6e-3],
            sweep_lengths: vec![30.0, 40.0, 50.0],
            coercivity_speeds: vec![1.5, 2.0, 3.0],
            coercivity_n: 1024,
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for key '{key}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let items: Vec<f64> = value
        .split(',')
        .map(|v| parse_scalar(key, v))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("empty list for key '{key}'")));
    }
    Ok(items)
}

impl RunConfig {
    /// Apply a single `key=value` assignment.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{assignment}'")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "grid.n" => self.n = parse_scalar(key, value)?,
            "grid.length" => self.length = parse_scalar(key, value)?,
            "train.speeds" => self.speeds = parse_list(key, value)?,
            "train.centers" => self.centers = Some(parse_list(key, value)?),
            "perturb.kind" => self.kind = value.parse()?,
            "perturb.eps" => self.eps = parse_scalar(key, value)?,
            "perturb.seed" => self.seed = parse_scalar(key, value)?,
            "stepper.dt" => self.dt = parse_scalar(key, value)?,
            "stepper.t_end" => self.t_end = parse_scalar(key, value)?,
            "stepper.stride" => self.stride = parse_scalar(key, value)?,
            "weights.k" => self.k = Some(parse_scalar(key, value)?),
            "sweep.eps" => self.sweep_eps = parse_list(key, value)?,
            "sweep.lengths" => self.sweep_lengths = parse_list(key, value)?,
            "coercivity.speeds" => self.coercivity_speeds = parse_list(key, value)?,
            "coercivity.n" => self.coercivity_n = parse_scalar(key, value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a config file body on top of the defaults.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.apply(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and parse a config file.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse_str(&text)
    }

    /// Check the cross-field constraints not enforced by the field parsers.
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!(
                "perturb.eps must be non-negative, got {}",
                self.eps
            )));
        }
        if let Some(k) = self.k {
            if k < 5.0 {
                return Err(Error::Config(format!("weights.k must be at least 5, got {k}")));
            }
        }
        if let Some(cs) = &self.centers {
            if cs.len() != self.speeds.len() {
                return Err(Error::Config(format!(
                    "train.centers has {} entries for {} speeds",
                    cs.len(),
                    self.speeds.len()
                )));
            }
        }
        if self.sweep_eps.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("sweep.eps entries must be positive".into()));
        }
        if self.sweep_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("sweep.lengths entries must be positive".into()));
        }
        Ok(())
    }

    /// Initial centers: the configured ones, or evenly spaced and then shifted
    /// so the rightward-drifting train stays inside the periodic box for the
    /// whole run (the partition steps are not wrap-safe).
    pub fn resolved_centers(&self) -> Vec<f64> {
        match &self.centers {
            Some(cs) => cs.clone(),
            None => {
                let n = self.speeds.len();
                let base: Vec<f64> = (0..n)
                    .map(|i| ((i as f64 + 0.5) / n as f64 - 0.5) * self.length)
                    .collect();
                place_centers(&self.speeds, base, self.length, self.t_end)
            }
        }
    }

    /// Train specification implied by the config.
    pub fn train_spec(&self) -> Result<TrainSpec> {
        TrainSpec::new(self.speeds.clone(), self.resolved_centers())
    }

    /// Minimum initial separation; the domain length for a single wave.
    pub fn separation(&self) -> f64 {
        let cs = self.resolved_centers();
        cs.windows(2)
            .map(|w| w[1] - w[0])
            .fold(self.length, f64::min)
    }

    /// Weight scale: configured, or `max(5, round(sqrt(separation)))`.
    pub fn weight_k(&self) -> f64 {
        self.k
            .unwrap_or_else(|| self.separation().sqrt().round().max(5.0))
    }
}

/// Shift `base` centers uniformly so that every wave, after drifting at its
/// speed until `t_end`, stays inside the box `[-length/2, length/2)`, with the
/// slack split evenly between the two ends. Returns `base` unchanged when no
/// shift can achieve that.
pub fn place_centers(speeds: &[f64], base: Vec<f64>, length: f64, t_end: f64) -> Vec<f64> {
    let upper = base
        .iter()
        .zip(speeds)
        .map(|(&x, &c)| 0.5 * length - (x + c * t_end))
        .fold(f64::INFINITY, f64::min);
    let lower = base
        .iter()
        .map(|&x| -0.5 * length - x)
        .fold(f64::NEG_INFINITY, f64::max);
    if lower <= upper {
        let offset = 0.5 * (lower + upper);
        base.into_iter().map(|x| x + offset).collect()
    } else {
        base
    }
}
