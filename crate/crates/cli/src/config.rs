//! Flat `key = value` experiment configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sampling_recovery::analysis::{HatClassSpec, DEFAULT_C1};
use sampling_recovery::density::WeightMode;
use sampling_recovery::subsample::DEFAULT_TARGET_RATIO;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    RandomPoints,
    Subsampled,
    HatOracle,
    Concentration,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::RandomPoints => "random_points",
            Mode::Subsampled => "subsampled",
            Mode::HatOracle => "hat_oracle",
            Mode::Concentration => "concentration",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random_points" => Ok(Mode::RandomPoints),
            "subsampled" => Ok(Mode::Subsampled),
            "hat_oracle" => Ok(Mode::HatOracle),
            "concentration" => Ok(Mode::Concentration),
            _ => Err("expected random_points, subsampled, hat_oracle or concentration".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemChoice {
    FourierTorus,
    NormalizedHat,
}

impl SystemChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemChoice::FourierTorus => "fourier_torus",
            SystemChoice::NormalizedHat => "normalized_hat",
        }
    }
}

impl FromStr for SystemChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fourier_torus" => Ok(SystemChoice::FourierTorus),
            "normalized_hat" => Ok(SystemChoice::NormalizedHat),
            _ => Err("expected fourier_torus or normalized_hat".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightChoice {
    Power,
    Log,
}

impl FromStr for WeightChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "power" => Ok(WeightChoice::Power),
            "log" => Ok(WeightChoice::Log),
            _ => Err("expected power or log".into()),
        }
    }
}

impl fmt::Display for WeightChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightChoice::Power => "power",
            WeightChoice::Log => "log",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub system: SystemChoice,
    pub quadrature_nodes: usize,
    pub hat_alpha_len: f64,
    pub hat_beta_h: f64,
    pub hat_truncation: usize,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub weights: WeightChoice,
    /// `None` means `(1/2 + α)/2`.
    pub delta: Option<f64>,
    pub delta_prime: f64,
    pub n_list: Vec<usize>,
    pub c1: f64,
    pub trials: usize,
    pub seed: u64,
    pub target_ratio: f64,
    pub members: usize,
    pub truncation: usize,
    pub block_levels: usize,
    pub output: PathBuf,
    /// `None` means the output path with extension `summary.txt`.
    pub summary: Option<PathBuf>,
    /// Record wall-clock milliseconds; off keeps artifacts reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::RandomPoints,
            system: SystemChoice::FourierTorus,
            quadrature_nodes: 256,
            hat_alpha_len: 3.0,
            hat_beta_h: 1.0,
            hat_truncation: HatClassSpec::DEFAULT_TRUNCATION,
            alpha: 1.0,
            beta: 0.0,
            c: 1.0,
            weights: WeightChoice::Power,
            delta: None,
            delta_prime: 2.0,
            n_list: vec![8, 16, 32],
            c1: DEFAULT_C1,
            trials: 5,
            seed: 0,
            target_ratio: DEFAULT_TARGET_RATIO,
            members: 8,
            truncation: 4096,
            block_levels: 3,
            output: PathBuf::from("results.csv"),
            summary: None,
            timing: false,
        }
    }
}

const KEYS: [&str; 23] = [
    "mode",
    "system",
    "quadrature_nodes",
    "hat_alpha_len",
    "hat_beta_h",
    "hat_truncation",
    "alpha",
    "beta",
    "c",
    "weights",
    "delta",
    "delta_prime",
    "n_list",
    "c1",
    "trials",
    "seed",
    "target_ratio",
    "members",
    "truncation",
    "block_levels",
    "output",
    "summary",
    "timing",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| CliError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl ExperimentConfig {
    /// Parses a config file body; unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = Self::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Syntax { line: lineno + 1 })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(CliError::DuplicateKey(key.to_string()));
            }
            config.set(key, value.trim())?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "mode" => self.mode = parse_value(key, value)?,
            "system" => self.system = parse_value(key, value)?,
            "quadrature_nodes" => self.quadrature_nodes = parse_value(key, value)?,
            "hat_alpha_len" => self.hat_alpha_len = parse_value(key, value)?,
            "hat_beta_h" => self.hat_beta_h = parse_value(key, value)?,
            "hat_truncation" => self.hat_truncation = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "beta" => self.beta = parse_value(key, value)?,
            "c" => self.c = parse_value(key, value)?,
            "weights" => self.weights = parse_value(key, value)?,
            "delta" => self.delta = parse_auto(key, value)?,
            "delta_prime" => self.delta_prime = parse_value(key, value)?,
            "n_list" => {
                self.n_list = value
                    .split(',')
                    .map(|v| parse_value(key, v.trim()))
                    .collect::<Result<_, _>>()?
            }
            "c1" => self.c1 = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "target_ratio" => self.target_ratio = parse_value(key, value)?,
            "members" => self.members = parse_value(key, value)?,
            "truncation" => self.truncation = parse_value(key, value)?,
            "block_levels" => self.block_levels = parse_value(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "summary" => self.summary = parse_auto::<String>(key, value)?.map(PathBuf::from),
            "timing" => self.timing = parse_value(key, value)?,
            _ => return Err(CliError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn keys() -> &'static [&'static str] {
        &KEYS
    }

    /// Every key in a fixed order; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let auto = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let n_list: Vec<String> = self.n_list.iter().map(|n| n.to_string()).collect();
        let values = [
            self.mode.as_str().to_string(),
            self.system.as_str().to_string(),
            self.quadrature_nodes.to_string(),
            self.hat_alpha_len.to_string(),
            self.hat_beta_h.to_string(),
            self.hat_truncation.to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.c.to_string(),
            self.weights.to_string(),
            auto(self.delta.map(|d| d.to_string())),
            self.delta_prime.to_string(),
            n_list.join(","),
            self.c1.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            self.target_ratio.to_string(),
            self.members.to_string(),
            self.truncation.to_string(),
            self.block_levels.to_string(),
            self.output.display().to_string(),
            auto(self.summary.as_ref().map(|p| p.display().to_string())),
            self.timing.to_string(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn delta_value(&self) -> f64 {
        self.delta
            .unwrap_or_else(|| WeightMode::default_delta(self.alpha))
    }

    pub fn weight_mode(&self) -> WeightMode {
        match self.weights {
            WeightChoice::Power => WeightMode::power(self.delta_value()),
            WeightChoice::Log => WeightMode::Log {
                beta: self.beta,
                delta_prime: self.delta_prime,
            },
        }
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary
            .clone()
            .unwrap_or_else(|| self.output.with_extension("summary.txt"))
    }

    pub fn hat_spec(&self) -> Result<HatClassSpec, CliError> {
        HatClassSpec::new(self.hat_alpha_len, self.hat_beta_h, self.hat_truncation)
            .map_err(|e| CliError::Invalid(e.to_string()))
    }

    /// Checks the cross-field invariants; the message names the violated one.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Invalid(msg));
        if self.n_list.is_empty() {
            return fail("n_list must not be empty".into());
        }
        if self.n_list[0] == 0 {
            return fail("n_list entries must be positive".into());
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return fail("n_list must be strictly increasing".into());
        }
        if self.trials == 0 {
            return fail("trials must be positive".into());
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return fail("c1 must be positive".into());
        }
        if !(self.target_ratio > 1.0 && self.target_ratio.is_finite()) {
            return fail("target_ratio must exceed 1".into());
        }
        if self.quadrature_nodes < 64 {
            return fail("quadrature_nodes must be at least 64".into());
        }
        let n_max = *self.n_list.last().expect("nonempty");
        let uses_hats = self.mode == Mode::HatOracle || self.system == SystemChoice::NormalizedHat;
        if uses_hats {
            self.hat_spec()?;
            if n_max >= self.hat_truncation {
                return fail(format!(
                    "largest n={n_max} must be below hat_truncation={}",
                    self.hat_truncation
                ));
            }
        }
        if self.mode == Mode::HatOracle {
            return Ok(());
        }
        match self.weights {
            WeightChoice::Power => {
                if !(self.alpha > 0.5) {
                    return fail(format!("alpha={} must exceed 1/2 (or use weights = log)", self.alpha));
                }
                let delta = self.delta_value();
                if !(delta > 0.5 && delta < self.alpha) {
                    return fail(format!("delta={delta} must lie in (1/2, alpha={})", self.alpha));
                }
            }
            WeightChoice::Log => {
                if !(self.alpha >= 0.5) {
                    return fail(format!("alpha={} must be at least 1/2", self.alpha));
                }
                self.weight_mode()
                    .validate()
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
            }
        }
        if !(self.c > 0.0) {
            return fail("decay constant c must be positive".into());
        }
        if self.system == SystemChoice::FourierTorus && self.truncation <= n_max {
            return fail(format!("truncation={} must exceed the largest n={n_max}", self.truncation));
        }
        Ok(())
    }
}
