//! Flat `key = value` experiment files.
//!
//! One key per line, `#` starts a comment, lists are comma-separated.

use groupsync::amp::AmpConfig;
use groupsync::baselines::Method;
use groupsync::free_energy::ScanConfig;
use groupsync::state_evolution::SeConfig;
use groupsync::GroupSpec;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.into(), msg: msg.into() }
}

const KEYS: &[&str] = &[
    "mode",
    "group",
    "order",
    "group_file",
    "irreps",
    "frequencies",
    "resolution",
    "lambda",
    "lambda_start",
    "lambda_stop",
    "lambda_step",
    "lambda_vector",
    "n",
    "trials",
    "seed",
    "estimators",
    "out",
    "amp.max_iters",
    "amp.tol",
    "amp.init_scale",
    "baseline.max_iters",
    "baseline.tol",
    "se.mc_samples",
    "se.max_iters",
    "se.tol",
    "predict.mc_samples",
    "scan.step",
    "scan.gamma_max",
    "scan.mc_samples",
    "scan.confirm_samples",
    "bisect.lo",
    "bisect.hi",
    "bisect.tol",
    "starts",
];

/// Parsed key/value pairs in file order.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("expected key = value, got `{line}`") })?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Syntax { line: i + 1, msg: format!("unknown key `{key}`") });
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.into(), value);
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| value_err(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<T>().map_err(|_| value_err(key, format!("cannot parse `{s}`"))))
                    .collect()
            })
            .transpose()
    }

    /// Sorted `key=value` lines; the config hash is taken over this text.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Run,
    SeVsAmp,
    PhaseScan,
    Landscape,
    Trajectory,
}

impl FromStr for Mode {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "run" => Mode::Run,
            "se-vs-amp" => Mode::SeVsAmp,
            "phase-scan" => Mode::PhaseScan,
            "landscape" => Mode::Landscape,
            "trajectory" => Mode::Trajectory,
            _ => return Err(()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Amp,
    Baseline(Method),
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Amp => "amp",
            Estimator::Baseline(m) => m.name(),
        }
    }
}

impl FromStr for Estimator {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "amp" => Estimator::Amp,
            "spectral" => Estimator::Baseline(Method::Spectral),
            "projected-power" => Estimator::Baseline(Method::ProjectedPower),
            "soft-threshold" => Estimator::Baseline(Method::SoftThreshold),
            _ => return Err(()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupChoice {
    Cyclic(usize),
    U1,
    So3,
    Finite { source: String, irreps: Option<Vec<usize>> },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub group: GroupChoice,
    /// Frequency counts K to sweep (ignored for finite groups).
    pub frequencies: Vec<usize>,
    pub resolution: Option<usize>,
    /// Common λ values applied to every frequency.
    pub lambdas: Vec<f64>,
    /// One λ per stored irrep; replaces `lambdas` when present.
    pub lambda_vector: Option<Vec<f64>>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub out: Option<PathBuf>,
    pub amp: AmpConfig,
    pub baseline_max_iters: usize,
    pub baseline_tol: f64,
    pub se: SeConfig,
    pub predict_mc_samples: usize,
    pub scan: ScanConfig,
    pub bisect: Option<(f64, f64, f64)>,
    pub starts: Vec<f64>,
    /// Canonical text the config hash is computed from.
    pub canonical: String,
}

fn sweep(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, ConfigError> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(ConfigError::Invalid(format!("empty λ sweep {start}..{stop} step {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    // rounded to 1e-9 so 1.1 does not print as 1.1000000000000003
    Ok((0..=count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig, base: Option<&Path>) -> Result<Self, ConfigError> {
        let mode = match raw.get("mode") {
            Some(m) => m.parse().map_err(|_| value_err("mode", format!("unknown mode `{m}`")))?,
            None => Mode::Run,
        };
        let group = match raw.get("group").ok_or_else(|| value_err("group", "missing"))? {
            "cyclic" => GroupChoice::Cyclic(raw.scalar("order")?.ok_or_else(|| value_err("order", "required for cyclic groups"))?),
            "u1" => GroupChoice::U1,
            "so3" => GroupChoice::So3,
            "finite" => {
                let file = raw.get("group_file").ok_or_else(|| value_err("group_file", "required for finite groups"))?;
                let source = if file == "a4" {
                    file.to_string()
                } else {
                    let path = base.map(|b| b.join(file)).unwrap_or_else(|| PathBuf::from(file));
                    if !path.is_file() {
                        return Err(value_err("group_file", format!("{} does not exist", path.display())));
                    }
                    path.to_string_lossy().into_owned()
                };
                GroupChoice::Finite { source, irreps: raw.list("irreps")? }
            }
            other => return Err(value_err("group", format!("unknown group `{other}`"))),
        };
        let frequencies = raw.list::<usize>("frequencies")?.unwrap_or_else(|| vec![1]);
        if frequencies.is_empty() || frequencies.contains(&0) {
            return Err(value_err("frequencies", "need at least one positive count"));
        }
        let lambda_vector = raw.list::<f64>("lambda_vector")?;
        let lambdas = match (raw.list::<f64>("lambda")?, raw.scalar::<f64>("lambda_start")?) {
            (Some(_), Some(_)) => return Err(ConfigError::Invalid("give either lambda or lambda_start/stop/step".into())),
            (Some(l), None) => l,
            (None, Some(start)) => {
                let stop = raw.scalar("lambda_stop")?.ok_or_else(|| value_err("lambda_stop", "missing"))?;
                let step = raw.scalar("lambda_step")?.ok_or_else(|| value_err("lambda_step", "missing"))?;
                sweep(start, stop, step)?
            }
            (None, None) if lambda_vector.is_some() => Vec::new(),
            (None, None) => return Err(value_err("lambda", "missing")),
        };
        if lambdas.iter().chain(lambda_vector.iter().flatten()).any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(value_err("lambda", "values must be finite and non-negative"));
        }
        let trials = raw.scalar("trials")?.unwrap_or(1);
        if trials == 0 {
            return Err(value_err("trials", "must be at least 1"));
        }
        let estimators = match raw.get("estimators") {
            Some(list) => list
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| value_err("estimators", format!("unknown estimator `{}`", s.trim()))))
                .collect::<Result<Vec<Estimator>, _>>()?,
            None => vec![Estimator::Amp],
        };
        let amp_default = AmpConfig::default();
        let amp = AmpConfig {
            max_iters: raw.scalar("amp.max_iters")?.unwrap_or(amp_default.max_iters),
            tol: raw.scalar("amp.tol")?.unwrap_or(amp_default.tol),
            init_scale: raw.scalar("amp.init_scale")?.unwrap_or(amp_default.init_scale),
            seed: 0,
        };
        let se_default = SeConfig::default();
        let seed = raw.scalar("seed")?.unwrap_or(0);
        let se = SeConfig {
            mc_samples: raw.scalar("se.mc_samples")?.unwrap_or(se_default.mc_samples),
            max_iters: raw.scalar("se.max_iters")?.unwrap_or(se_default.max_iters),
            tol: raw.scalar("se.tol")?.unwrap_or(se_default.tol),
            seed,
        };
        let scan_default = ScanConfig::default();
        let scan = ScanConfig {
            step: raw.scalar("scan.step")?.unwrap_or(scan_default.step),
            gamma_max: raw.scalar("scan.gamma_max")?,
            mc_samples: raw.scalar("scan.mc_samples")?.unwrap_or(scan_default.mc_samples),
            confirm_samples: raw.scalar("scan.confirm_samples")?.unwrap_or(scan_default.confirm_samples),
            seed,
        };
        let bisect = match (raw.scalar::<f64>("bisect.lo")?, raw.scalar::<f64>("bisect.hi")?) {
            (Some(lo), Some(hi)) if lo < hi => Some((lo, hi, raw.scalar("bisect.tol")?.unwrap_or(1e-3))),
            (Some(_), Some(_)) => return Err(value_err("bisect.lo", "must be below bisect.hi")),
            (None, None) => None,
            _ => return Err(value_err("bisect.lo", "bisect.lo and bisect.hi go together")),
        };
        let config = ExperimentConfig {
            mode,
            group,
            frequencies,
            resolution: raw.scalar("resolution")?,
            lambdas,
            lambda_vector,
            n: raw.scalar("n")?.unwrap_or(1000),
            trials,
            seed,
            estimators,
            out: raw.get("out").map(PathBuf::from),
            amp,
            baseline_max_iters: raw.scalar("baseline.max_iters")?.unwrap_or(500),
            baseline_tol: raw.scalar("baseline.tol")?.unwrap_or(1e-8),
            se,
            predict_mc_samples: raw.scalar("predict.mc_samples")?.unwrap_or(100_000),
            scan,
            bisect,
            starts: raw.list("starts")?.unwrap_or_else(|| vec![0.05, 0.7]),
            canonical: raw.canonical(),
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(value_err("n", "need at least 2 vertices"));
        }
        if self.mode != Mode::PhaseScan && self.lambdas.is_empty() && self.lambda_vector.is_none() {
            return Err(value_err("lambda", "empty schedule"));
        }
        if self.mode == Mode::PhaseScan && self.lambdas.is_empty() && self.bisect.is_none() {
            return Err(value_err("lambda", "phase-scan needs λ values or a bisection range"));
        }
        if self.estimators.is_empty() {
            return Err(value_err("estimators", "empty"));
        }
        Ok(())
    }

    pub fn group_spec(&self, k: usize) -> GroupSpec {
        match &self.group {
            GroupChoice::Cyclic(order) => GroupSpec::Cyclic { order: *order, frequencies: k },
            GroupChoice::U1 => GroupSpec::U1 { frequencies: k, resolution: self.resolution.unwrap_or(256) },
            GroupChoice::So3 => GroupSpec::So3 { frequencies: k, resolution: self.resolution.unwrap_or(4096) },
            GroupChoice::Finite { source, irreps } => GroupSpec::Finite { source: source.clone(), irreps: irreps.clone() },
        }
    }

    /// Frequency counts to sweep; a finite group has exactly one irrep selection.
    pub fn frequency_list(&self) -> Vec<usize> {
        match self.group {
            GroupChoice::Finite { .. } => vec![1],
            _ => self.frequencies.clone(),
        }
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads, overrides and validates a config file.
pub fn load(text: &str, base: Option<&Path>, overrides: &[(&str, String)]) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = RawConfig::parse(text)?;
    for (k, v) in overrides {
        raw.set(k, v.clone());
    }
    ExperimentConfig::from_raw(&raw, base)
}
