//! Trial runner for the `run` command and the empirical half of `se-vs-amp`.

use crate::config::{Estimator, ExperimentConfig};
use crate::output::{join, num, opt, Table};
use crate::CliError;
use groupsync::amp::{run_amp, AmpConfig, Estimate};
use groupsync::baselines::{run_baseline, BaselineConfig};
use groupsync::metrics::score_estimate;
use groupsync::observation::{sample_instance, SyncInstance};
use groupsync::rng::child_seed;
use groupsync::GroupModel;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

/// One (K, λ) sweep point.
#[derive(Clone, Debug)]
pub struct Point {
    pub k: usize,
    pub group: Arc<GroupModel>,
    pub lambda_index: usize,
    /// λ per stored irrep.
    pub lambda: Vec<f64>,
}

impl Point {
    pub fn lambda_label(&self) -> String {
        if self.lambda.windows(2).all(|w| w[0] == w[1]) {
            num(self.lambda[0])
        } else {
            join(&self.lambda)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub correlation: f64,
    pub log_error: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct TrialRow {
    pub point: usize,
    pub trial: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub result: Result<Outcome, String>,
    pub wall_ms: Option<f64>,
}

pub fn build_group(config: &ExperimentConfig, k: usize) -> Result<Arc<GroupModel>, CliError> {
    Ok(Arc::new(config.group_spec(k).build()?))
}

/// Expands the config into sweep points, ordered by (K, λ).
pub fn points(config: &ExperimentConfig) -> Result<Vec<Point>, CliError> {
    let mut out = Vec::new();
    for k in config.frequency_list() {
        let group = build_group(config, k)?;
        let stored = group.stored().len();
        match &config.lambda_vector {
            Some(v) => {
                if v.len() != stored {
                    return Err(CliError::Config(format!("lambda_vector has {} values, the group stores {stored} irreps", v.len())));
                }
                out.push(Point { k, group, lambda_index: 0, lambda: v.clone() });
            }
            None => {
                for (i, &l) in config.lambdas.iter().enumerate() {
                    out.push(Point { k, group: group.clone(), lambda_index: i, lambda: vec![l; stored] });
                }
            }
        }
    }
    Ok(out)
}

pub fn trial_seed(master: u64, point: &Point, trial: usize) -> u64 {
    child_seed(master, &format!("trial/{}/{}", point.k, point.lambda_index), trial as u64)
}

fn run_estimator(instance: &SyncInstance, estimator: Estimator, config: &ExperimentConfig, seed: u64) -> groupsync::Result<Estimate> {
    match estimator {
        Estimator::Amp => run_amp(instance, &AmpConfig { seed, ..config.amp.clone() }),
        Estimator::Baseline(method) => run_baseline(
            instance,
            &BaselineConfig { method, max_iters: config.baseline_max_iters, tol: config.baseline_tol, seed },
        ),
    }
}

fn run_trial(config: &ExperimentConfig, points: &[Point], p: usize, trial: usize, timing: bool) -> Vec<TrialRow> {
    let point = &points[p];
    let seed = trial_seed(config.seed, point, trial);
    let instance = sample_instance(&point.group, config.n, &point.lambda, seed);
    config
        .estimators
        .iter()
        .map(|&estimator| {
            let start = timing.then(Instant::now);
            let result = match &instance {
                Ok(inst) => run_estimator(inst, estimator, config, seed).and_then(|est| {
                    let s = score_estimate(&point.group, &inst.truth, &est.rounded)?;
                    Ok(Outcome { correlation: s.correlation, log_error: s.log_error, iterations: est.meta.iterations })
                }),
                Err(e) => Err(groupsync::Error::Config(e.to_string())),
            }
            .map_err(|e| e.to_string());
            let wall_ms = start.map(|t| t.elapsed().as_secs_f64() * 1e3);
            TrialRow { point: p, trial, seed, estimator, result, wall_ms }
        })
        .collect()
}

/// Runs every (point, trial) job; rows come back ordered by (K, λ, trial, estimator)
/// whatever the number of workers.
pub fn run_trials(config: &ExperimentConfig, points: &[Point], timing: bool) -> Vec<TrialRow> {
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..config.trials).map(move |t| (p, t))).collect();
    jobs.par_iter().flat_map_iter(|&(p, t)| run_trial(config, points, p, t, timing)).collect()
}

pub const RUN_HEADER: &[&str] = &[
    "group",
    "K",
    "lambda",
    "n",
    "trial",
    "seed",
    "estimator",
    "correlation",
    "log_error",
    "iterations",
    "wall_time_ms",
    "error",
];

pub fn run_table(config: &ExperimentConfig, points: &[Point], rows: &[TrialRow]) -> Table {
    let mut table = Table::new(RUN_HEADER);
    for r in rows {
        let point = &points[r.point];
        let (c, l, i, e) = match &r.result {
            Ok(o) => (num(o.correlation), num(o.log_error), o.iterations.to_string(), String::new()),
            Err(e) => (String::new(), String::new(), String::new(), e.clone()),
        };
        table.push(vec![
            point.group.spec().label(),
            point.k.to_string(),
            point.lambda_label(),
            config.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.estimator.name().to_string(),
            c,
            l,
            i,
            opt(r.wall_ms),
            e,
        ]);
    }
    table
}
