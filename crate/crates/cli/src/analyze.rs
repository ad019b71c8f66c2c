//! State-evolution and free-energy analyses behind `analyze`.

use crate::config::{Estimator, ExperimentConfig, Mode};
use crate::harness::{build_group, points, run_trials, Point};
use crate::output::{join, num, Table};
use crate::CliError;
use groupsync::free_energy::{classify_with, gap_onset, Axis, Evaluator, PhaseReport};
use groupsync::rng::child_seed;
use groupsync::state_evolution::{predict_performance, se_fixed_point, DEFAULT_GAMMA0};
use groupsync::GroupModel;
use rayon::prelude::*;

pub fn analyze(config: &ExperimentConfig) -> Result<Table, CliError> {
    match config.mode {
        Mode::SeVsAmp => se_vs_amp(config),
        Mode::PhaseScan => phase_scan(config),
        Mode::Landscape => landscape(config),
        Mode::Trajectory => trajectory(config),
        Mode::Run => Err(CliError::Config("mode = run belongs to the `run` command".into())),
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Empirical AMP log-error next to the state-evolution prediction, per (K, λ).
pub fn se_vs_amp(config: &ExperimentConfig) -> Result<Table, CliError> {
    let pts = points(config)?;
    let amp_only = ExperimentConfig { estimators: vec![Estimator::Amp], ..config.clone() };
    let rows = run_trials(&amp_only, &pts, false);
    let predictions: Vec<groupsync::Result<(Vec<f64>, f64, f64)>> = pts
        .par_iter()
        .enumerate()
        .map(|(p, point)| {
            let gamma0 = vec![DEFAULT_GAMMA0; point.lambda.len()];
            let se = se_fixed_point(&gamma0, &point.lambda, &point.group, &config.se)?;
            let pred = predict_performance(&se, &point.lambda, &point.group, config.predict_mc_samples, child_seed(config.seed, "predict", p as u64))?;
            Ok((se.fixed_point, pred.correlation, pred.log_error))
        })
        .collect();
    let mut table = Table::new(&[
        "group",
        "K",
        "lambda",
        "n",
        "trials",
        "amp_log_error",
        "amp_log_error_se",
        "amp_correlation",
        "se_log_error",
        "se_correlation",
        "se_gamma",
    ]);
    for (p, (point, pred)) in pts.iter().zip(predictions).enumerate() {
        let (gamma, se_corr, se_log) = pred?;
        let ok: Vec<_> = rows.iter().filter(|r| r.point == p).filter_map(|r| r.result.as_ref().ok()).collect();
        let (le, le_se) = mean_se(&ok.iter().map(|o| o.log_error).collect::<Vec<_>>());
        let (corr, _) = mean_se(&ok.iter().map(|o| o.correlation).collect::<Vec<_>>());
        table.push(vec![
            point.group.spec().label(),
            point.k.to_string(),
            point.lambda_label(),
            config.n.to_string(),
            ok.len().to_string(),
            num(le),
            num(le_se),
            num(corr),
            num(se_log),
            num(se_corr),
            join(&gamma),
        ]);
    }
    Ok(table)
}

fn single_group(config: &ExperimentConfig) -> Result<(GroupModel, usize), CliError> {
    let k = *config.frequency_list().first().expect("validated non-empty");
    let group = build_group(config, k)?;
    Ok(((*group).clone(), k))
}

fn scan_evaluator<'g>(group: &'g GroupModel, config: &ExperimentConfig) -> Result<Evaluator<'g>, CliError> {
    Ok(Evaluator::new(group, config.scan.mc_samples, child_seed(config.scan.seed, "scan", 0))?)
}

fn phase_row(table: &mut Table, kind: &str, r: &PhaseReport) {
    table.push(vec![
        kind.into(),
        join(&r.lambda),
        r.phase.name().into(),
        (r.global_min.iter().any(|&g| g > 0.0)).to_string(),
        join(&r.global_min),
        join(&r.amp_min),
        num(r.margin),
        num(r.margin_se),
        r.uncertain.to_string(),
    ]);
}

/// Phase at each λ (common to all frequencies) plus an optional gap-onset bisection.
pub fn phase_scan(config: &ExperimentConfig) -> Result<Table, CliError> {
    let (group, _) = single_group(config)?;
    let k = group.stored().len();
    let ev = scan_evaluator(&group, config)?;
    let mut table = Table::new(&["kind", "lambda", "phase", "nonzero", "global_min", "amp_min", "margin", "margin_se", "uncertain"]);
    for &l in &config.lambdas {
        let r = classify_with(&ev, &vec![l; k], &config.scan, &config.se)?;
        phase_row(&mut table, "point", &r);
    }
    if let Some((lo, hi, tol)) = config.bisect {
        let b = gap_onset(&group, lo, hi, tol, &config.scan)?;
        for s in &b.steps {
            let e = String::new();
            table.push(vec![
                "bisect".into(),
                num(s.lambda),
                e.clone(),
                s.nonzero.to_string(),
                e.clone(),
                e.clone(),
                num(s.margin),
                num(s.margin_se),
                e,
            ]);
        }
        let e = String::new();
        table.push(vec!["onset".into(), num(b.estimate), e.clone(), e.clone(), e.clone(), e.clone(), e.clone(), e.clone(), e]);
    }
    Ok(table)
}

/// Free-energy grid over one or two irreps, with the confirmed global minimum marked `X`.
pub fn landscape(config: &ExperimentConfig) -> Result<Table, CliError> {
    let (group, k) = single_group(config)?;
    let cfg = ExperimentConfig { frequencies: vec![k], ..config.clone() };
    let pts: Vec<Point> = points(&cfg)?;
    let ev = scan_evaluator(&group, config)?;
    let names: Vec<String> = group.stored_descriptors().map(|d| d.name()).collect();
    let free: Vec<usize> = (0..names.len()).collect();
    if free.len() > 2 {
        return Err(CliError::Config(format!("a landscape needs at most 2 irreps, the group stores {}", free.len())));
    }
    let mut header = vec!["lambda".to_string()];
    header.extend(names.iter().map(|n| format!("gamma_{n}")));
    header.extend(["f", "stderr", "minimum"].map(String::from));
    let mut table = Table { header, ..Table::default() };
    for point in &pts {
        let lmax = point.lambda.iter().cloned().fold(0.0, f64::max);
        let gmax = config.scan.gamma_max.unwrap_or(4.0 * (lmax * lmax * group.max_dim() as f64).max(1.0));
        let axes: Vec<Axis> = free.iter().map(|&i| Axis::uniform(i, config.scan.step, gmax)).collect();
        let grid = ev.scan(&axes, &point.lambda)?;
        let report = classify_with(&ev, &point.lambda, &config.scan, &config.se)?;
        let nearest = (0..grid.len())
            .min_by(|&a, &b| {
                let da = dist(&grid.gamma(a, names.len()), &report.global_min);
                let db = dist(&grid.gamma(b, names.len()), &report.global_min);
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        table.comments.push(format!(
            "lambda={} phase={} global_min={} margin={} margin_se={}",
            point.lambda_label(),
            report.phase.name(),
            join(&report.global_min),
            num(report.margin),
            num(report.margin_se)
        ));
        for i in 0..grid.len() {
            let mut row = vec![point.lambda_label()];
            row.extend(grid.gamma(i, names.len()).iter().map(|g| num(*g)));
            row.push(num(grid.values[i]));
            row.push(num(grid.stderr[i]));
            row.push(if i == nearest { "X".into() } else { String::new() });
            table.push(row);
        }
    }
    Ok(table)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// State-evolution trajectories from each configured start, with the free
/// energy of every fixed point reached.
pub fn trajectory(config: &ExperimentConfig) -> Result<Table, CliError> {
    let (group, k) = single_group(config)?;
    let cfg = ExperimentConfig { frequencies: vec![k], ..config.clone() };
    let point = points(&cfg)?.into_iter().next().expect("at least one point");
    let ev = scan_evaluator(&group, config)?;
    let names: Vec<String> = group.stored_descriptors().map(|d| d.name()).collect();
    let mut header = vec!["start".to_string(), "iteration".to_string()];
    header.extend(names.iter().map(|n| format!("gamma_{n}")));
    let mut table = Table { header, ..Table::default() };
    let mut fixed = Vec::new();
    for &s in &config.starts {
        let start = vec![s; names.len()];
        let res = se_fixed_point(&start, &point.lambda, &group, &config.se)?;
        for (t, g) in res.trajectory.iter().enumerate() {
            let mut row = vec![num(s), t.to_string()];
            row.extend(g.iter().map(|x| num(*x)));
            table.push(row);
        }
        let (f, se) = ev.free_energy(&res.fixed_point, &point.lambda)?;
        table.comments.push(format!("start={} converged={} f={} stderr={}", num(s), res.converged, num(f), num(se)));
        fixed.push((s, res.fixed_point));
    }
    for w in fixed.windows(2) {
        let (d, se) = ev.difference(&w[1].1, &w[0].1, &point.lambda)?;
        table.comments.push(format!("f(start={}) - f(start={}) = {} stderr={}", num(w[1].0), num(w[0].0), num(d), num(se)));
    }
    Ok(table)
}
