//! Experiment drivers: a single solve, bath-rate and chain-length scans,
//! and the superspace-ordering comparison.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use ness_core::{solve_ness, ModelParams, OrderingKind, OrderingScheme, RunResult, SweepSchedule};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{write_json, write_run, RunSummary};

/// Power-law fit of the mean current against the chain length.
#[derive(Clone, Debug, Serialize)]
pub struct TransportFit {
    /// `(N, mean current)` samples entering the fit.
    pub points: Vec<(usize, f64)>,
    /// Exponent of `J ~ N^(-alpha)`.
    pub alpha: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
}

/// Least-squares slope of `log J` against `log N`; currents must be
/// strictly positive in magnitude.
pub fn fit_transport_exponent(points: &[(usize, f64)]) -> Result<TransportFit> {
    if points.len() < 3 {
        bail!("transport fit needs at least 3 points, got {}", points.len());
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, current) in points {
        let magnitude = current.abs();
        if !(magnitude > 0.0) {
            bail!("transport fit needs nonzero currents, got {current} at N={n}");
        }
        xs.push((n as f64).ln());
        ys.push(magnitude.ln());
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(TransportFit {
        points: points.to_vec(),
        alpha: -slope,
        fit_residual: residual,
    })
}

/// One solved scan point.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub label: String,
    pub params: ModelParams,
    pub scheme: OrderingKind,
    pub result: RunResult,
}

/// What an experiment produced, for exit-status decisions and tests.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub runs: Vec<RunOutcome>,
    pub all_converged: bool,
    pub fit: Option<TransportFit>,
    pub comparison: Option<OrderingComparison>,
}

/// Side-by-side convergence quality of the two superspace orderings.
#[derive(Clone, Debug, Serialize)]
pub struct OrderingComparison {
    pub energy_threshold: f64,
    pub rln_final_energy: f64,
    pub rnln_final_energy: f64,
    /// Sweeps until the energy first dropped below the threshold; `None`
    /// when it never did.
    pub rln_sweeps_to_threshold: Option<usize>,
    pub rnln_sweeps_to_threshold: Option<usize>,
}

fn scheme_of(kind: OrderingKind, n: usize) -> OrderingScheme {
    OrderingScheme::new(kind, n)
}

fn solve_point(
    label: &str,
    params: &ModelParams,
    kind: OrderingKind,
    schedule: &SweepSchedule,
) -> Result<RunOutcome> {
    let result = solve_ness(params, &scheme_of(kind, params.n_sites), schedule)
        .with_context(|| format!("solving {label}"))?;
    Ok(RunOutcome {
        label: label.to_owned(),
        params: params.clone(),
        scheme: kind,
        result,
    })
}

/// Solve scan points in order, optionally spreading them over worker
/// threads. Results come back in input order either way.
fn solve_points(
    points: Vec<(String, ModelParams)>,
    kind: OrderingKind,
    schedule: &SweepSchedule,
    workers: usize,
) -> Result<Vec<RunOutcome>> {
    if workers <= 1 || points.len() <= 1 {
        return points
            .iter()
            .map(|(label, params)| solve_point(label, params, kind, schedule))
            .collect();
    }
    let mut outcomes: Vec<Option<Result<RunOutcome>>> = Vec::new();
    outcomes.resize_with(points.len(), || None);
    let queue = std::sync::Mutex::new(points.iter().enumerate().collect::<Vec<_>>());
    let slots = std::sync::Mutex::new(&mut outcomes);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(points.len()) {
            scope.spawn(|| loop {
                let job = queue.lock().unwrap().pop();
                let Some((index, (label, params))) = job else {
                    break;
                };
                let outcome = solve_point(label, params, kind, schedule);
                slots.lock().unwrap()[index] = Some(outcome);
            });
        }
    });
    outcomes
        .into_iter()
        .map(|slot| slot.expect("every scan point solved"))
        .collect()
}

fn write_outcome(dir: &Path, outcome: &RunOutcome, schedule: &SweepSchedule, seed: u64) -> Result<()> {
    let summary = RunSummary::new(
        &outcome.params,
        outcome.scheme,
        schedule,
        seed,
        &outcome.result,
    );
    write_run(dir, &summary, &outcome.result)?;
    Ok(())
}

fn write_scan_csv(path: &Path, header: &str, rows: &[(String, &RunOutcome)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        header,
        "mean_current",
        "final_energy",
        "sweeps",
        "converged",
        "max_imag",
    ])?;
    for (key, outcome) in rows {
        w.write_record([
            key.clone(),
            outcome.result.mean_current().to_string(),
            outcome.result.final_energy().to_string(),
            outcome.result.sweeps().to_string(),
            outcome.result.converged.to_string(),
            outcome.result.max_imag.to_string(),
        ])?;
    }
    crate::output::write_atomic(path, &w.into_inner()?)
}

/// Sweep index (1-based) at which the energy first reached `threshold`.
fn sweeps_to_threshold(result: &RunResult, threshold: f64) -> Option<usize> {
    result
        .energy_history
        .iter()
        .position(|&e| e <= threshold)
        .map(|i| i + 1)
}

/// Run both orderings with identical schedules and record which converges
/// better.
pub fn compare_orderings(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let params = config.model.to_params().map_err(anyhow::Error::from)?;
    let out = &config.output_dir;
    let mut runs = Vec::new();
    for kind in [OrderingKind::Rln, OrderingKind::Rnln] {
        let label = match kind {
            OrderingKind::Rln => "rln",
            OrderingKind::Rnln => "rnln",
        };
        let outcome = solve_point(label, &params, kind, &config.schedule)?;
        write_outcome(&out.join(label), &outcome, &config.schedule, config.seed)?;
        runs.push(outcome);
    }
    let threshold = 1e-4;
    let comparison = OrderingComparison {
        energy_threshold: threshold,
        rln_final_energy: runs[0].result.final_energy(),
        rnln_final_energy: runs[1].result.final_energy(),
        rln_sweeps_to_threshold: sweeps_to_threshold(&runs[0].result, threshold),
        rnln_sweeps_to_threshold: sweeps_to_threshold(&runs[1].result, threshold),
    };
    write_json(&out.join("summary.json"), &comparison)?;
    let all_converged = runs.iter().all(|r| r.result.converged);
    Ok(ExperimentReport {
        kind: ExperimentKind::OrderingCompare,
        runs,
        all_converged,
        fit: None,
        comparison: Some(comparison),
    })
}

/// Top-level dispatch on the configured experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate().map_err(anyhow::Error::from)?;
    match config.experiment {
        ExperimentKind::Single => {
            let params = config.model.to_params()?;
            let outcome = solve_point("single", &params, config.scheme, &config.schedule)?;
            write_outcome(&config.output_dir, &outcome, &config.schedule, config.seed)?;
            let all_converged = outcome.result.converged;
            Ok(ExperimentReport {
                kind: ExperimentKind::Single,
                runs: vec![outcome],
                all_converged,
                fit: None,
                comparison: None,
            })
        }
        ExperimentKind::GammaScan => {
            let points: Vec<(String, ModelParams)> = config
                .scan
                .gammas
                .iter()
                .map(|&gamma| {
                    let model = config.model.with_gamma(gamma);
                    Ok((format!("gamma_{gamma}"), model.to_params()?))
                })
                .collect::<Result<_, crate::config::ConfigError>>()?;
            let runs = solve_points(points, config.scheme, &config.schedule, config.workers)?;
            for outcome in &runs {
                write_outcome(
                    &config.output_dir.join(&outcome.label),
                    outcome,
                    &config.schedule,
                    config.seed,
                )?;
            }
            let rows: Vec<(String, &RunOutcome)> = config
                .scan
                .gammas
                .iter()
                .zip(&runs)
                .map(|(g, r)| (g.to_string(), r))
                .collect();
            write_scan_csv(&config.output_dir.join("scan_summary.csv"), "gamma", &rows)?;
            let all_converged = runs.iter().all(|r| r.result.converged);
            write_json(
                &config.output_dir.join("summary.json"),
                &serde_json::json!({
                    "experiment": "gamma_scan",
                    "gammas": config.scan.gammas,
                    "converged": all_converged,
                }),
            )?;
            Ok(ExperimentReport {
                kind: ExperimentKind::GammaScan,
                runs,
                all_converged,
                fit: None,
                comparison: None,
            })
        }
        ExperimentKind::SizeScan => {
            let points: Vec<(String, ModelParams)> = config
                .scan
                .sizes
                .iter()
                .map(|&n| {
                    let model = config.model.with_sites(n);
                    Ok((format!("n_{n}"), model.to_params()?))
                })
                .collect::<Result<_, crate::config::ConfigError>>()?;
            let runs = solve_points(points, config.scheme, &config.schedule, config.workers)?;
            for outcome in &runs {
                write_outcome(
                    &config.output_dir.join(&outcome.label),
                    outcome,
                    &config.schedule,
                    config.seed,
                )?;
            }
            let rows: Vec<(String, &RunOutcome)> = config
                .scan
                .sizes
                .iter()
                .zip(&runs)
                .map(|(n, r)| (n.to_string(), r))
                .collect();
            write_scan_csv(&config.output_dir.join("scan_summary.csv"), "n_sites", &rows)?;

            let samples: Vec<(usize, f64)> = config
                .scan
                .sizes
                .iter()
                .zip(&runs)
                .map(|(&n, r)| (n, r.result.mean_current()))
                .collect();
            let fit = fit_transport_exponent(&samples).ok();
            let all_converged = runs.iter().all(|r| r.result.converged);
            write_json(
                &config.output_dir.join("summary.json"),
                &serde_json::json!({
                    "experiment": "size_scan",
                    "sizes": config.scan.sizes,
                    "converged": all_converged,
                    "transport_fit": fit,
                }),
            )?;
            Ok(ExperimentReport {
                kind: ExperimentKind::SizeScan,
                runs,
                all_converged,
                fit,
                comparison: None,
            })
        }
        ExperimentKind::OrderingCompare => compare_orderings(config),
    }
}
