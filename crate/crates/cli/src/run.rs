//! Executes validated configs; nothing here touches the file system.

use std::collections::HashMap;
use std::time::Instant;

use nmbloch::oracle::{DiscretizeOptions, OracleOptions};
use nmbloch::thermal::FiniteTOptions;
use nmbloch::{
    discretize_with, ensemble_mean, evolve_exact_with, propagate_with, solve_finite_t_with, Diagnostics, EnsembleOptions,
    Execution, KernelSpec, PropagateOptions, SpinState,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Method, RunConfig};
use crate::CliError;

/// One solver's output on its time grid.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub times: Vec<f64>,
    pub values: Vec<[f64; 3]>,
    /// Standard errors, Monte Carlo only.
    pub stderr: Option<Vec<[f64; 3]>>,
    pub diagnostics: Diagnostics,
    pub details: Map<String, Value>,
    pub seconds: f64,
}

fn numerical(e: nmbloch::Error) -> CliError {
    if e.is_usage() {
        CliError::Usage(e.to_string())
    } else {
        CliError::Numerical(e.to_string())
    }
}

pub fn run_method(cfg: &RunConfig, method: Method) -> Result<MethodResult, CliError> {
    let start = Instant::now();
    let mut details = Map::new();
    let (times, values, stderr, diagnostics) = match method {
        Method::Bloch => match cfg.kernel.resolve().map_err(numerical)? {
            KernelSpec::Exponential(_) => {
                let sys = cfg.system()?;
                let opts = PropagateOptions {
                    stride: cfg.stride,
                    ..Default::default()
                };
                let p = propagate_with(&sys, cfg.order, cfg.dt, cfg.t_max, &opts).map_err(numerical)?;
                details.insert("correction".into(), json!(sys.correction));
                details.insert("kernel".into(), json!(sys.kernel));
                let s = p.series;
                (s.times(), s.records.iter().map(|r| r.bloch).collect(), None, s.diagnostics)
            }
            KernelSpec::Thermal(spec) => {
                let mut opts = FiniteTOptions {
                    propagate: PropagateOptions {
                        stride: cfg.stride,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                if let Some(f) = cfg.fit_threshold {
                    opts.fit_threshold = f;
                }
                let sol = solve_finite_t_with(&spec, cfg.omega, cfg.initial, cfg.order, cfg.dt, cfg.t_max, &opts)
                    .map_err(numerical)?;
                details.insert("correction".into(), json!(sol.correction));
                details.insert("kernel".into(), json!(sol.kernel));
                details.insert("fit_threshold".into(), json!(opts.fit_threshold));
                let s = sol.series;
                (s.times(), s.records.iter().map(|r| r.bloch).collect(), None, s.diagnostics)
            }
        },
        Method::Oracle => {
            let sys = cfg.system()?;
            let o = &cfg.oracle;
            let disc = discretize_with(
                &sys.kernel,
                o.modes,
                cfg.t_max,
                &DiscretizeOptions {
                    scheme: o.scheme,
                    cutoff: o.cutoff,
                    bandwidth: o.bandwidth,
                    splitting: cfg.omega,
                },
            )
            .map_err(numerical)?;
            let psi0 = SpinState::from_bloch(cfg.initial).map_err(numerical)?;
            let run = evolve_exact_with(
                &disc,
                cfg.omega,
                psi0,
                cfg.t_max,
                o.dt,
                &OracleOptions {
                    stride: o.stride,
                    rotating_wave: o.rotating_wave,
                    max_dimension: o.max_dimension,
                    ..Default::default()
                },
            )
            .map_err(numerical)?;
            let spacing = 2.0 * disc.bandwidth / o.modes as f64;
            details.insert("active_modes".into(), json!(run.active_modes));
            details.insert("dimension".into(), json!(run.dimension));
            details.insert("chebyshev_terms".into(), json!(run.chebyshev_terms));
            details.insert("bandwidth".into(), json!(disc.bandwidth));
            details.insert(
                "relative_discretization_error".into(),
                json!(disc.reconstruction_error / disc.amplitude),
            );
            details.insert("validity_window".into(), json!(disc.t_max));
            details.insert("recurrence_time".into(), json!(2.0 * std::f64::consts::PI / spacing));
            let s = run.series;
            (s.times(), s.records.iter().map(|r| r.bloch).collect(), None, s.diagnostics)
        }
        Method::Mc => {
            let sys = cfg.system()?;
            let (seed, n_traj) = match (cfg.seed, cfg.n_traj) {
                (Some(s), Some(n)) => (s, n),
                _ => return Err(CliError::Usage("mc runs require seed and n_traj".into())),
            };
            let opts = EnsembleOptions {
                dt: cfg.dt,
                t_max: cfg.t_max,
                stride: cfg.stride,
                noise_dt: cfg.noise_dt,
                execution: Execution::Parallel,
            };
            let e = ensemble_mean(&sys, n_traj, seed, cfg.order, &opts).map_err(numerical)?;
            details.insert("n_traj".into(), json!(n_traj));
            details.insert("seed".into(), json!(seed));
            details.insert("noise_dt".into(), json!(cfg.noise_dt));
            details.insert("correction".into(), json!(sys.correction));
            (e.times, e.mean, Some(e.stderr), e.diagnostics)
        }
    };
    Ok(MethodResult {
        method,
        times,
        values,
        stderr,
        diagnostics,
        details,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every sweep entry concurrently; results keep the input order.
pub fn run_sweep(entries: &[(String, RunConfig)], method: Method) -> Vec<Result<MethodResult, CliError>> {
    entries.par_iter().map(|(_, cfg)| run_method(cfg, method)).collect()
}

/// Differences of each method from the reference on their shared output times.
#[derive(Debug, Clone)]
pub struct Deltas {
    pub reference: Method,
    pub others: Vec<Method>,
    pub times: Vec<f64>,
    /// `rows[p][m]` = other `m` minus reference at `times[p]`.
    pub rows: Vec<Vec<[f64; 3]>>,
    pub sup: Vec<[f64; 3]>,
}

fn time_key(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

pub fn deltas(results: &[MethodResult]) -> Result<Deltas, CliError> {
    let (reference, others) = results.split_first().expect("at least two methods");
    let lookup: Vec<HashMap<i64, usize>> = others
        .iter()
        .map(|r| r.times.iter().enumerate().map(|(i, &t)| (time_key(t), i)).collect())
        .collect();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    let mut sup = vec![[0.0f64; 3]; others.len()];
    for (p, &t) in reference.times.iter().enumerate() {
        let key = time_key(t);
        let Some(idx) = lookup.iter().map(|m| m.get(&key).copied()).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let row: Vec<[f64; 3]> = idx
            .iter()
            .zip(others)
            .map(|(&i, o)| std::array::from_fn(|c| o.values[i][c] - reference.values[p][c]))
            .collect();
        for (s, d) in sup.iter_mut().zip(&row) {
            for c in 0..3 {
                s[c] = s[c].max(d[c].abs());
            }
        }
        times.push(t);
        rows.push(row);
    }
    if times.is_empty() {
        return Err(CliError::Usage(
            "compared methods share no output times; align dt*stride with oracle.dt*oracle.stride".into(),
        ));
    }
    Ok(Deltas {
        reference: reference.method,
        others: others.iter().map(|r| r.method).collect(),
        times,
        rows,
        sup,
    })
}
