//! Alternating minimization of the model residual.
//!
//! With responses fixed, each epistemic row is an independent min-max LP over
//! the probability simplex; with epistemic rows fixed, each response row is an
//! independent min-max LP over `[0,1]^K`. A row is replaced only when its own
//! residual does not grow, so the overall residual never increases.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::{effect_residual, model_residual, state_residual, BornTable, ClassicalModel};
use crate::error::{Error, Result};
use crate::lp::{minimize_linf_residual, minimize_linf_residual_with};
use crate::numeric::fmt_f64;

/// Sweep cap used by [`min_k_scan`].
pub const DEFAULT_ITERS: usize = 200;
/// A sweep improving the residual by less than this ends the run.
pub const STALL_TOL: f64 = 1e-10;

/// One local search from a given starting model.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRun {
    pub model: ClassicalModel,
    pub residual: f64,
    /// Residual at the start and after every half-step.
    pub trace: Vec<f64>,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub best_residual: f64,
    pub restarts: usize,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub seed: u64,
    pub rows: Vec<SearchRow>,
}

impl SearchReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "K,best_residual,restarts,iters")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.k, fmt_f64(r.best_residual), r.restarts, r.iters)?;
        }
        Ok(())
    }
}

fn check_shapes(table: &BornTable, model: &ClassicalModel) -> Result<()> {
    model_residual(model, table).map(|_| ())
}

/// A row LP that fails numerically (ill-conditioned basis) leaves the row
/// as it is; other errors propagate.
fn row_fit(fit: Result<(Vec<f64>, f64)>) -> Result<Option<(Vec<f64>, f64)>> {
    match fit {
        Ok(v) => Ok(Some(v)),
        Err(Error::Numerical(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn response_step(model: &mut ClassicalModel, table: &BornTable) -> Result<()> {
    let k = model.k;
    let a: Vec<f64> = model.epistemic.iter().flatten().copied().collect();
    for j in 0..table.n_effects() {
        let b: Vec<f64> = table.probabilities.iter().map(|row| row[j]).collect();
        let Some((r, _)) = row_fit(minimize_linf_residual(&a, &b, &vec![0.0; k], &vec![1.0; k]))? else {
            continue;
        };
        let r: Vec<f64> = r.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let before = effect_residual(model, table, j);
        let old = std::mem::replace(&mut model.response[j], r);
        if effect_residual(model, table, j) > before {
            model.response[j] = old;
        }
    }
    Ok(())
}

fn epistemic_step(model: &mut ClassicalModel, table: &BornTable) -> Result<()> {
    let k = model.k;
    let a: Vec<f64> = model.response.iter().flatten().copied().collect();
    let ones = vec![1.0; k];
    for i in 0..table.n_states() {
        let fit = minimize_linf_residual_with(&a, &table.probabilities[i], &vec![0.0; k], &ones, &ones, &[1.0]);
        let Some((e, _)) = row_fit(fit)? else {
            continue;
        };
        let e: Vec<f64> = e.into_iter().map(|v| v.max(0.0)).collect();
        let total: f64 = e.iter().sum();
        if !(total > 0.0) {
            continue;
        }
        let e: Vec<f64> = e.into_iter().map(|v| v / total).collect();
        let before = state_residual(model, table, i);
        let old = std::mem::replace(&mut model.epistemic[i], e);
        if state_residual(model, table, i) > before {
            model.epistemic[i] = old;
        }
    }
    Ok(())
}

/// Alternates response and epistemic half-steps from `init` for at most
/// `iters` sweeps.
pub fn alternating_run(table: &BornTable, init: ClassicalModel, iters: usize) -> Result<SearchRun> {
    check_shapes(table, &init)?;
    init.validate()?;
    let mut model = init;
    let mut residual = model_residual(&model, table)?;
    let mut trace = vec![residual];
    let mut sweeps = 0;
    while sweeps < iters {
        let start = residual;
        for half in 0..2 {
            if half == 0 {
                response_step(&mut model, table)?;
            } else {
                epistemic_step(&mut model, table)?;
            }
            let r = model_residual(&model, table)?;
            if r > residual {
                return Err(Error::Numerical(format!("half-step raised the residual from {residual} to {r}")));
            }
            residual = r;
            trace.push(r);
        }
        sweeps += 1;
        if start - residual < STALL_TOL {
            break;
        }
    }
    model.validate()?;
    Ok(SearchRun { model, residual, trace, sweeps })
}

/// Row `i` on ontic state `i mod K`; with `K = S` this is the delta model's
/// epistemic part, which the first response half-step completes.
fn structured_init(table: &BornTable, k: usize) -> ClassicalModel {
    let epistemic = (0..table.n_states())
        .map(|i| (0..k).map(|o| if o == i % k { 1.0 } else { 0.0 }).collect())
        .collect();
    ClassicalModel { k, epistemic, response: vec![vec![0.5; k]; table.n_effects()] }
}

/// Flat-Dirichlet epistemic rows and uniform responses.
fn random_init(table: &BornTable, k: usize, seed: u64, stream: u64) -> ClassicalModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let epistemic = (0..table.n_states())
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let response = (0..table.n_effects()).map(|_| (0..k).map(|_| rng.random::<f64>()).collect()).collect();
    ClassicalModel { k, epistemic, response }
}

/// Runs all starts (possibly in parallel) and keeps the lowest residual,
/// preferring the earliest start on ties.
fn best_of(table: &BornTable, inits: Vec<ClassicalModel>, iters: usize) -> Result<SearchRun> {
    let runs = inits
        .into_par_iter()
        .map(|m| alternating_run(table, m, iters))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<SearchRun> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.residual < b.residual) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no starting points".into()))
}

fn stream(k: usize, restart: usize) -> u64 {
    ((k as u64) << 32) | restart as u64
}

/// Best model with `K` ontic states found over `restarts` starts: start 0 is
/// the structured one, the rest are random draws from `seed`.
pub fn alternating_search(
    table: &BornTable,
    k: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<(ClassicalModel, SearchReport)> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be ≥ 1".into()));
    }
    let restarts = restarts.max(1);
    let mut inits = vec![structured_init(table, k)];
    inits.extend((1..restarts).map(|r| random_init(table, k, seed, stream(k, r))));
    let best = best_of(table, inits, iters)?;
    let report = SearchReport {
        seed,
        rows: vec![SearchRow { k, best_residual: model_residual(&best.model, table)?, restarts, iters: best.sweeps }],
    };
    Ok((best.model, report))
}

/// Best residual for every `K = 1..=k_max`. Beyond the starts of
/// [`alternating_search`], `K` also starts from the best `K−1` model padded
/// with an unreachable ontic state, so residuals never increase with `K`.
pub fn min_k_scan(table: &BornTable, k_max: usize, restarts: usize, seed: u64) -> Result<(SearchReport, Vec<ClassicalModel>)> {
    min_k_scan_with(table, k_max, restarts, DEFAULT_ITERS, seed)
}

pub fn min_k_scan_with(
    table: &BornTable,
    k_max: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<(SearchReport, Vec<ClassicalModel>)> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be ≥ 1".into()));
    }
    let restarts = restarts.max(1);
    let mut rows = Vec::with_capacity(k_max);
    let mut models: Vec<ClassicalModel> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut inits = vec![structured_init(table, k)];
        inits.extend((1..restarts).map(|r| random_init(table, k, seed, stream(k, r))));
        if let Some(prev) = models.last() {
            inits.push(prev.padded());
        }
        let best = best_of(table, inits, iters)?;
        rows.push(SearchRow {
            k,
            best_residual: model_residual(&best.model, table)?,
            restarts,
            iters: best.sweeps,
        });
        models.push(best.model);
    }
    Ok((SearchReport { seed, rows }, models))
}
