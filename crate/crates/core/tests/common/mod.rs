//! Planted LP instances shared by the property and acceptance suites.

#![allow(dead_code)]

use qrealism::lp::{check_certificate, BoxLp, FeasibilityResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INF: f64 = f64::INFINITY;

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<f64> {
    (0..m * n)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-1.0..1.0) })
        .collect()
}

/// Mixed bounds: boxed, one-sided and free variables.
fn random_bounds(rng: &mut ChaCha8Rng, n: usize, allow_infinite: bool) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for _ in 0..n {
        let l = rng.random_range(-2.0..1.0);
        let u = l + rng.random_range(0.0..2.0);
        let kind = if allow_infinite { rng.random_range(0..5) } else { 0 };
        match kind {
            1 => {
                lo.push(l);
                hi.push(INF);
            }
            2 => {
                lo.push(-INF);
                hi.push(u);
            }
            3 => {
                lo.push(-INF);
                hi.push(INF);
            }
            _ => {
                lo.push(l);
                hi.push(u);
            }
        }
    }
    (lo, hi)
}

pub fn planted_feasible(seed: u64, m: usize, n: usize) -> BoxLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_matrix(&mut rng, m, n);
    let (lo, hi) = random_bounds(&mut rng, n, true);
    let x: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                // hit bounds sometimes to create degeneracy
                match rng.random_range(0..4) {
                    0 => l,
                    1 => u,
                    _ => rng.random_range(l..=u),
                }
            }
            (true, false) => l + rng.random_range(0.0..2.0),
            (false, true) => u - rng.random_range(0.0..2.0),
            (false, false) => rng.random_range(-3.0..3.0),
        })
        .collect();
    let b = (0..m).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect();
    BoxLp::new(n, lo, hi, a, b).unwrap()
}

/// Picks `y` first, makes every column of an unbounded variable exactly
/// orthogonal to it, then picks a right-hand side with `y·b` exceeding the box
/// maximum of `(Aᵀy)·x` by `gap`.
pub fn planted_infeasible(seed: u64, m: usize, n: usize, gap: f64) -> (BoxLp, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = random_matrix(&mut rng, m, n);
    let (lo, hi) = random_bounds(&mut rng, n, true);
    // dyadic y and unbounded columns keep y·a_j exactly representable;
    // y_0 = ±1 lets the first entry absorb the projection without rounding
    let mut y: Vec<f64> = (0..m).map(|_| rng.random_range(-8i32..=8) as f64 / 8.0).collect();
    y[0] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let yy: f64 = y.iter().map(|v| v * v).sum();
    for j in 0..n {
        if lo[j].is_finite() && hi[j].is_finite() {
            continue;
        }
        for i in 1..m {
            a[i * n + j] = rng.random_range(-8i32..=8) as f64 / 8.0;
        }
        let rest: f64 = (1..m).map(|i| y[i] * a[i * n + j]).sum();
        a[j] = -rest * y[0];
    }
    let mut box_max = 0.0;
    for j in 0..n {
        let c: f64 = (0..m).map(|i| y[i] * a[i * n + j]).sum();
        if lo[j].is_finite() && hi[j].is_finite() {
            box_max += (c * lo[j]).max(c * hi[j]);
        }
    }
    let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let yb: f64 = y.iter().zip(&b).map(|(p, q)| p * q).sum();
    let shift = (box_max + gap - yb) / yy;
    for (bi, yi) in b.iter_mut().zip(&y) {
        *bi += shift * yi;
    }
    (BoxLp::new(n, lo, hi, a, b).unwrap(), y)
}

/// Residual and bound checks for feasible verdicts, an independent
/// certificate re-check for infeasible ones.
pub fn check_sound(lp: &BoxLp, r: &FeasibilityResult) -> Result<(), String> {
    match r {
        FeasibilityResult::Feasible { solution } => {
            let scale = 1.0 + lp.eq_rhs.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            if lp.residual(solution) > 1e-8 * scale {
                return Err(format!("residual {}", lp.residual(solution)));
            }
            if lp.bound_violation(solution) > 1e-9 {
                return Err(format!("bound violation {}", lp.bound_violation(solution)));
            }
        }
        FeasibilityResult::Infeasible { certificate, margin } => {
            let recomputed = check_certificate(lp, certificate);
            if recomputed <= 1e-9 {
                return Err(format!("margin {recomputed}"));
            }
            if (recomputed - margin).abs() > 1e-12 * (1.0 + margin.abs()) {
                return Err(format!("reported margin {margin}, recomputed {recomputed}"));
            }
        }
        FeasibilityResult::NumericalFailure { reason } => return Err(format!("numerical failure: {reason}")),
    }
    Ok(())
}

pub fn scale_row(lp: &BoxLp, row: usize, factor: f64) -> BoxLp {
    let mut out = lp.clone();
    let n = lp.n_vars;
    for v in &mut out.eq_matrix[row * n..(row + 1) * n] {
        *v *= factor;
    }
    out.eq_rhs[row] *= factor;
    out
}
