//! Wigner function through the displaced-parity form
//! `W(α) = (2/π)·⟨ψ|D̂(α)Π̂D̂†(α)|ψ⟩`.
//!
//! `D̂(α)Π̂D̂†(α) = D̂(2α)Π̂`, so only Fock matrix elements of a displacement are
//! needed. Those have the closed form
//! `⟨m+k|D̂(β)|m⟩ = e^{ik·arg β}·e^{-x/2}·x^{k/2}·√(m!/(m+k)!)·L_m^{(k)}(x)`
//! with `x = |β|²`, and `⟨m|D̂(β)|m+k⟩ = (−1)^k·conj(⟨m+k|D̂(β)|m⟩)`. The
//! associated-Laguerre recurrence is run on the already-scaled quantity so
//! nothing overflows at large `|β|`.
//!
//! Quadrature convention: `q = √2·Re α`, `p = √2·Im α`, so
//! `W(α) d²α = ½ W(α) dq dp`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{phase_space_grid, Label, QuasiDistribution, SupportPoint};
use crate::error::{Error, Result};
use crate::quantum::{ln_factorial, PureState};

const CHUNK: usize = 256;

/// Fock matrix elements `⟨n|D̂(β)|m⟩` for `n, m < dim`, row-major.
///
/// These are elements of the full (untruncated) displacement operator.
pub fn displacement_elements(beta: Complex64, dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    let x = beta.norm_sqr();
    let arg = beta.arg();
    let mut f = vec![0.0; dim];
    for k in 0..dim {
        let len = dim - k;
        scaled_laguerre(x, k, &mut f[..len]);
        let phase = Complex64::from_polar(1.0, k as f64 * arg);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (m, fm) in f[..len].iter().enumerate() {
            let below = phase * *fm;
            out[(m + k) * dim + m] = below;
            if k > 0 {
                out[m * dim + m + k] = below.conj() * sign;
            }
        }
    }
    out
}

/// Fills `f[j] = e^{-x/2}·x^{k/2}·√(j!/(j+k)!)·L_j^{(k)}(x)` for `j < f.len()`.
fn scaled_laguerre(x: f64, k: usize, f: &mut [f64]) {
    if f.is_empty() {
        return;
    }
    let kf = k as f64;
    f[0] = if k == 0 {
        (-0.5 * x).exp()
    } else if x == 0.0 {
        0.0
    } else {
        (-0.5 * x + 0.5 * kf * x.ln() - 0.5 * ln_factorial(k)).exp()
    };
    if f.len() == 1 {
        return;
    }
    f[1] = f[0] * (1.0 / (1.0 + kf)).sqrt() * (1.0 + kf - x);
    for j in 2..f.len() {
        let jf = j as f64;
        let a = (2.0 * jf - 1.0 + kf - x) / jf * (jf / (jf + kf)).sqrt();
        let b = (jf - 1.0 + kf) / jf * (jf * (jf - 1.0) / ((jf + kf) * (jf + kf - 1.0))).sqrt();
        f[j] = a * f[j - 1] - b * f[j - 2];
    }
}

/// `(2/π)·D(2α)Π` restricted to the state's Fock levels: entry `(n, m)` is
/// `(2/π)(−1)^m ⟨n|D̂(2α)|m⟩`.
fn parity_kernel(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut k = displacement_elements(2.0 * alpha, dim);
    for n in 0..dim {
        for m in 0..dim {
            let s = if m % 2 == 0 { 2.0 / PI } else { -2.0 / PI };
            k[n * dim + m] *= s;
        }
    }
    k
}

fn kernel_expectation(kernel: &[Complex64], psi: &PureState) -> f64 {
    let a = psi.amplitudes();
    let d = a.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..d {
        let mut row = Complex64::new(0.0, 0.0);
        for m in 0..d {
            row += kernel[n * d + m] * a[m];
        }
        acc += a[n].conj() * row;
    }
    acc.re
}

/// `W(α)` for a state given in the Fock basis.
pub fn wigner_at(psi: &PureState, alpha: Complex64) -> f64 {
    kernel_expectation(&parity_kernel(alpha, psi.dim()), psi)
}

/// Wigner values on the square `|α| ≤ radius` grid with spacing `step`
/// (the same grid as the Husimi frame), packaged as a quasi-distribution with
/// weights `step²`.
///
/// The reported completeness defect is `‖Σ_k w_k (2/π)D̂(2α_k)Π̂ − 𝟙‖_max` over
/// the state's Fock levels, i.e. how far the discretized kernel is from a
/// resolution of the identity.
pub fn wigner_values(psi: &PureState, radius: f64, step: f64) -> Result<QuasiDistribution> {
    let grid = phase_space_grid(radius, step)?;
    let d = psi.dim();
    let w = step * step;

    // fixed chunking keeps the kernel sum independent of thread scheduling
    let chunks: Vec<(Vec<f64>, Vec<Complex64>)> = grid
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
            let vals = chunk
                .iter()
                .map(|&(_, _, x, y)| {
                    let kernel = parity_kernel(Complex64::new(x, y), d);
                    for (a, k) in acc.iter_mut().zip(&kernel) {
                        *a += k * w;
                    }
                    kernel_expectation(&kernel, psi)
                })
                .collect();
            (vals, acc)
        })
        .collect();

    let mut total = vec![Complex64::new(0.0, 0.0); d * d];
    let mut values = Vec::with_capacity(grid.len());
    for (vals, acc) in chunks {
        values.extend(vals);
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    let mut defect = 0.0f64;
    for n in 0..d {
        for m in 0..d {
            let target = if n == m { 1.0 } else { 0.0 };
            defect = defect.max((total[n * d + m] - target).norm());
        }
    }

    Ok(QuasiDistribution {
        frame_id: format!("wigner-r{radius}-s{step}"),
        support: grid
            .iter()
            .map(|&(i, j, x, y)| SupportPoint {
                label: Label::Index(vec![i, j]),
                weight: w,
                coords: Some([x, y]),
            })
            .collect(),
        values,
        completeness_defect: defect,
        positive_frame: false,
    })
}

/// Position marginal `∫ W dp` at each `q` node, integrating along
/// `Im α` on the grid `j·step` inside the disk `|α| ≤ radius`.
///
/// With `q = √2·Re α` the marginal is `(1/√2)·∫ W(q/√2 + iy) dy`.
pub fn wigner_position_marginal(
    psi: &PureState,
    q_nodes: &[f64],
    radius: f64,
    step: f64,
) -> Result<Vec<f64>> {
    phase_space_grid(radius, step)?;
    if q_nodes.iter().any(|q| !q.is_finite()) {
        return Err(Error::InvalidParameter("q nodes must be finite".into()));
    }
    Ok(q_nodes
        .par_iter()
        .map(|&q| {
            let x = q / SQRT_2;
            if x.abs() > radius {
                return 0.0;
            }
            let half = (radius * radius - x * x).max(0.0).sqrt();
            let n = (half / step + 1e-9).floor() as i64;
            let sum: f64 = (-n..=n)
                .map(|j| wigner_at(psi, Complex64::new(x, j as f64 * step)))
                .sum();
            sum * step / SQRT_2
        })
        .collect())
}
