use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{Frame, FrameOperator, FramePoint, Label};
use crate::error::{Error, Result};
use crate::quantum::{bloch_state, coherent_state, HermitianOperator, PureState};

/// The three-outcome qubit frame
/// `Â₁ = ⅓(𝟙+σ₃)`, `Â₂ = ⅓𝟙 − ⅙σ₃ + (√3/6)σ₁`, `Â₃ = ⅓𝟙 − ⅙σ₃ − (√3/6)σ₁`,
/// with unit weights.
pub fn qubit_trine_frame() -> Frame {
    let id = HermitianOperator::identity(2);
    let z = HermitianOperator::pauli_z();
    let x = HermitianOperator::pauli_x();
    let s = 3f64.sqrt() / 6.0;
    let ops = [
        HermitianOperator::combination(2, [(1.0 / 3.0, &id), (1.0 / 3.0, &z)]),
        HermitianOperator::combination(2, [(1.0 / 3.0, &id), (-1.0 / 6.0, &z), (s, &x)]),
        HermitianOperator::combination(2, [(1.0 / 3.0, &id), (-1.0 / 6.0, &z), (-s, &x)]),
    ];
    let points = ops
        .into_iter()
        .enumerate()
        .map(|(k, op)| FramePoint {
            label: Label::Index(vec![k as i64 + 1]),
            operator: FrameOperator::Dense(op.expect("qubit operators")),
            weight: 1.0,
            coords: None,
        })
        .collect();
    Frame::new("trine", 2, points).expect("trine frame is well formed")
}

/// Midpoint-rule discretization of the covariant Bloch-sphere frame
/// `Â(θ,φ) = |θ,φ⟩⟨θ,φ|/2π` with measure `sinθ dθ dφ`.
///
/// Node `(i, j)` sits at `θ_i = (i+½)π/n_theta`, `φ_j = (j+½)2π/n_phi` and
/// carries weight `sinθ_i·(π/n_theta)·(2π/n_phi)`. Node operators stay
/// exactly rank one; only completeness is approximate.
pub fn bloch_covariant_frame(n_theta: usize, n_phi: usize) -> Result<Frame> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidParameter(format!(
            "Bloch grid needs n_theta, n_phi ≥ 2 (got {n_theta}×{n_phi})"
        )));
    }
    let d_theta = PI / n_theta as f64;
    let d_phi = 2.0 * PI / n_phi as f64;
    let mut points = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * d_theta;
        let w = theta.sin() * d_theta * d_phi;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * d_phi;
            points.push(FramePoint {
                label: Label::Index(vec![i as i64, j as i64]),
                operator: FrameOperator::RankOne {
                    vector: bloch_state(theta, phi)?,
                    scale: 1.0 / (2.0 * PI),
                },
                weight: w,
                coords: Some([theta, phi]),
            });
        }
    }
    Frame::new(format!("bloch-{n_theta}x{n_phi}"), 2, points)
}

/// Square grid `α = (i + i'·j)·step` restricted to `|α| ≤ radius`, as
/// `(i, j, Re α, Im α)` in row-major order (`i` outer).
pub fn phase_space_grid(radius: f64, step: f64) -> Result<Vec<(i64, i64, f64, f64)>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    if !(step.is_finite() && step > 0.0 && step < radius) {
        return Err(Error::InvalidParameter(format!(
            "step must satisfy 0 < step < radius, got {step}"
        )));
    }
    let n = (radius / step + 1e-9).floor() as i64;
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut out = Vec::new();
    for i in -n..=n {
        let x = i as f64 * step;
        for j in -n..=n {
            let y = j as f64 * step;
            if x * x + y * y <= r2 {
                out.push((i, j, x, y));
            }
        }
    }
    Ok(out)
}

/// Truncated Husimi frame: `Â(α) = |α⟩⟨α|/π` with `|α⟩` the renormalized
/// `trunc`-level coherent state, on [`phase_space_grid`] with weight `step²`.
pub fn husimi_frame(trunc: usize, radius: f64, step: f64) -> Result<Frame> {
    if trunc < 2 {
        return Err(Error::InvalidParameter(format!("truncation must be ≥ 2, got {trunc}")));
    }
    let grid = phase_space_grid(radius, step)?;
    let w = step * step;
    let points = grid
        .par_iter()
        .map(|&(i, j, x, y)| {
            let vector: PureState = coherent_state(Complex64::new(x, y), trunc)?;
            Ok(FramePoint {
                label: Label::Index(vec![i, j]),
                operator: FrameOperator::RankOne { vector, scale: 1.0 / PI },
                weight: w,
                coords: Some([x, y]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Frame::new(format!("husimi-t{trunc}-r{radius}-s{step}"), trunc, points)
}
