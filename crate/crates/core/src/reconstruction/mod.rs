//! Reconstructing effects from frames with response functions.
//!
//! Given a frame `{Â_k, w_k}` and an effect `P̂`, find `P_k` with
//! `Σ_k P_k w_k Â_k = P̂`. Operator identities are written in the real
//! embedding, so each becomes `d²` real equations.

mod nogo;

pub use nogo::{
    fock_effects, ic_qubit_effects, pair_effects, recheck_no_go, verify_no_go, verify_no_go_with,
    JointNoGoLp, LpSize, NoGoOptions, NoGoReport, Verdict,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::frames::{frame_distribution, Frame, FrameOperator, FramePoint, Label};
use crate::lp::{self, BoxLp, LpOutcome};
use crate::numeric::compensated_sum;
use crate::quantum::{effect_probability, HermitianOperator, PureState};

/// Slack added to every equality on top of the frame's completeness defect.
pub const EQUALITY_TOL: f64 = 1e-8;

/// `P(φ|X_k)` over the points of a frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseFunction {
    pub frame_id: String,
    pub effect: HermitianOperator,
    pub values: Vec<f64>,
    pub bounded: bool,
    /// Largest deviation of `Σ_k P_k w_k Â_k` from the effect over the
    /// real-embedding coordinates, recomputed from the frame.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    Response(ResponseFunction),
    Infeasible { certificate: Vec<f64>, margin: f64 },
}

/// `d² × N` row-major matrix with column `k` equal to `w_k·emb(Â_k)`.
pub fn frame_matrix(frame: &Frame) -> Vec<f64> {
    let n = frame.len();
    let d2 = frame.dim() * frame.dim();
    let cols: Vec<Vec<f64>> = frame
        .points()
        .par_iter()
        .map(|p| p.operator.real_embedding().into_iter().map(|v| v * p.weight).collect())
        .collect();
    let mut a = vec![0.0; d2 * n];
    for (k, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            a[r * n + k] = *v;
        }
    }
    a
}

/// `max_r |Σ_k values_k a_rk − b_r|`.
pub(crate) fn embedding_residual(a: &[f64], n: usize, values: &[f64], b: &[f64]) -> f64 {
    b.iter()
        .enumerate()
        .map(|(r, br)| {
            let s = compensated_sum(a[r * n..(r + 1) * n].iter().zip(values).map(|(x, v)| x * v));
            (s - br).abs()
        })
        .fold(0.0, f64::max)
}

/// Appends slack columns `s⁺, s⁻ ∈ [0, τ]` for each of the `rows` equations
/// of a row-major matrix with `n` columns; the returned objective charges
/// one unit per unit of slack.
pub(crate) fn with_slacks(a: &[f64], rows: usize, n: usize, tau: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let nv = n + 2 * rows;
    let mut mat = vec![0.0; rows * nv];
    for r in 0..rows {
        mat[r * nv..r * nv + n].copy_from_slice(&a[r * n..(r + 1) * n]);
        mat[r * nv + n + 2 * r] = 1.0;
        mat[r * nv + n + 2 * r + 1] = -1.0;
    }
    let lo = vec![0.0; nv];
    let mut hi = vec![0.0; nv];
    let mut cost = vec![0.0; nv];
    for j in n..nv {
        hi[j] = tau;
        cost[j] = 1.0;
    }
    (mat, lo, hi, cost)
}

/// Solves `Σ_k P_k w_k Â_k = effect`, with `P_k ∈ [0,1]` when `bounded` and
/// free otherwise.
///
/// Each equation may deviate by at most the frame's completeness defect plus
/// [`EQUALITY_TOL`]. Among admissible solutions the one with the least total
/// deviation is returned, so exact solutions come back exact.
pub fn reconstruct_response(frame: &Frame, effect: &HermitianOperator, bounded: bool) -> Result<Reconstruction> {
    check_dim(frame.dim(), effect.dim())?;
    let n = frame.len();
    let d2 = frame.dim() * frame.dim();
    let a = frame_matrix(frame);
    let b = effect.real_embedding();
    let tau = frame.completeness_defect() + EQUALITY_TOL;

    let (mat, mut lo, mut hi, cost) = with_slacks(&a, d2, n, tau);
    let (pl, pu) = if bounded { (0.0, 1.0) } else { (f64::NEG_INFINITY, f64::INFINITY) };
    lo[..n].fill(pl);
    hi[..n].fill(pu);
    let lp = BoxLp::new(n + 2 * d2, lo, hi, mat, b.clone())?.with_objective(cost)?;

    match lp::solve(&lp) {
        LpOutcome::Optimal { solution, .. } => {
            let values = solution[..n].to_vec();
            let residual = embedding_residual(&a, n, &values, &b);
            Ok(Reconstruction::Response(ResponseFunction {
                frame_id: frame.id().to_string(),
                effect: effect.clone(),
                values,
                bounded,
                residual,
            }))
        }
        LpOutcome::Infeasible { certificate, margin } => Ok(Reconstruction::Infeasible { certificate, margin }),
        LpOutcome::Unbounded => Err(Error::Numerical("slack objective reported unbounded".into())),
        LpOutcome::NumericalFailure { reason } => Err(Error::Numerical(reason)),
    }
}

/// `Σ_k (|α_k|² − 1)·Q(α_k|ψ)·w_k` over a phase-space frame whose points
/// carry `(Re α, Im α)` coordinates.
pub fn husimi_number_moment(psi: &PureState, frame: &Frame) -> Result<f64> {
    check_dim(frame.dim(), psi.dim())?;
    let q = frame_distribution(frame, psi)?;
    let terms = frame
        .points()
        .iter()
        .zip(&q.values)
        .map(|(p, v)| {
            let [x, y] = p.coords.ok_or_else(|| {
                Error::InvalidParameter(format!("frame point {} has no phase-space coordinates", p.label))
            })?;
            Ok((x * x + y * y - 1.0) * v * p.weight)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(compensated_sum(terms))
}

/// `Tr[effect·|χ⟩⟨χ|]` for every state of the net.
pub fn ontic_response(effect: &HermitianOperator, net: &[PureState]) -> Result<Vec<f64>> {
    net.iter().map(|chi| effect_probability(effect, chi)).collect()
}

/// Linear frame whose distribution is `δ_ij` on the given states: the duals
/// `Â_i = Σ_j (G⁻¹)_ij |ψ_j⟩⟨ψ_j|` with Gram matrix `G_ij = |⟨ψ_i|ψ_j⟩|²`.
///
/// When the projectors span the Hermitian operators the duals sum to the
/// identity, but for non-orthogonal states they are never all PSD.
pub fn delta_model_frame(states: &[PureState]) -> Result<Frame> {
    let s = states.len();
    let Some(first) = states.first() else {
        return Err(Error::InvalidParameter("empty state list".into()));
    };
    let d = first.dim();
    for st in states {
        check_dim(d, st.dim())?;
    }
    let mut gram = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            gram[i * s + j] = states[i].inner(&states[j])?.norm_sqr();
        }
    }
    let projectors: Vec<HermitianOperator> = states.iter().map(|p| p.projector()).collect();
    let mut points = Vec::with_capacity(s);
    for i in 0..s {
        let mut e = vec![0.0; s];
        e[i] = 1.0;
        // G is symmetric, so row i of G⁻¹ solves G x = e_i
        let row = lp::lu_solve(gram.clone(), e, s, false)
            .ok_or_else(|| Error::Precondition("state projectors are linearly dependent".into()))?;
        let op = HermitianOperator::combination(d, row.iter().copied().zip(projectors.iter()))?;
        points.push(FramePoint {
            label: Label::Index(vec![i as i64]),
            operator: FrameOperator::Dense(op),
            weight: 1.0,
            coords: None,
        });
    }
    Frame::new("delta-dual", d, points)
}
