//! Joint bounded reconstruction of a net of projectors.
//!
//! The joint system has variables `P_k^{(j)} ∈ [0,1]` for every effect `j`
//! and frame point `k`, the equalities `Σ_k P_k^{(j)} w_k Â_k = P̂_j` (up to
//! slack `τ` per real coordinate), and optionally `P_k^{(j)} + P_k^{(j')} = 1`
//! for each complete pair `(j, j')`.
//!
//! Pair rows couple every frame point, so the solver works on a reduced system
//! in which `P^{(j')} = 1 − P^{(j)}` is substituted. A reduced certificate
//! `(y_j, y_{j'})` lifts to the joint system with `z_k = −(Aᵀy_{j'})_k` on the
//! pair rows, and the lifted vector is checked against the joint system.

use serde::{Deserialize, Serialize};

use super::{embedding_residual, frame_matrix, EQUALITY_TOL};
use crate::error::{check_dim, Error, Result};
use crate::frames::Frame;
use crate::lp::{self, BoxLp, LpOutcome, CERTIFICATE_TOL};
use crate::quantum::{bloch_state, fock_state, HermitianOperator};

const PROJECTOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoGoOptions {
    /// Equality slack on top of the frame's completeness defect.
    pub tol: f64,
    /// Largest completeness defect accepted as "normalized".
    pub max_defect: f64,
}

impl Default for NoGoOptions {
    fn default() -> Self {
        NoGoOptions { tol: EQUALITY_TOL, max_defect: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Infeasible,
    UnexpectedlyFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSize {
    pub vars: usize,
    pub eqs: usize,
}

/// Outcome of [`verify_no_go`]. Sizes, certificate and solution refer to the
/// joint system described in the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoGoReport {
    pub frame: String,
    pub verdict: Verdict,
    pub certificate: Vec<f64>,
    pub margin: Option<f64>,
    pub lp: LpSize,
    pub effects: Vec<HermitianOperator>,
    pub complete_pairs: bool,
    /// Slack bound `τ` per real equation.
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// `|0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩` projectors, in complete pairs.
pub fn ic_qubit_effects() -> Vec<HermitianOperator> {
    use std::f64::consts::PI;
    let h = PI / 2.0;
    [(0.0, 0.0), (PI, 0.0), (h, 0.0), (h, PI), (h, h), (h, 3.0 * h)]
        .iter()
        .map(|&(t, p)| bloch_state(t, p).expect("valid angles").projector())
        .collect()
}

/// `|0⟩⟨0|, |1⟩⟨1|`.
pub fn pair_effects() -> Vec<HermitianOperator> {
    ic_qubit_effects().into_iter().take(2).collect()
}

/// Number-basis projectors `|n⟩⟨n|`, `n < dim`.
pub fn fock_effects(dim: usize) -> Result<Vec<HermitianOperator>> {
    (0..dim).map(|n| Ok(fock_state(n, dim)?.projector())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Group {
    Single(usize),
    Pair(usize, usize),
}

/// The joint no-go system in implicit form.
#[derive(Debug, Clone)]
pub struct JointNoGoLp {
    d2: usize,
    n: usize,
    /// `d² × n`, column `k` is `w_k·emb(Â_k)`.
    a: Vec<f64>,
    rhs: Vec<Vec<f64>>,
    groups: Vec<Group>,
    tau: f64,
}

impl JointNoGoLp {
    /// Checks the frame's normalization and the effect net, then assembles
    /// the joint system.
    pub fn new(frame: &Frame, effects: &[HermitianOperator], complete_pairs: bool, opts: &NoGoOptions) -> Result<Self> {
        if !(opts.tol.is_finite() && opts.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", opts.tol)));
        }
        let pos = frame.positivity();
        if !pos.all_psd {
            return Err(Error::Precondition(format!(
                "frame '{}' is not positive: smallest operator eigenvalue {:.3e}",
                frame.id(),
                pos.min_eigenvalue
            )));
        }
        let defect = frame.completeness_defect();
        if defect > opts.max_defect {
            return Err(Error::Precondition(format!(
                "frame '{}' is not normalized: completeness defect {defect:.3e} exceeds {:.3e}",
                frame.id(),
                opts.max_defect
            )));
        }
        if effects.is_empty() {
            return Err(Error::InvalidParameter("empty effect list".into()));
        }
        for (j, e) in effects.iter().enumerate() {
            check_dim(frame.dim(), e.dim())?;
            let idempotent = e.squared().max_abs_diff(e)?;
            if idempotent > PROJECTOR_TOL || (e.trace() - 1.0).abs() > PROJECTOR_TOL {
                return Err(Error::Precondition(format!("effect {j} is not a rank-one projector")));
            }
        }
        let groups = if complete_pairs {
            if effects.len() % 2 != 0 {
                return Err(Error::Precondition("complete pairs need an even number of effects".into()));
            }
            let id = HermitianOperator::identity(frame.dim());
            (0..effects.len() / 2)
                .map(|p| {
                    let (j0, j1) = (2 * p, 2 * p + 1);
                    let gap = effects[j0].try_add(&effects[j1])?.max_abs_diff(&id)?;
                    if gap > PROJECTOR_TOL {
                        return Err(Error::Precondition(format!(
                            "effects {j0} and {j1} do not sum to the identity"
                        )));
                    }
                    Ok(Group::Pair(j0, j1))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            (0..effects.len()).map(Group::Single).collect()
        };
        Ok(JointNoGoLp {
            d2: frame.dim() * frame.dim(),
            n: frame.len(),
            a: frame_matrix(frame),
            rhs: effects.iter().map(|e| e.real_embedding()).collect(),
            groups,
            tau: defect + opts.tol,
        })
    }

    fn n_effects(&self) -> usize {
        self.rhs.len()
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.groups.iter().filter_map(|g| match *g {
            Group::Pair(a, b) => Some((a, b)),
            Group::Single(_) => None,
        })
    }

    /// Joint layout: `P^{(0)}, …, P^{(M−1)}` then `(s⁺, s⁻)` per effect and row.
    pub fn size(&self) -> LpSize {
        let m = self.n_effects();
        LpSize {
            vars: m * self.n + 2 * m * self.d2,
            eqs: m * self.d2 + self.pairs().count() * self.n,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `(Aᵀy)_k` for a block `y` of length `d²`.
    fn at_y(&self, y: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for (r, yr) in y.iter().enumerate() {
            if *yr == 0.0 {
                continue;
            }
            for (ck, a) in c.iter_mut().zip(&self.a[r * self.n..(r + 1) * self.n]) {
                *ck += yr * a;
            }
        }
        c
    }

    /// Certificate margin on the joint system, computed from its definition.
    ///
    /// `y` holds one `d²` block per effect followed by one `n` block per
    /// complete pair.
    pub fn check_certificate(&self, y: &[f64]) -> f64 {
        let m = self.n_effects();
        if y.len() != self.size().eqs || y.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let (ys, zs) = y.split_at(m * self.d2);
        let mut pair_z: Vec<Option<&[f64]>> = vec![None; m];
        for (p, (j0, j1)) in self.pairs().enumerate() {
            let z = &zs[p * self.n..(p + 1) * self.n];
            pair_z[j0] = Some(z);
            pair_z[j1] = Some(z);
        }
        let mut margin = 0.0;
        for z in zs {
            margin += z;
        }
        for j in 0..m {
            let yj = &ys[j * self.d2..(j + 1) * self.d2];
            margin += yj.iter().zip(&self.rhs[j]).map(|(a, b)| a * b).sum::<f64>();
            // slack columns ±e_r on [0, τ]
            margin -= self.tau * yj.iter().map(|v| v.abs()).sum::<f64>();
            let mut c = self.at_y(yj);
            if let Some(z) = pair_z[j] {
                for (ck, zk) in c.iter_mut().zip(z) {
                    *ck += zk;
                }
            }
            // P on [0, 1]: the box maximum of c·P is Σ max(0, c)
            margin -= c.iter().map(|v| v.max(0.0)).sum::<f64>();
        }
        margin
    }

    /// Largest equality residual and bound violation of a joint point.
    pub fn check_point(&self, x: &[f64]) -> (f64, f64) {
        let m = self.n_effects();
        assert_eq!(x.len(), self.size().vars, "joint point length");
        let (ps, slacks) = x.split_at(m * self.n);
        let mut residual: f64 = 0.0;
        for j in 0..m {
            let p = &ps[j * self.n..(j + 1) * self.n];
            let s = &slacks[j * 2 * self.d2..(j + 1) * 2 * self.d2];
            let shifted: Vec<f64> = self.rhs[j].iter().enumerate().map(|(r, b)| b - s[2 * r] + s[2 * r + 1]).collect();
            residual = residual.max(embedding_residual(&self.a, self.n, p, &shifted));
        }
        for (j0, j1) in self.pairs() {
            for k in 0..self.n {
                residual = residual.max((ps[j0 * self.n + k] + ps[j1 * self.n + k] - 1.0).abs());
            }
        }
        let bounds = ps
            .iter()
            .map(|v| (-v).max(v - 1.0))
            .chain(slacks.iter().map(|v| (-v).max(v - self.tau)))
            .fold(0.0, f64::max);
        (residual, bounds)
    }

    /// The joint system as an explicit [`BoxLp`] (rows and columns in the
    /// layout used by [`check_certificate`](Self::check_certificate)).
    pub fn to_box_lp(&self) -> BoxLp {
        let LpSize { vars, eqs } = self.size();
        let m = self.n_effects();
        let mut mat = vec![0.0; vars * eqs];
        let mut rhs = vec![0.0; eqs];
        for j in 0..m {
            for r in 0..self.d2 {
                let row = j * self.d2 + r;
                let base = row * vars;
                mat[base + j * self.n..base + (j + 1) * self.n]
                    .copy_from_slice(&self.a[r * self.n..(r + 1) * self.n]);
                let s = m * self.n + j * 2 * self.d2 + 2 * r;
                mat[base + s] = 1.0;
                mat[base + s + 1] = -1.0;
                rhs[row] = self.rhs[j][r];
            }
        }
        for (p, (j0, j1)) in self.pairs().enumerate() {
            for k in 0..self.n {
                let row = m * self.d2 + p * self.n + k;
                mat[row * vars + j0 * self.n + k] = 1.0;
                mat[row * vars + j1 * self.n + k] = 1.0;
                rhs[row] = 1.0;
            }
        }
        let mut lo = vec![0.0; vars];
        let mut hi = vec![1.0; vars];
        for j in m * self.n..vars {
            lo[j] = 0.0;
            hi[j] = self.tau;
        }
        BoxLp::new(vars, lo, hi, mat, rhs).expect("joint system is well formed")
    }

    /// Reduced system: one block of `P` per group, slacks per effect, and the
    /// second effect of every pair rewritten through `P^{(j')} = 1 − P^{(j)}`.
    /// Rows keep the per-effect order of the joint system.
    fn reduced(&self) -> Result<BoxLp> {
        let m = self.n_effects();
        let g = self.groups.len();
        let nv = g * self.n + 2 * m * self.d2;
        let rows = m * self.d2;
        let mut mat = vec![0.0; rows * nv];
        let mut rhs = vec![0.0; rows];
        let row_sums: Vec<f64> =
            (0..self.d2).map(|r| self.a[r * self.n..(r + 1) * self.n].iter().sum()).collect();
        for (gi, group) in self.groups.iter().enumerate() {
            let members: Vec<(usize, f64)> = match *group {
                Group::Single(j) => vec![(j, 1.0)],
                Group::Pair(j0, j1) => vec![(j0, 1.0), (j1, -1.0)],
            };
            for (j, sign) in members {
                for r in 0..self.d2 {
                    let row = j * self.d2 + r;
                    let base = row * nv + gi * self.n;
                    for (dst, src) in mat[base..base + self.n].iter_mut().zip(&self.a[r * self.n..(r + 1) * self.n]) {
                        *dst = sign * src;
                    }
                    let s = g * self.n + j * 2 * self.d2 + 2 * r;
                    mat[row * nv + s] = 1.0;
                    mat[row * nv + s + 1] = -1.0;
                    rhs[row] = if sign > 0.0 { self.rhs[j][r] } else { self.rhs[j][r] - row_sums[r] };
                }
            }
        }
        let mut lo = vec![0.0; nv];
        let mut hi = vec![1.0; nv];
        let mut cost = vec![0.0; nv];
        for j in g * self.n..nv {
            lo[j] = 0.0;
            hi[j] = self.tau;
            cost[j] = 1.0;
        }
        BoxLp::new(nv, lo, hi, mat, rhs)?.with_objective(cost)
    }

    fn lift_certificate(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for (_, j1) in self.pairs() {
            let c = self.at_y(&y[j1 * self.d2..(j1 + 1) * self.d2]);
            out.extend(c.into_iter().map(|v| -v));
        }
        out
    }

    fn lift_point(&self, x: &[f64]) -> Vec<f64> {
        let m = self.n_effects();
        let mut ps = vec![0.0; m * self.n];
        for (gi, group) in self.groups.iter().enumerate() {
            let block = &x[gi * self.n..(gi + 1) * self.n];
            match *group {
                Group::Single(j) => ps[j * self.n..(j + 1) * self.n].copy_from_slice(block),
                Group::Pair(j0, j1) => {
                    ps[j0 * self.n..(j0 + 1) * self.n].copy_from_slice(block);
                    for (dst, v) in ps[j1 * self.n..(j1 + 1) * self.n].iter_mut().zip(block) {
                        *dst = 1.0 - v;
                    }
                }
            }
        }
        ps.extend_from_slice(&x[self.groups.len() * self.n..]);
        ps
    }
}

/// [`verify_no_go_with`] under default options.
pub fn verify_no_go(frame: &Frame, effects: &[HermitianOperator], complete_pairs: bool) -> Result<NoGoReport> {
    verify_no_go_with(frame, effects, complete_pairs, &NoGoOptions::default())
}

/// Decides whether bounded responses `P^{(j)} ∈ [0,1]` reproduce every
/// effect through the frame.
///
/// Infeasible verdicts carry a joint certificate whose margin has been
/// recomputed by [`JointNoGoLp::check_certificate`]; feasible verdicts carry
/// the joint point and its residual.
pub fn verify_no_go_with(
    frame: &Frame,
    effects: &[HermitianOperator],
    complete_pairs: bool,
    opts: &NoGoOptions,
) -> Result<NoGoReport> {
    let joint = JointNoGoLp::new(frame, effects, complete_pairs, opts)?;
    let reduced = joint.reduced()?;
    let base = NoGoReport {
        frame: frame.id().to_string(),
        verdict: Verdict::Infeasible,
        certificate: Vec::new(),
        margin: None,
        lp: joint.size(),
        effects: effects.to_vec(),
        complete_pairs,
        tolerance: joint.tau(),
        solution: None,
        residual: None,
    };
    match lp::solve(&reduced) {
        LpOutcome::Infeasible { certificate, .. } => {
            let lifted = joint.lift_certificate(&certificate);
            let margin = joint.check_certificate(&lifted);
            if margin <= CERTIFICATE_TOL {
                return Err(Error::Numerical(format!(
                    "lifted certificate failed the joint check (margin {margin:.3e})"
                )));
            }
            Ok(NoGoReport { certificate: lifted, margin: Some(margin), ..base })
        }
        LpOutcome::Optimal { solution, .. } => {
            let x = joint.lift_point(&solution);
            let (residual, bounds) = joint.check_point(&x);
            if residual > lp::FEASIBILITY_TOL * 2.0 || bounds > lp::BOUND_TOL {
                return Err(Error::Numerical(format!(
                    "lifted point failed the joint check (residual {residual:.3e}, bounds {bounds:.3e})"
                )));
            }
            Ok(NoGoReport {
                verdict: Verdict::UnexpectedlyFeasible,
                solution: Some(x),
                residual: Some(residual),
                ..base
            })
        }
        LpOutcome::Unbounded => Err(Error::Numerical("slack objective reported unbounded".into())),
        LpOutcome::NumericalFailure { reason } => Err(Error::Numerical(reason)),
    }
}

/// Rebuilds the joint system for a report and re-derives its evidence:
/// the certificate margin for infeasible verdicts, or `−residual` for
/// feasible ones (so a valid report always yields a finite value and an
/// infeasible one a value above [`CERTIFICATE_TOL`]).
pub fn recheck_no_go(frame: &Frame, report: &NoGoReport, opts: &NoGoOptions) -> Result<f64> {
    let joint = JointNoGoLp::new(frame, &report.effects, report.complete_pairs, opts)?;
    match report.verdict {
        Verdict::Infeasible => Ok(joint.check_certificate(&report.certificate)),
        Verdict::UnexpectedlyFeasible => {
            let x = report
                .solution
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("feasible report without a solution".into()))?;
            Ok(-joint.check_point(x).0)
        }
    }
}
