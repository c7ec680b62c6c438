//! Box-constrained linear feasibility with checkable infeasibility
//! certificates.
//!
//! A [`BoxLp`] asks for `x` with `A x = b` and `lower ≤ x ≤ upper`. When no
//! such point exists the solver returns a vector `y` for which
//!
//! ```text
//! y·b − Σⱼ [max(0, cⱼ)·upperⱼ + min(0, cⱼ)·lowerⱼ] > 0,   c = Aᵀy,
//! ```
//!
//! which [`check_certificate`] recomputes without trusting the solver.

mod simplex;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
pub(crate) use simplex::lu_solve;
use simplex::{Failure, Optimum, PhaseOne, Simplex};

/// Minimum certificate margin accepted as a proof of infeasibility.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// Scale-aware residual bound for a feasible point: `1e-8·(1+‖b‖∞)`.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Allowed bound violation of a returned point.
pub const BOUND_TOL: f64 = 1e-9;

/// `A x = b`, `lower ≤ x ≤ upper`, optionally minimizing `c·x`.
///
/// The matrix is dense and row-major. Bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxLp {
    pub n_vars: usize,
    #[serde(serialize_with = "ser_bounds", deserialize_with = "de_lower")]
    pub lower: Vec<f64>,
    #[serde(serialize_with = "ser_bounds", deserialize_with = "de_upper")]
    pub upper: Vec<f64>,
    pub eq_matrix: Vec<f64>,
    pub eq_rhs: Vec<f64>,
    #[serde(default)]
    pub objective: Option<Vec<f64>>,
}

// JSON has no infinities; unbounded sides are written as null.
fn ser_bounds<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let opt: Vec<Option<f64>> = v.iter().map(|x| x.is_finite().then_some(*x)).collect();
    opt.serialize(s)
}

fn de_lower<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let opt = Vec::<Option<f64>>::deserialize(d)?;
    Ok(opt.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
}

fn de_upper<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let opt = Vec::<Option<f64>>::deserialize(d)?;
    Ok(opt.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
}

impl BoxLp {
    pub fn new(
        n_vars: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
        eq_matrix: Vec<f64>,
        eq_rhs: Vec<f64>,
    ) -> Result<Self> {
        let lp = BoxLp { n_vars, lower, upper, eq_matrix, eq_rhs, objective: None };
        lp.validate()?;
        Ok(lp)
    }

    pub fn with_objective(mut self, c: Vec<f64>) -> Result<Self> {
        if c.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, found: c.len() });
        }
        self.objective = Some(c);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "bounds have lengths {}/{}, expected {n}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() * n {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} entries, expected {}×{n}",
                self.eq_matrix.len(),
                self.eq_rhs.len()
            )));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::InvalidParameter(format!("bad bounds [{l}, {u}] on x{j}")));
            }
        }
        if self.eq_matrix.iter().chain(&self.eq_rhs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite constraint data".into()));
        }
        if let Some(c) = &self.objective {
            if c.len() != n || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("bad objective vector".into()));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.eq_matrix[i * self.n_vars..(i + 1) * self.n_vars]
    }

    /// `‖A x − b‖∞`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        (0..self.n_rows())
            .map(|i| {
                let ax: f64 = self.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
                (ax - self.eq_rhs[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest bound violation of `x` (0 when inside the box).
    pub fn bound_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    fn rhs_scale(&self) -> f64 {
        1.0 + self.eq_rhs.iter().fold(0.0f64, |s, v| s.max(v.abs()))
    }

    /// Whether `x` passes the residual and bound checks of a feasible point.
    pub fn accepts(&self, x: &[f64]) -> bool {
        x.len() == self.n_vars
            && x.iter().all(|v| v.is_finite())
            && self.residual(x) <= FEASIBILITY_TOL * self.rhs_scale()
            && self.bound_violation(x) <= BOUND_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityResult {
    Feasible { solution: Vec<f64> },
    Infeasible { certificate: Vec<f64>, margin: f64 },
    NumericalFailure { reason: String },
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityResult::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, FeasibilityResult::Infeasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { solution: Vec<f64>, value: f64 },
    Infeasible { certificate: Vec<f64>, margin: f64 },
    Unbounded,
    NumericalFailure { reason: String },
}

/// Recomputes the certificate inequality for `y` and returns its margin.
///
/// A side of the box that is infinite contributes `−∞` unless the matching
/// entry of `Aᵀy` is zero up to round-off relative to `Σᵢ|yᵢ||Aᵢⱼ|`.
pub fn check_certificate(lp: &BoxLp, y: &[f64]) -> f64 {
    if y.len() != lp.n_rows() || y.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n = lp.n_vars;
    let mut c = vec![0.0; n];
    let mut mag = vec![0.0; n];
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        for (j, a) in lp.row(i).iter().enumerate() {
            c[j] += yi * a;
            mag[j] += (yi * a).abs();
        }
    }
    let mut margin: f64 = y.iter().zip(&lp.eq_rhs).map(|(a, b)| a * b).sum();
    for j in 0..n {
        let bound = if c[j] > 0.0 { lp.upper[j] } else { lp.lower[j] };
        if c[j] == 0.0 {
            continue;
        }
        if bound.is_finite() {
            margin -= c[j] * bound;
        } else if c[j].abs() > 1e-13 * mag[j] {
            return f64::NEG_INFINITY;
        }
    }
    margin
}

/// Removes from `y` the components that make `Aᵀy` nonzero on infinite
/// bound sides, so that round-off in the solver's duals does not spoil an
/// otherwise valid certificate. Columns with an infinite side whose entry of
/// `Aᵀy` is already near zero are projected out too, since removing the
/// offending ones could otherwise tip them over.
/// Relative size of an `Aᵀy` entry treated as "already zero" when polishing.
const POLISH_NEAR_ZERO: f64 = 1e-7;
const POLISH_ROUNDS: usize = 3;

fn polish_certificate(lp: &BoxLp, y: &[f64]) -> Vec<f64> {
    let m = lp.n_rows();
    let n = lp.n_vars;
    let mut c = vec![0.0; n];
    let mut mag = vec![0.0; n];
    for (i, &yi) in y.iter().enumerate() {
        for (j, a) in lp.row(i).iter().enumerate() {
            c[j] += yi * a;
            mag[j] += (yi * a).abs();
        }
    }
    let cols: Vec<usize> = (0..n)
        .filter(|&j| {
            let open = lp.upper[j].is_infinite() || lp.lower[j].is_infinite();
            let offending = (c[j] > 0.0 && lp.upper[j].is_infinite()) || (c[j] < 0.0 && lp.lower[j].is_infinite());
            offending || (open && c[j].abs() <= POLISH_NEAR_ZERO * mag[j])
        })
        .collect();
    if cols.is_empty() {
        return y.to_vec();
    }
    // orthonormal basis of the offending columns, modified Gram–Schmidt twice
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &j in &cols {
        let mut v: Vec<f64> = (0..m).map(|i| lp.row(i)[j]).collect();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for q in &basis {
                let p: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= p * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 * norm0.max(f64::MIN_POSITIVE) {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut out = y.to_vec();
    for _ in 0..2 {
        for q in &basis {
            let p: f64 = q.iter().zip(&out).map(|(a, b)| a * b).sum();
            for (oi, qi) in out.iter_mut().zip(q) {
                *oi -= p * qi;
            }
        }
    }
    // round-off left in entries that should vanish would still touch sparse
    // columns on their infinite side
    let top = out.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for v in &mut out {
        if v.abs() <= POLISH_NEAR_ZERO * 1e-6 * top {
            *v = 0.0;
        }
    }
    out
}

fn certify(lp: &BoxLp, duals: Vec<f64>) -> Option<(Vec<f64>, f64)> {
    let margin = check_certificate(lp, &duals);
    if margin > CERTIFICATE_TOL {
        return Some((duals, margin));
    }
    let mut y = duals;
    for _ in 0..POLISH_ROUNDS {
        y = polish_certificate(lp, &y);
        let margin = check_certificate(lp, &y);
        if margin > CERTIFICATE_TOL {
            return Some((y, margin));
        }
    }
    None
}

fn failure_reason(f: Failure) -> String {
    match f {
        Failure::IterationLimit => "simplex iteration limit reached".into(),
        Failure::Singular => "basis matrix numerically singular".into(),
    }
}

enum Core {
    Feasible(Vec<f64>, Option<Optimum>),
    Infeasible(Vec<f64>, f64),
    Failure(String),
}

fn run(lp: &BoxLp, with_objective: bool) -> Core {
    if let Err(e) = lp.validate() {
        return Core::Failure(e.to_string());
    }
    let mut sx = Simplex::new(lp);
    // phase-one sum of |row-scaled residuals| accepted as zero
    let feas_tol = 1e-9 * lp.rhs_scale();
    match sx.phase_one(feas_tol) {
        Err(f) => Core::Failure(failure_reason(f)),
        Ok(PhaseOne::Infeasible { duals, infeasibility }) => match certify(lp, duals) {
            Some((y, margin)) => Core::Infeasible(y, margin),
            None => Core::Failure(format!(
                "phase one ended with infeasibility {infeasibility:.3e} but no certificate \
                 with margin above {CERTIFICATE_TOL:e}"
            )),
        },
        Ok(PhaseOne::Feasible(x)) => {
            if !lp.accepts(&x) {
                return Core::Failure(format!(
                    "phase-one point failed checks (residual {:.3e}, bound violation {:.3e})",
                    lp.residual(&x),
                    lp.bound_violation(&x)
                ));
            }
            let opt = match (&lp.objective, with_objective) {
                (Some(c), true) => match sx.phase_two(c) {
                    Ok(o) => Some(o),
                    Err(f) => return Core::Failure(failure_reason(f)),
                },
                _ => None,
            };
            Core::Feasible(x, opt)
        }
    }
}

/// Phase-one feasibility test. When the LP carries an objective, the
/// returned point is an optimal one if phase two succeeds and passes the
/// same checks, and the phase-one point otherwise.
pub fn solve_feasibility(lp: &BoxLp) -> FeasibilityResult {
    match run(lp, true) {
        Core::Feasible(x, opt) => {
            let solution = match opt {
                Some(Optimum::Optimal(xo)) if lp.accepts(&xo) => xo,
                _ => x,
            };
            FeasibilityResult::Feasible { solution }
        }
        Core::Infeasible(certificate, margin) => FeasibilityResult::Infeasible { certificate, margin },
        Core::Failure(reason) => FeasibilityResult::NumericalFailure { reason },
    }
}

/// Minimizes the objective (zero when absent) over the feasible set.
pub fn solve(lp: &BoxLp) -> LpOutcome {
    let c = lp.objective.clone().unwrap_or_else(|| vec![0.0; lp.n_vars]);
    let value = |x: &[f64]| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    match run(lp, true) {
        Core::Feasible(x, None) => LpOutcome::Optimal { value: value(&x), solution: x },
        Core::Feasible(_, Some(Optimum::Unbounded)) => LpOutcome::Unbounded,
        Core::Feasible(_, Some(Optimum::Optimal(x))) => {
            if lp.accepts(&x) {
                LpOutcome::Optimal { value: value(&x), solution: x }
            } else {
                LpOutcome::NumericalFailure {
                    reason: format!(
                        "phase-two point failed checks (residual {:.3e}, bounds {:.3e})",
                        lp.residual(&x),
                        lp.bound_violation(&x)
                    ),
                }
            }
        }
        Core::Infeasible(certificate, margin) => LpOutcome::Infeasible { certificate, margin },
        Core::Failure(reason) => LpOutcome::NumericalFailure { reason },
    }
}

/// Minimizes `t = ‖A x − b‖∞` over `lower ≤ x ≤ upper`.
///
/// `a` is row-major with `b.len()` rows. Returns the minimizer and the
/// residual recomputed from it.
pub fn minimize_linf_residual(a: &[f64], b: &[f64], lower: &[f64], upper: &[f64]) -> Result<(Vec<f64>, f64)> {
    minimize_linf_residual_with(a, b, lower, upper, &[], &[])
}

/// As [`minimize_linf_residual`] with additional exact constraints
/// `e_matrix · x = e_rhs` (for instance a probability-simplex row).
pub fn minimize_linf_residual_with(
    a: &[f64],
    b: &[f64],
    lower: &[f64],
    upper: &[f64],
    e_matrix: &[f64],
    e_rhs: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = lower.len();
    let m = b.len();
    let me = e_rhs.len();
    if upper.len() != n || a.len() != m * n || e_matrix.len() != me * n {
        return Err(Error::ShapeMismatch(format!(
            "linf problem: {m} rows, {n} variables, matrix of {} entries",
            a.len()
        )));
    }
    if m == 0 && me == 0 {
        // any box point; pick the one nearest zero
        let x = lower.iter().zip(upper).map(|(l, u)| 0f64.clamp(*l, *u)).collect();
        return Ok((x, 0.0));
    }

    // variables: x (n), t, s⁺ (m), s⁻ (m)
    let nv = n + 1 + 2 * m;
    let rows = 2 * m + me;
    let mut mat = vec![0.0; rows * nv];
    let mut rhs = vec![0.0; rows];
    for i in 0..m {
        let src = &a[i * n..(i + 1) * n];
        // A x − t + s⁺ = b  ⇒  A x − b ≤ t
        mat[i * nv..i * nv + n].copy_from_slice(src);
        mat[i * nv + n] = -1.0;
        mat[i * nv + n + 1 + i] = 1.0;
        rhs[i] = b[i];
        // A x + t − s⁻ = b  ⇒  A x − b ≥ −t
        let r = m + i;
        mat[r * nv..r * nv + n].copy_from_slice(src);
        mat[r * nv + n] = 1.0;
        mat[r * nv + n + 1 + m + i] = -1.0;
        rhs[r] = b[i];
    }
    for k in 0..me {
        let r = 2 * m + k;
        mat[r * nv..r * nv + n].copy_from_slice(&e_matrix[k * n..(k + 1) * n]);
        rhs[r] = e_rhs[k];
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    lo.extend(std::iter::repeat_n(0.0, 1 + 2 * m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, 1 + 2 * m));
    let mut c = vec![0.0; nv];
    c[n] = 1.0;
    let lp = BoxLp::new(nv, lo, hi, mat, rhs)?.with_objective(c)?;

    match solve(&lp) {
        LpOutcome::Optimal { solution, .. } => {
            let x: Vec<f64> = solution[..n].to_vec();
            let t = (0..m)
                .map(|i| {
                    let ax: f64 = a[i * n..(i + 1) * n].iter().zip(&x).map(|(p, q)| p * q).sum();
                    (ax - b[i]).abs()
                })
                .fold(0.0, f64::max);
            Ok((x, t))
        }
        LpOutcome::Infeasible { margin, .. } => Err(Error::Precondition(format!(
            "exact constraints and bounds are inconsistent (certificate margin {margin:.3e})"
        ))),
        LpOutcome::Unbounded => Err(Error::Numerical("linf objective reported unbounded".into())),
        LpOutcome::NumericalFailure { reason } => Err(Error::Numerical(reason)),
    }
}
