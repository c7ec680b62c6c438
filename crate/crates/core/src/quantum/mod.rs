//! Finite-dimensional Hermitian algebra, state constructors and Born-rule
//! evaluation.
//!
//! Everything here is immutable once built. Operators are stored as dense
//! row-major complex matrices; the LP layers downstream consume them through
//! [`HermitianOperator::real_embedding`], which flattens an operator into `d²`
//! real coordinates (diagonal, then real and imaginary parts of the strict
//! upper triangle).

mod eigen;
mod json;

pub use eigen::symmetric_eigenvalues;

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

/// Tolerance on `‖ψ‖ - 1` accepted by [`PureState::new`].
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on `|A_ij - conj(A_ji)|` (scaled by `1 + max|A|`).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Scale-aware PSD slack: eigenvalues down to `-1e-9·(1 + |trace|)` count as
/// nonnegative.
pub fn psd_tolerance(trace: f64) -> f64 {
    1e-9 * (1.0 + trace.abs())
}

/// A normalized vector in `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps already-normalized amplitudes.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("state must have dim ≥ 1".into()));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("state must have dim ≥ 1".into()));
        }
        let norm = norm(&amplitudes);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn projector(&self) -> HermitianOperator {
        projector(self)
    }

    /// `Σ n |c_n|²`, the mean of the number operator in the Fock basis.
    pub fn mean_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl HermitianOperator {
    /// Validates that `entries` (row-major, `dim²` long) is Hermitian.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("operator must have dim ≥ 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let scale = 1.0 + entries.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                asym = asym.max(d);
            }
        }
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self { dim, entries })
    }

    /// Builds `(M + M†)/2` from an arbitrary square matrix; used for sums
    /// whose Hermiticity is exact mathematically but not bitwise.
    pub fn hermitian_part(dim: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            out[i * dim + i] = Complex64::new(entries[i * dim + i].re, 0.0);
            for j in (i + 1)..dim {
                let z = 0.5 * (entries[i * dim + j] + entries[j * dim + i].conj());
                out[i * dim + j] = z;
                out[j * dim + i] = z.conj();
            }
        }
        Self { dim, entries: out }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        op
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self { dim: 2, entries: vec![o, l, l, o] }
    }

    pub fn pauli_y() -> Self {
        let o = Complex64::new(0.0, 0.0);
        Self {
            dim: 2,
            entries: vec![o, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), o],
        }
    }

    pub fn pauli_z() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self { dim: 2, entries: vec![l, o, o, -l] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i].re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scaled(-1.0))
    }

    /// Linear combination `Σ c_k A_k` of equally sized operators.
    pub fn combination<'a, I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, &'a HermitianOperator)>,
    {
        let mut acc = Self::zeros(dim);
        for (c, op) in terms {
            check_dim(dim, op.dim)?;
            for (a, b) in acc.entries.iter_mut().zip(&op.entries) {
                *a += b * c;
            }
        }
        Ok(acc)
    }

    /// `A·A`, which is Hermitian whenever `A` is.
    pub fn squared(&self) -> Self {
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                for j in 0..d {
                    out[i * d + j] += a * self.entries[k * d + j];
                }
            }
        }
        Self::hermitian_part(d, &out)
    }

    /// `Re ⟨ψ|A|ψ⟩` (the imaginary part vanishes for Hermitian `A`).
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        check_dim(self.dim, psi.dim())?;
        let a = psi.amplitudes();
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += self.entries[i * d + j] * a[j];
            }
            acc += (a[i].conj() * row).re;
        }
        Ok(acc)
    }

    /// `Tr[A B]` for Hermitian `A`, `B` (always real).
    pub fn trace_with(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.entries[i * d + j] * other.entries[j * d + i]).re;
            }
        }
        Ok(acc)
    }

    /// `max_ij |A_ij − B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm())))
    }

    /// The `d²` real coordinates `[A_00, …, A_{d-1,d-1}, Re A_01, Im A_01, Re A_02, …]`.
    ///
    /// The map is real-linear and injective on Hermitian matrices, so an
    /// operator identity `Σ c_k A_k = B` is equivalent to the same identity
    /// between embeddings.
    pub fn real_embedding(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        out.extend((0..d).map(|i| self.entries[i * d + i].re));
        for i in 0..d {
            for j in (i + 1)..d {
                let z = self.entries[i * d + j];
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    /// Inverse of [`real_embedding`](Self::real_embedding).
    pub fn from_real_embedding(dim: usize, coords: &[f64]) -> Result<Self> {
        if coords.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding of dim {dim} needs {} coordinates, got {}",
                dim * dim,
                coords.len()
            )));
        }
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.entries[i * dim + i] = Complex64::new(coords[i], 0.0);
        }
        let mut k = dim;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let z = Complex64::new(coords[k], coords[k + 1]);
                op.entries[i * dim + j] = z;
                op.entries[j * dim + i] = z.conj();
                k += 2;
            }
        }
        Ok(op)
    }

    /// All eigenvalues, ascending.
    ///
    /// Computed from the real symmetric `2d×2d` block form
    /// `[[Re A, −Im A], [Im A, Re A]]`, whose spectrum is that of `A` with every
    /// eigenvalue doubled.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let n = 2 * d;
        let mut block = vec![0.0; n * n];
        for i in 0..d {
            for j in 0..d {
                let z = self.entries[i * d + j];
                block[i * n + j] = z.re;
                block[(i + d) * n + (j + d)] = z.re;
                block[i * n + (j + d)] = -z.im;
                block[(i + d) * n + j] = z.im;
            }
        }
        let doubled = symmetric_eigenvalues(&block, n);
        doubled.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(self)
    }

    /// PSD within [`psd_tolerance`].
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -psd_tolerance(self.trace())
    }
}

/// `|⟨φ|ψ⟩|²`, clamped into `[0, 1]`.
pub fn born_probability(phi: &PureState, psi: &PureState) -> Result<f64> {
    Ok(phi.inner(psi)?.norm_sqr().clamp(0.0, 1.0))
}

/// `Tr[E P̂ψ] = ⟨ψ|E|ψ⟩` for a projector effect, clamped into `[0, 1]`.
pub fn effect_probability(effect: &HermitianOperator, psi: &PureState) -> Result<f64> {
    Ok(effect.expectation(psi)?.clamp(0.0, 1.0))
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(psi: &PureState) -> HermitianOperator {
    let a = psi.amplitudes();
    let d = a.len();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(a[i] * a[j].conj());
        }
    }
    HermitianOperator::hermitian_part(d, &entries)
}

pub fn min_eigenvalue(op: &HermitianOperator) -> f64 {
    if op.dim == 1 {
        return op.entries[0].re;
    }
    op.eigenvalues()[0]
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_state(theta: f64, phi: f64) -> Result<PureState> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "polar angle {theta} outside [0, π]"
        )));
    }
    if !phi.is_finite() {
        return Err(Error::InvalidParameter("azimuth must be finite".into()));
    }
    let half = 0.5 * theta;
    Ok(PureState {
        amplitudes: vec![
            Complex64::new(half.cos(), 0.0),
            Complex64::from_polar(half.sin(), phi),
        ],
    })
}

/// Coherent state `|α⟩` truncated to Fock levels `0..trunc` and renormalized.
pub fn coherent_state(alpha: Complex64, trunc: usize) -> Result<PureState> {
    if trunc == 0 {
        return Err(Error::InvalidParameter("truncation must be ≥ 1".into()));
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::InvalidParameter("α must be finite".into()));
    }
    Ok(PureState {
        amplitudes: coherent_amplitudes(alpha, trunc),
    })
}

/// Normalized truncated coherent amplitudes. The recursion
/// `c_n = c_{n-1}·α/√n` starts from `e^{-|α|²/2}` so that nothing overflows for
/// large `|α|`; the result is then renormalized.
pub(crate) fn coherent_amplitudes(alpha: Complex64, trunc: usize) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(trunc);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..trunc {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    let mut nrm = norm(&amps);
    if nrm == 0.0 || !nrm.is_finite() {
        // |α| so large that the Gaussian prefactor underflowed; redo in log space
        let (r, arg) = alpha.to_polar();
        let logs: Vec<f64> = (0..trunc)
            .map(|n| n as f64 * r.ln() - 0.5 * ln_factorial(n))
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        amps = logs
            .iter()
            .enumerate()
            .map(|(n, l)| Complex64::from_polar((l - top).exp(), n as f64 * arg))
            .collect();
        nrm = norm(&amps);
    }
    amps.into_iter().map(|a| a / nrm).collect()
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Fock basis vector `|n⟩` in a `trunc`-level space.
pub fn fock_state(n: usize, trunc: usize) -> Result<PureState> {
    if n >= trunc {
        return Err(Error::InvalidParameter(format!(
            "Fock level {n} not below truncation {trunc}"
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); trunc];
    amplitudes[n] = Complex64::new(1.0, 0.0);
    Ok(PureState { amplitudes })
}

/// Odd Schrödinger cat `∝ |α⟩ − |−α⟩` in a `trunc`-level space.
pub fn odd_cat_state(alpha: Complex64, trunc: usize) -> Result<PureState> {
    let plus = coherent_state(alpha, trunc)?;
    let minus = coherent_state(-alpha, trunc)?;
    let amps = plus
        .amplitudes()
        .iter()
        .zip(minus.amplitudes())
        .map(|(a, b)| a - b)
        .collect();
    PureState::normalized(amps)
}

/// A measurement: PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<HermitianOperator>,
}

impl Povm {
    pub const COMPLETENESS_TOL: f64 = 1e-9;

    pub fn new(effects: Vec<HermitianOperator>) -> Result<Self> {
        let dim = effects
            .first()
            .map(HermitianOperator::dim)
            .ok_or_else(|| Error::InvalidParameter("POVM needs at least one effect".into()))?;
        for (k, e) in effects.iter().enumerate() {
            check_dim(dim, e.dim())?;
            if !e.is_psd() {
                return Err(Error::Precondition(format!("effect {k} is not PSD")));
            }
        }
        let sum = HermitianOperator::combination(dim, effects.iter().map(|e| (1.0, e)))?;
        let defect = sum.max_abs_diff(&HermitianOperator::identity(dim))?;
        if defect > Self::COMPLETENESS_TOL {
            return Err(Error::Precondition(format!(
                "effects sum to identity only within {defect:e}"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn probabilities(&self, psi: &PureState) -> Result<Vec<f64>> {
        self.effects.iter().map(|e| e.expectation(psi)).collect()
    }
}
