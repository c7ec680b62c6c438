//! Operator frames `{(X_k, Â_k, w_k)}` and the quasi-distributions they induce.
//!
//! A frame assigns each pure state the values `ρ_k = Tr[Â_k P̂ψ]`; `w_k` is
//! the measure element of point `k`. Positive frames give nonnegative values,
//! and `Σ_k w_k Â_k = 𝟙` gives unit normalization. Discretized frames satisfy
//! the latter only approximately, so every frame reports its
//! [completeness defect](Frame::completeness_defect) and nothing downstream
//! renormalizes weights to hide it.

mod builtin;
mod wigner;

pub use builtin::{bloch_covariant_frame, husimi_frame, phase_space_grid, qubit_trine_frame};
pub use wigner::{displacement_elements, wigner_at, wigner_position_marginal, wigner_values};

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{compensated_sum, fmt_f64};
use crate::quantum::{psd_tolerance, HermitianOperator, PureState};

/// Values below this are treated as negative by [`check_conditions`].
pub const NONNEG_TOL: f64 = 1e-10;
/// Added to the completeness defect when judging normalization.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Point label: a name or an integer index tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Index(Vec<i64>),
    Name(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Name(s) => f.write_str(s),
            Label::Index(ix) => {
                for (n, i) in ix.iter().enumerate() {
                    if n > 0 {
                        f.write_str(":")?;
                    }
                    write!(f, "{i}")?;
                }
                Ok(())
            }
        }
    }
}

/// The operator attached to a frame point.
///
/// Rank-one operators `s·|v⟩⟨v|` are kept factored; a 40-level Husimi grid
/// has ~15k points and dense storage would cost hundreds of megabytes.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameOperator {
    Dense(HermitianOperator),
    RankOne { vector: PureState, scale: f64 },
}

impl FrameOperator {
    pub fn dim(&self) -> usize {
        match self {
            FrameOperator::Dense(op) => op.dim(),
            FrameOperator::RankOne { vector, .. } => vector.dim(),
        }
    }

    /// `Tr[Â P̂ψ]`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        match self {
            FrameOperator::Dense(op) => op.expectation(psi),
            FrameOperator::RankOne { vector, scale } => Ok(scale * vector.inner(psi)?.norm_sqr()),
        }
    }

    /// `Tr[Â ρ]` for a density operator.
    pub fn trace_with(&self, rho: &HermitianOperator) -> Result<f64> {
        match self {
            FrameOperator::Dense(op) => op.trace_with(rho),
            FrameOperator::RankOne { vector, scale } => Ok(scale * rho.expectation(vector)?),
        }
    }

    pub fn to_dense(&self) -> HermitianOperator {
        match self {
            FrameOperator::Dense(op) => op.clone(),
            FrameOperator::RankOne { vector, scale } => vector.projector().scaled(*scale),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            FrameOperator::Dense(op) => op.trace(),
            FrameOperator::RankOne { scale, .. } => *scale,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            FrameOperator::Dense(op) => op.min_eigenvalue(),
            FrameOperator::RankOne { vector, scale } => {
                if vector.dim() == 1 {
                    *scale
                } else {
                    scale.min(0.0)
                }
            }
        }
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -psd_tolerance(self.trace())
    }

    pub fn real_embedding(&self) -> Vec<f64> {
        match self {
            FrameOperator::Dense(op) => op.real_embedding(),
            FrameOperator::RankOne { vector, scale } => {
                let a = vector.amplitudes();
                let d = a.len();
                let mut out = Vec::with_capacity(d * d);
                out.extend(a.iter().map(|z| scale * z.norm_sqr()));
                for i in 0..d {
                    for j in (i + 1)..d {
                        let z = a[i] * a[j].conj() * scale;
                        out.push(z.re);
                        out.push(z.im);
                    }
                }
                out
            }
        }
    }

    /// `acc += c·Â` on a row-major complex buffer.
    fn accumulate(&self, acc: &mut [Complex64], c: f64) {
        match self {
            FrameOperator::Dense(op) => {
                for (a, z) in acc.iter_mut().zip(op.entries()) {
                    *a += z * c;
                }
            }
            FrameOperator::RankOne { vector, scale } => {
                let a = vector.amplitudes();
                let d = a.len();
                let s = c * scale;
                for i in 0..d {
                    let ai = a[i] * s;
                    for j in 0..d {
                        acc[i * d + j] += ai * a[j].conj();
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePoint {
    pub label: Label,
    pub operator: FrameOperator,
    /// Measure element `dX` of this point; always positive.
    pub weight: f64,
    /// Phase-space coordinates, when the frame has them: `(θ, φ)` on the
    /// Bloch sphere, `(Re α, Im α)` on the Husimi grid.
    pub coords: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    id: String,
    dim: usize,
    points: Vec<FramePoint>,
}

impl Frame {
    pub fn new(id: impl Into<String>, dim: usize, points: Vec<FramePoint>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("frame dim must be ≥ 1".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("frame needs at least one point".into()));
        }
        for p in &points {
            check_dim(dim, p.operator.dim())?;
            if !(p.weight.is_finite() && p.weight > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "weight of point {} must be positive, got {}",
                    p.label, p.weight
                )));
            }
        }
        Ok(Self { id: id.into(), dim, points })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[FramePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same frame with a subset of points; useful for deliberately breaking
    /// completeness.
    pub fn retain_points<F: FnMut(&FramePoint) -> bool>(&self, id: &str, mut f: F) -> Result<Self> {
        let points: Vec<FramePoint> = self.points.iter().filter(|p| f(p)).cloned().collect();
        Frame::new(id, self.dim, points)
    }

    /// `Σ_k w_k Â_k`.
    pub fn completeness_sum(&self) -> HermitianOperator {
        let d = self.dim;
        let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
        for p in &self.points {
            p.operator.accumulate(&mut acc, p.weight);
        }
        HermitianOperator::hermitian_part(d, &acc)
    }

    /// `‖Σ_k w_k Â_k − 𝟙‖_max`.
    pub fn completeness_defect(&self) -> f64 {
        self.completeness_sum()
            .max_abs_diff(&HermitianOperator::identity(self.dim))
            .expect("dims agree by construction")
    }

    /// Smallest eigenvalue over all point operators, and whether every one is
    /// PSD within tolerance.
    pub fn positivity(&self) -> PositivityReport {
        let mins: Vec<(f64, bool)> = self
            .points
            .par_iter()
            .map(|p| (p.operator.min_eigenvalue(), p.operator.is_psd()))
            .collect();
        PositivityReport {
            min_eigenvalue: mins.iter().map(|m| m.0).fold(f64::INFINITY, f64::min),
            all_psd: mins.iter().all(|m| m.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub all_psd: bool,
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    label: Label,
    operator: HermitianOperator,
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    #[serde(default = "default_frame_id")]
    id: String,
    dim: usize,
    points: Vec<PointRepr>,
}

fn default_frame_id() -> String {
    "custom".to_string()
}

impl Serialize for Frame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameRepr {
            id: self.id.clone(),
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| PointRepr {
                    label: p.label.clone(),
                    operator: p.operator.to_dense(),
                    weight: p.weight,
                    coords: p.coords,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Frame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FrameRepr::deserialize(d)?;
        let points = repr
            .points
            .into_iter()
            .map(|p| FramePoint {
                label: p.label,
                operator: FrameOperator::Dense(p.operator),
                weight: p.weight,
                coords: p.coords,
            })
            .collect();
        Frame::new(repr.id, repr.dim, points).map_err(serde::de::Error::custom)
    }
}

/// Where a distribution value lives: label, measure element, coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub label: Label,
    pub weight: f64,
    pub coords: Option<[f64; 2]>,
}

/// Values of a (quasi-)probability density on a frame's points.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDistribution {
    pub frame_id: String,
    pub support: Vec<SupportPoint>,
    /// Density per unit measure, aligned with `support`.
    pub values: Vec<f64>,
    pub completeness_defect: f64,
    /// Whether the generating frame is made of PSD operators.
    pub positive_frame: bool,
}

impl QuasiDistribution {
    /// `Σ_k ρ_k w_k` with compensated summation in point order.
    pub fn normalization(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.support).map(|(v, s)| v * s.weight))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `label,value,weight` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "label,value,weight")?;
        for (s, v) in self.support.iter().zip(&self.values) {
            writeln!(w, "{},{},{}", s.label, fmt_f64(*v), fmt_f64(s.weight))?;
        }
        Ok(())
    }
}

/// `ρ(X_k|ψ) = Tr[Â_k P̂ψ]` at every frame point.
pub fn frame_distribution(frame: &Frame, psi: &PureState) -> Result<QuasiDistribution> {
    check_dim(frame.dim(), psi.dim())?;
    let values = frame
        .points
        .par_iter()
        .map(|p| p.operator.expectation(psi))
        .collect::<Result<Vec<f64>>>()?;
    Ok(package(frame, values))
}

/// `Tr[Â_k ρ̂]` for a density operator; linear in `ρ̂`.
pub fn frame_distribution_of_density(
    frame: &Frame,
    rho: &HermitianOperator,
) -> Result<QuasiDistribution> {
    check_dim(frame.dim(), rho.dim())?;
    let values = frame
        .points
        .par_iter()
        .map(|p| p.operator.trace_with(rho))
        .collect::<Result<Vec<f64>>>()?;
    Ok(package(frame, values))
}

fn package(frame: &Frame, values: Vec<f64>) -> QuasiDistribution {
    QuasiDistribution {
        frame_id: frame.id.clone(),
        support: frame
            .points
            .iter()
            .map(|p| SupportPoint {
                label: p.label.clone(),
                weight: p.weight,
                coords: p.coords,
            })
            .collect(),
        values,
        completeness_defect: frame.completeness_defect(),
        positive_frame: frame.positivity().all_psd,
    }
}

/// Nonnegativity and normalization of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub nonneg_ok: bool,
    pub min_value: f64,
    pub normalization: f64,
    pub normalization_ok: bool,
    pub completeness_defect: f64,
}

pub fn check_conditions(dist: &QuasiDistribution) -> ConditionReport {
    let min_value = dist.min_value();
    let normalization = dist.normalization();
    ConditionReport {
        nonneg_ok: min_value >= -NONNEG_TOL,
        min_value,
        normalization,
        normalization_ok: (normalization - 1.0).abs()
            <= dist.completeness_defect + NORMALIZATION_TOL,
        completeness_defect: dist.completeness_defect,
    }
}
