//! Finite classical (ontic) models of Born-rule tables.
//!
//! A model with `K` ontic states assigns each preparation `ψ_i` a probability
//! vector `ρ(·|ψ_i)` (epistemic row) and each effect `φ_j` a response
//! `P(φ_j|·) ∈ [0,1]^K`. It reproduces the table when
//! `Σ_k P(φ_j|k) ρ(k|ψ_i) = Tr[P̂φ_j P̂ψ_i]` for every pair.

mod search;

pub use search::{
    alternating_run, alternating_search, min_k_scan, min_k_scan_with, SearchReport, SearchRow, SearchRun, DEFAULT_ITERS,
    STALL_TOL,
};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quantum::{effect_probability, fock_state, HermitianOperator, PureState};

/// Tolerance on model invariants (nonnegativity, row sums, response box).
pub const MODEL_TOL: f64 = 1e-10;

/// `Tr[P̂φ_j P̂ψ_i]` for a net of states and effects.
#[derive(Debug, Clone, PartialEq)]
pub struct BornTable {
    pub states: Vec<PureState>,
    pub effects: Vec<HermitianOperator>,
    /// Indices of effects forming complete measurements.
    pub groups: Vec<Vec<usize>>,
    /// `S × M`.
    pub probabilities: Vec<Vec<f64>>,
}

impl BornTable {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_effects(&self) -> usize {
        self.effects.len()
    }
}

pub fn born_table(states: &[PureState], effects: &[HermitianOperator]) -> Result<BornTable> {
    born_table_grouped(states, effects, Vec::new())
}

/// As [`born_table`], additionally checking that every group of effects
/// yields probabilities summing to one on each state.
pub fn born_table_grouped(
    states: &[PureState],
    effects: &[HermitianOperator],
    groups: Vec<Vec<usize>>,
) -> Result<BornTable> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidParameter("empty state net".into()));
    };
    if effects.is_empty() {
        return Err(Error::InvalidParameter("empty effect net".into()));
    }
    let d = first.dim();
    for e in effects {
        check_dim(d, e.dim())?;
    }
    let probabilities = states
        .iter()
        .map(|psi| effects.iter().map(|e| effect_probability(e, psi)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    for g in &groups {
        if g.iter().any(|&j| j >= effects.len()) {
            return Err(Error::InvalidParameter(format!("group {g:?} refers to a missing effect")));
        }
        for (i, row) in probabilities.iter().enumerate() {
            let s: f64 = g.iter().map(|&j| row[j]).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "group {g:?} sums to {s} on state {i}, not a complete measurement"
                )));
            }
        }
    }
    Ok(BornTable { states: states.to_vec(), effects: effects.to_vec(), groups, probabilities })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModel {
    #[serde(rename = "K")]
    pub k: usize,
    /// `S × K`, rows are probability vectors.
    pub epistemic: Vec<Vec<f64>>,
    /// `M × K`, entries in `[0,1]`.
    pub response: Vec<Vec<f64>>,
}

impl ClassicalModel {
    /// Checks nonnegativity, unit row sums and the response box.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be ≥ 1".into()));
        }
        for (i, row) in self.epistemic.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::ShapeMismatch(format!("epistemic row {i} has {} entries", row.len())));
            }
            if row.iter().any(|v| !(*v >= -MODEL_TOL)) {
                return Err(Error::Precondition(format!("epistemic row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > MODEL_TOL {
                return Err(Error::Precondition(format!("epistemic row {i} sums to {s}")));
            }
        }
        for (j, row) in self.response.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::ShapeMismatch(format!("response row {j} has {} entries", row.len())));
            }
            if row.iter().any(|v| !(-MODEL_TOL..=1.0 + MODEL_TOL).contains(v)) {
                return Err(Error::Precondition(format!("response row {j} leaves [0,1]")));
            }
        }
        Ok(())
    }

    /// Appends an ontic state that no preparation reaches.
    pub fn padded(&self) -> ClassicalModel {
        let pad = |rows: &[Vec<f64>]| rows.iter().map(|r| r.iter().copied().chain([0.0]).collect()).collect();
        ClassicalModel { k: self.k + 1, epistemic: pad(&self.epistemic), response: pad(&self.response) }
    }
}

/// `|Σ_k response_jk epistemic_ik − p_ij|` maximized over `j` for state `i`.
pub(crate) fn state_residual(model: &ClassicalModel, table: &BornTable, i: usize) -> f64 {
    let e = &model.epistemic[i];
    model
        .response
        .iter()
        .zip(&table.probabilities[i])
        .map(|(r, p)| (r.iter().zip(e).map(|(a, b)| a * b).sum::<f64>() - p).abs())
        .fold(0.0, f64::max)
}

/// Same quantity maximized over states for effect `j`.
pub(crate) fn effect_residual(model: &ClassicalModel, table: &BornTable, j: usize) -> f64 {
    let r = &model.response[j];
    model
        .epistemic
        .iter()
        .zip(&table.probabilities)
        .map(|(e, p)| (r.iter().zip(e).map(|(a, b)| a * b).sum::<f64>() - p[j]).abs())
        .fold(0.0, f64::max)
}

/// `max_{i,j} |Σ_k response_jk epistemic_ik − p_ij|`.
pub fn model_residual(model: &ClassicalModel, table: &BornTable) -> Result<f64> {
    if model.epistemic.len() != table.n_states() || model.response.len() != table.n_effects() {
        return Err(Error::ShapeMismatch(format!(
            "model is {}×{} (states×effects), table is {}×{}",
            model.epistemic.len(),
            model.response.len(),
            table.n_states(),
            table.n_effects()
        )));
    }
    if model.epistemic.iter().chain(&model.response).any(|r| r.len() != model.k) {
        return Err(Error::ShapeMismatch(format!("rows must have K = {} entries", model.k)));
    }
    Ok((0..table.n_states()).map(|i| state_residual(model, table, i)).fold(0.0, f64::max))
}

/// One ontic state per net state, `ρ(k|ψ_i) = δ_ik`, `P(φ_j|k) = Tr[P̂φ_j P̂ψ_k]`.
pub fn delta_model(states: &[PureState], effects: &[HermitianOperator]) -> Result<ClassicalModel> {
    let s = states.len();
    if s == 0 {
        return Err(Error::InvalidParameter("empty state net".into()));
    }
    for e in effects {
        check_dim(states[0].dim(), e.dim())?;
    }
    let epistemic = (0..s).map(|i| (0..s).map(|k| if i == k { 1.0 } else { 0.0 }).collect()).collect();
    let response = effects
        .iter()
        .map(|e| states.iter().map(|psi| effect_probability(e, psi)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassicalModel { k: s, epistemic, response })
}

/// Projectors onto the `d` position (computational) basis states.
pub fn position_effects(d: usize) -> Result<Vec<HermitianOperator>> {
    (0..d).map(|x| Ok(fock_state(x, d)?.projector())).collect()
}

/// Ontic states `(x, ψ_i)` with index `i·d + x`; preparation `i` puts weight
/// `|ψ_i(x)|²` on `(x, ψ_i)` and outcome `x₀` is the indicator of `x = x₀`.
pub fn bohm_position_model(states: &[PureState]) -> Result<ClassicalModel> {
    let s = states.len();
    let Some(first) = states.first() else {
        return Err(Error::InvalidParameter("empty state net".into()));
    };
    let d = first.dim();
    let effects = position_effects(d)?;
    let k = d * s;
    let mut epistemic = vec![vec![0.0; k]; s];
    for (i, psi) in states.iter().enumerate() {
        check_dim(d, psi.dim())?;
        for (x, e) in effects.iter().enumerate() {
            epistemic[i][i * d + x] = effect_probability(e, psi)?;
        }
    }
    let response = (0..d).map(|x0| (0..k).map(|o| if o % d == x0 { 1.0 } else { 0.0 }).collect()).collect();
    Ok(ClassicalModel { k, epistemic, response })
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Haar-random pure states from a seeded generator.
pub fn random_states(count: usize, d: usize, seed: u64) -> Result<Vec<PureState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| PureState::normalized(gaussian_vector(&mut rng, d))).collect()
}

/// `count` random orthonormal bases; returns the `count·d` projectors and
/// the groups of indices forming each basis.
pub fn random_bases(count: usize, d: usize, seed: u64) -> Result<(Vec<HermitianOperator>, Vec<Vec<usize>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut effects = Vec::with_capacity(count * d);
    let mut groups = Vec::with_capacity(count);
    for b in 0..count {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(d);
        while basis.len() < d {
            let mut v = gaussian_vector(&mut rng, d);
            // Gram–Schmidt, applied twice for orthogonality at round-off level
            for _ in 0..2 {
                for u in &basis {
                    let p: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= p * ui;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
        for v in basis {
            effects.push(PureState::normalized(v)?.projector());
        }
        groups.push((b * d..(b + 1) * d).collect());
    }
    Ok((effects, groups))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bloch_state, born_probability};
    use std::f64::consts::PI;

    fn qubit_basis() -> (Vec<PureState>, Vec<HermitianOperator>) {
        let s = vec![fock_state(0, 2).unwrap(), fock_state(1, 2).unwrap()];
        let e = s.iter().map(|p| p.projector()).collect();
        (s, e)
    }

    #[test]
    fn born_table_examples() {
        let (mut s, e) = qubit_basis();
        s.push(bloch_state(PI / 2.0, 0.0).unwrap());
        let t = born_table_grouped(&s, &e, vec![vec![0, 1]]).unwrap();
        assert_eq!(t.probabilities[0], vec![1.0, 0.0]);
        assert_eq!(t.probabilities[1], vec![0.0, 1.0]);
        assert!((t.probabilities[2][0] - 0.5).abs() < 1e-15 && (t.probabilities[2][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn born_table_matches_inner_products() {
        let states = random_states(7, 3, 11).unwrap();
        let phis = random_states(5, 3, 12).unwrap();
        let effects: Vec<HermitianOperator> = phis.iter().map(|p| p.projector()).collect();
        let t = born_table(&states, &effects).unwrap();
        for (i, psi) in states.iter().enumerate() {
            for (j, phi) in phis.iter().enumerate() {
                let p = born_probability(phi, psi).unwrap();
                assert!((t.probabilities[i][j] - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn born_table_rejects_incomplete_groups_and_mismatch() {
        let (s, e) = qubit_basis();
        assert!(born_table_grouped(&s, &e[..1], vec![vec![0]]).is_err());
        let q = fock_state(0, 3).unwrap();
        assert!(born_table(&[q], &e).is_err());
    }

    #[test]
    fn delta_model_reproduces_table_exactly() {
        let states = random_states(12, 2, 3).unwrap();
        let (effects, groups) = random_bases(3, 2, 4).unwrap();
        let t = born_table_grouped(&states, &effects, groups).unwrap();
        let m = delta_model(&states, &effects).unwrap();
        m.validate().unwrap();
        assert_eq!(m.k, 12);
        assert_eq!(model_residual(&m, &t).unwrap(), 0.0);
    }

    #[test]
    fn uniform_single_ontic_state_on_orthogonal_pair() {
        let (s, e) = qubit_basis();
        let t = born_table(&s, &e).unwrap();
        let m = ClassicalModel { k: 1, epistemic: vec![vec![1.0]; 2], response: vec![vec![0.5]; 2] };
        assert_eq!(model_residual(&m, &t).unwrap(), 0.5);
    }

    #[test]
    fn perturbation_changes_residual_by_at_most_epsilon() {
        let states = random_states(5, 2, 8).unwrap();
        let (effects, _) = random_bases(2, 2, 9).unwrap();
        let t = born_table(&states, &effects).unwrap();
        let m = delta_model(&states, &effects).unwrap();
        let base = model_residual(&m, &t).unwrap();
        let mut p = m.clone();
        let eps = 1e-3;
        p.epistemic[2][4] += eps;
        let r = model_residual(&p, &t).unwrap();
        assert!((r - base).abs() <= eps + 1e-15);
    }

    #[test]
    fn bohm_model_is_dispersion_free_and_exact() {
        let states = random_states(6, 4, 21).unwrap();
        let m = bohm_position_model(&states).unwrap();
        m.validate().unwrap();
        assert_eq!(m.k, 24);
        assert!(m.response.iter().flatten().all(|v| *v == 0.0 || *v == 1.0));
        let t = born_table_grouped(&states, &position_effects(4).unwrap(), vec![vec![0, 1, 2, 3]]).unwrap();
        assert!(model_residual(&m, &t).unwrap() <= 1e-15);
    }

    #[test]
    fn model_json_layout() {
        let m = ClassicalModel { k: 1, epistemic: vec![vec![1.0]], response: vec![vec![0.25]] };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"K":1,"epistemic":[[1.0]],"response":[[0.25]]}"#);
        assert_eq!(serde_json::from_str::<ClassicalModel>(&s).unwrap(), m);
    }

    #[test]
    fn validation_catches_broken_models() {
        let bad_sum = ClassicalModel { k: 2, epistemic: vec![vec![0.5, 0.6]], response: vec![vec![0.0, 1.0]] };
        assert!(bad_sum.validate().is_err());
        let bad_resp = ClassicalModel { k: 1, epistemic: vec![vec![1.0]], response: vec![vec![1.5]] };
        assert!(bad_resp.validate().is_err());
        let padded = ClassicalModel { k: 1, epistemic: vec![vec![1.0]], response: vec![vec![0.5]] }.padded();
        assert_eq!(padded.epistemic, vec![vec![1.0, 0.0]]);
        padded.validate().unwrap();
    }

    #[test]
    fn random_bases_are_orthonormal() {
        let (effects, groups) = random_bases(2, 4, 5).unwrap();
        for g in groups {
            let sum = HermitianOperator::combination(4, g.iter().map(|&j| (1.0, &effects[j]))).unwrap();
            assert!(sum.max_abs_diff(&HermitianOperator::identity(4)).unwrap() < 1e-12);
        }
    }
}
