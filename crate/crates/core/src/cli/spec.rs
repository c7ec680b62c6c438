//! State and net specifications accepted on the command line.
//!
//! States: `zero`, `one`, `plus`, `bloch:θ,φ`, `fock:n`, `coherent:re,im`,
//! `cat:re,im`, an inline JSON object, or `@path` to a JSON file.
//!
//! State nets: `pair`, `ic`, `random:S:d:seed`, `@path` (JSON list).
//! Effect nets: `pair`, `ic`, `random-bases:count:d:seed`, `position:d`,
//! `@path` (JSON list of operators, no groups).

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fs;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{position_effects, random_bases, random_states};
use crate::quantum::{bloch_state, coherent_state, fock_state, odd_cat_state, HermitianOperator, PureState};
use crate::reconstruction::ic_qubit_effects;

fn bad(spec: &str, why: &str) -> Error {
    Error::InvalidParameter(format!("bad spec '{spec}': {why}"))
}

fn numbers<T: std::str::FromStr>(spec: &str, body: &str, count: usize, sep: char) -> Result<Vec<T>> {
    let parts: Vec<&str> = body.split(sep).collect();
    if parts.len() != count {
        return Err(bad(spec, &format!("expected {count} values")));
    }
    parts
        .iter()
        .map(|p| p.trim().parse::<T>().map_err(|_| bad(spec, &format!("cannot parse '{p}'"))))
        .collect()
}

fn read_json_text(spec: &str) -> Result<Option<String>> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path).map_err(|e| bad(spec, &e.to_string()))?;
        return Ok(Some(text));
    }
    if spec.trim_start().starts_with('{') || spec.trim_start().starts_with('[') {
        return Ok(Some(spec.to_string()));
    }
    Ok(None)
}

/// Parses a state in a `dim`-level space.
pub fn parse_state(spec: &str, dim: usize) -> Result<PureState> {
    if let Some(text) = read_json_text(spec)? {
        let psi: PureState = serde_json::from_str(&text).map_err(|e| bad(spec, &e.to_string()))?;
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi.dim() });
        }
        return Ok(psi);
    }
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    let complex = || -> Result<Complex64> {
        let v: Vec<f64> = numbers(spec, body, 2, ',')?;
        Ok(Complex64::new(v[0], v[1]))
    };
    match head {
        "zero" => fock_state(0, dim),
        "one" => fock_state(1, dim),
        "plus" => {
            if dim < 2 {
                return Err(bad(spec, "needs at least two levels"));
            }
            let mut a = vec![Complex64::new(0.0, 0.0); dim];
            a[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            a[1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            PureState::normalized(a)
        }
        "bloch" => {
            if dim != 2 {
                return Err(bad(spec, "Bloch states live in a qubit space"));
            }
            let v: Vec<f64> = numbers(spec, body, 2, ',')?;
            bloch_state(v[0], v[1])
        }
        "fock" => {
            let v: Vec<usize> = numbers(spec, body, 1, ',')?;
            fock_state(v[0], dim)
        }
        "coherent" => coherent_state(complex()?, dim),
        "cat" => odd_cat_state(complex()?, dim),
        _ => Err(bad(spec, "unknown state")),
    }
}

/// Cardinal qubit states `|0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩`.
fn ic_states() -> Vec<PureState> {
    let h = PI / 2.0;
    [(0.0, 0.0), (PI, 0.0), (h, 0.0), (h, PI), (h, h), (h, 3.0 * h)]
        .iter()
        .map(|&(t, p)| bloch_state(t, p).expect("valid angles"))
        .collect()
}

pub fn parse_state_net(spec: &str) -> Result<Vec<PureState>> {
    if let Some(text) = read_json_text(spec)? {
        return serde_json::from_str(&text).map_err(|e| bad(spec, &e.to_string()));
    }
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "pair" => Ok(ic_states().into_iter().take(2).collect()),
        "ic" => Ok(ic_states()),
        "random" => {
            let v: Vec<u64> = numbers(spec, body, 3, ':')?;
            random_states(v[0] as usize, v[1] as usize, v[2])
        }
        _ => Err(bad(spec, "unknown state net")),
    }
}

/// Effects and the groups of indices forming complete measurements.
pub fn parse_effect_net(spec: &str) -> Result<(Vec<HermitianOperator>, Vec<Vec<usize>>)> {
    if let Some(text) = read_json_text(spec)? {
        let effects: Vec<HermitianOperator> = serde_json::from_str(&text).map_err(|e| bad(spec, &e.to_string()))?;
        return Ok((effects, Vec::new()));
    }
    let (head, body) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "pair" => Ok((ic_qubit_effects().into_iter().take(2).collect(), vec![vec![0, 1]])),
        "ic" => Ok((ic_qubit_effects(), vec![vec![0, 1], vec![2, 3], vec![4, 5]])),
        "random-bases" => {
            let v: Vec<u64> = numbers(spec, body, 3, ':')?;
            random_bases(v[0] as usize, v[1] as usize, v[2])
        }
        "position" => {
            let v: Vec<usize> = numbers(spec, body, 1, ':')?;
            Ok((position_effects(v[0])?, vec![(0..v[0]).collect()]))
        }
        _ => Err(bad(spec, "unknown effect net")),
    }
}
