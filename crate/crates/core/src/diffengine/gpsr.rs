//! Generalized parameter-shift rule.
//!
//! For `U(a) = exp(-i a Ĝ / 2)` the expectation is a trigonometric polynomial
//! in `a` with frequencies `Δ_s / 2`, `Δ_s` the distinct positive eigenvalue
//! gaps of `Ĝ`. With `F_m = f(a + δ_m) - f(a - δ_m)` and
//! `M_ms = 4 sin(Δ_s δ_m / 2)`, the derivative is `Σ_s Δ_s R_s` where
//! `M R = F`.

use nalgebra::DMatrix;

use crate::blockir::Block;
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::simulator::{unique_gaps, MAX_DENSE_QUBITS};
use crate::symexpr::Values;

/// Absolute tolerance below which two gaps are considered equal.
pub const GAP_TOLERANCE: f64 = 1e-8;
/// Largest acceptable condition number of the shift system.
pub const MAX_CONDITION: f64 = 1e10;

/// Unique positive eigenvalue differences of a Hermitian generator.
pub fn spectral_gaps(generator: &Block, n_qubits: usize) -> Result<Vec<f64>> {
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubitsForDense { got: n_qubits, max: MAX_DENSE_QUBITS });
    }
    let op = PauliSum::from_block(generator, &mut |e| e.evaluate(&Values::new()))
        .map_err(|e| Error::NonHermitianGenerator(e.to_string()))?;
    if !op.is_hermitian(1e-12) {
        return Err(Error::NonHermitianGenerator("complex Pauli coefficients".into()));
    }
    Ok(operator_gaps(&op, n_qubits))
}

pub(crate) fn operator_gaps(op: &PauliSum, n_qubits: usize) -> Vec<f64> {
    let eig: Vec<f64> = match op.diagonal(n_qubits) {
        Some(d) => d,
        None => op.to_dense(n_qubits).symmetric_eigenvalues().iter().copied().collect(),
    };
    unique_gaps(&eig, GAP_TOLERANCE)
}

/// Shift/weight pairs: `df/da = Σ_m w_m (f(a + δ_m) - f(a - δ_m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRule {
    pub gaps: Vec<f64>,
    pub shifts: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ShiftRule {
    /// Signed `(offset, weight)` terms including the negative shifts.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        self.shifts
            .iter()
            .zip(&self.weights)
            .flat_map(|(&d, &w)| [(d, w), (-d, -w)])
            .collect()
    }
}

/// Builds the rule for `gaps` with shifts `δ_m = m π / (S Δ_max)`. An
/// ill-conditioned system is retried once with every shift stretched by
/// `1 + m 10^-3`.
pub fn shift_rule(gaps: &[f64]) -> Result<ShiftRule> {
    let s = gaps.len();
    if s == 0 {
        return Ok(ShiftRule { gaps: vec![], shifts: vec![], weights: vec![] });
    }
    let dmax = gaps.iter().cloned().fold(0.0, f64::max);
    let base: Vec<f64> = (1..=s).map(|m| m as f64 * std::f64::consts::PI / (s as f64 * dmax)).collect();
    match solve(gaps, &base) {
        Ok(rule) => Ok(rule),
        Err(Error::IllConditionedShifts(_)) => {
            let stretched: Vec<f64> = base.iter().enumerate().map(|(m, d)| d * (1.0 + 1e-3 * (m + 1) as f64)).collect();
            solve(gaps, &stretched)
        }
        Err(e) => Err(e),
    }
}

fn solve(gaps: &[f64], shifts: &[f64]) -> Result<ShiftRule> {
    let s = gaps.len();
    let m = DMatrix::from_fn(s, s, |i, j| 4.0 * (gaps[j] * shifts[i] / 2.0).sin());
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditionedShifts(cond));
    }
    let inv = m.try_inverse().ok_or(Error::IllConditionedShifts(f64::INFINITY))?;
    // derivative = Δᵀ M⁻¹ F
    let weights = (0..s).map(|mi| (0..s).map(|si| gaps[si] * inv[(si, mi)]).sum()).collect();
    Ok(ShiftRule { gaps: gaps.to_vec(), shifts: shifts.to_vec(), weights })
}
