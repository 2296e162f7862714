use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blockir::{Block, QuantumCircuit};
use crate::diffengine::{DiffMode, Objective};
use crate::error::{Error, Result};
use crate::simulator::{self, SampleCounts, StateVector};
use crate::symexpr::Values;

/// A circuit, its observables and the current values of its trainable
/// parameters.
#[derive(Debug, Clone)]
pub struct QuantumModel {
    circuit: QuantumCircuit,
    observables: Vec<Block>,
    objectives: Vec<Objective>,
    diff_mode: DiffMode,
    names: Vec<String>,
    var_params: Values,
    seed: u64,
}

impl QuantumModel {
    /// Variational parameters start uniform in `[0, 2π)`, drawn in name order
    /// from a generator seeded with `seed`. Observables must have numeric
    /// coefficients.
    pub fn new(circuit: QuantumCircuit, observables: Vec<Block>, diff_mode: DiffMode, seed: u64) -> Result<Self> {
        let names = circuit.block().variational_names()?;
        let mut objectives = Vec::with_capacity(observables.len());
        for o in &observables {
            if let Some(p) = o.parameters()?.first() {
                return Err(Error::InvalidArgument(format!("observable coefficient depends on `{}`", p.name)));
            }
            objectives.push(Objective::new(&circuit, o, &Values::new())?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let var_params = names
            .iter()
            .map(|n| (n.clone(), rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        Ok(Self { circuit, observables, objectives, diff_mode, names, var_params, seed })
    }

    pub fn circuit(&self) -> &QuantumCircuit {
        &self.circuit
    }

    pub fn observables(&self) -> &[Block] {
        &self.observables
    }

    pub fn diff_mode(&self) -> DiffMode {
        self.diff_mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits()
    }

    /// Trainable parameter names, sorted.
    pub fn parameter_names(&self) -> &[String] {
        &self.names
    }

    pub fn var_params(&self) -> &Values {
        &self.var_params
    }

    /// Current values in [`Self::parameter_names`] order.
    pub fn parameters(&self) -> Vec<f64> {
        self.names.iter().map(|n| self.var_params[n]).collect()
    }

    pub fn set_parameters(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.names.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.names.len(),
                theta.len()
            )));
        }
        for (n, v) in self.names.iter().zip(theta) {
            self.var_params.insert(n.clone(), *v);
        }
        Ok(())
    }

    /// Overwrites named parameters; unknown names are rejected.
    pub fn set_values(&mut self, values: &Values) -> Result<()> {
        for (k, v) in values {
            match self.var_params.get_mut(k) {
                Some(slot) => *slot = *v,
                None => return Err(Error::InvalidArgument(format!("`{k}` is not a trainable parameter"))),
            }
        }
        Ok(())
    }

    /// Feature values merged with the current trainable values.
    pub fn merged(&self, features: &Values) -> Values {
        let mut v = self.var_params.clone();
        v.extend(features.iter().map(|(k, x)| (k.clone(), *x)));
        v
    }

    /// Expectations of every observable for each feature valuation,
    /// shape `(batch, n_observables)`.
    pub fn expectation(&self, batch: &[Values], state: Option<&StateVector>) -> Result<DMatrix<f64>> {
        let rows: Vec<Vec<f64>> = batch
            .par_iter()
            .map(|f| {
                let v = self.merged(f);
                match state {
                    None => self.objectives.iter().map(|o| o.value(&v, &[])).collect(),
                    Some(s) => self
                        .observables
                        .iter()
                        .map(|o| simulator::expectation(&self.circuit, o, &v, Some(s.clone())))
                        .collect(),
                }
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(batch.len(), self.observables.len(), |r, c| rows[r][c]))
    }

    /// Compiled objective of observable `index`.
    pub fn objective(&self, index: usize) -> Option<&Objective> {
        self.objectives.get(index)
    }

    fn first(&self) -> Result<&Objective> {
        self.objectives.first().ok_or_else(|| Error::InvalidArgument("model has no observable".into()))
    }

    /// First observable's expectation and its gradient in
    /// [`Self::parameter_names`] order.
    pub fn value_and_gradient(&self, features: &Values) -> Result<(f64, Vec<f64>)> {
        self.first()?.value_and_gradient(&self.merged(features), &[], &self.names, self.diff_mode)
    }

    /// `∂f/∂x` (`order` 1) or `∂²f/∂x²` (`order` 2) of the first observable
    /// with respect to feature `x`, together with its parameter gradient.
    pub fn feature_derivative(&self, features: &Values, feature: &str, order: u8) -> Result<(f64, Vec<f64>)> {
        let v = self.merged(features);
        let obj = self.first()?;
        let plan = match order {
            1 => obj.derivative_plan(&v, feature)?,
            2 => obj.second_derivative_plan(&v, feature)?,
            _ => return Err(Error::InvalidArgument(format!("derivative order {order}"))),
        };
        obj.evaluate_plan(&plan, &v, &self.names, self.diff_mode)
    }

    pub fn sample(&self, features: &Values, n_shots: usize, seed: u64) -> Result<SampleCounts> {
        simulator::sample(&self.circuit, &self.merged(features), n_shots, seed)
    }

    /// Final state for `features`, starting from `|0…0⟩`.
    pub fn run(&self, features: &Values) -> Result<StateVector> {
        simulator::run(&self.circuit, &self.merged(features), None)
    }
}

/// Values of one prediction and its derivatives with respect to features.
pub trait Predictor {
    fn predict(&self, features: &Values) -> Result<f64>;
    fn derivative(&self, features: &Values, feature: &str) -> Result<f64>;
    fn second_derivative(&self, features: &Values, feature: &str) -> Result<f64>;
}

impl Predictor for QuantumModel {
    fn predict(&self, features: &Values) -> Result<f64> {
        self.first()?.value(&self.merged(features), &[])
    }

    fn derivative(&self, features: &Values, feature: &str) -> Result<f64> {
        let v = self.merged(features);
        let obj = self.first()?;
        let plan = obj.derivative_plan(&v, feature)?;
        Ok(obj.evaluate_plan(&plan, &v, &[], self.diff_mode)?.0)
    }

    fn second_derivative(&self, features: &Values, feature: &str) -> Result<f64> {
        let v = self.merged(features);
        let obj = self.first()?;
        let plan = obj.second_derivative_plan(&v, feature)?;
        Ok(obj.evaluate_plan(&plan, &v, &[], self.diff_mode)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockir::{build_feature_map, build_hea, chain, FeatureMapKind};
    use crate::hamiltonian::total_magnetization;
    use crate::symexpr::values;

    fn model(obs: Vec<Block>) -> QuantumModel {
        let fm = build_feature_map(4, "x", FeatureMapKind::Chebyshev, None).unwrap();
        let c = QuantumCircuit::with_qubits(4, chain([fm, build_hea(4, 2).unwrap()]).unwrap()).unwrap();
        QuantumModel::new(c, obs, DiffMode::Adjoint, 3).unwrap()
    }

    #[test]
    fn expectation_shape() {
        let m = model(vec![total_magnetization(4)]);
        assert_eq!(m.expectation(&[values([("x", 0.2)])], None).unwrap().shape(), (1, 1));
        let m = model(vec![total_magnetization(4), crate::blockir::z(0)]);
        let batch: Vec<Values> = (0..5).map(|k| values([("x", 0.1 * k as f64)])).collect();
        assert_eq!(m.expectation(&batch, None).unwrap().shape(), (5, 2));
    }

    #[test]
    fn empty_circuit_on_zero_state() {
        let c = QuantumCircuit::with_qubits(4, chain([crate::blockir::id(0)]).unwrap()).unwrap();
        let m = QuantumModel::new(c, vec![total_magnetization(4)], DiffMode::Gpsr, 0).unwrap();
        assert_eq!(m.expectation(&[Values::new()], None).unwrap()[(0, 0)], 4.0);
    }

    #[test]
    fn initialization_is_seeded_and_in_range() {
        let a = model(vec![total_magnetization(4)]);
        let b = model(vec![total_magnetization(4)]);
        assert_eq!(a.parameters(), b.parameters());
        assert!(a.parameters().iter().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
        assert_eq!(a.parameter_names().len(), 24);
    }

    #[test]
    fn missing_feature() {
        let m = model(vec![total_magnetization(4)]);
        assert!(matches!(m.expectation(&[Values::new()], None), Err(Error::MissingParameter(_))));
    }

    #[test]
    fn explicit_state_changes_result() {
        let m = model(vec![total_magnetization(4)]);
        let f = values([("x", 0.3)]);
        let zero = m.expectation(std::slice::from_ref(&f), None).unwrap()[(0, 0)];
        let same = m.expectation(std::slice::from_ref(&f), Some(&StateVector::zero(4))).unwrap()[(0, 0)];
        assert!((zero - same).abs() < 1e-12);
        let flipped = m.expectation(&[f], Some(&StateVector::product("1111").unwrap())).unwrap()[(0, 0)];
        assert!((zero - flipped).abs() > 1e-6);
    }
}
