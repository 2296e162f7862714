//! Circuit differentiation: generalized parameter shift, adjoint sweep and
//! central finite differences, with the chain rule applied through the
//! parameter expressions of each gate.
//!
//! Every parametric step of a compiled [`Program`] is an *occurrence* with
//! a numeric argument `a_o` (rotation angle or evolution time). Engines
//! produce `∂f/∂a_o`; user-level gradients then sum
//! `(∂a_o/∂p) ∂f/∂a_o` over occurrences.

mod adjoint;
mod finite_diff;
mod gpsr;
mod plan;

use std::str::FromStr;

use rayon::prelude::*;

use crate::blockir::{Block, QuantumCircuit};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::simulator::{observable_operator, Op, Program, StateVector};
use crate::symexpr::{Expr, Values};

pub use finite_diff::DEFAULT_STEP;
pub use gpsr::{shift_rule, spectral_gaps, ShiftRule, GAP_TOLERANCE, MAX_CONDITION};
pub use plan::ShiftPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    Gpsr,
    Adjoint,
    FiniteDiff,
}

impl FromStr for DiffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gpsr" => Ok(Self::Gpsr),
            "adjoint" => Ok(Self::Adjoint),
            "fd" | "finite-diff" => Ok(Self::FiniteDiff),
            other => Err(Error::InvalidArgument(format!("unknown diff mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for DiffMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DiffMode::Gpsr => "gpsr",
            DiffMode::Adjoint => "adjoint",
            DiffMode::FiniteDiff => "fd",
        })
    }
}

/// Offsets added to occurrence arguments, `(occurrence, delta)`.
pub type Shifts = [(usize, f64)];

/// A compiled circuit paired with a numeric observable: `f = <ψ|O|ψ>`.
#[derive(Debug, Clone)]
pub struct Objective {
    program: Program,
    observable: PauliSum,
    /// Argument expression of each occurrence.
    args: Vec<Expr>,
}

impl Objective {
    /// Observable coefficients are evaluated once at `values`.
    pub fn new(circuit: &QuantumCircuit, observable: &Block, values: &Values) -> Result<Self> {
        let program = Program::compile(circuit.block(), circuit.n_qubits())?;
        let observable = observable_operator(observable, values)?;
        Self::from_parts(program, observable)
    }

    pub fn from_parts(program: Program, observable: PauliSum) -> Result<Self> {
        if let Some(&q) = observable.support().last() {
            if q >= program.n_qubits() {
                return Err(Error::QubitOutOfRange { qubit: q, n_qubits: program.n_qubits() });
            }
        }
        let args = program.occurrence_exprs().into_iter().cloned().collect();
        Ok(Self { program, observable, args })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn observable(&self) -> &PauliSum {
        &self.observable
    }

    pub fn n_qubits(&self) -> usize {
        self.program.n_qubits()
    }

    fn state(&self, values: &Values, shifts: &Shifts) -> Result<StateVector> {
        let mut psi = StateVector::zero(self.n_qubits());
        let bound = self.program.bind(values, shifts)?;
        self.program.apply(&bound, psi.amplitudes_mut());
        Ok(psi)
    }

    /// `f` with occurrence arguments offset by `shifts`.
    pub fn value(&self, values: &Values, shifts: &Shifts) -> Result<f64> {
        let psi = self.state(values, shifts)?;
        Ok(self.observable.expectation(self.n_qubits(), psi.amplitudes()).re)
    }

    fn op_of(&self, occurrence: usize) -> &Op {
        self.program
            .ops()
            .iter()
            .find(|op| op.argument().is_some_and(|(_, o)| o == occurrence))
            .expect("occurrence index in range")
    }

    /// Shift rule of one occurrence at `values`.
    pub fn occurrence_rule(&self, occurrence: usize, values: &Values) -> Result<ShiftRule> {
        let gaps = self.program.spectral_gaps(self.op_of(occurrence), values)?;
        shift_rule(&gaps)
    }

    /// `∂f/∂a_o` for each occurrence with `needed[o]`; zero elsewhere.
    pub fn occurrence_gradient(
        &self,
        values: &Values,
        shifts: &Shifts,
        needed: &[bool],
        mode: DiffMode,
    ) -> Result<Vec<f64>> {
        match mode {
            DiffMode::Adjoint => Ok(self.adjoint(values, shifts, needed)?.1),
            DiffMode::Gpsr => self.gpsr_occurrences(values, shifts, needed),
            DiffMode::FiniteDiff => {
                let h = DEFAULT_STEP;
                let mut out = vec![0.0; needed.len()];
                for (o, g) in out.iter_mut().enumerate().filter(|(o, _)| needed[*o]) {
                    let up = self.value(values, &with_shift(shifts, o, h))?;
                    let down = self.value(values, &with_shift(shifts, o, -h))?;
                    *g = (up - down) / (2.0 * h);
                }
                Ok(out)
            }
        }
    }

    fn gpsr_occurrences(&self, values: &Values, shifts: &Shifts, needed: &[bool]) -> Result<Vec<f64>> {
        let mut jobs = Vec::new();
        for o in (0..needed.len()).filter(|&o| needed[o]) {
            for (d, w) in self.occurrence_rule(o, values)?.terms() {
                jobs.push((o, d, w));
            }
        }
        let parts: Vec<(usize, f64)> = jobs
            .par_iter()
            .map(|&(o, d, w)| Ok((o, w * self.value(values, &with_shift(shifts, o, d))?)))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; needed.len()];
        for (o, v) in parts {
            out[o] += v;
        }
        Ok(out)
    }

    /// Occurrences whose argument depends on one of `wrt`.
    fn needed(&self, wrt: &[String]) -> Vec<bool> {
        self.args.iter().map(|a| wrt.iter().any(|p| a.depends_on(p))).collect()
    }

    fn check_shiftable(&self, wrt: &[String]) -> Result<()> {
        for op in self.program.ops() {
            if let Op::Evolution { generator, .. } = op {
                for e in generator.expressions() {
                    if let Some(p) = wrt.iter().find(|p| e.depends_on(p)) {
                        return Err(Error::ShiftRuleUnsupported(format!(
                            "`{p}` enters a Hamiltonian coefficient, not an evolution time"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Chain rule from occurrence derivatives to parameters.
    fn chain_rule(&self, values: &Values, occ: &[f64], wrt: &[String]) -> Result<Vec<f64>> {
        wrt.iter()
            .map(|p| {
                let mut total = 0.0;
                for (a, g) in self.args.iter().zip(occ) {
                    if a.depends_on(p) {
                        total += a.differentiate(p).evaluate(values)? * g;
                    }
                }
                Ok(total)
            })
            .collect()
    }

    /// `∂f/∂p` for each `p` in `wrt`. Parameters absent from the circuit get 0.
    pub fn gradient(&self, values: &Values, shifts: &Shifts, wrt: &[String], mode: DiffMode) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(values, shifts, wrt, mode)?.1)
    }

    /// `f` together with `∂f/∂p` for each `p` in `wrt`.
    pub fn value_and_gradient(
        &self,
        values: &Values,
        shifts: &Shifts,
        wrt: &[String],
        mode: DiffMode,
    ) -> Result<(f64, Vec<f64>)> {
        match mode {
            DiffMode::FiniteDiff => {
                let f = self.value(values, shifts)?;
                let g = self.finite_diff(values, shifts, wrt, DEFAULT_STEP)?;
                Ok((f, g))
            }
            DiffMode::Adjoint => {
                let needed = self.needed(wrt);
                let (f, occ) = self.adjoint(values, shifts, &needed)?;
                Ok((f, self.chain_rule(values, &occ, wrt)?))
            }
            DiffMode::Gpsr => {
                self.check_shiftable(wrt)?;
                let needed = self.needed(wrt);
                let f = self.value(values, shifts)?;
                let occ = self.gpsr_occurrences(values, shifts, &needed)?;
                Ok((f, self.chain_rule(values, &occ, wrt)?))
            }
        }
    }
}

fn with_shift(shifts: &Shifts, occurrence: usize, delta: f64) -> Vec<(usize, f64)> {
    let mut out = shifts.to_vec();
    out.push((occurrence, delta));
    out
}

fn names(wrt: &[&str]) -> Vec<String> {
    wrt.iter().map(|s| s.to_string()).collect()
}

/// `∂<O>/∂p` for each `p` in `wrt` using `mode`.
pub fn gradient(
    circuit: &QuantumCircuit,
    observable: &Block,
    values: &Values,
    wrt: &[&str],
    mode: DiffMode,
) -> Result<Vec<f64>> {
    Objective::new(circuit, observable, values)?.gradient(values, &[], &names(wrt), mode)
}

pub fn gpsr_gradient(circuit: &QuantumCircuit, observable: &Block, values: &Values, wrt: &[&str]) -> Result<Vec<f64>> {
    gradient(circuit, observable, values, wrt, DiffMode::Gpsr)
}

pub fn adjoint_gradient(
    circuit: &QuantumCircuit,
    observable: &Block,
    values: &Values,
    wrt: &[&str],
) -> Result<Vec<f64>> {
    gradient(circuit, observable, values, wrt, DiffMode::Adjoint)
}

/// Central differences with step `h` on each parameter value.
pub fn finite_diff_gradient(
    circuit: &QuantumCircuit,
    observable: &Block,
    values: &Values,
    wrt: &[&str],
    h: f64,
) -> Result<Vec<f64>> {
    Objective::new(circuit, observable, values)?.finite_diff(values, &[], &names(wrt), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockir::*;
    use crate::symexpr::values;

    fn circ(n: usize, b: Block) -> QuantumCircuit {
        QuantumCircuit::with_qubits(n, b).unwrap()
    }

    #[test]
    fn rx_gradient_all_modes() {
        let c = circ(1, rx(0, "x"));
        let v = values([("x", 0.7)]);
        let exact = -(0.7f64).sin();
        assert!((gpsr_gradient(&c, &z(0), &v, &["x"]).unwrap()[0] - exact).abs() < 1e-12);
        assert!((adjoint_gradient(&c, &z(0), &v, &["x"]).unwrap()[0] - exact).abs() < 1e-12);
        assert!((finite_diff_gradient(&c, &z(0), &v, &["x"], 1e-4).unwrap()[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn feature_chain_rule() {
        let c = circ(1, rx(0, Expr::feature("x").acos() * 2.0));
        let v = values([("x", 0.3)]);
        let fd = finite_diff_gradient(&c, &z(0), &v, &["x"], 1e-5).unwrap()[0];
        let g = gpsr_gradient(&c, &z(0), &v, &["x"]).unwrap()[0];
        assert!((g - fd).abs() < 1e-5);
    }

    #[test]
    fn absent_and_constant_parameters_give_zero() {
        let c = circ(1, chain([rx(0, "x"), ry(0, 0.3)]).unwrap());
        let v = values([("x", 0.2)]);
        for mode in [DiffMode::Gpsr, DiffMode::Adjoint, DiffMode::FiniteDiff] {
            assert_eq!(gradient(&c, &z(0), &v, &["nope"], mode).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn fd_stationary_point_and_order() {
        let c = circ(1, rx(0, "x"));
        let at = |x: f64, h: f64| finite_diff_gradient(&c, &z(0), &values([("x", x)]), &["x"], h).unwrap()[0];
        assert!(at(0.0, 1e-4).abs() < 1e-8);
        let exact = -(0.7f64).sin();
        let e1 = (at(0.7, 0.1) - exact).abs();
        let e2 = (at(0.7, 0.05) - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
    }

    #[test]
    fn evolution_time_gradient() {
        // <Z> after exp(-i t (Z0 Z1 + Z1)) applied to H|0> H|0>
        let g = add([kron([z(0), z(1)]).unwrap(), z(1)]).unwrap();
        let body = chain([kron([h(0), h(1)]).unwrap(), hamevo(g, "t").unwrap(), kron([h(0), h(1)]).unwrap()]).unwrap();
        let c = circ(2, body);
        let obs = add([z(0), scale(0.5, z(1))]).unwrap();
        let v = values([("t", 0.37)]);
        let fd = finite_diff_gradient(&c, &obs, &v, &["t"], 1e-5).unwrap()[0];
        let g = gpsr_gradient(&c, &obs, &v, &["t"]).unwrap()[0];
        assert!((g - fd).abs() < 1e-8, "{g} vs {fd}");
        assert!(matches!(adjoint_gradient(&c, &obs, &v, &["t"]), Err(Error::AnalogBlockInAdjoint(_))));
    }

    #[test]
    fn coefficient_parameters_are_not_shiftable() {
        let c = circ(1, hamevo(scale("w", x(0)), 1.0).unwrap());
        let v = values([("w", 0.4)]);
        assert!(matches!(gpsr_gradient(&c, &z(0), &v, &["w"]), Err(Error::ShiftRuleUnsupported(_))));
        assert!(finite_diff_gradient(&c, &z(0), &v, &["w"], 1e-4).is_ok());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("GPSR".parse::<DiffMode>().unwrap(), DiffMode::Gpsr);
        assert_eq!("fd".parse::<DiffMode>().unwrap(), DiffMode::FiniteDiff);
        assert!("ad".parse::<DiffMode>().is_err());
    }
}
