use super::{Objective, Shifts};
use crate::error::{Error, Result};
use crate::simulator::{Op, StateVector};
use crate::symexpr::Values;

impl Objective {
    /// Reverse sweep holding two state vectors: `ψ` and `λ = O ψ`, both
    /// un-applied gate by gate. With `ψ` the state right after step `k`,
    /// `∂f/∂a_k = Im <λ| Ĝ_k |ψ>`.
    pub(super) fn adjoint(&self, values: &Values, shifts: &Shifts, needed: &[bool]) -> Result<(f64, Vec<f64>)> {
        let ops = self.program.ops();
        if let Some(Op::Evolution { qubits, .. }) = ops.iter().find(|o| matches!(o, Op::Evolution { .. })) {
            return Err(Error::AnalogBlockInAdjoint(format!("HamEvo on qubits {qubits:?}")));
        }
        let n = self.n_qubits();
        let bound = self.program.bind(values, shifts)?;
        let mut psi = StateVector::zero(n);
        self.program.apply(&bound, psi.amplitudes_mut());
        let mut lam = StateVector::zero(n);
        self.observable.apply(n, psi.amplitudes(), lam.amplitudes_mut());
        let f = psi.inner(&lam).re;

        let mut grads = vec![0.0; needed.len()];
        let first = ops
            .iter()
            .position(|op| op.argument().is_some_and(|(_, o)| needed[o]))
            .unwrap_or(ops.len());
        for k in (first..ops.len()).rev() {
            if let Some((_, o)) = ops[k].argument() {
                if needed[o] {
                    let g = self.program.effective_generator(&ops[k], values)?;
                    grads[o] = g.matrix_element(n, lam.amplitudes(), psi.amplitudes()).im;
                }
            }
            if k > first {
                let inv = bound[k].inverse();
                inv.apply(n, psi.amplitudes_mut());
                inv.apply(n, lam.amplitudes_mut());
            }
        }
        Ok((f, grads))
    }
}
