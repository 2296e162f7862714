use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{Error, Result};

thread_local! {
    static ALLOCATIONS: Cell<usize> = const { Cell::new(0) };
}

fn count_allocation() {
    ALLOCATIONS.with(|c| c.set(c.get() + 1));
}

/// Dense amplitudes of an `n`-qubit pure state. Index bit `n - 1 - q` holds
/// qubit `q`.
#[derive(Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Clone for StateVector {
    fn clone(&self) -> Self {
        count_allocation();
        Self { n_qubits: self.n_qubits, amps: self.amps.clone() }
    }
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        count_allocation();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Basis state from a bitstring whose first character is qubit 0.
    pub fn product(bits: &str) -> Result<Self> {
        if bits.is_empty() || bits.len() > 30 || bits.chars().any(|c| c != '0' && c != '1') {
            return Err(Error::BadBitstring(bits.to_string()));
        }
        let index = usize::from_str_radix(bits, 2).map_err(|_| Error::BadBitstring(bits.to_string()))?;
        let mut s = Self::zero(bits.len());
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{len} amplitudes is not a power of two")));
        }
        count_allocation();
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Overwrites the amplitudes with those of `other` without reallocating.
    pub fn copy_from(&mut self, other: &StateVector) {
        self.amps.copy_from_slice(&other.amps);
    }

    /// Number of state vectors created on the current thread so far.
    pub fn allocation_count() -> usize {
        ALLOCATIONS.with(|c| c.get())
    }
}

/// Bitstring of a basis index, qubit 0 first.
pub fn bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|q| if index >> (n_qubits - 1 - q) & 1 == 1 { '1' } else { '0' }).collect()
}
