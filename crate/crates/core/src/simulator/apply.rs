//! In-place gate kernels over a flat amplitude array.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[inline]
fn pos(n_qubits: usize, q: usize) -> usize {
    1usize << (n_qubits - 1 - q)
}

/// `m` is row-major `[m00, m01, m10, m11]`.
pub(crate) fn apply_1q(amps: &mut [Complex64], n_qubits: usize, q: usize, m: &[Complex64; 4]) {
    let stride = pos(n_qubits, q);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = m[0] * a0 + m[1] * a1;
            amps[i + stride] = m[2] * a0 + m[3] * a1;
        }
        base += 2 * stride;
    }
}

/// Row-major 4x4 matrix over the local basis `|q0 q1>`.
pub(crate) fn apply_2q(amps: &mut [Complex64], n_qubits: usize, q0: usize, q1: usize, m: &[Complex64; 16]) {
    let p0 = pos(n_qubits, q0);
    let p1 = pos(n_qubits, q1);
    let mask = p0 | p1;
    for i in 0..amps.len() {
        if i & mask != 0 {
            continue;
        }
        let idx = [i, i | p1, i | p0, i | mask];
        let a = idx.map(|k| amps[k]);
        for (r, &k) in idx.iter().enumerate() {
            amps[k] = m[4 * r] * a[0] + m[4 * r + 1] * a[1] + m[4 * r + 2] * a[2] + m[4 * r + 3] * a[3];
        }
    }
}

/// Local basis index of global index `i`; `qubits[0]` is the local MSB.
#[inline]
fn local_index(i: usize, positions: &[usize]) -> usize {
    positions.iter().fold(0, |acc, &p| (acc << 1) | usize::from(i & p != 0))
}

pub(crate) fn apply_diagonal(amps: &mut [Complex64], n_qubits: usize, qubits: &[usize], phases: &[Complex64]) {
    let positions: Vec<usize> = qubits.iter().map(|&q| pos(n_qubits, q)).collect();
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= phases[local_index(i, &positions)];
    }
}

pub(crate) fn apply_dense(amps: &mut [Complex64], n_qubits: usize, qubits: &[usize], m: &DMatrix<Complex64>) {
    let k = qubits.len();
    let local_dim = 1usize << k;
    let positions: Vec<usize> = qubits.iter().map(|&q| pos(n_qubits, q)).collect();
    let mask: usize = positions.iter().sum();
    let offsets: Vec<usize> = (0..local_dim)
        .map(|l| (0..k).filter(|b| l >> (k - 1 - b) & 1 == 1).map(|b| positions[b]).sum())
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); local_dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, b) in buf.iter().enumerate() {
                acc += m[(r, c)] * b;
            }
            amps[base + off] = acc;
        }
    }
}
