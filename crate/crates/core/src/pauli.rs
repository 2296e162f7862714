//! Weighted sums of Pauli strings.
//!
//! Every Hermitian block (observables, Hamiltonian generators) lowers to a
//! [`PauliSum`]. Applying one to a state never materializes a dense matrix:
//! each Pauli string acts as a signed permutation of amplitudes.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::blockir::{Block, BlockKind, GateKind};
use crate::error::{Error, Result};
use crate::symexpr::Expr;

const IM: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis. Bit `q` of `x`/`z` refers to qubit
/// `q`; `Y` has both bits set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        assert!(qubit < 64, "Pauli strings address at most 64 qubits");
        let bit = 1u64 << qubit;
        match p {
            Pauli::I => Self::default(),
            Pauli::X => Self { x: bit, z: 0 },
            Pauli::Y => Self { x: bit, z: bit },
            Pauli::Z => Self { x: 0, z: bit },
        }
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn qubits(&self) -> Vec<usize> {
        let m = self.x | self.z;
        (0..64).filter(|q| m & (1 << q) != 0).collect()
    }

    /// Number of `Y` factors.
    fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Product `self * other` as `(phase, string)`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let mut phase = Complex64::new(1.0, 0.0);
        let support = self.x | self.z | other.x | other.z;
        for q in 0..64 {
            if support & (1 << q) == 0 {
                continue;
            }
            use Pauli::*;
            let f = match (self.get(q), other.get(q)) {
                (X, Y) | (Y, Z) | (Z, X) => IM,
                (Y, X) | (Z, Y) | (X, Z) => -IM,
                _ => Complex64::new(1.0, 0.0),
            };
            phase *= f;
        }
        let out = PauliString { x: self.x ^ other.x, z: self.z ^ other.z };
        (phase, out)
    }

    /// Masks in state-index positions for an `n`-qubit register, qubit 0 being
    /// the most significant bit.
    fn positional(&self, n_qubits: usize) -> (usize, usize) {
        let mut xm = 0usize;
        let mut zm = 0usize;
        for q in self.qubits() {
            let pos = 1usize << (n_qubits - 1 - q);
            if self.x & (1 << q) != 0 {
                xm |= pos;
            }
            if self.z & (1 << q) != 0 {
                zm |= pos;
            }
        }
        (xm, zm)
    }

    fn remapped(&self, map: &impl Fn(usize) -> usize) -> PauliString {
        let mut out = PauliString::identity();
        for q in self.qubits() {
            let p = PauliString::single(map(q), self.get(q));
            out.x |= p.x;
            out.z |= p.z;
        }
        out
    }
}

#[inline]
fn phase_of(n_y: u32, zm: usize, j: usize) -> Complex64 {
    let base = match n_y % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => IM,
        2 => Complex64::new(-1.0, 0.0),
        _ => -IM,
    };
    if (j & zm).count_ones() % 2 == 1 {
        -base
    } else {
        base
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum {
    terms: BTreeMap<PauliString, Complex64>,
}

/// Diagonal decomposition `c0 + sum_i a_i Z_i + sum_{i<j} g_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingTerms {
    pub constant: f64,
    pub local: Vec<f64>,
    pub pairs: BTreeMap<(usize, usize), f64>,
}

impl PauliSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coeff: impl Into<Complex64>, s: PauliString) -> Self {
        let mut out = Self::zero();
        out.add_term(s, coeff.into());
        out
    }

    pub fn identity(coeff: f64) -> Self {
        Self::term(coeff, PauliString::identity())
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self::term(1.0, PauliString::single(qubit, p))
    }

    pub fn add_term(&mut self, s: PauliString, c: Complex64) {
        *self.terms.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { terms: self.terms.iter().map(|(s, v)| (*s, v * c)).collect() }
    }

    pub fn plus(&self, other: &PauliSum) -> Self {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c);
        }
        out
    }

    /// Operator product `self * other`.
    pub fn times(&self, other: &PauliSum) -> Self {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (phase, s) = a.mul(b);
                out.add_term(s, ca * cb * phase);
            }
        }
        out
    }

    /// Drops terms whose coefficient magnitude is at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self { terms: self.terms.iter().filter(|(_, c)| c.norm() > tol).map(|(s, c)| (*s, *c)).collect() }
    }

    /// Every Pauli string is Hermitian, so the sum is Hermitian iff all
    /// combined coefficients are real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol * (1.0 + c.re.abs()))
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(PauliString::is_diagonal)
    }

    /// Sorted qubits touched by a non-identity factor.
    pub fn support(&self) -> Vec<usize> {
        let mut m = 0u64;
        for s in self.terms.keys() {
            m |= s.x | s.z;
        }
        (0..64).filter(|q| m & (1 << q) != 0).collect()
    }

    /// Relabels qubits through `map`.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Self {
        let mut out = Self::zero();
        for (s, c) in &self.terms {
            out.add_term(s.remapped(&map), *c);
        }
        out
    }

    fn check_width(&self, n_qubits: usize) {
        if let Some(&q) = self.support().last() {
            assert!(q < n_qubits, "operator acts on qubit {q} outside {n_qubits} qubits");
        }
    }

    /// `out = O psi`.
    pub fn apply(&self, n_qubits: usize, psi: &[Complex64], out: &mut [Complex64]) {
        self.check_width(n_qubits);
        out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (s, c) in &self.terms {
            let (xm, zm) = s.positional(n_qubits);
            let ny = s.n_y();
            for (i, o) in out.iter_mut().enumerate() {
                let j = i ^ xm;
                *o += c * phase_of(ny, zm, j) * psi[j];
            }
        }
    }

    /// `<psi| O |psi>` (complex; the imaginary part vanishes for Hermitian O).
    pub fn expectation(&self, n_qubits: usize, psi: &[Complex64]) -> Complex64 {
        self.check_width(n_qubits);
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c) in &self.terms {
            let (xm, zm) = s.positional(n_qubits);
            let ny = s.n_y();
            let mut t = Complex64::new(0.0, 0.0);
            for (i, a) in psi.iter().enumerate() {
                let j = i ^ xm;
                t += a.conj() * phase_of(ny, zm, j) * psi[j];
            }
            acc += c * t;
        }
        acc
    }

    /// `<left| O |right>`.
    pub fn matrix_element(&self, n_qubits: usize, left: &[Complex64], right: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, c) in &self.terms {
            let (xm, zm) = s.positional(n_qubits);
            let ny = s.n_y();
            let mut t = Complex64::new(0.0, 0.0);
            for (i, a) in left.iter().enumerate() {
                let j = i ^ xm;
                t += a.conj() * phase_of(ny, zm, j) * right[j];
            }
            acc += c * t;
        }
        acc
    }

    pub fn to_dense(&self, n_qubits: usize) -> DMatrix<Complex64> {
        self.check_width(n_qubits);
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (s, c) in &self.terms {
            let (xm, zm) = s.positional(n_qubits);
            let ny = s.n_y();
            for j in 0..dim {
                m[(j ^ xm, j)] += c * phase_of(ny, zm, j);
            }
        }
        m
    }

    /// Real diagonal when every term is a product of `Z`s.
    pub fn diagonal(&self, n_qubits: usize) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        self.check_width(n_qubits);
        let dim = 1usize << n_qubits;
        let mut d = vec![0.0; dim];
        for (s, c) in &self.terms {
            let (_, zm) = s.positional(n_qubits);
            for (j, v) in d.iter_mut().enumerate() {
                let sign = if (j & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                *v += c.re * sign;
            }
        }
        Some(d)
    }

    /// Splits a Hamiltonian made of `I`, `Z_i` and `Z_i Z_j` terms.
    pub fn ising_terms(&self, n_qubits: usize, tol: f64) -> Result<IsingTerms> {
        let mut out = IsingTerms { constant: 0.0, local: vec![0.0; n_qubits], pairs: BTreeMap::new() };
        for (s, c) in &self.terms {
            if c.norm() <= tol {
                continue;
            }
            if c.im.abs() > tol {
                return Err(Error::NonHermitianCoefficient(format!("complex coefficient {c}")));
            }
            let qs = s.qubits();
            if !s.is_diagonal() || qs.len() > 2 {
                return Err(Error::NonIsingGenerator(format!("term on qubits {qs:?} is not Z or ZZ")));
            }
            if let Some(&q) = qs.last() {
                if q >= n_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
                }
            }
            match qs.as_slice() {
                [] => out.constant += c.re,
                [q] => out.local[*q] += c.re,
                [a, b] => *out.pairs.entry((*a, *b)).or_insert(0.0) += c.re,
                _ => unreachable!(),
            }
        }
        Ok(out)
    }

    /// Lowers a Hermitian-structured block. `coeff` resolves scale factors.
    ///
    /// Chains multiply in program order: `chain(A, B)` is the product `B A`.
    pub fn from_block(block: &Block, coeff: &mut dyn FnMut(&Expr) -> Result<f64>) -> Result<Self> {
        match block.kind() {
            BlockKind::Primitive { gate, support, .. } => gate_operator(*gate, support),
            BlockKind::Scale { coeff: c, child } => {
                let v = coeff(c)?;
                Ok(Self::from_block(child, coeff)?.scaled(Complex64::new(v, 0.0)))
            }
            BlockKind::Add(children) => {
                let mut acc = Self::zero();
                for ch in children {
                    acc = acc.plus(&Self::from_block(ch, coeff)?);
                }
                Ok(acc)
            }
            BlockKind::Kron(children) => {
                let mut acc = Self::identity(1.0);
                for ch in children {
                    acc = acc.times(&Self::from_block(ch, coeff)?);
                }
                Ok(acc)
            }
            BlockKind::Chain(children) => {
                let mut acc = Self::identity(1.0);
                for ch in children {
                    acc = Self::from_block(ch, coeff)?.times(&acc);
                }
                Ok(acc)
            }
            BlockKind::HamEvo { .. } => {
                Err(Error::InvalidBlock("Hamiltonian evolution is not a Hermitian operator".into()))
            }
        }
    }

    /// Structural lowering with every coefficient set to one. Suitable for
    /// Hermiticity checks of symbolic operators.
    pub fn structure_of(block: &Block) -> Result<Self> {
        Self::from_block(block, &mut |_| Ok(1.0))
    }
}

fn gate_operator(gate: GateKind, support: &[usize]) -> Result<PauliSum> {
    use Pauli::*;
    let one = |q: usize, p: Pauli| PauliSum::single(q, p);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match gate {
        GateKind::I => PauliSum::identity(1.0),
        GateKind::X => one(support[0], X),
        GateKind::Y => one(support[0], Y),
        GateKind::Z => one(support[0], Z),
        GateKind::H => one(support[0], X).plus(&one(support[0], Z)).scaled(h.into()),
        GateKind::N => PauliSum::identity(0.5).plus(&one(support[0], Z).scaled((-0.5).into())),
        GateKind::CZ => {
            let (c, t) = (support[0], support[1]);
            PauliSum::identity(1.0)
                .plus(&one(c, Z))
                .plus(&one(t, Z))
                .plus(&one(c, Z).times(&one(t, Z)).scaled((-1.0).into()))
                .scaled(0.5.into())
        }
        GateKind::CNOT => {
            let (c, t) = (support[0], support[1]);
            PauliSum::identity(1.0)
                .plus(&one(c, Z))
                .plus(&one(t, X))
                .plus(&one(c, Z).times(&one(t, X)).scaled((-1.0).into()))
                .scaled(0.5.into())
        }
        GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CPHASE => {
            return Err(Error::InvalidBlock(format!("{gate:?} is not a Hermitian operator")));
        }
    })
}
