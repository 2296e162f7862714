//! Hamiltonian construction: the generic `Σ α_i O_i + Σ β_ij H_ij` factory,
//! the Rydberg atom-array Hamiltonian and common observables.

use std::fmt;
use std::sync::Arc;

use crate::blockir::{add, id, kron, n, scale, x, y, z, Block, GateKind};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::register::Register;
use crate::symexpr::Expr;

/// `C6` for the 70S Rydberg level of rubidium, in rad µm⁶ / µs.
pub const DEFAULT_C6: f64 = 5_420_158.53;

pub type PairCallback = Arc<dyn Fn(usize, usize) -> Block + Send + Sync>;

#[derive(Clone)]
pub enum Interaction {
    /// `n_i n_j`
    NN,
    /// `Z_i Z_j`
    ZZ,
    /// `X_i X_j + Y_i Y_j`
    XY,
    /// `X_i X_j + Y_i Y_j + Z_i Z_j`
    XYZ,
    Custom(PairCallback),
}

impl Interaction {
    pub fn custom(f: impl Fn(usize, usize) -> Block + Send + Sync + 'static) -> Self {
        Interaction::Custom(Arc::new(f))
    }

    fn pair(&self, i: usize, j: usize) -> Block {
        let two = |a: Block, b: Block| kron([a, b]).expect("distinct qubits");
        match self {
            Interaction::NN => two(n(i), n(j)),
            Interaction::ZZ => two(z(i), z(j)),
            Interaction::XY => add([two(x(i), x(j)), two(y(i), y(j))]).unwrap(),
            Interaction::XYZ => add([two(x(i), x(j)), two(y(i), y(j)), two(z(i), z(j))]).unwrap(),
            Interaction::Custom(f) => f(i, j),
        }
    }
}

impl fmt::Debug for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interaction::NN => f.write_str("NN"),
            Interaction::ZZ => f.write_str("ZZ"),
            Interaction::XY => f.write_str("XY"),
            Interaction::XYZ => f.write_str("XYZ"),
            Interaction::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Coefficients broadcast to every item or given one per item.
#[derive(Debug, Clone)]
pub enum Strength {
    Uniform(Expr),
    PerItem(Vec<Expr>),
}

impl Strength {
    fn resolve(&self, len: usize) -> Result<Vec<Expr>> {
        match self {
            Strength::Uniform(e) => Ok(vec![e.clone(); len]),
            Strength::PerItem(v) if v.len() == len => Ok(v.clone()),
            Strength::PerItem(v) => Err(Error::StrengthLengthMismatch { expected: len, got: v.len() }),
        }
    }
}

impl<T: Into<Expr>> From<T> for Strength {
    fn from(e: T) -> Self {
        Strength::Uniform(e.into())
    }
}

/// Inputs of [`hamiltonian_factory`]. Strength lists follow the register's
/// edge order, or lexicographic `i < j` order with `use_all_node_pairs`.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub register: Register,
    pub interaction: Interaction,
    pub interaction_strength: Strength,
    pub detuning: Option<GateKind>,
    pub detuning_strength: Strength,
    pub use_all_node_pairs: bool,
}

impl HamiltonianSpec {
    /// Unit interaction strengths over the register edges, no detuning.
    pub fn new(register: Register, interaction: Interaction) -> Self {
        Self {
            register,
            interaction,
            interaction_strength: Strength::Uniform(Expr::one()),
            detuning: None,
            detuning_strength: Strength::Uniform(Expr::one()),
            use_all_node_pairs: false,
        }
    }

    pub fn interaction_strength(mut self, s: impl Into<Strength>) -> Self {
        self.interaction_strength = s.into();
        self
    }

    pub fn detuning(mut self, gate: GateKind, strength: impl Into<Strength>) -> Self {
        self.detuning = Some(gate);
        self.detuning_strength = strength.into();
        self
    }

    pub fn all_node_pairs(mut self, on: bool) -> Self {
        self.use_all_node_pairs = on;
        self
    }
}

/// `Σ_i α_i O_i + Σ_(i,j) β_ij H_ij` as an `Add` of scaled terms, detuning
/// terms first.
pub fn hamiltonian_factory(spec: &HamiltonianSpec) -> Result<Block> {
    let nq = spec.register.n_qubits();
    let mut terms = Vec::new();
    if let Some(gate) = spec.detuning {
        let op: fn(usize) -> Block = match gate {
            GateKind::X => x,
            GateKind::Y => y,
            GateKind::Z => z,
            GateKind::N => n,
            other => return Err(Error::InvalidArgument(format!("{other} is not a detuning operator"))),
        };
        for (i, a) in spec.detuning_strength.resolve(nq)?.into_iter().enumerate() {
            terms.push(scale(a, op(i)));
        }
    }
    let pairs = if spec.use_all_node_pairs { spec.register.all_node_pairs() } else { spec.register.edges().to_vec() };
    for ((i, j), b) in pairs.iter().zip(spec.interaction_strength.resolve(pairs.len())?) {
        terms.push(scale(b, spec.interaction.pair(*i, *j)));
    }
    let h = add(terms)?;
    let ops = PauliSum::structure_of(&h).map_err(|e| Error::NonHermitianCoefficient(e.to_string()))?;
    if !ops.is_hermitian(1e-12) {
        return Err(Error::NonHermitianCoefficient("interaction term is not Hermitian".into()));
    }
    Ok(h)
}

/// Drive, detuning and van der Waals parameters of the atom-array model.
#[derive(Debug, Clone)]
pub struct RydbergParams {
    /// Rabi frequency, rad/µs.
    pub omega: Expr,
    /// Detuning, rad/µs.
    pub delta: Expr,
    /// Drive phase, rad.
    pub phi: Expr,
    /// rad µm⁶ / µs.
    pub c6: f64,
    /// µs.
    pub duration: Expr,
}

impl Default for RydbergParams {
    fn default() -> Self {
        Self {
            omega: Expr::zero(),
            delta: Expr::zero(),
            phi: Expr::zero(),
            c6: DEFAULT_C6,
            duration: Expr::one(),
        }
    }
}

/// `Σ_i [(Ω/2)(cos φ X_i − sin φ Y_i) − δ n_i] + Σ_(i<j) C6 / r_ij⁶ n_i n_j`.
///
/// Drive or detuning terms whose coefficient is the constant zero are left
/// out of the block.
pub fn rydberg_hamiltonian(register: &Register, p: &RydbergParams) -> Result<Block> {
    if p.c6.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument(format!("c6 must be positive, got {}", p.c6)));
    }
    let is_zero = |e: &Expr| e.as_constant() == Some(0.0);
    let mut terms = Vec::new();
    for i in 0..register.n_qubits() {
        if !is_zero(&p.omega) {
            terms.push(scale(&p.omega * 0.5 * p.phi.cos(), x(i)));
            if !is_zero(&p.phi) {
                terms.push(scale(-(&p.omega * 0.5 * p.phi.sin()), y(i)));
            }
        }
        if !is_zero(&p.delta) {
            terms.push(scale(-&p.delta, n(i)));
        }
    }
    for ((i, j), r) in register.distances() {
        if r < 1e-12 {
            return Err(Error::CoincidentAtoms(i, j));
        }
        terms.push(scale(p.c6 / r.powi(6), kron([n(i), n(j)])?));
    }
    if terms.is_empty() {
        terms.push(scale(0.0, id(0)));
    }
    add(terms)
}

/// `Σ_i Z_i`.
pub fn total_magnetization(n_qubits: usize) -> Block {
    add((0..n_qubits.max(1)).map(z)).expect("at least one qubit").tagged("total_magnetization")
}

/// `Σ_i X_i + Σ_(i<j) Z_i Z_j` over the complete graph.
pub fn ising(n_qubits: usize) -> Block {
    weighted_ising(n_qubits, 1.0, 1.0)
}

/// `h Σ_i X_i + J Σ_(i<j) Z_i Z_j` over the complete graph.
pub fn weighted_ising(n_qubits: usize, field: f64, coupling: f64) -> Block {
    let mut terms: Vec<Block> = (0..n_qubits.max(1)).map(|i| scale(field, x(i))).collect();
    for i in 0..n_qubits {
        for j in (i + 1)..n_qubits {
            terms.push(scale(coupling, kron([z(i), z(j)]).unwrap()));
        }
    }
    add(terms).expect("at least one term").tagged("ising")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    TotalMagnetization,
    Ising,
}

pub fn observable(kind: ObservableKind, n_qubits: usize) -> Block {
    match kind {
        ObservableKind::TotalMagnetization => total_magnetization(n_qubits),
        ObservableKind::Ising => ising(n_qubits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{expectation, prepare_state, to_matrix};
    use crate::symexpr::{values, Values};
    use crate::QuantumCircuit;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    type M = DMatrix<Complex64>;

    fn pauli(p: char) -> M {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match p {
            'I' => M::identity(2, 2),
            'X' => M::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            'Y' => M::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            'Z' => M::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
            'N' => M::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
            _ => unreachable!(),
        }
    }

    /// Kronecker product of single-qubit factors, qubit 0 leftmost.
    fn word(w: &str) -> M {
        w.chars().map(pauli).reduce(|a, b| a.kronecker(&b)).unwrap()
    }

    fn dev(a: &M, b: &M) -> f64 {
        (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zz_line_matches_kronecker_oracle() {
        let spec = HamiltonianSpec::new(Register::line(3, 1.0).unwrap(), Interaction::ZZ);
        let h = hamiltonian_factory(&spec).unwrap();
        let m = to_matrix(&h, 3, &Values::new()).unwrap();
        assert!(dev(&m, &(word("ZZI") + word("IZZ"))) < 1e-12);
    }

    #[test]
    fn lattice_with_detuning_term_count() {
        let reg = Register::triangular_lattice(2, 2, 2.0).unwrap();
        let strengths: Vec<Expr> = reg.all_node_pairs().iter().map(|&(i, j)| Expr::constant(1.0 / reg.distance(i, j))).collect();
        let spec = HamiltonianSpec::new(reg.clone(), Interaction::NN)
            .interaction_strength(Strength::PerItem(strengths))
            .detuning(GateKind::X, "d")
            .all_node_pairs(true);
        let h = hamiltonian_factory(&spec).unwrap();
        assert_eq!(h.children().len(), reg.all_node_pairs().len() + reg.n_qubits());
        assert_eq!(h.variational_names().unwrap(), vec!["d".to_string()]);
    }

    #[test]
    fn strength_length_is_checked() {
        let spec = HamiltonianSpec::new(Register::line(3, 1.0).unwrap(), Interaction::ZZ)
            .interaction_strength(Strength::PerItem(vec![Expr::one()]));
        assert_eq!(hamiltonian_factory(&spec), Err(Error::StrengthLengthMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn custom_interaction_equals_xy() {
        let reg = Register::line(2, 1.0).unwrap();
        let custom = Interaction::custom(|i, j| {
            add([kron([x(i), x(j)]).unwrap(), kron([y(i), y(j)]).unwrap()]).unwrap()
        });
        let a = hamiltonian_factory(&HamiltonianSpec::new(reg.clone(), custom)).unwrap();
        let b = hamiltonian_factory(&HamiltonianSpec::new(reg, Interaction::XY)).unwrap();
        let v = Values::new();
        assert!(dev(&to_matrix(&a, 2, &v).unwrap(), &to_matrix(&b, 2, &v).unwrap()) < 1e-12);
    }

    #[test]
    fn non_hermitian_custom_interaction_is_rejected() {
        let reg = Register::line(2, 1.0).unwrap();
        let bad = Interaction::custom(|i, _| crate::blockir::chain([x(i), z(i)]).unwrap());
        assert!(matches!(
            hamiltonian_factory(&HamiltonianSpec::new(reg, bad)),
            Err(Error::NonHermitianCoefficient(_))
        ));
    }

    #[test]
    fn rydberg_pair_interaction() {
        let reg = Register::line(2, 8.0).unwrap();
        let h = rydberg_hamiltonian(&reg, &RydbergParams::default()).unwrap();
        let m = to_matrix(&h, 2, &Values::new()).unwrap();
        let expected = word("NN") * Complex64::new(DEFAULT_C6 / 8f64.powi(6), 0.0);
        assert!(dev(&m, &expected) < 1e-12 * DEFAULT_C6);
        for k in 0..3 {
            assert_eq!(m[(k, k)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rydberg_far_apart_is_pure_drive() {
        let reg = Register::line(2, 1e6).unwrap();
        let p = RydbergParams { omega: Expr::one(), ..Default::default() };
        let m = to_matrix(&rydberg_hamiltonian(&reg, &p).unwrap(), 2, &Values::new()).unwrap();
        let drive = (word("XI") + word("IX")) * Complex64::new(0.5, 0.0);
        assert!(dev(&m, &drive) <= 1e-36 * DEFAULT_C6);
    }

    #[test]
    fn rydberg_phase_quarter_turn() {
        let reg = Register::line(2, 1e6).unwrap();
        let p = RydbergParams { omega: Expr::one(), phi: Expr::constant(std::f64::consts::FRAC_PI_2), ..Default::default() };
        let m = to_matrix(&rydberg_hamiltonian(&reg, &p).unwrap(), 2, &Values::new()).unwrap();
        let drive = (word("YI") + word("IY")) * Complex64::new(-0.5, 0.0);
        assert!(dev(&m, &drive) < 1e-12);
    }

    #[test]
    fn rydberg_decays_as_sixth_power() {
        let reg = Register::new(vec![[0.0, 0.0], [5.0, 0.0], [0.0, 10.0]], vec![]).unwrap();
        let h = rydberg_hamiltonian(&reg, &RydbergParams::default()).unwrap();
        let coeff = |i: usize, j: usize| -> f64 {
            h.children()
                .iter()
                .find(|t| t.qubit_support() == vec![i, j])
                .and_then(|t| match t.kind() {
                    crate::BlockKind::Scale { coeff, .. } => coeff.as_constant(),
                    _ => None,
                })
                .unwrap()
        };
        assert!((coeff(0, 1) / coeff(0, 2) - 64.0).abs() < 1e-9);
        let same = Register::new(vec![[1.0, 1.0], [1.0, 1.0]], vec![]).unwrap();
        assert_eq!(rydberg_hamiltonian(&same, &RydbergParams::default()), Err(Error::CoincidentAtoms(0, 1)));
    }

    #[test]
    fn magnetization_expectations() {
        let c = QuantumCircuit::with_qubits(4, id(0)).unwrap();
        let m = total_magnetization(4);
        assert_eq!(expectation(&c, &m, &Values::new(), None).unwrap(), 4.0);
        let s = prepare_state(Some("1000"), 4).unwrap();
        assert_eq!(expectation(&c, &m, &Values::new(), Some(s)).unwrap(), 2.0);
    }

    #[test]
    fn ising_two_qubits() {
        let m = to_matrix(&ising(2), 2, &Values::new()).unwrap();
        assert!(dev(&m, &(word("XI") + word("IX") + word("ZZ"))) < 1e-12);
        let w = to_matrix(&weighted_ising(2, 0.5, -2.0), 2, &values([])).unwrap();
        let expected = (word("XI") + word("IX")) * Complex64::new(0.5, 0.0) - word("ZZ") * Complex64::new(2.0, 0.0);
        assert!(dev(&w, &expected) < 1e-12);
    }
}
