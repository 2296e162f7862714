//! Qubit registers: 2D coordinates plus a connectivity graph.
//!
//! Coordinates are in abstract length units; the Rydberg Hamiltonian reads
//! them as micrometres.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Register {
    #[serde(rename = "nodes")]
    coords: Vec<[f64; 2]>,
    edges: Vec<(usize, usize)>,
}

impl Register {
    /// Builds a register from explicit coordinates and edges, validating both.
    pub fn new(coords: Vec<[f64; 2]>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyRegister);
        }
        let n = coords.len();
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::QubitOutOfRange { qubit: i.max(j), n_qubits: n });
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop on node {i}")));
            }
            let e = (i.min(j), i.max(j));
            if !normalized.contains(&e) {
                normalized.push(e);
            }
        }
        normalized.sort_unstable();
        Ok(Self { coords, edges: normalized })
    }

    /// Collinear points along x with edges between consecutive nodes.
    pub fn line(n_qubits: usize, spacing: f64) -> Result<Self> {
        check(n_qubits, spacing)?;
        let coords = (0..n_qubits).map(|i| [i as f64 * spacing, 0.0]).collect();
        let edges = (1..n_qubits).map(|i| (i - 1, i)).collect();
        Self::new(coords, edges)
    }

    /// Points on a circle with neighbouring points `spacing` apart, ring edges.
    pub fn circle(n_qubits: usize, spacing: f64) -> Result<Self> {
        check(n_qubits, spacing)?;
        if n_qubits == 1 {
            return Self::new(vec![[0.0, 0.0]], vec![]);
        }
        let step = 2.0 * std::f64::consts::PI / n_qubits as f64;
        let radius = spacing / (2.0 * (std::f64::consts::PI / n_qubits as f64).sin());
        let coords = (0..n_qubits)
            .map(|k| {
                let a = step * k as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        let edges = (0..n_qubits).map(|k| (k, (k + 1) % n_qubits)).collect();
        Self::new(coords, edges)
    }

    /// Rhombic patch of a triangular lattice with `(rows + 1) x (cols + 1)`
    /// sites, basis vectors `(1, 0)` and `(1/2, sqrt(3)/2)` scaled by `spacing`,
    /// enumerated row-major. Edges join sites one lattice spacing apart.
    pub fn triangular_lattice(n_cells_row: usize, n_cells_col: usize, spacing: f64) -> Result<Self> {
        check(1, spacing)?;
        let h = 3f64.sqrt() / 2.0;
        let mut coords = Vec::with_capacity((n_cells_row + 1) * (n_cells_col + 1));
        for i in 0..=n_cells_row {
            for j in 0..=n_cells_col {
                coords.push([(j as f64 + 0.5 * i as f64) * spacing, i as f64 * h * spacing]);
            }
        }
        let edges = pairs_at(&coords, spacing);
        Self::new(coords, edges)
    }

    /// Nodes as given; edges join every pair at the minimal pairwise distance.
    pub fn from_coordinates(coords: Vec<[f64; 2]>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyRegister);
        }
        let n = coords.len();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                min = min.min(dist(coords[i], coords[j]));
            }
        }
        let edges = if n > 1 { pairs_at(&coords, min) } else { vec![] };
        Self::new(coords, edges)
    }

    /// `n` qubits on a unit-spaced line, fully connected. Used when a circuit
    /// is declared by qubit count only.
    pub fn all_to_all(n_qubits: usize) -> Result<Self> {
        check(n_qubits, 1.0)?;
        let coords = (0..n_qubits).map(|i| [i as f64, 0.0]).collect();
        let edges = all_pairs(n_qubits);
        Self::new(coords, edges)
    }

    pub fn n_qubits(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Every `i < j` pair in lexicographic order.
    pub fn all_node_pairs(&self) -> Vec<(usize, usize)> {
        all_pairs(self.n_qubits())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.coords[i], self.coords[j])
    }

    /// Euclidean distance of every `i < j` pair.
    pub fn distances(&self) -> BTreeMap<(usize, usize), f64> {
        self.all_node_pairs()
            .into_iter()
            .map(|(i, j)| ((i, j), self.distance(i, j)))
            .collect()
    }

    /// Same graph with every coordinate multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if factor <= 0.0 || !factor.is_finite() {
            return Err(Error::InvalidSpacing(factor));
        }
        let coords = self.coords.iter().map(|[x, y]| [x * factor, y * factor]).collect();
        Ok(Self { coords, edges: self.edges.clone() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("register serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            nodes: Vec<[f64; 2]>,
            #[serde(default)]
            edges: Vec<(usize, usize)>,
        }
        let raw: Raw =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(raw.nodes, raw.edges)
    }
}

fn check(n: usize, spacing: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyRegister);
    }
    if spacing <= 0.0 || !spacing.is_finite() {
        return Err(Error::InvalidSpacing(spacing));
    }
    Ok(())
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

fn pairs_at(coords: &[[f64; 2]], target: f64) -> Vec<(usize, usize)> {
    let tol = EDGE_TOLERANCE * target.max(1.0);
    all_pairs(coords.len())
        .into_iter()
        .filter(|&(i, j)| (dist(coords[i], coords[j]) - target).abs() <= tol)
        .collect()
}
