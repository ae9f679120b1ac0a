//! Undirected communication graph between players and the spectral
//! quantities the solver's step condition depends on.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::symmetric_eigenvalues;
use crate::{Error, Result};

/// Simple undirected graph on players `0..n`.
///
/// Adjacency lists are sorted and duplicate-free; self-loops are rejected at
/// construction. The graph is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    adjacency: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Builds a graph from unordered pairs. Repeated pairs collapse to one edge.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidEdge(i, j));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency })
    }

    pub fn ring(n: usize) -> Self {
        let edges: Vec<_> = match n {
            0 | 1 => Vec::new(),
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        Self::new(n, &edges).expect("ring edges are valid")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges).expect("complete edges are valid")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges).expect("path edges are valid")
    }

    /// Ring over `0..n` plus `extra_edges` distinct chords chosen by a seeded
    /// shuffle. Always connected and reproducible for a fixed argument triple.
    pub fn random_connected(n: usize, extra_edges: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPlayers(n));
        }
        let ring = Self::ring(n);
        let mut chords: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !ring.has_edge(i, j))
            .collect();
        if extra_edges > chords.len() {
            return Err(Error::TooManyChords {
                requested: extra_edges,
                available: chords.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        chords.shuffle(&mut rng);
        let mut edges = ring.edges();
        edges.extend_from_slice(&chords[..extra_edges]);
        Self::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    /// Sorted neighbours of player `i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange { index: i, n: self.n() })
    }

    // Unchecked variant for hot loops where `i < n` is already established.
    pub(crate) fn nbrs(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency
            .get(i)
            .is_some_and(|l| l.binary_search(&j).is_ok())
    }

    /// Edge list with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Depth-first reachability from node 0. The one-node graph is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }

    /// Errors unless the graph can host the solver: `n >= 2` and connected.
    pub fn require_solvable(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(Error::TooFewPlayers(self.n()));
        }
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(())
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| if i == j { self.degree(i) as f64 } else { 0.0 })
    }

    /// `D + A`, the signless Laplacian.
    pub fn signless_laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() + self.adjacency_matrix()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() - self.adjacency_matrix()
    }

    /// `D^{-1/2} (D - A) D^{-1/2}`. Requires every node to have a neighbour.
    pub fn normalized_laplacian(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        if let Some(i) = (0..n).find(|&i| self.degree(i) == 0) {
            return Err(Error::IsolatedNode(i));
        }
        let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / (self.degree(i) as f64).sqrt()).collect();
        let lap = self.laplacian();
        Ok(DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * lap[(i, j)] * inv_sqrt[j]))
    }

    /// Smallest eigenvalue of `D + A`; nonnegative on every graph.
    pub fn lambda_min_d_plus_a(&self) -> Result<f64> {
        self.require_solvable()?;
        Ok(symmetric_eigenvalues(&self.signless_laplacian())[0])
    }

    /// Largest eigenvalue of the normalized Laplacian; never exceeds 2.
    pub fn lambda_max_normalized_laplacian(&self) -> Result<f64> {
        self.require_solvable()?;
        let eig = symmetric_eigenvalues(&self.normalized_laplacian()?);
        Ok(*eig.last().expect("n >= 2"))
    }
}
