use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionBox, GameModel};
use crate::{Error, Result};

/// Quadratic game `J_i(x) = ½ a_i x_i² + x_i Σ_{j≠i} B_ij x_j + d_i x_i`.
///
/// The pseudo-gradient is affine, `F(x) = (diag(a) + B) x + d`, so the
/// interior equilibrium is a single linear solve.
#[derive(Debug, Clone)]
pub struct QuadraticGame {
    a: Vec<f64>,
    b: DMatrix<f64>,
    d: Vec<f64>,
    action_box: ActionBox,
}

impl QuadraticGame {
    pub fn new(a: Vec<f64>, b: DMatrix<f64>, d: Vec<f64>, action_box: ActionBox) -> Result<Self> {
        let n = a.len();
        if b.nrows() != n || b.ncols() != n || d.len() != n || action_box.dim() != n {
            return Err(Error::Dimension(format!(
                "quadratic game with {n} curvatures needs {n}x{n} coupling, {n} offsets and a {n}-box"
            )));
        }
        if let Some(i) = a.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("curvature a[{i}] must be positive")));
        }
        if let Some(i) = (0..n).find(|&i| b[(i, i)] != 0.0) {
            return Err(Error::InvalidParameter(format!("coupling B[{i}][{i}] must be zero")));
        }
        if b.iter().chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coupling or offset".into()));
        }
        Ok(Self { a, b, d, action_box })
    }

    /// Seeded instance with a known interior equilibrium.
    ///
    /// Curvatures are drawn in `[1, 2]`, the symmetric coupling has row sums
    /// of absolute values at most `0.4 a_i`, the equilibrium is drawn in
    /// `[-1, 1]^n` and the box is `[-5, 5]^n`.
    pub fn random_diagonally_dominant(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=2.0)).collect();
        let mut b = DMatrix::zeros(n, n);
        let off = if n > 1 { 0.4 / (n - 1) as f64 } else { 0.0 };
        for i in 0..n {
            for j in (i + 1)..n {
                let cap = off * a[i].min(a[j]);
                let v = rng.random_range(-cap..=cap);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let m = Self::system_matrix(&a, &b);
        let d: Vec<f64> = (m * DVector::from_vec(target)).iter().map(|v| -v).collect();
        let action_box = ActionBox::uniform(n, -5.0, 5.0).expect("valid box");
        Self::new(a, b, d, action_box).expect("consistent dimensions")
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.a
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn offsets(&self) -> &[f64] {
        &self.d
    }

    fn system_matrix(a: &[f64], b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = b.clone();
        for (i, &ai) in a.iter().enumerate() {
            m[(i, i)] = ai;
        }
        m
    }

    /// `diag(a) + B`, the Jacobian of the pseudo-gradient.
    pub fn jacobian(&self) -> DMatrix<f64> {
        Self::system_matrix(&self.a, &self.b)
    }

    /// Interior Nash equilibrium by a direct solve of `(diag(a) + B) x = -d`.
    ///
    /// Fails when the system is singular or when the solution is not strictly
    /// inside the action box (the unconstrained solve is only an equilibrium
    /// of the boxed game in the interior).
    pub fn nash_equilibrium(&self) -> Result<Vec<f64>> {
        let m = self.jacobian();
        let rhs = DVector::from_iterator(self.d.len(), self.d.iter().map(|v| -v));
        let lu = m.clone().lu();
        let x = lu.solve(&rhs).ok_or(Error::Singular)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        let scale = 1.0 + rhs.amax() + m.amax() * x.amax();
        if (&m * &x - &rhs).amax() > 1e-10 * scale {
            return Err(Error::Singular);
        }
        let bx = &self.action_box;
        let interior = x
            .iter()
            .enumerate()
            .all(|(i, &v)| bx.lower()[i] < v && v < bx.upper()[i]);
        if !interior {
            return Err(Error::BoundarySolution);
        }
        Ok(x.iter().copied().collect())
    }
}

impl GameModel for QuadraticGame {
    fn n_players(&self) -> usize {
        self.a.len()
    }

    fn action_box(&self) -> &ActionBox {
        &self.action_box
    }

    fn cost(&self, i: usize, x: &[f64]) -> f64 {
        let coupling: f64 = (0..x.len()).map(|j| self.b[(i, j)] * x[j]).sum();
        0.5 * self.a[i] * x[i] * x[i] + x[i] * coupling + self.d[i] * x[i]
    }

    fn grad(&self, i: usize, x: &[f64]) -> f64 {
        let coupling: f64 = (0..x.len()).map(|j| self.b[(i, j)] * x[j]).sum();
        self.a[i] * x[i] + coupling + self.d[i]
    }
}
