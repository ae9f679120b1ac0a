//! Game interface and concrete games.

mod quadratic;
mod wanet;

pub use quadratic::QuadraticGame;
pub use wanet::{default_wanet_instance, WanetGame, WANET_LINKS, WANET_USERS};
pub(crate) use wanet::defaults as wanet_defaults;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::clamp_interval;
use crate::{Error, Result};

/// Product of closed intervals, one scalar action per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "box has {} lower and {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "action interval {i} is [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Projection of a scalar onto the `i`-th interval.
    #[inline]
    pub fn project(&self, i: usize, v: f64) -> f64 {
        clamp_interval(v, self.lower[i], self.upper[i])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| self.lower[i] <= v && v <= self.upper[i])
    }

    pub fn contains_coord(&self, i: usize, v: f64) -> bool {
        self.lower[i] <= v && v <= self.upper[i]
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| if lo < hi { rng.random_range(lo..=hi) } else { lo })
            .collect()
    }
}

/// An N-player game with scalar actions.
///
/// `cost(i, x)` is player `i`'s cost at the full profile `x`; `grad(i, x)` is
/// its partial derivative in `x[i]`. Both must be total on every profile the
/// solver can produce, which includes estimates outside the box.
pub trait GameModel: Send + Sync {
    fn n_players(&self) -> usize;

    fn action_box(&self) -> &ActionBox;

    fn cost(&self, i: usize, x: &[f64]) -> f64;

    fn grad(&self, i: usize, x: &[f64]) -> f64;

    /// Number of safeguarded terms that were clamped when evaluating player
    /// `i` at `x`. Games without a safeguard report zero.
    fn guard_activations(&self, _i: usize, _x: &[f64]) -> usize {
        0
    }
}

/// Stacked partial gradients at a common profile, `F(x) = (∇_i J_i(x))_i`.
pub fn pseudo_gradient(game: &dyn GameModel, x: &[f64]) -> Vec<f64> {
    (0..game.n_players()).map(|i| game.grad(i, x)).collect()
}

/// Sampled estimate of the cocoercivity constant of the pseudo-gradient.
///
/// Draws `samples` profile pairs uniformly from the action box and returns the
/// smallest ratio `(F(x)-F(y))ᵀ(x-y) / ‖F(x)-F(y)‖²` over informative pairs.
/// This is an upper bound of the true constant over the sampled set, not a
/// certificate.
pub fn estimate_sigma_f(game: &dyn GameModel, samples: usize, seed: u64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "at least 2 samples needed, got {samples}"
        )));
    }
    let bx = game.action_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<f64> = None;
    for _ in 0..samples {
        let x = bx.sample(&mut rng);
        let y = bx.sample(&mut rng);
        if let Some(r) = cocoercivity_ratio(game, &x, &y) {
            best = Some(best.map_or(r, |b| b.min(r)));
        }
    }
    best.map(|b| b.max(0.0)).ok_or(Error::NotEstimable)
}

/// `(F(x)-F(y))ᵀ(x-y) / ‖F(x)-F(y)‖²`, or `None` when `F(x) ≈ F(y)`.
pub fn cocoercivity_ratio(game: &dyn GameModel, x: &[f64], y: &[f64]) -> Option<f64> {
    let fx = pseudo_gradient(game, x);
    let fy = pseudo_gradient(game, y);
    let mut inner = 0.0;
    let mut norm2 = 0.0;
    for i in 0..x.len() {
        let df = fx[i] - fy[i];
        inner += df * (x[i] - y[i]);
        norm2 += df * df;
    }
    (norm2.sqrt() > 1e-12 && norm2.is_finite()).then(|| inner / norm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn box_validation() {
        assert!(ActionBox::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(ActionBox::new(vec![2.0], vec![1.0]).is_err());
        assert!(ActionBox::new(vec![0.0], vec![f64::INFINITY]).is_err());
        let b = ActionBox::uniform(2, 0.0, 10.0).unwrap();
        assert_eq!(b.project(0, 11.0), 10.0);
        assert_eq!(b.project(1, -3.0), 0.0);
        assert!(b.contains(&[0.0, 10.0]));
        assert!(!b.contains(&[0.0, 10.5]));
    }

    #[test]
    fn sigma_for_scaled_identity() {
        // F(x) = 2x, every ratio is (2Δ)ᵀΔ/‖2Δ‖² = 1/2
        let g = QuadraticGame::new(
            vec![2.0, 2.0],
            DMatrix::zeros(2, 2),
            vec![0.0, 0.0],
            ActionBox::uniform(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let s = estimate_sigma_f(&g, 200, 5).unwrap();
        assert!((s - 0.5).abs() < 1e-12, "{s}");
    }

    #[test]
    fn sigma_respects_spectral_bound() {
        // For symmetric M ≻ 0 every ratio is a Rayleigh quotient of M^{-1} in
        // disguise and lies in [1/λ_max, 1/λ_min]; in particular it exceeds
        // λ_min/λ_max².
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { m[(i, j)] });
        let a = vec![4.0, 3.0, 2.0];
        let g = QuadraticGame::new(a, b, vec![0.1, -0.2, 0.3], ActionBox::uniform(3, -1.0, 1.0).unwrap())
            .unwrap();
        let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let bound = eig[0] / (eig[2] * eig[2]);
        let s = estimate_sigma_f(&g, 500, 11).unwrap();
        assert!(s >= bound, "{s} < {bound}");
        assert!(s >= 1.0 / eig[2] - 1e-12);
    }

    #[test]
    fn sigma_skips_degenerate_pairs() {
        let g = QuadraticGame::new(
            vec![1.0],
            DMatrix::zeros(1, 1),
            vec![0.0],
            ActionBox::new(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!(cocoercivity_ratio(&g, &[0.5], &[0.5]).is_none());
        assert!(estimate_sigma_f(&g, 10, 1).is_ok());

        let flat = QuadraticGame::new(
            vec![1.0],
            DMatrix::zeros(1, 1),
            vec![0.0],
            ActionBox::new(vec![0.5], vec![0.5]).unwrap(),
        )
        .unwrap();
        assert!(matches!(estimate_sigma_f(&flat, 10, 1), Err(Error::NotEstimable)));
        assert!(estimate_sigma_f(&flat, 1, 1).is_err());
    }
}
