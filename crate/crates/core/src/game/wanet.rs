use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionBox, GameModel};
use crate::graph::CommGraph;
use crate::{Error, Result};

pub const WANET_USERS: usize = 15;
pub const WANET_LINKS: usize = 16;
const DEFAULT_CAPACITY: f64 = 10.0;
const DEFAULT_CHI: f64 = 10.0;
const DEFAULT_KAPPA: f64 = 1.0;
const DEFAULT_EPS_GUARD: f64 = 1e-6;
const MAX_FLOW: f64 = 10.0;

/// Flow-control game on a wireless ad-hoc network.
///
/// User `i` sends flow `x_i` along the links of its route `R_i` and pays
///
/// ```text
/// J_i(x) = Σ_{j ∈ R_i} κ / (C_j − Σ_{w : j ∈ R_w} x_w) − χ_i log(x_i + 1)
/// ```
///
/// Residual capacities are clamped below at `eps_guard`, which keeps cost and
/// gradient finite when an estimate overloads a link.
#[derive(Debug, Clone)]
pub struct WanetGame {
    capacities: Vec<f64>,
    routes: Vec<Vec<usize>>,
    link_users: Vec<Vec<usize>>,
    kappa: f64,
    chi: Vec<f64>,
    eps_guard: f64,
    action_box: ActionBox,
}

impl WanetGame {
    pub fn new(
        capacities: Vec<f64>,
        routes: Vec<Vec<usize>>,
        kappa: f64,
        chi: Vec<f64>,
        eps_guard: f64,
        action_box: ActionBox,
    ) -> Result<Self> {
        let n = routes.len();
        if chi.len() != n || action_box.dim() != n {
            return Err(Error::Dimension(format!(
                "{n} routes but {} utility weights and a {}-dimensional box",
                chi.len(),
                action_box.dim()
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        if !(eps_guard > 0.0 && eps_guard.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps_guard must be positive, got {eps_guard}")));
        }
        if let Some(j) = capacities.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!("capacity of link {j} must be positive")));
        }
        if let Some(i) = chi.iter().position(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!("chi[{i}] must be nonnegative")));
        }
        if let Some(i) = action_box.lower().iter().position(|&lo| lo <= -1.0) {
            return Err(Error::InvalidParameter(format!(
                "flow lower bound of user {i} must exceed -1 for the log utility"
            )));
        }
        let mut link_users = vec![Vec::new(); capacities.len()];
        let mut routes = routes;
        for (i, route) in routes.iter_mut().enumerate() {
            route.sort_unstable();
            route.dedup();
            if route.is_empty() {
                return Err(Error::InvalidParameter(format!("route of user {i} is empty")));
            }
            for &j in route.iter() {
                let users = link_users.get_mut(j).ok_or_else(|| {
                    Error::InvalidParameter(format!("user {i} routes over unknown link {j}"))
                })?;
                users.push(i);
            }
        }
        Ok(Self {
            capacities,
            routes,
            link_users,
            kappa,
            chi,
            eps_guard,
            action_box,
        })
    }

    /// Seeded routing: 1 to 3 links per user with every link used at least once.
    pub fn random_routes(n_users: usize, n_links: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
        if n_users == 0 || n_links == 0 || n_links > 3 * n_users {
            return Err(Error::InvalidParameter(format!(
                "cannot cover {n_links} links with {n_users} routes of at most 3 links"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut routes: Vec<Vec<usize>> = (0..n_users).map(|_| Vec::new()).collect();
        let mut sizes: Vec<usize> = (0..n_users).map(|_| rng.random_range(1..=3)).collect();

        // Raise route sizes until every link can be covered.
        while sizes.iter().sum::<usize>() < n_links {
            let open: Vec<usize> = (0..n_users).filter(|&i| sizes[i] < 3).collect();
            let &i = open.choose(&mut rng).expect("capacity checked above");
            sizes[i] += 1;
        }

        let mut links: Vec<usize> = (0..n_links).collect();
        links.shuffle(&mut rng);
        // Deal every link once to a user with room left.
        let mut order: Vec<usize> = (0..n_users).collect();
        order.shuffle(&mut rng);
        let mut slots = order.iter().flat_map(|&i| std::iter::repeat_n(i, sizes[i]));
        for &link in &links {
            let i = slots.next().expect("total size covers every link");
            routes[i].push(link);
        }
        for i in 0..n_users {
            while routes[i].len() < sizes[i].min(n_links) {
                let link = rng.random_range(0..n_links);
                if !routes[i].contains(&link) {
                    routes[i].push(link);
                }
            }
            routes[i].sort_unstable();
        }
        Ok(routes)
    }

    pub fn n_links(&self) -> usize {
        self.capacities.len()
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn eps_guard(&self) -> f64 {
        self.eps_guard
    }

    /// Users whose route contains link `j`.
    pub fn link_users(&self, j: usize) -> &[usize] {
        &self.link_users[j]
    }

    /// Unclamped residual capacity `C_j − Σ x_w` of link `j`.
    pub fn residual_capacity(&self, j: usize, x: &[f64]) -> f64 {
        self.capacities[j] - self.link_users[j].iter().map(|&w| x[w]).sum::<f64>()
    }

    fn guarded(&self, j: usize, x: &[f64]) -> f64 {
        self.residual_capacity(j, x).max(self.eps_guard)
    }
}

impl GameModel for WanetGame {
    fn n_players(&self) -> usize {
        self.routes.len()
    }

    fn action_box(&self) -> &ActionBox {
        &self.action_box
    }

    fn cost(&self, i: usize, x: &[f64]) -> f64 {
        let barrier: f64 = self.routes[i]
            .iter()
            .map(|&j| self.kappa / self.guarded(j, x))
            .sum();
        barrier - self.chi[i] * x[i].ln_1p()
    }

    fn grad(&self, i: usize, x: &[f64]) -> f64 {
        let barrier: f64 = self.routes[i]
            .iter()
            .map(|&j| {
                let r = self.guarded(j, x);
                self.kappa / (r * r)
            })
            .sum();
        barrier - self.chi[i] / (x[i] + 1.0)
    }

    fn guard_activations(&self, i: usize, x: &[f64]) -> usize {
        self.routes[i]
            .iter()
            .filter(|&&j| self.residual_capacity(j, x) < self.eps_guard)
            .count()
    }
}

/// The congestion game with 15 users, 16 links, unit `κ`, `χ_i = 10`,
/// `C_j = 10`, flows in `[0, 10]`, seeded routes, and a ring-plus-five-chords
/// communication graph drawn from the same seed.
pub fn default_wanet_instance(seed: u64) -> (WanetGame, CommGraph) {
    let routes = WanetGame::random_routes(WANET_USERS, WANET_LINKS, seed).expect("15 users cover 16 links");
    let game = WanetGame::new(
        vec![DEFAULT_CAPACITY; WANET_LINKS],
        routes,
        DEFAULT_KAPPA,
        vec![DEFAULT_CHI; WANET_USERS],
        DEFAULT_EPS_GUARD,
        ActionBox::uniform(WANET_USERS, 0.0, MAX_FLOW).expect("valid box"),
    )
    .expect("default parameters are valid");
    let graph = CommGraph::random_connected(WANET_USERS, 5, seed).expect("15 nodes have room for 5 chords");
    (game, graph)
}

/// Defaults used when a congestion-game config omits a field.
pub(crate) mod defaults {
    pub const CAPACITY: f64 = super::DEFAULT_CAPACITY;
    pub const CHI: f64 = super::DEFAULT_CHI;
    pub const KAPPA: f64 = super::DEFAULT_KAPPA;
    pub const EPS_GUARD: f64 = super::DEFAULT_EPS_GUARD;
    pub const MAX_FLOW: f64 = super::MAX_FLOW;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_link_user(chi: f64) -> WanetGame {
        WanetGame::new(
            vec![10.0, 10.0],
            vec![vec![0, 1]],
            1.0,
            vec![chi],
            1e-6,
            ActionBox::uniform(1, 0.0, 10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn cost_at_zero_flow() {
        assert!((two_link_user(10.0).cost(0, &[0.0]) - 0.2).abs() < 1e-15);
        assert!((two_link_user(0.0).cost(0, &[0.0]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_zero_flow() {
        assert!((two_link_user(10.0).grad(0, &[0.0]) + 9.98).abs() < 1e-12);
        assert!((two_link_user(0.0).grad(0, &[0.0]) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn guard_clamps_overloaded_links() {
        let g = two_link_user(10.0);
        assert_eq!(g.guard_activations(0, &[9.0]), 0);
        assert_eq!(g.guard_activations(0, &[10.0]), 2);
        let c = g.cost(0, &[10.0]);
        assert!(c.is_finite());
        assert!((c - (2.0 / 1e-6 - 10.0 * 11f64.ln())).abs() < 1e-6);
        assert!((g.grad(0, &[10.0]) - (2.0 / 1e-12 - 10.0 / 11.0)).abs() < 1.0);
    }

    #[test]
    fn default_instance_shape() {
        let (g, graph) = default_wanet_instance(3);
        let (g2, graph2) = default_wanet_instance(3);
        assert_eq!(g.routes(), g2.routes());
        assert_eq!(graph, graph2);
        assert_eq!(g.n_players(), 15);
        assert_eq!(g.n_links(), 16);
        assert!(g.capacities().iter().all(|&c| c == 10.0));
        assert!(g.chi().iter().all(|&c| c == 10.0));
        assert!(g.action_box().lower().iter().all(|&v| v == 0.0));
        assert!(g.action_box().upper().iter().all(|&v| v == 10.0));
        for j in 0..16 {
            assert!(!g.link_users(j).is_empty(), "link {j} unused");
        }
        for r in g.routes() {
            assert!((1..=3).contains(&r.len()));
        }
        assert!(graph.is_connected());
    }

    #[test]
    fn rejects_invalid_routes() {
        let bx = ActionBox::uniform(1, 0.0, 10.0).unwrap();
        assert!(WanetGame::new(vec![10.0], vec![vec![]], 1.0, vec![1.0], 1e-6, bx.clone()).is_err());
        assert!(WanetGame::new(vec![10.0], vec![vec![1]], 1.0, vec![1.0], 1e-6, bx.clone()).is_err());
        assert!(WanetGame::new(vec![10.0], vec![vec![0]], 0.0, vec![1.0], 1e-6, bx).is_err());
    }
}
