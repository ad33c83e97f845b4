//! Selfish learner for averaging allocation with known player count and rank.
//!
//! After a rank-staggered initialization of `K' = N⌈K/N⌉` rounds, play is
//! organised in blocks of `N` rounds. At every block boundary the agent
//! freezes its statistics, solves the equilibrium of its estimated means and
//! lays the equilibrium arms out in a block list. Within the block, rank `j`
//! plays entry `(t + j) mod N` of that list; the agent holding the last entry
//! may instead probe an arm outside the estimated equilibrium whose KL-UCB
//! index reaches the weakest equilibrium average.

use rand::Rng;

use super::{slot, ArmStats, Policy};
use crate::environment::Observation;
use crate::equilibrium::{compute_equilibrium, EquilibriumProfile};
use crate::kl::{exploration_rate, index_reaches};
use crate::rng::Stream;

/// Frozen per-block view of the agent's statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SmaaSnapshot {
    /// Round whose statistics were frozen.
    pub taken_at: u64,
    pub pulls: Vec<u64>,
    pub means: Vec<f64>,
    pub profile: EquilibriumProfile,
    pub block_list: Vec<usize>,
    /// Candidate arms for the exploration slot, ascending.
    pub explore_set: Vec<usize>,
}

impl SmaaSnapshot {
    fn build(stats: &ArmStats, taken_at: u64, n: usize, beta: f64) -> Self {
        let means = stats.means();
        let budget = beta * exploration_rate(taken_at);
        let profile = compute_equilibrium(&means, n).expect("means are valid and n >= 1");
        let block_list = profile.block_list();
        let weakest = *block_list.last().expect("non-empty block list");
        let floor = profile.r_star[weakest];
        let explore_set = (0..means.len())
            .filter(|&a| {
                let tau = stats.pulls[a];
                !profile.in_support(a) && (tau == 0 || index_reaches(means[a], tau, budget, floor))
            })
            .collect();
        Self { taken_at, pulls: stats.pulls.clone(), means, profile, block_list, explore_set }
    }
}

pub struct Smaa {
    rank: usize,
    n: usize,
    k: usize,
    beta: f64,
    init_rounds: u64,
    stats: ArmStats,
    snapshot: Option<SmaaSnapshot>,
    rng: Stream,
}

impl Smaa {
    pub fn new(rank: usize, n_players: usize, k_arms: usize, beta: f64, rng: Stream) -> Self {
        assert!(rank >= 1 && rank <= n_players, "rank must lie in 1..=N");
        assert!(k_arms >= 1);
        let init_rounds = (n_players * k_arms.div_ceil(n_players)) as u64;
        Self { rank, n: n_players, k: k_arms, beta, init_rounds, stats: ArmStats::new(k_arms), snapshot: None, rng }
    }

    /// Continue from existing statistics at round `start`: no initialization
    /// phase, and the first block list is built from `stats` right away.
    pub(crate) fn resume(rank: usize, n_players: usize, beta: f64, stats: ArmStats, start: u64, rng: Stream) -> Self {
        assert!(rank >= 1 && rank <= n_players, "rank must lie in 1..=N");
        let k = stats.pulls.len();
        let snapshot = Some(SmaaSnapshot::build(&stats, start.max(1), n_players, beta));
        Self { rank, n: n_players, k, beta, init_rounds: start, stats, snapshot, rng }
    }

    /// Length `K'` of the initialization phase.
    pub fn init_rounds(&self) -> u64 {
        self.init_rounds
    }

    pub fn snapshot(&self) -> Option<&SmaaSnapshot> {
        self.snapshot.as_ref()
    }

    pub fn pulls(&self) -> &[u64] {
        &self.stats.pulls
    }

    pub fn means(&self) -> Vec<f64> {
        self.stats.means()
    }
}

impl Policy for Smaa {
    fn select(&mut self, t: u64) -> usize {
        if t <= self.init_rounds {
            return ((t + self.rank as u64) % self.k as u64) as usize;
        }
        let snap = self.snapshot.as_ref().expect("snapshot is taken at the end of initialization");
        let i = slot(t, self.rank, self.n);
        let arm = snap.block_list[i];
        if i + 1 == self.n && !snap.explore_set.is_empty() {
            if self.rng.random_bool(0.5) {
                arm
            } else {
                snap.explore_set[self.rng.random_range(0..snap.explore_set.len())]
            }
        } else {
            arm
        }
    }

    fn update(&mut self, t: u64, obs: &Observation) {
        self.stats.record(obs.arm, obs.arm_total);
        if t >= self.init_rounds && t.is_multiple_of(self.n as u64) {
            self.snapshot = Some(SmaaSnapshot::build(&self.stats, t, self.n, self.beta));
        }
    }
}
