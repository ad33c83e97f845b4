//! Explore-then-commit baselines.

use rand::Rng;

use super::{slot, ArmStats, Policy};
use crate::environment::Observation;
use crate::equilibrium::compute_equilibrium;
use crate::rng::Stream;

/// `⌈α ln T⌉` uniform exploration rounds.
pub fn exploration_rounds(alpha: f64, horizon: u64) -> u64 {
    (alpha * (horizon.max(1) as f64).ln()).ceil().max(0.0) as u64
}

/// Uniform exploration, then the estimated equilibrium played through
/// rank-staggered slots until the horizon.
pub struct ExploreThenCommit {
    rank: usize,
    n: usize,
    k: usize,
    explore: u64,
    stats: ArmStats,
    committed: Option<Vec<usize>>,
    rng: Stream,
}

impl ExploreThenCommit {
    pub fn new(rank: usize, n_players: usize, k_arms: usize, horizon: u64, alpha: f64, rng: Stream) -> Self {
        Self {
            rank,
            n: n_players,
            k: k_arms,
            explore: exploration_rounds(alpha, horizon),
            stats: ArmStats::new(k_arms),
            committed: None,
            rng,
        }
    }

    pub fn exploration_rounds(&self) -> u64 {
        self.explore
    }

    pub fn committed(&self) -> Option<&[usize]> {
        self.committed.as_deref()
    }
}

impl Policy for ExploreThenCommit {
    fn select(&mut self, t: u64) -> usize {
        if t <= self.explore {
            return self.rng.random_range(0..self.k);
        }
        let n = self.n;
        let stats = &self.stats;
        let list = self.committed.get_or_insert_with(|| {
            compute_equilibrium(&stats.means(), n).expect("valid estimates").block_list()
        });
        list[slot(t, self.rank, n)]
    }

    fn update(&mut self, _t: u64, obs: &Observation) {
        if self.committed.is_none() {
            self.stats.record(obs.arm, obs.arm_total);
        }
    }
}

/// Welfare-maximizing baseline: after exploration, the top `min(N, K)` arms
/// get one player each by rank; any remaining players follow the estimated
/// equilibrium list.
pub struct TotalReward {
    rank: usize,
    n: usize,
    k: usize,
    explore: u64,
    stats: ArmStats,
    plan: Option<Commitment>,
    rng: Stream,
}

#[derive(Debug, Clone, PartialEq)]
enum Commitment {
    Arm(usize),
    Slots(Vec<usize>),
}

impl TotalReward {
    pub fn new(rank: usize, n_players: usize, k_arms: usize, horizon: u64, alpha: f64, rng: Stream) -> Self {
        Self {
            rank,
            n: n_players,
            k: k_arms,
            explore: exploration_rounds(alpha, horizon),
            stats: ArmStats::new(k_arms),
            plan: None,
            rng,
        }
    }

    fn commit(&self) -> Commitment {
        let order = self.stats.ranking();
        if self.rank <= self.k {
            Commitment::Arm(order[self.rank - 1])
        } else {
            let profile = compute_equilibrium(&self.stats.means(), self.n).expect("valid estimates");
            Commitment::Slots(profile.block_list())
        }
    }
}

impl Policy for TotalReward {
    fn select(&mut self, t: u64) -> usize {
        if t <= self.explore {
            return self.rng.random_range(0..self.k);
        }
        if self.plan.is_none() {
            self.plan = Some(self.commit());
        }
        match self.plan.as_ref().unwrap() {
            Commitment::Arm(a) => *a,
            Commitment::Slots(list) => list[slot(t, self.rank, self.n)],
        }
    }

    fn update(&mut self, _t: u64, obs: &Observation) {
        if self.plan.is_none() {
            self.stats.record(obs.arm, obs.arm_total);
        }
    }
}
