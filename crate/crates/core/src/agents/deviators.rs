//! Strategic deviators used to probe the stability of honest populations.

use super::{ArmStats, Policy};
use crate::environment::Observation;

/// Greedy on its own empirical means after one pass over the arms.
pub struct AlwaysBestArm {
    rank: usize,
    k: usize,
    stats: ArmStats,
}

impl AlwaysBestArm {
    pub fn new(rank: usize, k_arms: usize) -> Self {
        Self { rank, k: k_arms, stats: ArmStats::new(k_arms) }
    }
}

impl Policy for AlwaysBestArm {
    fn select(&mut self, t: u64) -> usize {
        if t <= self.k as u64 {
            ((t + self.rank as u64) % self.k as u64) as usize
        } else {
            self.stats.ranking()[0]
        }
    }

    fn update(&mut self, _t: u64, obs: &Observation) {
        self.stats.record(obs.arm, obs.arm_total);
    }
}

/// Replays whatever its target pulled in the previous round.
///
/// Needs the harness to reveal the target's arm, which no honest player
/// could observe.
pub struct FollowerJammer {
    target: usize,
    last: Option<usize>,
}

impl FollowerJammer {
    pub fn new(target: usize) -> Self {
        Self { target, last: None }
    }
}

impl Policy for FollowerJammer {
    fn select(&mut self, _t: u64) -> usize {
        self.last.unwrap_or(0)
    }

    fn update(&mut self, _t: u64, _obs: &Observation) {}

    fn follows(&self) -> Option<usize> {
        Some(self.target)
    }

    fn see_target(&mut self, arm: usize) {
        self.last = Some(arm);
    }
}

pub struct FixedArm(usize);

impl FixedArm {
    pub fn new(arm: usize) -> Self {
        Self(arm)
    }
}

impl Policy for FixedArm {
    fn select(&mut self, _t: u64) -> usize {
        self.0
    }

    fn update(&mut self, _t: u64, _obs: &Observation) {}
}
