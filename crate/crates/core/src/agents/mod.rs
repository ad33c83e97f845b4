//! Player policies.
//!
//! Every policy sees the world only through [`Observation`]: its own share,
//! the total reward of the arm it pulled and a collision flag. The one
//! exception is [`FollowerJammer`], which the stability harness additionally
//! feeds with its target's previous arm.
//!
//! Rounds are 1-based (`t = 1..=T`), ranks are 1-based (`j = 1..=N`) and arms
//! are 0-based indices everywhere in this module.

mod baselines;
mod deviators;
mod musical_chairs;
mod smaa;

pub use baselines::{exploration_rounds, ExploreThenCommit, TotalReward};
pub use deviators::{AlwaysBestArm, FixedArm, FollowerJammer};
pub use musical_chairs::{estimate_players, musical_chairs_t0, MusicalChairs, MusicalChairsOutcome, SmaaRelaxed};
pub use smaa::{Smaa, SmaaSnapshot};

use serde::{Deserialize, Serialize};

use crate::environment::Observation;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Hyperparameters shared by the learning policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    /// Scale on the KL-UCB exploration budget.
    pub beta: f64,
    /// Explore-then-commit horizon factor: `⌈α ln T⌉` exploration rounds.
    pub alpha: f64,
    /// Scale on the Musical Chairs estimation phase.
    pub eta: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self { beta: 0.1, alpha: 500.0, eta: 0.1 }
    }
}

/// Which policy a player runs. Arm and player numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Smaa,
    SmaaRelaxed,
    ExploreThenCommit,
    TotalReward,
    AlwaysBestArm,
    FollowerJammer { target: usize },
    FixedArm { arm: usize },
}

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::Smaa => "smaa".into(),
            PolicySpec::SmaaRelaxed => "smaa_relaxed".into(),
            PolicySpec::ExploreThenCommit => "explore_then_commit".into(),
            PolicySpec::TotalReward => "total_reward".into(),
            PolicySpec::AlwaysBestArm => "always_best_arm".into(),
            PolicySpec::FollowerJammer { target } => format!("follower_jammer({target})"),
            PolicySpec::FixedArm { arm } => format!("fixed_arm({arm})"),
        }
    }

    /// Whether this policy needs information beyond its own observation.
    pub fn is_stronger_than_model(&self) -> bool {
        matches!(self, PolicySpec::FollowerJammer { .. })
    }
}

/// Extra state some policies expose for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AgentReport {
    pub musical_chairs: Option<MusicalChairsOutcome>,
}

pub trait Policy: Send {
    fn select(&mut self, t: u64) -> usize;
    fn update(&mut self, t: u64, obs: &Observation);

    /// 0-based player whose previous arm this policy wants to see.
    fn follows(&self) -> Option<usize> {
        None
    }
    fn see_target(&mut self, _arm: usize) {}

    fn report(&self) -> AgentReport {
        AgentReport::default()
    }
}

/// Everything needed to instantiate a policy for one player.
#[derive(Debug, Clone)]
pub struct AgentSetup {
    /// 0-based player index; the rank handed to rank-aware policies is `player + 1`.
    pub player: usize,
    pub n_players: usize,
    pub k_arms: usize,
    pub horizon: u64,
    pub hyper: Hyper,
}

pub fn build_policy(spec: PolicySpec, setup: &AgentSetup, rng: Stream) -> Result<Box<dyn Policy>> {
    let rank = setup.player + 1;
    let (n, k, horizon, hyper) = (setup.n_players, setup.k_arms, setup.horizon, setup.hyper);
    Ok(match spec {
        PolicySpec::Smaa => Box::new(Smaa::new(rank, n, k, hyper.beta, rng)),
        PolicySpec::SmaaRelaxed => {
            if n > k {
                return Err(Error::Config(format!(
                    "smaa_relaxed needs at most as many players as arms (N = {n}, K = {k})"
                )));
            }
            Box::new(SmaaRelaxed::new(k, horizon, hyper, rng))
        }
        PolicySpec::ExploreThenCommit => Box::new(ExploreThenCommit::new(rank, n, k, horizon, hyper.alpha, rng)),
        PolicySpec::TotalReward => Box::new(TotalReward::new(rank, n, k, horizon, hyper.alpha, rng)),
        PolicySpec::AlwaysBestArm => Box::new(AlwaysBestArm::new(rank, k)),
        PolicySpec::FollowerJammer { target } => {
            if target == 0 || target > n || target == rank {
                return Err(Error::Config(format!("follower_jammer target {target} is not another player")));
            }
            Box::new(FollowerJammer::new(target - 1))
        }
        PolicySpec::FixedArm { arm } => {
            if arm == 0 || arm > k {
                return Err(Error::Config(format!("fixed_arm {arm} outside 1..={k}")));
            }
            Box::new(FixedArm::new(arm - 1))
        }
    })
}

/// Running pull counts and sums of observed arm totals.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ArmStats {
    pub pulls: Vec<u64>,
    pub sums: Vec<f64>,
}

impl ArmStats {
    pub fn new(k: usize) -> Self {
        Self { pulls: vec![0; k], sums: vec![0.0; k] }
    }

    pub fn record(&mut self, arm: usize, total: f64) {
        self.pulls[arm] += 1;
        self.sums[arm] += total;
    }

    pub fn mean(&self, arm: usize) -> f64 {
        if self.pulls[arm] == 0 {
            0.0
        } else {
            self.sums[arm] / self.pulls[arm] as f64
        }
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.pulls.len()).map(|a| self.mean(a)).collect()
    }

    /// Arms by empirical mean, best first; ties to the smaller index.
    pub fn ranking(&self) -> Vec<usize> {
        let means = self.means();
        let mut order: Vec<usize> = (0..means.len()).collect();
        order.sort_by(|&a, &b| means[b].partial_cmp(&means[a]).unwrap().then(a.cmp(&b)));
        order
    }
}

/// Rank-staggered slot `(t + j) mod N` into an `N`-entry block list (0-based).
#[inline]
pub(crate) fn slot(t: u64, rank: usize, n: usize) -> usize {
    ((t + rank as u64) % n as u64) as usize
}
