//! Barrier-synchronous round loop.
//!
//! Each round every agent selects an arm without seeing the others' choices,
//! the environment draws rewards and weights, shares are allocated, and each
//! agent is told only its own [`Observation`](crate::environment::Observation).
//! The loop is single-threaded and fully determined by `(spec, seed)`.

pub mod metrics;
mod stability;

pub use metrics::{noneq_indicator, regret_increment, regret_prime_increment};
pub use stability::{stability_report, theory_constants, MeanSe, StabilityInequality, StabilityReport, TheoryConstants};

use serde::Serialize;

use crate::agents::{build_policy, AgentReport, AgentSetup, Hyper, Policy, PolicySpec};
use crate::environment::{ArmDistribution, Environment, RoundOutcome, WeightModel};
use crate::equilibrium::{compute_equilibrium, EquilibriumProfile};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use metrics::RegretPricer;

/// A fully resolved run: concrete arms, one policy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub arms: Vec<ArmDistribution>,
    pub weights: WeightModel,
    pub horizon: u64,
    pub policies: Vec<PolicySpec>,
    pub hyper: Hyper,
    /// Keep a full per-round record every this many rounds (checkpoints are
    /// always kept).
    pub record_every: u64,
    /// Rounds to snapshot in addition to powers of two and `T`.
    pub extra_checkpoints: Vec<u64>,
}

impl SimulationSpec {
    pub fn n_players(&self) -> usize {
        self.policies.len()
    }

    pub fn k_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmDistribution::mean).collect()
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        checkpoints(self.horizon, &self.extra_checkpoints)
    }
}

/// Powers of two up to `T`, plus `T` and any extra rounds, ascending.
pub fn checkpoints(horizon: u64, extra: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&t| t.checked_mul(2))
        .take_while(|&t| t <= horizon)
        .collect();
    out.push(horizon);
    out.extend(extra.iter().copied().filter(|&t| t >= 1 && t <= horizon));
    out.sort_unstable();
    out.dedup();
    out
}

/// Cumulative counters at one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cum_reward: Vec<f64>,
    pub cum_regret: Vec<f64>,
    pub cum_regret_prime: Vec<f64>,
    pub cum_noneq: u64,
}

/// One kept round with its cumulative counters.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub choices: Vec<usize>,
    pub occupancy: Vec<usize>,
    pub shares: Vec<f64>,
    pub totals: Checkpoint,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub seed: u64,
    pub horizon: u64,
    pub means: Vec<f64>,
    pub equilibrium: EquilibriumProfile,
    pub policies: Vec<PolicySpec>,
    pub records: Vec<RoundRecord>,
    pub checkpoints: Vec<Checkpoint>,
    /// `Σ_t Σ_{k occupied} X_k(t)`: all reward handed out.
    pub distributed: f64,
    pub agents: Vec<AgentReport>,
}

impl Trace {
    pub fn n_players(&self) -> usize {
        self.policies.len()
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("horizon >= 1")
    }

    pub fn checkpoint(&self, t: u64) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.t == t)
    }

    /// Agent-averaged cumulative regret at a checkpoint.
    pub fn mean_regret_at(&self, t: u64) -> Option<f64> {
        self.checkpoint(t).map(|c| c.cum_regret.iter().sum::<f64>() / c.cum_regret.len() as f64)
    }
}

pub fn validate_spec(spec: &SimulationSpec) -> Result<()> {
    if spec.arms.is_empty() {
        return Err(Error::Config("need at least one arm".into()));
    }
    if spec.policies.is_empty() {
        return Err(Error::Config("need at least one player".into()));
    }
    if spec.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if spec.record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    Ok(())
}

pub fn run_simulation(spec: &SimulationSpec, seed: u64) -> Result<Trace> {
    validate_spec(spec)?;
    let env = Environment::new(spec.arms.clone(), spec.weights)?;
    let n = spec.n_players();
    let k = spec.k_arms();
    let mu = env.means().to_vec();
    let equilibrium = compute_equilibrium(&mu, n)?;

    let mut agents: Vec<Box<dyn Policy>> = spec
        .policies
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let setup = AgentSetup { player: j, n_players: n, k_arms: k, horizon: spec.horizon, hyper: spec.hyper };
            build_policy(p, &setup, stream(seed, Purpose::Agent, j as u64))
        })
        .collect::<Result<_>>()?;

    let mut reward_rng = stream(seed, Purpose::Rewards, 0);
    let mut weight_rng = stream(seed, Purpose::Weights, 0);
    let marks = spec.checkpoints();
    let mut next_mark = 0;

    let mut outcome = RoundOutcome::default();
    let mut pricer = RegretPricer::new(k);
    let mut best = vec![0.0; n];
    let mut choices = vec![0usize; n];
    let mut prev = vec![0usize; n];
    let mut cum_reward = vec![0.0; n];
    let mut cum_regret = vec![0.0; n];
    let mut cum_regret_prime = vec![0.0; n];
    let mut cum_noneq = 0u64;
    let mut distributed = 0.0;
    let mut records = Vec::new();
    let mut checkpoints_out = Vec::with_capacity(marks.len());

    for t in 1..=spec.horizon {
        if t > 1 {
            for agent in agents.iter_mut() {
                if let Some(target) = agent.follows() {
                    agent.see_target(prev[target]);
                }
            }
        }
        for (c, agent) in choices.iter_mut().zip(agents.iter_mut()) {
            *c = agent.select(t);
            debug_assert!(*c < k);
        }

        env.step(&choices, &mut reward_rng, &mut weight_rng, &mut outcome);

        pricer.price(&mu, &outcome.occupancy, &choices, &mut best);
        for j in 0..n {
            let share = outcome.shares[j];
            cum_reward[j] += share;
            cum_regret[j] += best[j] - share;
            cum_regret_prime[j] += equilibrium.r_bar - share;
        }
        if noneq_indicator(&outcome.occupancy, &equilibrium.m_star) {
            cum_noneq += 1;
        }
        distributed += outcome
            .x
            .iter()
            .zip(&outcome.occupancy)
            .filter(|(_, &c)| c > 0)
            .map(|(x, _)| x)
            .sum::<f64>();

        for (j, agent) in agents.iter_mut().enumerate() {
            agent.update(t, &outcome.observe(j));
        }

        let is_mark = next_mark < marks.len() && marks[next_mark] == t;
        if is_mark || t % spec.record_every == 0 {
            let totals = Checkpoint {
                t,
                cum_reward: cum_reward.clone(),
                cum_regret: cum_regret.clone(),
                cum_regret_prime: cum_regret_prime.clone(),
                cum_noneq,
            };
            if is_mark {
                checkpoints_out.push(totals.clone());
                next_mark += 1;
            }
            records.push(RoundRecord {
                choices: choices.clone(),
                occupancy: outcome.occupancy.clone(),
                shares: outcome.shares.clone(),
                totals,
            });
        }
        std::mem::swap(&mut prev, &mut choices);
    }

    Ok(Trace {
        seed,
        horizon: spec.horizon,
        means: mu,
        equilibrium,
        policies: spec.policies.clone(),
        records,
        checkpoints: checkpoints_out,
        distributed,
        agents: agents.iter().map(|a| a.report()).collect(),
    })
}
