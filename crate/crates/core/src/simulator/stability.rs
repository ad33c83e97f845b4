//! Paired-seed comparison of an honest population against the same
//! population with one player replaced by a deviator.
//!
//! The deviator family is whatever policy the caller supplies; a report only
//! speaks for that family.

use rayon::prelude::*;
use serde::Serialize;

use super::{run_simulation, SimulationSpec};
use crate::agents::PolicySpec;
use crate::equilibrium::{compute_equilibrium, min_gap_delta0};
use crate::error::{Error, Result};
use crate::kl::{exploration_rate, kl_unchecked};

/// Sample mean with standard error and a normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub ci95: (f64, f64),
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, se, ci95: (mean - 1.96 * se, mean + 1.96 * se) }
    }
}

/// Stability constants of the honest profile at analysis gap `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub delta0: f64,
    pub z_star: f64,
    pub delta: f64,
    /// `δ₀ / z*`.
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

/// Evaluate `β = δ₀/z*` and the `ε`, `γ` terms at horizon `T` and gap `δ`
/// (defaults to `δ₀/4`; must lie in `(0, δ₀/2)`).
pub fn theory_constants(mu: &[f64], n_players: usize, horizon: u64, delta: Option<f64>) -> Result<TheoryConstants> {
    let delta0 = min_gap_delta0(mu, n_players)?;
    let profile = compute_equilibrium(mu, n_players)?;
    let delta = delta.unwrap_or(delta0 / 4.0);
    if !(delta > 0.0 && delta < delta0 / 2.0) {
        return Err(Error::Domain(format!("delta must lie in (0, {}), got {delta}", delta0 / 2.0)));
    }
    let z = profile.z_star;
    let n = n_players as f64;
    let k = mu.len() as f64;
    let f_t = exploration_rate(horizon);
    let tail = 10.0 * n.powi(3) * k * (13.0 * k + delta.powi(-2));
    let (mut eps, mut gam) = (0.0, 0.0);
    for (a, &m) in mu.iter().enumerate() {
        if profile.in_support(a) {
            continue;
        }
        let d = kl_unchecked((m + delta).min(1.0), (z - delta).clamp(0.0, 1.0));
        eps += (z - m) * f_t / d;
        gam += f_t / d;
    }
    Ok(TheoryConstants { delta0, z_star: z, delta, beta: delta0 / z, epsilon: eps + tail, gamma: gam + tail })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityInequality {
    /// Deviator's own loss.
    pub lhs: f64,
    /// `β·u − (ε + βγ)` with `u` the victim loss.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// 1-based deviating player.
    pub deviator: usize,
    pub deviator_policy: String,
    /// Set when the deviator sees more than its own observation channel.
    pub stronger_than_model_adversary: bool,
    pub seeds: usize,
    pub horizon: u64,
    pub baseline_reward: Vec<MeanSe>,
    pub deviation_reward: Vec<MeanSe>,
    /// Baseline minus deviation total reward, per player.
    pub loss: Vec<MeanSe>,
    /// 1-based honest player with the largest mean loss.
    pub victim: usize,
    pub victim_loss: MeanSe,
    pub deviator_loss: MeanSe,
    pub deviator_gain: MeanSe,
    pub constants: TheoryConstants,
    pub inequality: StabilityInequality,
    pub note: String,
}

/// Final per-player rewards of the baseline and the deviation run.
type RewardPair = (Vec<f64>, Vec<f64>);

/// Run `baseline` and the same spec with player `deviator` (0-based) switched
/// to `policy` on every seed, and compare total rewards.
pub fn stability_report(
    baseline: &SimulationSpec,
    deviator: usize,
    policy: PolicySpec,
    seeds: &[u64],
    delta: Option<f64>,
) -> Result<StabilityReport> {
    let n = baseline.n_players();
    if deviator >= n {
        return Err(Error::Config(format!("deviator {} outside 1..={n}", deviator + 1)));
    }
    if seeds.is_empty() {
        return Err(Error::Config("stability needs at least one seed".into()));
    }
    let constants = theory_constants(&baseline.means(), n, baseline.horizon, delta)?;
    let mut deviated = baseline.clone();
    deviated.policies[deviator] = policy;

    let pairs: Vec<RewardPair> = seeds
        .par_iter()
        .map(|&seed| {
            let a = run_simulation(baseline, seed)?;
            let b = run_simulation(&deviated, seed)?;
            Ok((a.last().cum_reward.clone(), b.last().cum_reward.clone()))
        })
        .collect::<Result<_>>()?;

    let column = |f: &dyn Fn(&RewardPair) -> f64| -> MeanSe {
        MeanSe::of(&pairs.iter().map(f).collect::<Vec<_>>())
    };
    let baseline_reward: Vec<MeanSe> = (0..n).map(|j| column(&|p| p.0[j])).collect();
    let deviation_reward: Vec<MeanSe> = (0..n).map(|j| column(&|p| p.1[j])).collect();
    let loss: Vec<MeanSe> = (0..n).map(|j| column(&|p| p.0[j] - p.1[j])).collect();
    let victim = (0..n)
        .filter(|&j| j != deviator)
        .max_by(|&a, &b| loss[a].mean.partial_cmp(&loss[b].mean).unwrap().then(b.cmp(&a)))
        .unwrap_or(deviator);
    let deviator_loss = loss[deviator];
    let deviator_gain = column(&|p| p.1[deviator] - p.0[deviator]);
    let victim_loss = loss[victim];

    let rhs = constants.beta * victim_loss.mean - (constants.epsilon + constants.beta * constants.gamma);
    Ok(StabilityReport {
        deviator: deviator + 1,
        deviator_policy: policy.label(),
        stronger_than_model_adversary: policy.is_stronger_than_model(),
        seeds: seeds.len(),
        horizon: baseline.horizon,
        baseline_reward,
        deviation_reward,
        loss,
        victim: victim + 1,
        victim_loss,
        deviator_loss,
        deviator_gain,
        constants,
        inequality: StabilityInequality { lhs: deviator_loss.mean, rhs, holds: deviator_loss.mean >= rhs },
        note: format!("evaluated against the single deviator policy {}; not a claim over all policies", policy.label()),
    })
}
