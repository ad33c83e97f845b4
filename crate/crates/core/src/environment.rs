//! Arms, player weights and the averaging allocation rule.
//!
//! Each round every arm draws a reward `X_k(t)`, every player draws a weight
//! `w_j(t)` from `Γ`, and players on the same arm split `X_k(t)` in proportion
//! to their weights. What a player gets back is limited to its own share, the
//! total of the arm it pulled and whether anyone else was there.

use rand::Rng;
use rand_distr::{Bernoulli, Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::equilibrium::check_distinct_averages;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Smallest candidate-average gap accepted from the instance generator.
pub const MIN_DELTA0: f64 = 1e-9;
const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmDistribution {
    Bernoulli { p: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ArmDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            ArmDistribution::Bernoulli { p } => p,
            ArmDistribution::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ArmDistribution::Bernoulli { p } => p > 0.0 && p <= 1.0,
            ArmDistribution::Beta { alpha, beta } => {
                alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid arm distribution {self:?}")))
        }
    }
}

/// Distribution `Γ` of the per-round player weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightModel {
    #[default]
    Uniform,
    Constant { value: f64 },
    Beta { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone)]
enum ArmSampler {
    Bernoulli(Bernoulli),
    Beta(Beta<f64>),
}

#[derive(Debug, Clone)]
enum WeightSampler {
    Uniform,
    Constant(f64),
    Beta(Beta<f64>),
}

/// Immutable description of the arms plus prepared samplers.
#[derive(Debug, Clone)]
pub struct Environment {
    arms: Vec<ArmDistribution>,
    means: Vec<f64>,
    samplers: Vec<ArmSampler>,
    weights: WeightSampler,
}

impl Environment {
    pub fn new(arms: Vec<ArmDistribution>, weights: WeightModel) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Config("an instance needs at least one arm".into()));
        }
        let mut samplers = Vec::with_capacity(arms.len());
        for arm in &arms {
            arm.validate()?;
            samplers.push(match *arm {
                ArmDistribution::Bernoulli { p } => ArmSampler::Bernoulli(
                    Bernoulli::new(p).map_err(|e| Error::Config(e.to_string()))?,
                ),
                ArmDistribution::Beta { alpha, beta } => ArmSampler::Beta(
                    Beta::new(alpha, beta).map_err(|e| Error::Config(e.to_string()))?,
                ),
            });
        }
        let weights = match weights {
            WeightModel::Uniform => WeightSampler::Uniform,
            WeightModel::Constant { value } if (0.0..=1.0).contains(&value) => WeightSampler::Constant(value),
            WeightModel::Constant { value } => {
                return Err(Error::Config(format!("constant weight {value} outside [0, 1]")))
            }
            WeightModel::Beta { alpha, beta } => {
                WeightSampler::Beta(Beta::new(alpha, beta).map_err(|e| Error::Config(e.to_string()))?)
            }
        };
        let means = arms.iter().map(ArmDistribution::mean).collect();
        Ok(Self { arms, means, samplers, weights })
    }

    pub fn k_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// One independent reward per arm.
    pub fn sample_rewards(&self, rng: &mut Stream, out: &mut [f64]) {
        for (x, s) in out.iter_mut().zip(&self.samplers) {
            *x = match s {
                ArmSampler::Bernoulli(d) => {
                    if d.sample(rng) {
                        1.0
                    } else {
                        0.0
                    }
                }
                ArmSampler::Beta(d) => d.sample(rng).clamp(0.0, 1.0),
            };
        }
    }

    pub fn sample_weights(&self, rng: &mut Stream, out: &mut [f64]) {
        for w in out.iter_mut() {
            *w = match &self.weights {
                WeightSampler::Uniform => rng.random::<f64>(),
                WeightSampler::Constant(v) => *v,
                WeightSampler::Beta(d) => d.sample(rng),
            };
        }
    }

    /// Sample one round and resolve the given choices into `out`.
    pub fn step(&self, choices: &[usize], rewards: &mut Stream, weights: &mut Stream, out: &mut RoundOutcome) {
        out.reset(self.k_arms(), choices.len());
        self.sample_rewards(rewards, &mut out.x);
        self.sample_weights(weights, &mut out.weights);
        out.resolve(choices);
    }
}

/// What one player learns about a round.
///
/// This is the whole information channel available to honest policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub arm: usize,
    pub own_share: f64,
    pub arm_total: f64,
    pub collision: bool,
}

/// Realized rewards, occupancy and shares of one round.
#[derive(Debug, Clone, Default)]
pub struct RoundOutcome {
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
    pub choices: Vec<usize>,
    pub occupancy: Vec<usize>,
    pub shares: Vec<f64>,
    weight_sums: Vec<f64>,
}

impl RoundOutcome {
    fn reset(&mut self, k: usize, n: usize) {
        self.x.resize(k, 0.0);
        self.weights.resize(n, 0.0);
        self.shares.resize(n, 0.0);
        self.occupancy.clear();
        self.occupancy.resize(k, 0);
        self.weight_sums.clear();
        self.weight_sums.resize(k, 0.0);
    }

    fn resolve(&mut self, choices: &[usize]) {
        self.choices.clear();
        self.choices.extend_from_slice(choices);
        for (&a, &w) in choices.iter().zip(&self.weights) {
            self.occupancy[a] += 1;
            self.weight_sums[a] += w;
        }
        for (j, &a) in choices.iter().enumerate() {
            self.shares[j] = split(self.x[a], self.weights[j], self.weight_sums[a], self.occupancy[a]);
        }
    }

    /// Build an outcome from explicit rewards and weights.
    pub fn from_parts(choices: &[usize], x: &[f64], weights: &[f64]) -> Self {
        let mut out = RoundOutcome::default();
        out.reset(x.len(), choices.len());
        out.x.copy_from_slice(x);
        out.weights.copy_from_slice(weights);
        out.resolve(choices);
        out
    }

    pub fn collision(&self, player: usize) -> bool {
        self.occupancy[self.choices[player]] > 1
    }

    pub fn observe(&self, player: usize) -> Observation {
        let arm = self.choices[player];
        Observation {
            arm,
            own_share: self.shares[player],
            arm_total: self.x[arm],
            collision: self.occupancy[arm] > 1,
        }
    }
}

#[inline]
fn split(x: f64, w: f64, group_weight: f64, group_size: usize) -> f64 {
    if group_size == 1 {
        x
    } else if group_weight > 0.0 {
        x * w / group_weight
    } else {
        x / group_size as f64
    }
}

/// Per-player shares of the realized rewards under weighted averaging.
pub fn allocate(choices: &[usize], x: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(choices.len(), weights.len(), "one weight per player");
    RoundOutcome::from_parts(choices, x, weights).shares
}

/// Which family random instances are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceFamily {
    /// Shape parameters uniform on `(0, max_shape]`.
    Beta { max_shape: f64 },
    /// Success probability uniform on `(0, 1]`.
    Bernoulli,
}

impl Default for InstanceFamily {
    fn default() -> Self {
        InstanceFamily::Beta { max_shape: 5.0 }
    }
}

/// Draw `k` arms from `family`, resampling until the candidate averages are
/// separated by at least [`MIN_DELTA0`] for `n_players`.
pub fn generate_instance(
    family: InstanceFamily,
    k: usize,
    n_players: usize,
    rng: &mut Stream,
) -> Result<Vec<ArmDistribution>> {
    if k == 0 || n_players == 0 {
        return Err(Error::Config("generator needs k >= 1 and n >= 1".into()));
    }
    // 1 - u lies in (0, 1]
    let positive = |rng: &mut Stream| 1.0 - rng.random::<f64>();
    for _ in 0..MAX_RESAMPLES {
        let arms: Vec<ArmDistribution> = (0..k)
            .map(|_| match family {
                InstanceFamily::Beta { max_shape } => ArmDistribution::Beta {
                    alpha: max_shape * positive(rng),
                    beta: max_shape * positive(rng),
                },
                InstanceFamily::Bernoulli => ArmDistribution::Bernoulli { p: positive(rng) },
            })
            .collect();
        let means: Vec<f64> = arms.iter().map(ArmDistribution::mean).collect();
        if matches!(check_distinct_averages(&means, n_players), Ok(d) if d >= MIN_DELTA0) {
            return Ok(arms);
        }
    }
    Err(Error::Config("could not draw an instance with distinct averages".into()))
}
