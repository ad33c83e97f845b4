//! Experiment configuration: one JSON document with `instance`, `weights`,
//! `players`, `hyper`, `run`, `deviation` and `output` sections.
//!
//! Section-local checks run while parsing, so their errors carry the line and
//! column of the offending section. Checks that need two sections point at
//! the line where the relevant key first appears.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{Hyper, PolicySpec};
use crate::environment::{generate_instance, ArmDistribution, Environment, InstanceFamily, WeightModel};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::simulator::SimulationSpec;

pub const DEFAULT_RECORD_EVERY: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub weights: WeightModel,
    pub players: Players,
    #[serde(default)]
    pub hyper: Hyper,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<Deviation>,
    #[serde(default)]
    pub output: Output,
}

/// Either explicit arms or a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    Arms(Vec<ArmDistribution>),
    Generate(Generator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Beta,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawGenerator")]
pub struct Generator {
    pub k: usize,
    pub family: Family,
    /// Beta shapes are drawn uniformly from `(0, max_shape]`.
    pub max_shape: f64,
    /// Seed of the instance draw when the instance is shared by all runs.
    pub seed: u64,
    /// Draw a fresh instance for every run seed instead.
    pub resample_per_seed: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    k: usize,
    #[serde(default = "default_family")]
    family: Family,
    #[serde(default = "default_max_shape")]
    max_shape: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    resample_per_seed: bool,
}

fn default_family() -> Family {
    Family::Beta
}

fn default_max_shape() -> f64 {
    5.0
}

impl TryFrom<RawGenerator> for Generator {
    type Error = String;

    fn try_from(r: RawGenerator) -> std::result::Result<Self, String> {
        if r.k == 0 {
            return Err("generate.k must be at least 1".into());
        }
        if !(r.max_shape.is_finite() && r.max_shape > 0.0) {
            return Err(format!("generate.max_shape must be positive, got {}", r.max_shape));
        }
        Ok(Self { k: r.k, family: r.family, max_shape: r.max_shape, seed: r.seed, resample_per_seed: r.resample_per_seed })
    }
}

impl Generator {
    pub fn family(&self) -> InstanceFamily {
        match self.family {
            Family::Beta => InstanceFamily::Beta { max_shape: self.max_shape },
            Family::Bernoulli => InstanceFamily::Bernoulli,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawPlayers")]
pub struct Players {
    pub n: usize,
    /// Policy of every player without an override.
    pub policy: PolicySpec,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    /// 1-based player.
    pub player: usize,
    pub policy: PolicySpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayers {
    n: usize,
    #[serde(default = "default_policy")]
    policy: PolicySpec,
    #[serde(default)]
    overrides: Vec<Override>,
}

fn default_policy() -> PolicySpec {
    PolicySpec::Smaa
}

impl TryFrom<RawPlayers> for Players {
    type Error = String;

    fn try_from(r: RawPlayers) -> std::result::Result<Self, String> {
        if r.n == 0 {
            return Err("players.n must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for o in &r.overrides {
            if o.player == 0 || o.player > r.n {
                return Err(format!("override player {} outside 1..={}", o.player, r.n));
            }
            if !seen.insert(o.player) {
                return Err(format!("player {} overridden twice", o.player));
            }
        }
        Ok(Self { n: r.n, policy: r.policy, overrides: r.overrides })
    }
}

impl Players {
    pub fn policies(&self) -> Vec<PolicySpec> {
        let mut out = vec![self.policy; self.n];
        for o in &self.overrides {
            out[o.player - 1] = o.policy;
        }
        out
    }
}

/// An explicit list or `base, base+1, …, base+count−1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { base, count } => (0..*count).map(|i| base + i).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawRun")]
pub struct RunSection {
    pub horizon: u64,
    pub seeds: Seeds,
    pub record_every: u64,
    /// Extra checkpoint rounds beyond powers of two and the horizon.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    horizon: u64,
    seeds: Seeds,
    #[serde(default = "default_record_every")]
    record_every: u64,
    #[serde(default)]
    checkpoints: Vec<u64>,
}

fn default_record_every() -> u64 {
    DEFAULT_RECORD_EVERY
}

impl TryFrom<RawRun> for RunSection {
    type Error = String;

    fn try_from(r: RawRun) -> std::result::Result<Self, String> {
        if r.horizon == 0 {
            return Err("run.horizon must be at least 1".into());
        }
        if r.record_every == 0 {
            return Err("run.record_every must be at least 1".into());
        }
        let seeds = r.seeds.expand();
        if seeds.is_empty() {
            return Err("run.seeds is empty".into());
        }
        let distinct: BTreeSet<u64> = seeds.iter().copied().collect();
        if distinct.len() != seeds.len() {
            return Err("run.seeds contains duplicates".into());
        }
        if let Some(&c) = r.checkpoints.iter().find(|&&c| c == 0 || c > r.horizon) {
            return Err(format!("checkpoint {c} outside 1..={}", r.horizon));
        }
        Ok(Self { horizon: r.horizon, seeds: r.seeds, record_every: r.record_every, checkpoints: r.checkpoints })
    }
}

/// One player switched to another policy for the stability comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deviation {
    /// 1-based player.
    pub player: usize,
    pub policy: PolicySpec,
    /// Analysis gap; defaults to a quarter of the instance's minimum gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parse and validate; `origin` names the source in error messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("{origin}:{}:{}: {}", e.line(), e.column(), strip_position(&e))))?;
        cfg.cross_check().map_err(|(key, msg)| {
            let line = locate_key(text, key).unwrap_or(1);
            Error::Config(format!("{origin}:{line}: {msg}"))
        })?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn cross_check(&self) -> std::result::Result<(), (&'static str, String)> {
        let n = self.players.n;
        let k = match &self.instance {
            InstanceSpec::Arms(arms) => {
                if arms.is_empty() {
                    return Err(("arms", "instance.arms is empty".into()));
                }
                for (i, a) in arms.iter().enumerate() {
                    a.validate().map_err(|_| ("arms", format!("arm {} is not a valid distribution: {a:?}", i + 1)))?;
                }
                arms.len()
            }
            InstanceSpec::Generate(g) => g.k,
        };
        Environment::new(vec![ArmDistribution::Bernoulli { p: 1.0 }], self.weights)
            .map_err(|_| ("weights", format!("invalid weight model {:?}", self.weights)))?;
        let mut policies = self.players.policies();
        if let Some(d) = &self.deviation {
            if d.player == 0 || d.player > n {
                return Err(("deviation", format!("deviation player {} outside 1..={n}", d.player)));
            }
            if matches!(&self.instance, InstanceSpec::Generate(g) if g.resample_per_seed) {
                return Err(("deviation", "deviation needs a fixed instance, not resample_per_seed".into()));
            }
            if let Some(delta) = d.delta {
                if !(delta.is_finite() && delta > 0.0) {
                    return Err(("delta", format!("deviation.delta must be positive, got {delta}")));
                }
            }
            policies.push(d.policy);
        }
        for (j, p) in policies.iter().enumerate() {
            let rank = if j < n { j + 1 } else { self.deviation.map_or(0, |d| d.player) };
            match *p {
                PolicySpec::SmaaRelaxed if n > k => {
                    return Err(("players", format!("smaa_relaxed needs N <= K (N = {n}, K = {k})")));
                }
                PolicySpec::FixedArm { arm } if arm == 0 || arm > k => {
                    return Err(("players", format!("fixed_arm {arm} outside 1..={k}")));
                }
                PolicySpec::FollowerJammer { target } if target == 0 || target > n || target == rank => {
                    return Err(("players", format!("follower_jammer target {target} is not another player")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn n_players(&self) -> usize {
        self.players.n
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.run.seeds.expand()
    }

    /// Whether every run shares one instance.
    pub fn fixed_instance(&self) -> bool {
        !matches!(&self.instance, InstanceSpec::Generate(g) if g.resample_per_seed)
    }

    /// Concrete arms for run `seed`.
    pub fn arms_for(&self, seed: u64) -> Result<Vec<ArmDistribution>> {
        match &self.instance {
            InstanceSpec::Arms(arms) => Ok(arms.clone()),
            InstanceSpec::Generate(g) => {
                let key = if g.resample_per_seed { seed } else { g.seed };
                generate_instance(g.family(), g.k, self.players.n, &mut stream(key, Purpose::Instance, 0))
            }
        }
    }

    /// The simulation run for `seed`.
    pub fn resolve(&self, seed: u64) -> Result<SimulationSpec> {
        Ok(SimulationSpec {
            arms: self.arms_for(seed)?,
            weights: self.weights,
            horizon: self.run.horizon,
            policies: self.players.policies(),
            hyper: self.hyper,
            record_every: self.run.record_every,
            extra_checkpoints: self.run.checkpoints.clone(),
        })
    }
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

fn locate_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}
