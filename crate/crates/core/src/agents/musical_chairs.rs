//! Player-count estimation and rank assignment from collision feedback, and
//! the learner that runs SMAA on top of it when `N` and ranks are unknown.

use rand::Rng;
use serde::Serialize;

use super::{ArmStats, Hyper, Policy, Smaa};
use crate::environment::Observation;
use crate::rng::Stream;

/// Length of the estimation phase: `⌈η · ⌈50 K² ln(4T)⌉⌉`, at least one round.
pub fn musical_chairs_t0(k_arms: usize, horizon: u64, eta: f64) -> u64 {
    let full = (50.0 * (k_arms * k_arms) as f64 * (4.0 * horizon as f64).ln()).ceil();
    ((eta * full).ceil() as u64).max(1)
}

/// Player-count estimate from `collisions` observed in `t0` uniform pulls
/// over `k_arms` arms.
pub fn estimate_players(t0: u64, collisions: u64, k_arms: usize) -> usize {
    if collisions >= t0 {
        return k_arms;
    }
    if k_arms == 1 {
        return 1;
    }
    let free = (t0 - collisions) as f64 / t0 as f64;
    let raw = free.ln() / (1.0 - 1.0 / k_arms as f64).ln() + 1.0;
    (raw.round() as usize).clamp(1, k_arms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MusicalChairsOutcome {
    pub n_hat: usize,
    /// 1-based rank (the arm held at the end of the seating phase).
    pub rank: usize,
    pub seated: bool,
    /// Last round of the protocol, `T1`.
    pub finished_at: u64,
}

#[derive(Debug, Clone)]
enum Phase {
    Estimating { collisions: u64 },
    Seating { n_hat: usize, t1: u64, attempt: usize, seat: Option<usize> },
    Done(MusicalChairsOutcome),
}

pub struct MusicalChairs {
    k: usize,
    horizon: u64,
    t0: u64,
    phase: Phase,
}

impl MusicalChairs {
    pub fn new(k_arms: usize, horizon: u64, eta: f64) -> Self {
        Self {
            k: k_arms,
            horizon,
            t0: musical_chairs_t0(k_arms, horizon, eta),
            phase: Phase::Estimating { collisions: 0 },
        }
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn outcome(&self) -> Option<MusicalChairsOutcome> {
        match self.phase {
            Phase::Done(out) => Some(out),
            _ => None,
        }
    }

    pub fn select(&mut self, _t: u64, rng: &mut Stream) -> usize {
        match &mut self.phase {
            Phase::Estimating { .. } => rng.random_range(0..self.k),
            Phase::Seating { seat: Some(arm), .. } => *arm,
            Phase::Seating { n_hat, attempt, seat: None, .. } => {
                *attempt = rng.random_range(0..*n_hat);
                *attempt
            }
            Phase::Done(out) => out.rank - 1,
        }
    }

    pub fn update(&mut self, t: u64, collision: bool) {
        match &mut self.phase {
            Phase::Estimating { collisions } => {
                *collisions += collision as u64;
                if t >= self.t0 {
                    let n_hat = estimate_players(self.t0, *collisions, self.k);
                    let t1 = self.t0 + (n_hat as f64 * (2.0 * self.horizon as f64).ln()).ceil() as u64;
                    self.phase = Phase::Seating { n_hat, t1, attempt: 0, seat: None };
                }
            }
            Phase::Seating { n_hat, t1, attempt, seat } => {
                if seat.is_none() && !collision {
                    *seat = Some(*attempt);
                }
                if t >= *t1 {
                    let arm = seat.unwrap_or(*attempt);
                    self.phase = Phase::Done(MusicalChairsOutcome {
                        n_hat: *n_hat,
                        rank: arm + 1,
                        seated: seat.is_some(),
                        finished_at: *t1,
                    });
                }
            }
            Phase::Done(_) => {}
        }
    }
}

/// Musical Chairs until `T1`, then SMAA with the estimated count and rank.
///
/// SMAA keeps the global clock and every observation gathered while
/// estimating and seating, so it skips its own initialization phase.
pub struct SmaaRelaxed {
    beta: f64,
    chairs: MusicalChairs,
    stats: ArmStats,
    learner: Option<Smaa>,
    rng: Option<Stream>,
}

impl SmaaRelaxed {
    pub fn new(k_arms: usize, horizon: u64, hyper: Hyper, rng: Stream) -> Self {
        Self {
            beta: hyper.beta,
            chairs: MusicalChairs::new(k_arms, horizon, hyper.eta),
            stats: ArmStats::new(k_arms),
            learner: None,
            rng: Some(rng),
        }
    }

    pub fn chairs(&self) -> &MusicalChairs {
        &self.chairs
    }

    pub fn learner(&self) -> Option<&Smaa> {
        self.learner.as_ref()
    }
}

impl Policy for SmaaRelaxed {
    fn select(&mut self, t: u64) -> usize {
        match &mut self.learner {
            Some(smaa) => smaa.select(t),
            None => self.chairs.select(t, self.rng.as_mut().expect("rng held until hand-off")),
        }
    }

    fn update(&mut self, t: u64, obs: &Observation) {
        match &mut self.learner {
            Some(smaa) => smaa.update(t, obs),
            None => {
                self.stats.record(obs.arm, obs.arm_total);
                self.chairs.update(t, obs.collision);
                if let Some(out) = self.chairs.outcome() {
                    let rng = self.rng.take().expect("rng held until hand-off");
                    let stats = std::mem::replace(&mut self.stats, ArmStats::new(0));
                    self.learner = Some(Smaa::resume(out.rank.min(out.n_hat), out.n_hat, self.beta, stats, t, rng));
                }
            }
        }
    }

    fn report(&self) -> super::AgentReport {
        super::AgentReport { musical_chairs: self.chairs.outcome() }
    }
}
