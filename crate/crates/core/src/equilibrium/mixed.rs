//! Symmetric mixed equilibria on a prescribed support.
//!
//! If every player draws arm `k` with probability `p_k`, joining arm `k` pays
//! `g_k(p_k) = μ_k (1 − (1 − p_k)^N) / (p_k N)` in expectation. `g_k` decreases
//! from `μ_k` (at `p → 0`) to `μ_k / N` (at `p = 1`), so for a common payoff
//! `c` each `p_k(c)` is unique and `Σ p_k(c)` is monotone in `c`.

use serde::Serialize;

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-10;
const P_TOLERANCE: f64 = 1e-12;
const MAX_ITERS: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricMne {
    /// Per-arm probability, zero off the support.
    pub p: Vec<f64>,
    /// Common expected payoff of every support arm.
    pub c: f64,
    /// `Σ μ_k (1 − (1 − p_k)^N)`.
    pub welfare: f64,
}

/// `1 − (1 − p)^n` without cancellation for small `p`.
fn hit_probability(p: f64, n: usize) -> f64 {
    if p >= 1.0 {
        1.0
    } else {
        -(n as f64 * (-p).ln_1p()).exp_m1()
    }
}

pub(crate) fn join_payoff(mu: f64, p: f64, n: usize) -> f64 {
    if p <= 0.0 {
        mu
    } else {
        mu * hit_probability(p, n) / (p * n as f64)
    }
}

fn probability_for(mu: f64, c: f64, n: usize) -> f64 {
    if c >= mu {
        return 0.0;
    }
    if c <= mu / n as f64 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..MAX_ITERS {
        if hi - lo < P_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if join_payoff(mu, mid, n) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn welfare(mu: &[f64], p: &[f64], n: usize) -> f64 {
    mu.iter().zip(p).map(|(&m, &q)| m * hit_probability(q, n)).sum()
}

/// Solve for the symmetric mixed equilibrium supported exactly on `support`
/// (0-based arm indices).
pub fn solve_symmetric_mne(mu: &[f64], n_players: usize, support: &[usize]) -> Result<SymmetricMne> {
    if n_players == 0 || mu.is_empty() {
        return Err(Error::Domain("need at least one arm and one player".into()));
    }
    let mut support = support.to_vec();
    support.sort_unstable();
    support.dedup();
    if support.is_empty() || support.iter().any(|&a| a >= mu.len()) {
        return Err(Error::Domain("support must be a non-empty set of valid arms".into()));
    }
    if support.iter().any(|&a| mu[a] <= 0.0) {
        return Err(Error::NoInteriorSolution);
    }
    let n = n_players;
    let mut p = vec![0.0; mu.len()];

    let c = if support.len() == 1 {
        p[support[0]] = 1.0;
        mu[support[0]] / n as f64
    } else {
        if n == 1 {
            // every g_k is flat at μ_k; only a single support arm is consistent
            return Err(Error::NoInteriorSolution);
        }
        let mass = |c: f64| support.iter().map(|&a| probability_for(mu[a], c, n)).sum::<f64>();
        let mut lo = support.iter().map(|&a| mu[a] / n as f64).fold(f64::INFINITY, f64::min);
        let mut hi = support.iter().map(|&a| mu[a]).fold(0.0, f64::max);
        let mut c = 0.5 * (lo + hi);
        for _ in 0..MAX_ITERS {
            c = 0.5 * (lo + hi);
            let s = mass(c);
            if (s - 1.0).abs() <= SUM_TOLERANCE || hi - lo <= f64::EPSILON * hi {
                break;
            }
            if s > 1.0 {
                lo = c;
            } else {
                hi = c;
            }
        }
        for &a in &support {
            p[a] = probability_for(mu[a], c, n);
        }
        if support.iter().any(|&a| p[a] <= 0.0) || (mass(c) - 1.0).abs() > 1e-8 {
            return Err(Error::NoInteriorSolution);
        }
        c
    };

    for a in 0..mu.len() {
        if support.binary_search(&a).is_err() && mu[a] > c * (1.0 + 1e-12) {
            return Err(Error::SupportMismatch { arm: a + 1, payoff: mu[a], common: c });
        }
    }
    let welfare = welfare(mu, &p, n);
    Ok(SymmetricMne { p, c, welfare })
}

/// The symmetric mixed equilibrium with its support found automatically: the
/// smallest set of top arms whose solution leaves no outside arm more
/// attractive than the common payoff.
pub fn solve_symmetric_mne_auto(mu: &[f64], n_players: usize) -> Result<SymmetricMne> {
    let mut order: Vec<usize> = (0..mu.len()).filter(|&a| mu[a] > 0.0).collect();
    order.sort_by(|&a, &b| mu[b].partial_cmp(&mu[a]).unwrap().then(a.cmp(&b)));
    let mut last = Error::NoInteriorSolution;
    for s in 1..=order.len() {
        match solve_symmetric_mne(mu, n_players, &order[..s]) {
            Ok(m) => return Ok(m),
            Err(e @ (Error::SupportMismatch { .. } | Error::NoInteriorSolution)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}
