//! Bernoulli KL divergence, the KL-UCB upper index and the exploration rate.
//!
//! All logarithms are natural. The divergence follows the usual boundary
//! conventions: `0 ln 0 = 0`, `0 ln(0/0) = 0` and `x ln(x/0) = +inf` for
//! `x > 0`, so `kl(p, q)` is `+inf` whenever `q ∈ {0, 1}` and `p ≠ q`.

use crate::error::{Error, Result};

/// Absolute tolerance on `q` for the KL-UCB bisection.
pub const INDEX_TOLERANCE: f64 = 1e-9;
/// Hard cap on bisection steps.
pub const INDEX_MAX_ITERS: usize = 200;
/// Largest index returned when the mean is below one.
pub const INDEX_CEILING: f64 = 1.0 - 1e-12;

/// Bernoulli KL divergence `kl(p, q)`, possibly `+inf`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "kl_bernoulli arguments must lie in [0, 1], got ({p}, {q})"
        )));
    }
    Ok(kl_unchecked(p, q))
}

/// Same as [`kl_bernoulli`] for callers that already guarantee `p, q ∈ [0, 1]`.
#[inline]
pub(crate) fn kl_unchecked(p: f64, q: f64) -> f64 {
    if p == q {
        return 0.0;
    }
    let head = if p == 0.0 {
        0.0
    } else if q == 0.0 {
        return f64::INFINITY;
    } else {
        p * (p / q).ln()
    };
    let tail = if p == 1.0 {
        0.0
    } else if q == 1.0 {
        return f64::INFINITY;
    } else {
        (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
    };
    // rounding can leave a tiny negative value when p ≈ q
    (head + tail).max(0.0)
}

/// `f(t) = ln t + 4 ln(ln t)`, clamped to `f(3)` below `t = 3`.
pub fn exploration_rate(t: u64) -> f64 {
    let t = t.max(3) as f64;
    let lt = t.ln();
    lt + 4.0 * lt.ln()
}

/// KL-UCB index `sup { q ≥ mu_hat : tau · kl(mu_hat, q) ≤ budget }`.
///
/// `budget` is the already-scaled exploration budget (`β·f(t)`). Callers must
/// never ask for an index with `tau == 0`.
pub fn kl_ucb_index(mu_hat: f64, tau: u64, budget: f64) -> f64 {
    assert!(tau > 0, "kl_ucb_index requires at least one pull");
    debug_assert!((0.0..=1.0).contains(&mu_hat));
    if mu_hat >= 1.0 {
        return 1.0;
    }
    if budget <= 0.0 {
        return mu_hat;
    }
    let level = budget / tau as f64;
    if kl_unchecked(mu_hat, INDEX_CEILING) <= level {
        return INDEX_CEILING;
    }
    let mut lo = mu_hat;
    let mut hi = INDEX_CEILING;
    for _ in 0..INDEX_MAX_ITERS {
        if hi - lo < INDEX_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if kl_unchecked(mu_hat, mid) > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Whether `kl_ucb_index(mu_hat, tau, budget) ≥ level`, decided without
/// bisection.
pub fn index_reaches(mu_hat: f64, tau: u64, budget: f64, level: f64) -> bool {
    assert!(tau > 0, "index_reaches requires at least one pull");
    if mu_hat >= level {
        return true;
    }
    if level > INDEX_CEILING {
        return false;
    }
    kl_unchecked(mu_hat, level) <= budget / tau as f64
}
