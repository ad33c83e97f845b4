//! Per-round metric increments. The simulator knows the true means; agents
//! never see any of this.

/// Best expected payoff player `j` could have had this round minus what it
/// actually received: `max_k μ_k / (M_k + 1[π_j ≠ k]) − R_j`.
pub fn regret_increment(mu: &[f64], occupancy: &[usize], arm: usize, share: f64) -> f64 {
    best_response_value(mu, occupancy, arm) - share
}

pub(crate) fn best_response_value(mu: &[f64], occupancy: &[usize], arm: usize) -> f64 {
    mu.iter()
        .zip(occupancy)
        .enumerate()
        .map(|(k, (&m, &c))| if k == arm { m / c as f64 } else { m / (c + 1) as f64 })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Equilibrium average `r* = W_PNE / N` minus the realized share.
pub fn regret_prime_increment(r_bar: f64, share: f64) -> f64 {
    r_bar - share
}

/// Whether the round's occupancy differs from the equilibrium occupancy.
pub fn noneq_indicator(occupancy: &[usize], m_star: &[usize]) -> bool {
    occupancy != m_star
}

/// Per-round helper that caches `μ_k / (M_k + 1)` to price every player in
/// `O(K + N)`.
pub(crate) struct RegretPricer {
    outside: Vec<f64>,
}

impl RegretPricer {
    pub fn new(k: usize) -> Self {
        Self { outside: vec![0.0; k] }
    }

    /// Fill `out[j]` with the best-response value of each player.
    pub fn price(&mut self, mu: &[f64], occupancy: &[usize], choices: &[usize], out: &mut [f64]) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        let mut second = f64::NEG_INFINITY;
        for (k, (&m, &c)) in mu.iter().zip(occupancy).enumerate() {
            let v = m / (c + 1) as f64;
            self.outside[k] = v;
            if v > best.0 {
                second = best.0;
                best = (v, k);
            } else if v > second {
                second = v;
            }
        }
        for (slot, &a) in out.iter_mut().zip(choices) {
            let elsewhere = if best.1 == a { second } else { best.0 };
            let stay = mu[a] / occupancy[a] as f64;
            *slot = stay.max(elsewhere);
        }
    }
}
