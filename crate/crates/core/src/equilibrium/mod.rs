//! Pure Nash equilibria of the one-shot sharing game and the quantities
//! derived from them.
//!
//! With arm means `μ` and `N` players, a profile is an equilibrium exactly
//! when its occupancy equals `m*_k = ⌊μ_k / z*⌋`, where the water level `z*`
//! is the largest `z` with `Σ_k ⌊μ_k / z⌋ ≥ N`. Because `z*` is always one of
//! the candidates `μ_k / n` with `n ≤ N`, it is found by selection over the
//! candidate multiset rather than by numeric search.

mod mixed;
mod oracle;

pub use mixed::{solve_symmetric_mne, solve_symmetric_mne_auto, SymmetricMne};
pub use oracle::{brute_force_nash, is_pure_nash, occupancy_of, verify_no_beneficial_coalition};

use serde::Serialize;

use crate::error::{DuplicateAverage, Error, Result};
use crate::kl::kl_unchecked;

/// Relative gap under which two candidate averages count as equal.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Occupancy and reward levels of the pure equilibrium for one mean vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumProfile {
    pub z_star: f64,
    pub m_star: Vec<usize>,
    /// Arms with `m*_k > 0`, ascending (0-based).
    pub support: Vec<usize>,
    /// `μ_k / m*_k` on the support, zero elsewhere.
    pub r_star: Vec<f64>,
    pub w_pne: f64,
    /// Per-player equilibrium average `w_pne / N`.
    pub r_bar: f64,
    /// Set when every mean was zero and players were spread round-robin.
    pub fallback: bool,
}

impl EquilibriumProfile {
    pub fn n_players(&self) -> usize {
        self.m_star.iter().sum()
    }

    pub fn in_support(&self, arm: usize) -> bool {
        self.m_star[arm] > 0
    }

    /// Block list: support arms sorted by average reward (descending, ties to
    /// the smaller index), each repeated `m*_k` times.
    pub fn block_list(&self) -> Vec<usize> {
        let mut arms = self.support.clone();
        arms.sort_by(|&a, &b| {
            self.r_star[b]
                .partial_cmp(&self.r_star[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        arms.iter()
            .flat_map(|&k| std::iter::repeat_n(k, self.m_star[k]))
            .collect()
    }
}

fn validate(mu: &[f64], n_players: usize) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::Domain("mean vector is empty".into()));
    }
    if n_players == 0 {
        return Err(Error::Domain("need at least one player".into()));
    }
    if let Some(bad) = mu.iter().find(|m| !m.is_finite() || **m < 0.0) {
        return Err(Error::Domain(format!("means must be finite and non-negative, got {bad}")));
    }
    Ok(())
}

/// Number of divisors `n ∈ 1..=cap` with `μ / n ≥ z`, i.e. `min(⌊μ/z⌋, cap)`
/// evaluated on the same floats the candidates are built from.
#[inline]
fn units_at_level(mu: f64, z: f64, cap: usize) -> usize {
    (1..=cap).take_while(|&n| mu / n as f64 >= z).count()
}

/// `h(z) = Σ_k min(⌊μ_k / z⌋, cap)`.
pub fn level_count(mu: &[f64], z: f64, cap: usize) -> usize {
    mu.iter().map(|&m| units_at_level(m, z, cap)).sum()
}

/// All candidate averages `μ_k / n`, `n ∈ 1..=N`, for positive means.
pub fn candidate_levels(mu: &[f64], n_players: usize) -> Vec<f64> {
    mu.iter()
        .filter(|&&m| m > 0.0)
        .flat_map(|&m| (1..=n_players).map(move |n| m / n as f64))
        .collect()
}

/// Solve for `z*`, `m*` and the support.
pub fn compute_equilibrium(mu: &[f64], n_players: usize) -> Result<EquilibriumProfile> {
    validate(mu, n_players)?;
    let k = mu.len();

    let mut levels = candidate_levels(mu, n_players);
    if levels.is_empty() {
        let mut m_star = vec![0; k];
        for j in 0..n_players {
            m_star[j % k] += 1;
        }
        return Ok(finish(mu, 0.0, m_star, true));
    }

    let idx = n_players - 1;
    let (_, &mut z_star, _) =
        levels.select_nth_unstable_by(idx, |a, b| b.partial_cmp(a).expect("finite levels"));

    let mut m_star: Vec<usize> = mu.iter().map(|&m| units_at_level(m, z_star, n_players)).collect();
    let mut surplus = m_star.iter().sum::<usize>() - n_players;
    while surplus > 0 {
        // smallest current average, ties to the larger index
        let drop = (0..k)
            .filter(|&a| m_star[a] > 0)
            .min_by(|&a, &b| {
                let ra = mu[a] / m_star[a] as f64;
                let rb = mu[b] / m_star[b] as f64;
                ra.partial_cmp(&rb).unwrap().then(b.cmp(&a))
            })
            .expect("occupied arm");
        m_star[drop] -= 1;
        surplus -= 1;
    }
    Ok(finish(mu, z_star, m_star, false))
}

fn finish(mu: &[f64], z_star: f64, m_star: Vec<usize>, fallback: bool) -> EquilibriumProfile {
    let n: usize = m_star.iter().sum();
    let support: Vec<usize> = (0..mu.len()).filter(|&a| m_star[a] > 0).collect();
    let r_star: Vec<f64> = mu
        .iter()
        .zip(&m_star)
        .map(|(&m, &c)| if c > 0 { m / c as f64 } else { 0.0 })
        .collect();
    let w_pne: f64 = support.iter().map(|&a| mu[a]).sum();
    EquilibriumProfile {
        z_star,
        m_star,
        support,
        r_star,
        w_pne,
        r_bar: w_pne / n as f64,
        fallback,
    }
}

/// Smallest gap between distinct values of `Δ = {μ_k / n} ∪ {0}`.
///
/// Coinciding candidates below `z*` are merged and do not matter for the
/// equilibrium. Coinciding candidates at or above `z*` make the occupancy or
/// the block-list order ambiguous and are reported as a violation.
pub fn min_gap_delta0(mu: &[f64], n_players: usize) -> Result<f64> {
    let z_star = compute_equilibrium(mu, n_players)?.z_star;
    let values = sorted_candidates(mu, n_players);
    let tol = duplicate_tolerance(mu);
    let mut best = f64::INFINITY;
    for w in values.windows(2) {
        let gap = w[1].0 - w[0].0;
        if gap <= tol {
            if w[1].0 >= z_star - tol {
                return Err(violation(w));
            }
            continue;
        }
        best = best.min(gap);
    }
    Ok(best)
}

/// Check that every candidate average `μ_k / n` is distinct and nonzero
/// apart, returning the smallest gap of the full multiset.
pub fn check_distinct_averages(mu: &[f64], n_players: usize) -> Result<f64> {
    validate(mu, n_players)?;
    let values = sorted_candidates(mu, n_players);
    let tol = duplicate_tolerance(mu);
    let mut best = f64::INFINITY;
    for w in values.windows(2) {
        let gap = w[1].0 - w[0].0;
        if gap <= tol {
            return Err(violation(w));
        }
        best = best.min(gap);
    }
    Ok(best)
}

fn duplicate_tolerance(mu: &[f64]) -> f64 {
    DUPLICATE_TOLERANCE * mu.iter().cloned().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE)
}

/// `(value, arm, divisor)` ascending; arm and divisor are 1-based and
/// `(0, 0)` tags the zero level.
fn sorted_candidates(mu: &[f64], n_players: usize) -> Vec<(f64, usize, usize)> {
    let mut values: Vec<(f64, usize, usize)> = vec![(0.0, 0, 0)];
    for (a, &m) in mu.iter().enumerate() {
        for n in 1..=n_players {
            values.push((m / n as f64, a + 1, n));
        }
    }
    values.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    values
}

fn violation(w: &[(f64, usize, usize)]) -> Error {
    Error::AssumptionViolation(DuplicateAverage { first: (w[0].1, w[0].2), second: (w[1].1, w[1].2), value: w[1].0 })
}

/// Welfare comparison between the best assignment and the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoaReport {
    pub w_max: f64,
    pub w_pne: f64,
    pub poa: f64,
    pub poa_upper: f64,
}

pub fn price_of_anarchy(mu: &[f64], n_players: usize) -> Result<PoaReport> {
    let profile = compute_equilibrium(mu, n_players)?;
    let mut sorted = mu.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top = n_players.min(mu.len());
    let w_max: f64 = sorted[..top].iter().sum();
    let poa = if profile.w_pne > 0.0 { w_max / profile.w_pne } else { 1.0 };
    Ok(PoaReport {
        w_max,
        w_pne: profile.w_pne,
        poa,
        poa_upper: (n_players + top - 1) as f64 / n_players as f64,
    })
}

/// `Σ_{k ∉ M*} (z* − μ_k) / kl(μ_k, z*)`, the asymptotic log-regret slope.
pub fn lower_bound_constant(mu: &[f64], n_players: usize) -> Result<f64> {
    let profile = compute_equilibrium(mu, n_players)?;
    lower_bound_from(mu, &profile)
}

pub(crate) fn lower_bound_from(mu: &[f64], profile: &EquilibriumProfile) -> Result<f64> {
    if profile.z_star > 1.0 || mu.iter().any(|&m| m > 1.0) {
        return Err(Error::Domain("lower bound constant needs means in [0, 1]".into()));
    }
    let z = profile.z_star;
    Ok((0..mu.len())
        .filter(|&a| !profile.in_support(a))
        .map(|a| {
            let d = kl_unchecked(mu[a], z);
            if d.is_infinite() {
                0.0
            } else {
                (z - mu[a]) / d
            }
        })
        .sum())
}

/// Everything the CLI reports about an instance.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceAnalysis {
    pub profile: EquilibriumProfile,
    pub delta0: f64,
    pub poa: PoaReport,
    pub lb_constant: f64,
}

pub fn analyze(mu: &[f64], n_players: usize) -> Result<InstanceAnalysis> {
    let profile = compute_equilibrium(mu, n_players)?;
    let delta0 = min_gap_delta0(mu, n_players)?;
    let poa = price_of_anarchy(mu, n_players)?;
    let lb_constant = lower_bound_from(mu, &profile)?;
    Ok(InstanceAnalysis { profile, delta0, poa, lb_constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_arm_example() {
        let p = compute_equilibrium(&[1.0, 0.4, 0.2], 3).unwrap();
        assert_eq!(p.z_star, 0.4);
        assert_eq!(p.m_star, vec![2, 1, 0]);
        assert_eq!(p.support, vec![0, 1]);
        assert_eq!(p.r_star, vec![0.5, 0.4, 0.0]);
        assert!((p.w_pne - 1.4).abs() < 1e-12);
        assert_eq!(p.block_list(), vec![0, 0, 1]);
        assert!(!p.fallback);
    }

    #[test]
    fn mixed_example_profile() {
        let p = compute_equilibrium(&[1.0, 0.6, 0.48], 3).unwrap();
        assert_eq!(p.m_star, vec![2, 1, 0]);
        assert_eq!(p.z_star, 0.5);
        assert!((p.w_pne - 1.6).abs() < 1e-12);
    }

    #[test]
    fn single_arm_absorbs_everyone() {
        for n in 1..7 {
            let p = compute_equilibrium(&[0.7], n).unwrap();
            assert_eq!(p.m_star, vec![n]);
            assert_eq!(p.z_star, 0.7 / n as f64);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(compute_equilibrium(&[], 2).is_err());
        assert!(compute_equilibrium(&[0.5], 0).is_err());
        assert!(compute_equilibrium(&[-0.5, 0.2], 2).is_err());
    }

    #[test]
    fn all_zero_falls_back_to_round_robin() {
        let p = compute_equilibrium(&[0.0, 0.0, 0.0], 5).unwrap();
        assert!(p.fallback);
        assert_eq!(p.m_star, vec![2, 2, 1]);
        assert_eq!(p.block_list().len(), 5);
    }

    #[test]
    fn zero_arms_are_ignored_when_some_mean_is_positive() {
        let p = compute_equilibrium(&[0.0, 0.3, 0.0], 4).unwrap();
        assert_eq!(p.m_star, vec![0, 4, 0]);
    }

    #[test]
    fn ties_drop_surplus_from_larger_index() {
        // 0.5/2 == 0.25/1: both arms reach the level, one unit too many
        let p = compute_equilibrium(&[0.5, 0.25], 2).unwrap();
        assert_eq!(p.m_star, vec![2, 0]);
        assert_eq!(p.z_star, 0.25);
        let q = compute_equilibrium(&[0.4, 0.4, 0.4], 2).unwrap();
        assert_eq!(q.m_star, vec![1, 1, 0]);
    }

    #[test]
    fn delta0_examples() {
        let d = min_gap_delta0(&[1.0, 0.4, 0.2], 3).unwrap();
        assert!((d - 1.0 / 30.0).abs() < 1e-12, "{d}");
        assert_eq!(min_gap_delta0(&[1.0], 1).unwrap(), 1.0);
        assert_eq!(min_gap_delta0(&[0.5, 0.25], 1).unwrap(), 0.25);
        match min_gap_delta0(&[0.5, 0.25], 2) {
            Err(Error::AssumptionViolation(d)) => {
                assert_eq!(d.value, 0.25);
                let mut pair = [d.first, d.second];
                pair.sort();
                assert_eq!(pair, [(1, 2), (2, 1)]);
            }
            other => panic!("expected violation, got {other:?}"),
        }
        // float noise: 0.6/3 vs 0.4/2 sits below z* = 0.3
        assert!(check_distinct_averages(&[0.6, 0.4], 3).is_err());
        assert!((min_gap_delta0(&[0.6, 0.4], 3).unwrap() - 1.0 / 15.0).abs() < 1e-12);
        // 0.4/2 == 0.2/1 below z* = 0.4
        assert!(check_distinct_averages(&[1.0, 0.4, 0.2], 3).is_err());
        // 0.5/1 == 1/2 at z* on the support: block order is ambiguous
        assert!(min_gap_delta0(&[1.0, 0.5], 3).is_err());
    }

    #[test]
    fn poa_examples() {
        let r = price_of_anarchy(&[1.0, 0.4, 0.2], 3).unwrap();
        assert!((r.w_max - 1.6).abs() < 1e-12);
        assert!((r.w_pne - 1.4).abs() < 1e-12);
        assert!((r.poa - 8.0 / 7.0).abs() < 1e-12);
        assert!((r.poa_upper - 5.0 / 3.0).abs() < 1e-12);
        let one = price_of_anarchy(&[0.3], 4).unwrap();
        assert_eq!(one.poa, 1.0);
    }

    #[test]
    fn lower_bound_examples() {
        let c = lower_bound_constant(&[1.0, 0.4, 0.2], 3).unwrap();
        // (0.4 - 0.2) / kl(0.2, 0.4), kl evaluated independently
        let kl = 0.2 * (0.2f64 / 0.4).ln() + 0.8 * (0.8f64 / 0.6).ln();
        assert!((c - 0.2 / kl).abs() < 1e-12);
        assert!((c - 2.185_404_903_723_449).abs() < 1e-9);
        assert_eq!(lower_bound_constant(&[0.9, 0.5], 2).unwrap(), 0.0);
        let c2 = lower_bound_constant(&[1.0, 0.6, 0.48], 3).unwrap();
        assert!((c2 - 24.993_330_842_587_014).abs() < 1e-8, "{c2}");
    }

    #[test]
    fn level_count_brackets_z_star() {
        let mu = [0.9, 0.55, 0.31, 0.12];
        let n = 6;
        let p = compute_equilibrium(&mu, n).unwrap();
        assert!(level_count(&mu, p.z_star, n) >= n);
        let mut above: Vec<f64> =
            candidate_levels(&mu, n).into_iter().filter(|&z| z > p.z_star).collect();
        above.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(level_count(&mu, above[0], n) < n);
    }
}
