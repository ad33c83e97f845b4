//! Enumeration oracles over explicit strategy profiles. Only meant for small
//! instances; both entry points refuse inputs whose enumeration is too large.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

const MAX_PROFILES: u128 = 1_000_000;
const MAX_COALITION_DEVIATIONS: u128 = 10_000_000;

/// Players per arm for a profile of arm choices.
pub fn occupancy_of(profile: &[usize], k_arms: usize) -> Vec<usize> {
    let mut m = vec![0; k_arms];
    for &a in profile {
        m[a] += 1;
    }
    m
}

#[inline]
fn payoff(mu: &[f64], m: &[usize], arm: usize) -> f64 {
    mu[arm] / m[arm] as f64
}

/// No player gains strictly by moving alone.
pub fn is_pure_nash(mu: &[f64], profile: &[usize]) -> bool {
    let m = occupancy_of(profile, mu.len());
    profile.iter().all(|&own| {
        let current = payoff(mu, &m, own);
        (0..mu.len()).all(|k| k == own || mu[k] / (m[k] + 1) as f64 <= current)
    })
}

fn next_profile(profile: &mut [usize], k_arms: usize) -> bool {
    for slot in profile.iter_mut() {
        *slot += 1;
        if *slot < k_arms {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Distinct occupancy vectors of every pure equilibrium, found by enumerating
/// all `K^N` profiles.
pub fn brute_force_nash(mu: &[f64], n_players: usize) -> Result<BTreeSet<Vec<usize>>> {
    let k = mu.len();
    if k == 0 || n_players == 0 {
        return Err(Error::Domain("need at least one arm and one player".into()));
    }
    let total = (k as u128).checked_pow(n_players as u32).unwrap_or(u128::MAX);
    if total > MAX_PROFILES {
        return Err(Error::TooLarge(format!("{k}^{n_players} profiles")));
    }
    let mut found = BTreeSet::new();
    let mut profile = vec![0usize; n_players];
    loop {
        if is_pure_nash(mu, &profile) {
            found.insert(occupancy_of(&profile, k));
        }
        if !next_profile(&mut profile, k) {
            break;
        }
    }
    Ok(found)
}

fn binomial(n: usize, r: usize) -> u128 {
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn for_each_subset(n: usize, size: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == size {
            return f(cur);
        }
        for i in start..n {
            cur.push(i);
            if !rec(i + 1, n, size, cur, f) {
                return false;
            }
            cur.pop();
        }
        true
    }
    rec(0, n, size, &mut Vec::with_capacity(size), f)
}

/// True iff no coalition of at most `max_coalition` players has a joint move
/// leaving every member weakly better off and some member strictly better.
pub fn verify_no_beneficial_coalition(mu: &[f64], profile: &[usize], max_coalition: usize) -> Result<bool> {
    let k = mu.len();
    let n = profile.len();
    if profile.iter().any(|&a| a >= k) {
        return Err(Error::Domain("profile names an arm outside the instance".into()));
    }
    let max_coalition = max_coalition.min(n);
    let work: u128 = (1..=max_coalition)
        .map(|b| binomial(n, b).saturating_mul((k as u128).saturating_pow(b as u32)))
        .fold(0u128, |a, b| a.saturating_add(b));
    if work > MAX_COALITION_DEVIATIONS {
        return Err(Error::TooLarge(format!("{work} coalition deviations")));
    }

    let base = occupancy_of(profile, k);
    let before: Vec<f64> = profile.iter().map(|&a| payoff(mu, &base, a)).collect();

    let mut stable = true;
    for size in 1..=max_coalition {
        let done = for_each_subset(n, size, &mut |members| {
            let mut moves = vec![0usize; members.len()];
            loop {
                let mut m = base.clone();
                for (&p, &to) in members.iter().zip(&moves) {
                    m[profile[p]] -= 1;
                    m[to] += 1;
                }
                let mut all_weak = true;
                let mut some_strict = false;
                for (&p, &to) in members.iter().zip(&moves) {
                    let after = payoff(mu, &m, to);
                    if after < before[p] {
                        all_weak = false;
                        break;
                    }
                    if after > before[p] {
                        some_strict = true;
                    }
                }
                if all_weak && some_strict {
                    stable = false;
                    return false;
                }
                if !next_profile(&mut moves, k) {
                    return true;
                }
            }
        });
        if !done {
            break;
        }
    }
    Ok(stable)
}
