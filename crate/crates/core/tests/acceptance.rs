//! Acceptance checks. Runs as a plain binary so each criterion prints one
//! PASS/FAIL line; pass a substring to run only the matching criteria.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use bandits_core::agents::MusicalChairs;
use bandits_core::config::ExperimentConfig;
use bandits_core::environment::{allocate, generate_instance, ArmDistribution, Environment, InstanceFamily, WeightModel};
use bandits_core::equilibrium::{analyze, brute_force_nash, check_distinct_averages, compute_equilibrium, solve_symmetric_mne_auto};
use bandits_core::experiment::{run_experiment, run_stability, ExperimentSummary};
use bandits_core::kl::{kl_bernoulli, kl_ucb_index};
use bandits_core::rng::{stream, Purpose};

type Check = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria = [
        Criterion { name: "equilibrium_oracle_equivalence", limit: Some(Duration::from_secs(10)), run: oracle_equivalence },
        Criterion { name: "worked_examples", limit: None, run: worked_examples },
        Criterion { name: "conservation", limit: None, run: conservation },
        Criterion { name: "kl_ucb_correctness", limit: None, run: kl_ucb_correctness },
        Criterion { name: "self_play_convergence", limit: Some(Duration::from_secs(120)), run: self_play },
        Criterion { name: "unknown_n_anchor", limit: Some(Duration::from_secs(600)), run: unknown_n_anchor },
        Criterion { name: "epsilon_nash", limit: None, run: epsilon_nash },
        Criterion { name: "stability_direction", limit: None, run: stability_direction },
        Criterion { name: "musical_chairs_reliability", limit: None, run: musical_chairs_reliability },
        Criterion { name: "determinism", limit: None, run: determinism },
    ];
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.iter().any(|f| c.name.contains(f.as_str()))) {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let took = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, c.limit) {
            if took > limit {
                outcome = Err(format!("{detail}; took {took:.1?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {} ({took:.1?}): {detail}", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} ({took:.1?}): {detail}", c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: {a} vs {b}"))
}

fn oracle_equivalence() -> Check {
    let mut rng = stream(2024, Purpose::Instance, 7);
    let mut checked = 0;
    let mut draws = 0;
    while checked < 200 {
        draws += 1;
        let k = rng.random_range(1..=4);
        let n = rng.random_range(1..=4);
        let mu: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
        if check_distinct_averages(&mu, n).is_err() {
            continue;
        }
        let all = brute_force_nash(&mu, n).map_err(|e| e.to_string())?;
        let fast = compute_equilibrium(&mu, n).map_err(|e| e.to_string())?.m_star;
        ensure(all.len() == 1, || format!("{mu:?}, N = {n}: {} equilibria", all.len()))?;
        ensure(all.first() == Some(&fast), || format!("{mu:?}, N = {n}: {fast:?} vs {all:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} instances agree ({draws} drawn)"))
}

fn worked_examples() -> Check {
    let a = analyze(&[1.0, 0.4, 0.2], 3).map_err(|e| e.to_string())?;
    ensure(a.profile.m_star == [2, 1, 0], || format!("m* = {:?}", a.profile.m_star))?;
    close(a.profile.z_star, 0.4, 1e-12, "z*")?;
    close(a.poa.w_pne, 1.4, 1e-12, "w_pne")?;
    close(a.poa.w_max, 1.6, 1e-12, "w_max")?;
    close(a.poa.poa, 8.0 / 7.0, 1e-12, "PoA")?;

    let mu = [1.0, 0.6, 0.48];
    let b = analyze(&mu, 3).map_err(|e| e.to_string())?;
    close(b.poa.w_pne, 1.6, 1e-12, "W^PNE")?;
    let mne = solve_symmetric_mne_auto(&mu, 3).map_err(|e| e.to_string())?;
    for (p, want) in mne.p.iter().zip([0.705, 0.254, 0.041]) {
        close(*p, want, 1e-2, "MNE probability")?;
    }
    Ok(format!("m* = (2,1,0), PoA = {:.6}, MNE p = {:.4?}", a.poa.poa, mne.p))
}

fn conservation() -> Check {
    let mut rng = stream(11, Purpose::Rewards, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let k = rng.random_range(1..=10);
        let n = rng.random_range(1..=10);
        let choices: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let x: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let shares = allocate(&choices, &x, &w);
        for arm in 0..k {
            let on: Vec<usize> = (0..n).filter(|&j| choices[j] == arm).collect();
            if !on.is_empty() {
                let total: f64 = on.iter().map(|&j| shares[j]).sum();
                worst = worst.max((total - x[arm]).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("share sums off by {worst:e}"))?;

    let env = Environment::new(vec![ArmDistribution::Bernoulli { p: 1.0 }], WeightModel::Uniform).map_err(|e| e.to_string())?;
    let x = 0.7;
    let samples = 200_000;
    let mut report = Vec::new();
    for m in [2usize, 3, 5] {
        let mut wrng = stream(m as u64, Purpose::Weights, 0);
        let mut w = vec![0.0; m];
        let choices = vec![0; m];
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..samples {
            env.sample_weights(&mut wrng, &mut w);
            let s = allocate(&choices, &[x], &w)[0];
            sum += s;
            sq += s * s;
        }
        let mean = sum / samples as f64;
        let var = (sq / samples as f64 - mean * mean) * samples as f64 / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        let z = (mean - x / m as f64) / se;
        ensure(z.abs() <= 3.0, || format!("M = {m}: mean share {mean} is {z:.2} SE from X/M"))?;
        report.push(format!("M={m}: {z:+.2} SE"));
    }
    Ok(format!("max share-sum error {worst:e}; {}", report.join(", ")))
}

/// Largest point of the `1e-6` grid in `[mu, 1]` with `tau · kl(mu, q) ≤ b`.
fn grid_index(mu: f64, tau: u64, b: f64) -> f64 {
    const STEPS: u64 = 1_000_000;
    let q = |i: u64| i as f64 / STEPS as f64;
    let feasible = |i: u64| tau as f64 * kl_bernoulli(mu, q(i)).unwrap() <= b;
    let mut lo = (mu * STEPS as f64).ceil() as u64;
    if !feasible(lo) {
        return mu;
    }
    let mut hi = STEPS;
    if feasible(hi) {
        return 1.0;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    q(lo)
}

fn kl_ucb_correctness() -> Check {
    let mut rng = stream(5, Purpose::Agent, 99);
    let mut worst_gap: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for _ in 0..100 {
        let mu: f64 = rng.random_range(0.0..0.999);
        let tau: u64 = rng.random_range(1..=2000);
        let b: f64 = rng.random_range(0.01..20.0);
        let q = kl_ucb_index(mu, tau, b);
        let g = grid_index(mu, tau, b);
        ensure(q >= g - 1e-9 && q <= g + 1e-6, || format!("index {q} outside grid bracket [{g}, {}] for ({mu}, {tau}, {b})", g + 1e-6))?;
        let residual = tau as f64 * kl_bernoulli(mu, q).unwrap() - b;
        ensure(residual <= 1e-6, || format!("index {q} overshoots the budget by {residual:e}"))?;
        worst_gap = worst_gap.max(q - g);
        worst_residual = worst_residual.max(residual.abs());
    }

    let mus: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let taus = [1u64, 2, 5, 10, 50, 100, 1000, 10_000];
    let budgets = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0];
    let mut checks = 0;
    for (i, &mu) in mus.iter().enumerate() {
        for (j, &tau) in taus.iter().enumerate() {
            for (l, &b) in budgets.iter().enumerate() {
                let q = kl_ucb_index(mu, tau, b);
                ensure(q >= mu && q <= 1.0, || format!("index {q} outside [{mu}, 1]"))?;
                if i > 0 {
                    ensure(kl_ucb_index(mus[i - 1], tau, b) <= q + 1e-9, || format!("not increasing in mu at ({mu}, {tau}, {b})"))?;
                }
                if j > 0 {
                    ensure(kl_ucb_index(mu, taus[j - 1], b) >= q - 1e-9, || format!("not decreasing in tau at ({mu}, {tau}, {b})"))?;
                }
                if l > 0 {
                    ensure(kl_ucb_index(mu, tau, budgets[l - 1]) <= q + 1e-9, || format!("not increasing in budget at ({mu}, {tau}, {b})"))?;
                }
                checks += 1;
            }
        }
    }
    Ok(format!("max offset above grid {worst_gap:.2e}, max |tau·kl - b| {worst_residual:.2e}; {checks} grid points monotone"))
}

const SELF_PLAY: &str = r#"{
  "instance": {"generate": {"k": 10, "family": "beta", "seed": 1}},
  "players": {"n": 8, "policy": {"kind": "smaa"}},
  "run": {"horizon": 131072, "seeds": {"base": 0, "count": 20}, "record_every": 1024, "checkpoints": [117965]}
}"#;

fn config(text: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_json(text, "acceptance").map_err(|e| e.to_string())
}

fn stat(summary: &ExperimentSummary, t: u64) -> Result<&bandits_core::experiment::CheckpointStats, String> {
    summary.checkpoints.iter().find(|c| c.t == t).ok_or_else(|| format!("no checkpoint at {t}"))
}

fn self_play_dir() -> std::path::PathBuf {
    std::env::temp_dir().join(format!("bandits-acceptance-{}", std::process::id())).join("self_play")
}

fn self_play() -> Check {
    let cfg = config(SELF_PLAY)?;
    let t = cfg.run.horizon;
    let late = t - t / 10;
    let summary = run_experiment(&cfg, &self_play_dir(), 0).map_err(|e| e.to_string())?;
    let half = stat(&summary, t / 2)?.mean_regret.mean;
    let full = stat(&summary, t)?.mean_regret.mean;
    let noneq_rate = (stat(&summary, t)?.cum_noneq.mean - stat(&summary, late)?.cum_noneq.mean) / (t - late) as f64;
    let detail = format!("regret(T/2) = {half:.1}, regret(T) - regret(T/2) = {:.1}, final-10% noneq rate = {noneq_rate:.4}", full - half);
    ensure(full - half < half, || format!("doubling is not sub-linear: {detail}"))?;
    ensure(noneq_rate < 0.05, || format!("noneq rate too high: {detail}"))?;
    Ok(detail)
}

fn unknown_n_anchor() -> Check {
    let cfg = config(
        r#"{
  "instance": {"generate": {"k": 25, "family": "beta", "resample_per_seed": true}},
  "players": {"n": 8, "policy": {"kind": "smaa_relaxed"}},
  "run": {"horizon": 500000, "seeds": {"base": 0, "count": 100}, "record_every": 10000}
}"#,
    )?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary = run_experiment(&cfg, dir.path(), 0).map_err(|e| e.to_string())?;
    let t = cfg.run.horizon as f64;
    let fractions: Vec<f64> = summary.runs.iter().map(|r| r.final_noneq as f64 / t).collect();
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    let seated = summary.runs.iter().filter(|r| r.musical_chairs.iter().all(|m| m.is_some_and(|m| m.n_hat == 8 && m.seated))).count();
    let detail = format!(
        "mean noneq fraction {mean:.4} over {} seeds (range {:.4} to {:.4}); player count and seats right in {seated} runs",
        fractions.len(),
        fractions.iter().cloned().fold(f64::INFINITY, f64::min),
        fractions.iter().cloned().fold(0.0, f64::max),
    );
    ensure((0.07..=0.25).contains(&mean), || format!("outside [0.07, 0.25]: {detail}"))?;
    Ok(detail)
}

fn deviation_config(policy: &str, horizon: u64, seeds: u64) -> Result<ExperimentConfig, String> {
    let arms = generate_instance(InstanceFamily::Beta { max_shape: 5.0 }, 10, 8, &mut stream(1, Purpose::Instance, 0)).map_err(|e| e.to_string())?;
    config(&format!(
        r#"{{
  "instance": {{"arms": {}}},
  "players": {{"n": 8, "policy": {{"kind": "smaa"}}}},
  "run": {{"horizon": {horizon}, "seeds": {{"base": 0, "count": {seeds}}}}},
  "deviation": {{"player": 1, "policy": {policy}}}
}}"#,
        serde_json::to_string(&arms).unwrap()
    ))
}

fn epsilon_nash() -> Check {
    let cfg = deviation_config(r#"{"kind": "always_best_arm"}"#, 1 << 17, 50)?;
    let r = run_stability(&cfg, 0).map_err(|e| e.to_string())?;
    let base = r.baseline_reward[0].mean;
    let dev = r.deviation_reward[0].mean;
    let slack = 0.01 * r.horizon as f64;
    let detail = format!("deviator reward {dev:.1} vs baseline {base:.1} (allowance {slack:.1}) over {} seeds", r.seeds);
    ensure(dev <= base + slack, || format!("deviation pays: {detail}"))?;
    Ok(detail)
}

fn stability_direction() -> Check {
    let cfg = deviation_config(r#"{"kind": "follower_jammer", "target": 3}"#, 1 << 15, 50)?;
    let r = run_stability(&cfg, 0).map_err(|e| e.to_string())?;
    let u = r.victim_loss.mean;
    let detail = format!(
        "victim {} loses u = {u:.1}; deviator loss {:.1} vs bound {:.4e} (beta = {:.4e}, eps = {:.4e}, gamma = {:.4e})",
        r.victim, r.inequality.lhs, r.inequality.rhs, r.constants.beta, r.constants.epsilon, r.constants.gamma,
    );
    ensure(u > 0.0, || format!("no victim loss: {detail}"))?;
    ensure(r.deviator_loss.mean > 0.0, || format!("deviator does not lose: {detail}"))?;
    ensure(r.inequality.holds, || format!("inequality fails: {detail}"))?;
    Ok(detail)
}

fn musical_chairs_reliability() -> Check {
    let (n, k, horizon) = (8usize, 10usize, 500_000u64);
    let mut good = 0;
    for seed in 0..100u64 {
        let mut agents: Vec<MusicalChairs> = (0..n).map(|_| MusicalChairs::new(k, horizon, 1.0)).collect();
        let mut rngs: Vec<_> = (0..n as u64).map(|j| stream(seed, Purpose::Agent, j)).collect();
        let mut t = 0;
        while agents.iter().any(|a| a.outcome().is_none()) {
            t += 1;
            let choices: Vec<usize> = agents.iter_mut().zip(&mut rngs).map(|(a, r)| a.select(t, r)).collect();
            let mut occupancy = vec![0usize; k];
            for &c in &choices {
                occupancy[c] += 1;
            }
            for (a, &c) in agents.iter_mut().zip(&choices) {
                a.update(t, occupancy[c] > 1);
            }
        }
        let outcomes: Vec<_> = agents.iter().map(|a| a.outcome().unwrap()).collect();
        let mut ranks: Vec<usize> = outcomes.iter().map(|o| o.rank).collect();
        ranks.sort_unstable();
        ranks.dedup();
        if outcomes.iter().all(|o| o.n_hat == n) && ranks.len() == n {
            good += 1;
        }
    }
    let detail = format!("{good}/100 runs with N-hat = 8 and distinct ranks (T0 = {})", MusicalChairs::new(k, horizon, 1.0).t0());
    ensure(good >= 99, || detail.clone())?;
    Ok(detail)
}

fn determinism() -> Check {
    let first = self_play_dir();
    if !first.join("summary.csv").exists() {
        self_play()?;
    }
    let mut cfg = config(SELF_PLAY)?;
    cfg.run.seeds = bandits_core::config::Seeds::List(vec![3, 17]);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_experiment(&cfg, dir.path(), 1).map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for seed in [3, 17] {
        let name = format!("runs/seed_{seed}.csv");
        let a = read(&first.join(&name))?;
        let b = read(&dir.path().join(&name))?;
        ensure(a == b, || format!("{name} differs between runs"))?;
        bytes += a.len();
    }
    let _ = fs::remove_dir_all(first.parent().unwrap());
    Ok(format!("seed CSVs identical across a parallel and a sequential run ({bytes} bytes compared)"))
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}
