//! Seed sweeps: parallel runs, per-run time-series CSVs, a checkpoint summary
//! CSV and a JSON digest with seed means and standard errors.
//!
//! Layout under the output directory:
//!
//! ```text
//! runs/seed_<s>.csv   seed,t,agent,arm,share,cum_reward,cum_regret,cum_regret_prime,cum_noneq
//! summary.csv         seed,checkpoint_t,agent,cum_reward,cum_regret,cum_regret_prime,cum_noneq
//! summary.json
//! ```
//!
//! Agents and arms are 1-based in every file. `cum_noneq` is a population
//! counter repeated on each agent's row.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::MusicalChairsOutcome;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::simulator::{run_simulation, stability_report, MeanSe, StabilityReport, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub seed: u64,
    pub t: u64,
    pub agent: usize,
    pub arm: usize,
    pub share: f64,
    pub cum_reward: f64,
    pub cum_regret: f64,
    pub cum_regret_prime: f64,
    pub cum_noneq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub checkpoint_t: u64,
    pub agent: usize,
    pub cum_reward: f64,
    pub cum_regret: f64,
    pub cum_regret_prime: f64,
    pub cum_noneq: u64,
}

pub const TIME_SERIES_HEADER: &str = "seed,t,agent,arm,share,cum_reward,cum_regret,cum_regret_prime,cum_noneq";
pub const SUMMARY_HEADER: &str = "seed,checkpoint_t,agent,cum_reward,cum_regret,cum_regret_prime,cum_noneq";

pub fn time_series_rows(trace: &Trace) -> Vec<TimeSeriesRow> {
    let mut rows = Vec::with_capacity(trace.records.len() * trace.n_players());
    for r in &trace.records {
        for j in 0..trace.n_players() {
            rows.push(TimeSeriesRow {
                seed: trace.seed,
                t: r.totals.t,
                agent: j + 1,
                arm: r.choices[j] + 1,
                share: r.shares[j],
                cum_reward: r.totals.cum_reward[j],
                cum_regret: r.totals.cum_regret[j],
                cum_regret_prime: r.totals.cum_regret_prime[j],
                cum_noneq: r.totals.cum_noneq,
            });
        }
    }
    rows
}

pub fn summary_rows(trace: &Trace) -> Vec<SummaryRow> {
    let mut rows = Vec::with_capacity(trace.checkpoints.len() * trace.n_players());
    for c in &trace.checkpoints {
        for j in 0..trace.n_players() {
            rows.push(SummaryRow {
                seed: trace.seed,
                checkpoint_t: c.t,
                agent: j + 1,
                cum_reward: c.cum_reward[j],
                cum_regret: c.cum_regret[j],
                cum_regret_prime: c.cum_regret_prime[j],
                cum_noneq: c.cum_noneq,
            });
        }
    }
    rows
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Rebuild summary rows from time-series files: keep the rows whose `t` is
/// one of `checkpoints`.
pub fn summary_from_time_series(files: &[PathBuf], checkpoints: &[u64]) -> Result<Vec<SummaryRow>> {
    let mut out = Vec::new();
    for f in files {
        for r in read_csv::<TimeSeriesRow>(f)? {
            if checkpoints.binary_search(&r.t).is_ok() {
                out.push(SummaryRow {
                    seed: r.seed,
                    checkpoint_t: r.t,
                    agent: r.agent,
                    cum_reward: r.cum_reward,
                    cum_regret: r.cum_regret,
                    cum_regret_prime: r.cum_regret_prime,
                    cum_noneq: r.cum_noneq,
                });
            }
        }
    }
    Ok(out)
}

/// Cross-seed statistics at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub t: u64,
    /// Per agent.
    pub cum_regret: Vec<MeanSe>,
    pub cum_regret_prime: Vec<MeanSe>,
    pub cum_reward: Vec<MeanSe>,
    /// Agent-averaged regret of each seed, then across seeds.
    pub mean_regret: MeanSe,
    pub mean_regret_prime: MeanSe,
    pub cum_noneq: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDigest {
    pub seed: u64,
    pub means: Vec<f64>,
    pub z_star: f64,
    pub m_star: Vec<usize>,
    pub final_noneq: u64,
    pub musical_chairs: Vec<Option<MusicalChairsOutcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub horizon: u64,
    pub n_players: usize,
    pub policies: Vec<String>,
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<CheckpointStats>,
    pub runs: Vec<RunDigest>,
}

/// Aggregate summary rows across seeds. Every seed must report the same
/// checkpoints for the same agents.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<CheckpointStats> {
    // t -> agent -> seed -> row
    let mut grid: BTreeMap<u64, BTreeMap<usize, BTreeMap<u64, &SummaryRow>>> = BTreeMap::new();
    for r in rows {
        grid.entry(r.checkpoint_t).or_default().entry(r.agent).or_default().insert(r.seed, r);
    }
    grid.into_iter()
        .map(|(t, agents)| {
            let per_agent = |f: fn(&SummaryRow) -> f64| -> Vec<MeanSe> {
                agents.values().map(|s| MeanSe::of(&s.values().map(|r| f(r)).collect::<Vec<_>>())).collect()
            };
            let seeds: Vec<u64> = agents.values().next().map(|s| s.keys().copied().collect()).unwrap_or_default();
            let averaged = |f: fn(&SummaryRow) -> f64| -> MeanSe {
                let vals: Vec<f64> = seeds
                    .iter()
                    .map(|s| agents.values().map(|a| f(a[s])).sum::<f64>() / agents.len() as f64)
                    .collect();
                MeanSe::of(&vals)
            };
            let first = agents.values().next().expect("at least one agent");
            CheckpointStats {
                t,
                cum_regret: per_agent(|r| r.cum_regret),
                cum_regret_prime: per_agent(|r| r.cum_regret_prime),
                cum_reward: per_agent(|r| r.cum_reward),
                mean_regret: averaged(|r| r.cum_regret),
                mean_regret_prime: averaged(|r| r.cum_regret_prime),
                cum_noneq: MeanSe::of(&first.values().map(|r| r.cum_noneq as f64).collect::<Vec<_>>()),
            }
        })
        .collect()
}

fn digest(trace: &Trace) -> RunDigest {
    RunDigest {
        seed: trace.seed,
        means: trace.means.clone(),
        z_star: trace.equilibrium.z_star,
        m_star: trace.equilibrium.m_star.clone(),
        final_noneq: trace.last().cum_noneq,
        musical_chairs: trace.agents.iter().map(|a| a.musical_chairs).collect(),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Run every seed of `cfg` on `jobs` workers (0 = one per core) and write the
/// CSV and JSON outputs under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<ExperimentSummary> {
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;
    let seeds = cfg.seeds();
    let results: Vec<(Vec<SummaryRow>, RunDigest)> = pool(jobs)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let trace = run_simulation(&cfg.resolve(seed)?, seed)?;
                write_csv(&runs_dir.join(format!("seed_{seed}.csv")), &time_series_rows(&trace))?;
                Ok((summary_rows(&trace), digest(&trace)))
            })
            .collect::<Result<_>>()
    })?;

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (r, d) in results {
        rows.extend(r);
        runs.push(d);
    }
    write_csv(&out.join("summary.csv"), &rows)?;
    let summary = ExperimentSummary {
        horizon: cfg.run.horizon,
        n_players: cfg.n_players(),
        policies: cfg.players.policies().iter().map(|p| p.label()).collect(),
        seeds,
        checkpoints: aggregate(&rows),
        runs,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Paired-seed stability comparison for the config's `deviation` section.
pub fn run_stability(cfg: &ExperimentConfig, jobs: usize) -> Result<StabilityReport> {
    let dev = cfg.deviation.ok_or_else(|| Error::Config("stability needs a deviation section".into()))?;
    if !cfg.fixed_instance() {
        return Err(Error::Config("stability needs a fixed instance".into()));
    }
    let seeds = cfg.seeds();
    let baseline = cfg.resolve(seeds[0])?;
    pool(jobs)?.install(|| stability_report(&baseline, dev.player - 1, dev.policy, &seeds, dev.delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, t: u64, agent: usize, regret: f64, noneq: u64) -> SummaryRow {
        SummaryRow {
            seed,
            checkpoint_t: t,
            agent,
            cum_reward: 0.0,
            cum_regret: regret,
            cum_regret_prime: 0.0,
            cum_noneq: noneq,
        }
    }

    #[test]
    fn headers_are_exact() {
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(TimeSeriesRow {
            seed: 1,
            t: 1,
            agent: 1,
            arm: 1,
            share: 0.5,
            cum_reward: 0.5,
            cum_regret: 0.0,
            cum_regret_prime: 0.0,
            cum_noneq: 0,
        })
        .unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), TIME_SERIES_HEADER);

        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(row(1, 1, 1, 0.0, 0)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
    }

    #[test]
    fn aggregation_by_hand() {
        let rows = vec![row(1, 4, 1, 1.0, 2), row(1, 4, 2, 3.0, 2), row(2, 4, 1, 5.0, 4), row(2, 4, 2, 7.0, 4)];
        let stats = aggregate(&rows);
        assert_eq!(stats.len(), 1);
        let s = &stats[0];
        assert_eq!(s.cum_regret[0].mean, 3.0);
        assert_eq!(s.cum_regret[1].mean, 5.0);
        assert_eq!(s.mean_regret.mean, 4.0);
        assert_eq!(s.mean_regret.se, 2.0);
        assert_eq!(s.cum_noneq.mean, 3.0);
    }
}
