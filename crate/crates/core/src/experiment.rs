//! Episode driver, multi-seed batches and parameter sweeps.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::{MatchingController, RandomController};
use crate::env::{AgentObservation, Environment, JointAction};
use crate::error::{Error, Result};
use crate::learn::IndependentLearners;
use crate::metrics::{
    episode_series, format_sig9, write_csv, EpisodeLog, LogMeta, RewardSeries, SlotRecord,
};
use crate::scenario::Scenario;

/// Anything that picks a joint action each slot.
pub trait Controller {
    fn name(&self) -> &'static str;

    fn decide(&mut self, env: &Environment) -> Result<JointAction>;

    /// Called after every step with the slot that was just played.
    fn observe(&mut self, _slot: usize, _observations: &[AgentObservation]) {}
}

/// Plays one episode of `scenario.world.num_slots` slots.
pub fn run_controller<C: Controller + ?Sized>(
    scenario: &Scenario,
    seed: u64,
    controller: &mut C,
) -> Result<EpisodeLog> {
    let mut env = Environment::reset(scenario, seed)?;
    let meta = LogMeta {
        scenario_hash: scenario.hash(),
        seed,
        algorithm: controller.name().to_string(),
    };
    let mut log = EpisodeLog::new(meta, scenario.fleet.num_uavs);
    for slot in 0..scenario.world.num_slots {
        let joint = controller.decide(&env)?;
        let outcome = env.step(&joint)?;
        controller.observe(slot, &outcome.observations);
        log.push(SlotRecord {
            slot,
            states: outcome.observations.iter().map(|o| o.state).collect(),
            actions: joint.actions,
            rewards: outcome.observations.iter().map(|o| o.reward).collect(),
            sinr: outcome.sinr,
        })?;
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Marl,
    Match,
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Marl, Algorithm::Match, Algorithm::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Marl => "marl",
            Algorithm::Match => "match",
            Algorithm::Random => "random",
        }
    }

    /// Rejects pairings the algorithm cannot handle.
    pub fn check(self, scenario: &Scenario) -> Result<()> {
        if self == Algorithm::Match
            && (scenario.radio.num_subchannels != 1 || scenario.radio.num_levels != 1)
        {
            return Err(Error::Unsupported(format!(
                "match needs K = 1 and J = 1, scenario has K = {} and J = {}",
                scenario.radio.num_subchannels, scenario.radio.num_levels
            )));
        }
        if self == Algorithm::Match && scenario.fleet.num_uavs > scenario.fleet.num_users {
            return Err(Error::Unsupported(format!(
                "match needs at least as many users as UAVs, scenario has M = {} and L = {}",
                scenario.fleet.num_uavs, scenario.fleet.num_users
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "marl" => Ok(Algorithm::Marl),
            "match" | "matching" => Ok(Algorithm::Match),
            "random" | "rand" => Ok(Algorithm::Random),
            other => Err(Error::invalid(format!(
                "unknown algorithm `{other}`, expected marl, match or random"
            ))),
        }
    }
}

pub fn run_algorithm(scenario: &Scenario, algorithm: Algorithm, seed: u64) -> Result<EpisodeLog> {
    algorithm.check(scenario)?;
    match algorithm {
        Algorithm::Marl => {
            let mut c =
                IndependentLearners::new(scenario.action_space(), &scenario.agent_configs(), seed)?;
            run_controller(scenario, seed, &mut c)
        }
        Algorithm::Match => {
            let mut c = MatchingController::new(
                scenario.radio.power_levels()?,
                scenario.radio.reward_params(),
            );
            run_controller(scenario, seed, &mut c)
        }
        Algorithm::Random => {
            let mut c =
                RandomController::new(scenario.action_space(), scenario.fleet.num_uavs, seed);
            run_controller(scenario, seed, &mut c)
        }
    }
}

/// Runs one episode and aggregates it with the scenario's discount.
pub fn run_series(
    scenario: &Scenario,
    algorithm: Algorithm,
    seed: u64,
) -> Result<(EpisodeLog, RewardSeries)> {
    let log = run_algorithm(scenario, algorithm, seed)?;
    let series = episode_series(&log, scenario.learning.discount)?;
    Ok((log, series))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub final_v_avg: f64,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: Vec<SeedResult>,
}

impl AlgorithmSummary {
    pub fn mean(&self) -> f64 {
        mean_std(&self.final_values()).0
    }

    pub fn std(&self) -> f64 {
        mean_std(&self.final_values()).1
    }

    fn final_values(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_v_avg).collect()
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn check_batch(scenario: &Scenario, algorithms: &[Algorithm], seeds: &[u64]) -> Result<()> {
    scenario.validate()?;
    if seeds.is_empty() {
        return Err(Error::invalid("seed list is empty"));
    }
    if algorithms.is_empty() {
        return Err(Error::invalid("algorithm list is empty"));
    }
    for a in algorithms {
        a.check(scenario)?;
    }
    Ok(())
}

/// Writes `<algo>_seed<seed>.csv` for every pair plus `summary.csv`.
pub fn run(
    scenario: &Scenario,
    algorithms: &[Algorithm],
    seeds: &[u64],
    out_dir: &Path,
    emit_plot_script: bool,
) -> Result<Vec<AlgorithmSummary>> {
    check_batch(scenario, algorithms, seeds)?;
    create_dir(out_dir)?;
    let mut summaries = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let (log, series) = run_series(scenario, algorithm, seed)?;
            let csv = out_dir.join(format!("{algorithm}_seed{seed}.csv"));
            write_csv(&series, &log, &csv)?;
            runs.push(SeedResult {
                seed,
                final_v_avg: series.final_v_avg().unwrap_or(0.0),
                csv,
            });
        }
        summaries.push(AlgorithmSummary { algorithm, runs });
    }

    let mut text = String::from("algorithm,seeds,mean_final_v_avg,std_final_v_avg\n");
    for s in &summaries {
        text.push_str(&format!(
            "{},{},{},{}\n",
            s.algorithm,
            s.runs.len(),
            format_sig9(s.mean()),
            format_sig9(s.std())
        ));
    }
    write_text(&out_dir.join("summary.csv"), &text)?;
    if emit_plot_script {
        write_text(&out_dir.join("plot.py"), PLOT_SCRIPT)?;
    }
    Ok(summaries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Epsilon,
    Speed,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::Speed => "speed",
        }
    }

    /// Copy of `scenario` with the parameter set to `value`, validated.
    pub fn apply(self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = scenario.clone();
        match self {
            SweepParam::Epsilon => s.learning.epsilon = value,
            SweepParam::Speed => s.fleet.speed_mps = value,
        }
        s.validate()?;
        Ok(s)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epsilon" | "eps" => Ok(SweepParam::Epsilon),
            "speed" => Ok(SweepParam::Speed),
            other => Err(Error::invalid(format!(
                "unknown sweep parameter `{other}`, expected epsilon or speed"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub final_v_avg: f64,
    pub series_file: String,
}

/// Runs the cross product of values, algorithms and seeds and writes one
/// series CSV per run plus the long-format `sweep.csv`.
pub fn sweep(
    scenario: &Scenario,
    param: SweepParam,
    values: &[f64],
    algorithms: &[Algorithm],
    seeds: &[u64],
    out_dir: &Path,
    emit_plot_script: bool,
) -> Result<Vec<SweepRow>> {
    check_batch(scenario, algorithms, seeds)?;
    if values.is_empty() {
        return Err(Error::invalid("sweep value list is empty"));
    }
    if param == SweepParam::Epsilon && algorithms.iter().any(|&a| a != Algorithm::Marl) {
        return Err(Error::Unsupported(
            "epsilon sweeps only apply to marl".into(),
        ));
    }
    let variants = values
        .iter()
        .map(|&v| param.apply(scenario, v))
        .collect::<Result<Vec<_>>>()?;
    create_dir(out_dir)?;

    let mut rows = Vec::new();
    for (&value, variant) in values.iter().zip(&variants) {
        for &algorithm in algorithms {
            for &seed in seeds {
                let (log, series) = run_series(variant, algorithm, seed)?;
                let file = format!(
                    "{algorithm}_{}{}_seed{seed}.csv",
                    param.as_str(),
                    format_sig9(value)
                );
                write_csv(&series, &log, &out_dir.join(&file))?;
                rows.push(SweepRow {
                    param,
                    value,
                    algorithm,
                    seed,
                    final_v_avg: series.final_v_avg().unwrap_or(0.0),
                    series_file: file,
                });
            }
        }
    }

    let mut text = String::from("param,value,algorithm,seed,final_v_avg,series_file\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.param.as_str(),
            format_sig9(r.value),
            r.algorithm,
            r.seed,
            format_sig9(r.final_v_avg),
            r.series_file
        ));
    }
    write_text(&out_dir.join("sweep.csv"), &text)?;
    if emit_plot_script {
        write_text(&out_dir.join("plot.py"), PLOT_SCRIPT)?;
    }
    Ok(rows)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot every per-run CSV in this directory: fleet v_avg against slot."""
import csv
import glob
import os
import sys

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
files = sorted(f for f in glob.glob(os.path.join(here, "*.csv"))
               if os.path.basename(f) not in ("summary.csv", "sweep.csv"))
if not files:
    sys.exit("no series found")

fig, ax = plt.subplots()
for path in files:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    ax.plot([int(r["t"]) for r in rows], [float(r["v_avg"]) for r in rows],
            label=os.path.splitext(os.path.basename(path))[0], linewidth=0.8)
ax.set_xlabel("slot")
ax.set_ylabel("average cumulative reward")
if len(files) <= 12:
    ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(here, "v_avg.png"), dpi=150)
"#;

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        let mut s = Scenario::reference_defaults(2, 10, 1, 1, 30);
        s.fleet.start_angles_deg = Some(vec![0.0, 45.0]);
        s
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("greedy".parse::<Algorithm>().is_err());
    }

    #[test]
    fn match_rejects_multiple_levels() {
        let s = Scenario::reference_defaults(2, 10, 1, 3, 5);
        assert!(matches!(
            run_algorithm(&s, Algorithm::Match, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn every_algorithm_produces_a_full_log() {
        let s = small();
        for a in Algorithm::ALL {
            let log = run_algorithm(&s, a, 3).unwrap();
            assert_eq!(log.len(), 30);
            assert_eq!(log.meta.algorithm, a.as_str());
            assert_eq!(log.meta.scenario_hash, s.hash());
        }
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            run(&small(), &[Algorithm::Marl], &[], dir.path(), false),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn run_writes_one_file_per_seed_and_algorithm() {
        let dir = tempfile::tempdir().unwrap();
        let summaries = run(&small(), &Algorithm::ALL, &[0, 1], dir.path(), true).unwrap();
        assert_eq!(summaries.len(), 3);
        for a in Algorithm::ALL {
            for seed in [0, 1] {
                assert!(dir.path().join(format!("{a}_seed{seed}.csv")).exists());
            }
        }
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 4);
        assert!(dir.path().join("plot.py").exists());
    }

    #[test]
    fn single_point_sweep_matches_run() {
        let dir = tempfile::tempdir().unwrap();
        let s = small();
        let rows = sweep(
            &s,
            SweepParam::Epsilon,
            &[0.5],
            &[Algorithm::Marl],
            &[2],
            dir.path(),
            false,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        let (_, series) = run_series(&s, Algorithm::Marl, 2).unwrap();
        assert_eq!(rows[0].final_v_avg, series.final_v_avg().unwrap());
        let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert!(text.starts_with("param,value,algorithm,seed,final_v_avg,series_file\n"));
    }

    #[test]
    fn sweep_rejects_invalid_values() {
        let dir = tempfile::tempdir().unwrap();
        assert!(sweep(
            &small(),
            SweepParam::Epsilon,
            &[1.5],
            &[Algorithm::Marl],
            &[0],
            dir.path(),
            false
        )
        .is_err());
        assert!(sweep(
            &small(),
            SweepParam::Epsilon,
            &[0.1],
            &[Algorithm::Random],
            &[0],
            dir.path(),
            false
        )
        .is_err());
    }
}
