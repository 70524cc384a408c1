//! Per-run metrics and batch execution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{run_scenario, PlannerKind, RunTrace};

use super::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Distance travelled by the robot (m).
    pub path_length: f64,
    /// Time until arrival, or until the run ended otherwise (s).
    pub total_time: f64,
    /// Closest robot-to-person center distance; `None` without people.
    pub min_hr_distance: Option<f64>,
    pub collided: bool,
    pub arrived: bool,
}

pub fn compute_metrics(trace: &RunTrace) -> RunMetrics {
    let path_length = trace
        .ticks
        .windows(2)
        .map(|w| w[0].robot.position().distance(w[1].robot.position()))
        .sum();
    let min_hr_distance = trace.ticks.iter().filter_map(|t| t.min_hr_distance).reduce(f64::min);
    RunMetrics {
        path_length,
        total_time: trace.outcome.final_tick as f64 * trace.header.d_t,
        min_hr_distance,
        collided: trace.outcome.collided,
        arrived: trace.outcome.arrived,
    }
}

/// One finished run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: String,
    pub planner: PlannerKind,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub trace: RunTrace,
}

/// Runs every (scenario, planner, repeat) triple in parallel. Repeat `r`
/// uses seed `scenario.seed + r`. Results come back ordered by scenario
/// name, planner and repeat.
pub fn run_suite(scenarios: &[Scenario], planners: &[PlannerKind], repeats: Option<usize>) -> Result<Vec<RunRecord>> {
    let mut jobs = Vec::new();
    for s in scenarios {
        for &p in planners {
            for r in 0..repeats.unwrap_or(s.repeats) {
                jobs.push((s, p, s.seed.wrapping_add(r as u64)));
            }
        }
    }
    let mut records = jobs
        .par_iter()
        .map(|&(s, planner, seed)| {
            let trace = run_scenario(s, planner, seed)?;
            Ok(RunRecord {
                scenario: s.name.clone(),
                planner,
                seed,
                metrics: compute_metrics(&trace),
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.planner.cmp(&b.planner))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}

pub fn run_batch(scenario: &Scenario, planners: &[PlannerKind], repeats: usize) -> Result<Vec<RunRecord>> {
    run_suite(std::slice::from_ref(scenario), planners, Some(repeats))
}
