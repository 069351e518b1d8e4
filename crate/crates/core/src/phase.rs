//! Stage-one phase selection and the rule-based baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::CountMatrix;
use crate::sim::{IntersectionState, Phase};

/// Phase chosen together with the per-phase scores that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDecision {
    pub phase: usize,
    pub scores: Vec<f64>,
}

/// WV per phase: defuzzified vehicles summed over the lanes each phase serves.
pub fn phase_wait_counts(counts: &CountMatrix, phases: &[Phase]) -> Vec<u32> {
    phases
        .iter()
        .map(|p| p.lanes.iter().map(|&l| counts.lane_total(l)).sum())
        .collect()
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax_lowest(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.map_or(true, |b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn fuzzy_phase_select(counts: &CountMatrix, phases: &[Phase]) -> Result<PhaseDecision> {
    if phases.is_empty() {
        return Err(Error::InvalidInput("phase set is empty".into()));
    }
    let scores: Vec<f64> = phase_wait_counts(counts, phases).into_iter().map(f64::from).collect();
    let phase = argmax_lowest(&scores).expect("non-empty");
    Ok(PhaseDecision { phase, scores })
}

/// Pressure per phase: Σ over its movements of upstream minus downstream
/// queue. `upstream` is indexed by local lane.
pub fn max_pressure_select(upstream: &[f64], downstream: &[f64], phases: &[Phase]) -> Result<PhaseDecision> {
    if phases.is_empty() {
        return Err(Error::InvalidInput("phase set is empty".into()));
    }
    let scores: Vec<f64> = phases
        .iter()
        .map(|p| p.lanes.iter().map(|&l| upstream[l] - downstream[l]).sum())
        .collect();
    let phase = argmax_lowest(&scores).expect("non-empty");
    Ok(PhaseDecision { phase, scores })
}

/// Max-pressure on ground-truth queues.
pub fn max_pressure_from_state(state: &IntersectionState, phases: &[Phase]) -> Result<PhaseDecision> {
    let up: Vec<f64> = state.queues.iter().map(|&q| q as f64).collect();
    max_pressure_select(&up, &state.downstream_queues, phases)
}

/// Deterministic `(phase, seconds)` cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedTimePlan {
    plan: Vec<(usize, u32)>,
    cursor: usize,
}

impl FixedTimePlan {
    pub fn new(plan: Vec<(usize, u32)>) -> Result<Self> {
        if plan.is_empty() {
            return Err(Error::InvalidInput("fixed-time plan is empty".into()));
        }
        Ok(Self { plan, cursor: 0 })
    }

    /// Every phase in order for `seconds` each.
    pub fn uniform(phase_count: usize, seconds: u32) -> Result<Self> {
        Self::new((0..phase_count).map(|p| (p, seconds)).collect())
    }

    pub fn next_entry(&mut self) -> (usize, u32) {
        let e = self.plan[self.cursor];
        self.cursor = (self.cursor + 1) % self.plan.len();
        e
    }

    pub fn reset(&mut self) {
        self.cursor = 0;
    }
}

/// Round-robin over all phases regardless of traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclePhase {
    count: usize,
    next: usize,
}

impl CyclePhase {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("phase set is empty".into()));
        }
        Ok(Self { count, next: 0 })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn next_phase(&mut self) -> usize {
        let p = self.next;
        self.next = (self.next + 1) % self.count;
        p
    }

    pub fn after(count: usize, phase: usize) -> usize {
        (phase + 1) % count
    }
}
