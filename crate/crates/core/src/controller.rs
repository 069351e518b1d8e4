//! The decision contract shared by every signal controller, plus the
//! rule-based baselines.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{max_pressure_from_state, max_pressure_select, FixedTimePlan};
use crate::sensing::CountMatrix;
use crate::sim::{DurationBounds, IntersectionState, Phase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub phase: usize,
    pub duration: u32,
}

/// Everything a controller may look at when an intersection's plan ends.
#[derive(Debug, Clone, Copy)]
pub struct DecisionInput<'a> {
    pub intersection: usize,
    pub time: u32,
    pub episode_length: u32,
    /// Ground truth; learned controllers only use it for rewards.
    pub state: &'a IntersectionState,
    /// Defuzzified counts delivered by the sensing channel, when wired.
    pub sensed: Option<&'a CountMatrix>,
    pub phases: &'a [Phase],
    pub bounds: DurationBounds,
}

pub trait SignalController {
    fn kind(&self) -> ControllerKind;

    /// Whether decisions need the sensing channel's counts.
    fn needs_sensing(&self) -> bool;

    fn begin_episode(&mut self, _intersections: usize, _episode: u64) -> Result<()> {
        Ok(())
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> Result<Decision>;

    fn end_episode(&mut self) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[serde(rename = "fuzzylight")]
    FuzzyLight,
    FixedTime,
    MaxPressure,
    FuzzyCycle,
    FuzzyPhaseFixedDuration,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::FuzzyLight,
        ControllerKind::FixedTime,
        ControllerKind::MaxPressure,
        ControllerKind::FuzzyCycle,
        ControllerKind::FuzzyPhaseFixedDuration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::FuzzyLight => "fuzzylight",
            ControllerKind::FixedTime => "fixed_time",
            ControllerKind::MaxPressure => "max_pressure",
            ControllerKind::FuzzyCycle => "fuzzy_cycle",
            ControllerKind::FuzzyPhaseFixedDuration => "fuzzy_phase_fixed_duration",
        }
    }

    /// Controllers with a trained duration network.
    pub fn is_learned(self) -> bool {
        matches!(self, ControllerKind::FuzzyLight | ControllerKind::FuzzyCycle)
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownController(s.to_string()))
    }
}

/// Cycles through a fixed `(phase, seconds)` plan at every intersection.
#[derive(Debug, Clone)]
pub struct FixedTimeController {
    template: FixedTimePlan,
    plans: Vec<FixedTimePlan>,
}

impl FixedTimeController {
    pub fn new(plan: FixedTimePlan) -> Self {
        Self {
            template: plan,
            plans: Vec::new(),
        }
    }
}

impl SignalController for FixedTimeController {
    fn kind(&self) -> ControllerKind {
        ControllerKind::FixedTime
    }

    fn needs_sensing(&self) -> bool {
        false
    }

    fn begin_episode(&mut self, intersections: usize, _episode: u64) -> Result<()> {
        let mut fresh = self.template.clone();
        fresh.reset();
        self.plans = vec![fresh; intersections];
        Ok(())
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> Result<Decision> {
        let plan = self
            .plans
            .get_mut(input.intersection)
            .ok_or_else(|| Error::InvalidInput("fixed-time controller used before begin_episode".into()))?;
        let (phase, duration) = plan.next_entry();
        Ok(Decision { phase, duration })
    }
}

/// Max-pressure phase with a constant green. With `use_sensing`, the
/// upstream term is the sensed vehicle count per lane.
#[derive(Debug, Clone)]
pub struct MaxPressureController {
    pub green: u32,
    pub use_sensing: bool,
}

impl SignalController for MaxPressureController {
    fn kind(&self) -> ControllerKind {
        ControllerKind::MaxPressure
    }

    fn needs_sensing(&self) -> bool {
        self.use_sensing
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> Result<Decision> {
        let d = match (self.use_sensing, input.sensed) {
            (true, Some(c)) => {
                let up: Vec<f64> = (0..c.lanes()).map(|l| c.lane_total(l) as f64).collect();
                max_pressure_select(&up, &input.state.downstream_queues, input.phases)?
            }
            (true, None) => return Err(Error::InvalidInput("max-pressure expected sensed counts".into())),
            (false, _) => max_pressure_from_state(input.state, input.phases)?,
        };
        Ok(Decision {
            phase: d.phase,
            duration: self.green,
        })
    }
}
