use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const YELLOW_SECS: u32 = 3;
pub const ALL_RED_SECS: u32 = 2;

/// Admissible green durations in whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationBounds {
    pub low: u32,
    pub high: u32,
}

impl Default for DurationBounds {
    fn default() -> Self {
        Self { low: 1, high: 40 }
    }
}

impl DurationBounds {
    pub fn new(low: u32, high: u32) -> Result<Self> {
        if low == 0 || low >= high {
            return Err(Error::InvalidInput(format!("duration bounds need 0 < low < high, got [{low}, {high}]")));
        }
        Ok(Self { low, high })
    }

    pub fn contains(&self, d: u32) -> bool {
        (self.low..=self.high).contains(&d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Light {
    Green(usize),
    /// Clearing the given phase.
    Yellow(usize),
    AllRed,
}

/// Signal plan of one intersection: the remaining stages and their seconds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignalState {
    phase: Option<usize>,
    stages: VecDeque<(Light, u32)>,
    green_elapsed: u32,
}

impl SignalState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Last phase that was (or is) green.
    pub fn phase(&self) -> Option<usize> {
        self.phase
    }

    pub fn light(&self) -> Light {
        match self.stages.front() {
            Some((l, _)) => *l,
            None => self.phase.map_or(Light::AllRed, Light::Green),
        }
    }

    pub fn needs_decision(&self) -> bool {
        self.stages.is_empty()
    }

    /// Seconds the current phase has been green, including extensions.
    pub fn green_elapsed(&self) -> u32 {
        self.green_elapsed
    }

    pub fn stages(&self) -> impl Iterator<Item = &(Light, u32)> {
        self.stages.iter()
    }

    /// Schedules `phase` green for `duration` seconds, preceded by yellow
    /// and all-red when it differs from the current phase.
    pub fn apply_phase_change(
        &mut self,
        intersection: usize,
        phase: usize,
        phase_count: usize,
        duration: u32,
        bounds: DurationBounds,
    ) -> Result<()> {
        if phase >= phase_count {
            return Err(Error::UnknownPhase { intersection, phase });
        }
        if !bounds.contains(duration) {
            return Err(Error::DurationOutOfRange {
                duration,
                low: bounds.low,
                high: bounds.high,
            });
        }
        self.stages.clear();
        match self.phase {
            Some(p) if p != phase => {
                self.stages.push_back((Light::Yellow(p), YELLOW_SECS));
                self.stages.push_back((Light::AllRed, ALL_RED_SECS));
            }
            _ => {}
        }
        self.stages.push_back((Light::Green(phase), duration));
        Ok(())
    }

    /// Advances one second.
    pub fn tick(&mut self) {
        let Some((light, left)) = self.stages.front_mut() else {
            return;
        };
        match *light {
            Light::Green(p) => {
                if self.phase != Some(p) {
                    self.phase = Some(p);
                    self.green_elapsed = 0;
                }
                self.green_elapsed += 1;
            }
            Light::Yellow(_) | Light::AllRed => {
                self.green_elapsed = 0;
            }
        }
        *left -= 1;
        if *left == 0 {
            self.stages.pop_front();
        }
    }
}
