use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::sensing::CountMatrix;

/// How slices are grouped into per-lane segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentLayout {
    pub segments: usize,
    /// Slices per segment (`k`); the last segment absorbs any remainder.
    pub slices_per_segment: usize,
}

impl Default for SegmentLayout {
    fn default() -> Self {
        Self {
            segments: 4,
            slices_per_segment: 4,
        }
    }
}

impl SegmentLayout {
    /// Slice range `[from, to)` of segment `s` over `slices` columns.
    pub fn range(&self, s: usize, slices: usize) -> (usize, usize) {
        let from = (s * self.slices_per_segment).min(slices);
        let to = if s + 1 == self.segments {
            slices
        } else {
            ((s + 1) * self.slices_per_segment).min(slices)
        };
        (from, to)
    }
}

/// Input to the duration networks: per-lane segment counts plus the phase
/// chosen by stage one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationState {
    /// Row-major lanes × segments.
    pub segments: Vec<f64>,
    pub lanes: usize,
    pub phase: usize,
}

impl DurationState {
    pub fn from_counts(counts: &CountMatrix, layout: &SegmentLayout, phase: usize) -> Result<Self> {
        if layout.segments == 0 || layout.slices_per_segment == 0 {
            return Err(Error::InvalidInput("segment layout must be non-empty".into()));
        }
        let mut segments = Vec::with_capacity(counts.lanes() * layout.segments);
        for lane in 0..counts.lanes() {
            for s in 0..layout.segments {
                let (from, to) = layout.range(s, counts.slices());
                segments.push(counts.lane_range(lane, from, to) as f64);
            }
        }
        Ok(Self {
            segments,
            lanes: counts.lanes(),
            phase,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len() / self.lanes.max(1)
    }
}

/// A batch of states stacked for one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBatch {
    /// `(batch · lanes) × segments`
    pub segments: Matrix,
    pub phases: Vec<usize>,
    pub lanes: usize,
}

impl StateBatch {
    pub fn new(states: &[&DurationState]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidInput("empty state batch".into()))?;
        let (lanes, segs) = (first.lanes, first.segment_count());
        let mut data = Vec::with_capacity(states.len() * lanes * segs);
        for s in states {
            if s.lanes != lanes || s.segment_count() != segs || s.segments.len() != lanes * segs {
                return Err(Error::Shape("states in a batch must share lanes and segments".into()));
            }
            data.extend_from_slice(&s.segments);
        }
        Ok(Self {
            segments: Matrix::from_vec(states.len() * lanes, segs, data)?,
            phases: states.iter().map(|s| s.phase).collect(),
            lanes,
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}
