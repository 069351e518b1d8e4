use serde::{Deserialize, Serialize};

use crate::nn::Matrix;

/// Integer lane × slice vehicle counts after defuzzification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    lanes: usize,
    slices: usize,
    counts: Vec<u32>,
}

impl CountMatrix {
    pub fn zeros(lanes: usize, slices: usize) -> Self {
        Self {
            lanes,
            slices,
            counts: vec![0; lanes * slices],
        }
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn get(&self, lane: usize, slice: usize) -> u32 {
        self.counts[lane * self.slices + slice]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn lane_total(&self, lane: usize) -> u32 {
        self.counts[lane * self.slices..(lane + 1) * self.slices].iter().sum()
    }

    /// Sum over slices `[from, to)` of one lane.
    pub fn lane_range(&self, lane: usize, from: usize, to: usize) -> u32 {
        let row = &self.counts[lane * self.slices..(lane + 1) * self.slices];
        row[from.min(self.slices)..to.min(self.slices)].iter().sum()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.lanes,
            self.slices,
            self.counts.iter().map(|&c| c as f64).collect(),
        )
        .expect("sized by construction")
    }
}

/// `round(max(x, 0))`, rounding halves away from zero.
pub fn defuzzify_value(x: f64) -> u32 {
    if x.is_nan() {
        return 0;
    }
    let r = x.max(0.0).round();
    if r >= u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

pub fn defuzzify(x_hat: &Matrix) -> CountMatrix {
    CountMatrix {
        lanes: x_hat.rows(),
        slices: x_hat.cols(),
        counts: x_hat.as_slice().iter().map(|&v| defuzzify_value(v)).collect(),
    }
}
