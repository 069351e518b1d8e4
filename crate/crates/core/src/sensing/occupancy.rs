use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lane-distance quantisation: `slice` metres per column over the first
/// `effective_range` metres upstream of the stop line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceGeometry {
    pub slice: f64,
    pub effective_range: f64,
}

impl SliceGeometry {
    pub fn new(slice: f64, effective_range: f64) -> Result<Self> {
        if !(slice > 0.0) || !slice.is_finite() {
            return Err(Error::Sensing(format!("slice must be positive, got {slice}")));
        }
        if !(effective_range > 0.0) || !effective_range.is_finite() {
            return Err(Error::Sensing(format!(
                "effective range must be positive, got {effective_range}"
            )));
        }
        let ratio = effective_range / slice;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::Sensing(format!(
                "effective range {effective_range} is not a positive multiple of slice {slice}"
            )));
        }
        Ok(Self {
            slice,
            effective_range,
        })
    }

    /// `slice = vehicle length + safety gap`.
    pub fn from_vehicle(vehicle_length: f64, safe_gap: f64, effective_range: f64) -> Result<Self> {
        Self::new(vehicle_length + safe_gap, effective_range)
    }

    pub fn columns(&self) -> usize {
        (self.effective_range / self.slice).round() as usize
    }

    /// Column for a distance, or `None` beyond the effective range.
    /// Distances exactly on a slice edge go to the lower-indexed slice
    /// boundary, i.e. `floor(d / slice)`.
    pub fn column_of(&self, distance: f64) -> Option<usize> {
        if distance >= self.effective_range {
            return None;
        }
        Some(((distance / self.slice).floor() as usize).min(self.columns() - 1))
    }
}

/// Binary lane × slice matrix of sensed vehicle positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyMatrix {
    lanes: usize,
    slices: usize,
    cells: Vec<u8>,
}

impl OccupancyMatrix {
    pub fn empty(lanes: usize, slices: usize) -> Self {
        Self {
            lanes,
            slices,
            cells: vec![0; lanes * slices],
        }
    }

    pub fn from_cells(lanes: usize, slices: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != lanes * slices || cells.iter().any(|&c| c > 1) {
            return Err(Error::Sensing("occupancy cells must be a binary lanes x slices grid".into()));
        }
        Ok(Self { lanes, slices, cells })
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn get(&self, lane: usize, slice: usize) -> u8 {
        self.cells[lane * self.slices + slice]
    }

    pub fn set(&mut self, lane: usize, slice: usize) {
        self.cells[lane * self.slices + slice] = 1;
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Entries as reals, lanes × slices.
    pub fn to_matrix(&self) -> crate::nn::Matrix {
        crate::nn::Matrix::from_vec(
            self.lanes,
            self.slices,
            self.cells.iter().map(|&c| c as f64).collect(),
        )
        .expect("sized by construction")
    }
}

/// Marks `X[i, j] = 1` when lane `i` has a vehicle whose stop-line distance
/// falls in slice `j`. Vehicles at or beyond the effective range are ignored.
pub fn build_occupancy(distances: &[Vec<f64>], geometry: &SliceGeometry) -> Result<OccupancyMatrix> {
    let mut x = OccupancyMatrix::empty(distances.len(), geometry.columns());
    for (lane, ds) in distances.iter().enumerate() {
        for &d in ds {
            if !(d >= 0.0) {
                return Err(Error::Sensing(format!(
                    "lane {lane}: distance {d} is negative or not a number"
                )));
            }
            if let Some(col) = geometry.column_of(d) {
                x.set(lane, col);
            }
        }
    }
    Ok(x)
}
