use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bpdn::{recover, BpdnConfig, Recovery};
use super::defuzzify::{defuzzify, CountMatrix};
use super::measurement::MeasurementMatrix;
use super::noise::{NoiseKind, NoiseModel};
use super::occupancy::{build_occupancy, OccupancyMatrix, SliceGeometry};
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// How the recovery noise bound δ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    /// `√z · scale · σ_base`
    ExpectedNoiseNorm,
    Fixed(f64),
}

/// Scenario-level sensing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub vehicle_length: f64,
    pub safe_gap: f64,
    pub effective_range: f64,
    pub z: usize,
    pub matrix_seed: u64,
    pub noise_kind: NoiseKind,
    pub noise_scale: f64,
    /// Overrides the calibrated base noise magnitude.
    pub sigma_base: Option<f64>,
    pub delta: DeltaPolicy,
    pub bpdn: BpdnConfig,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            vehicle_length: 6.0,
            safe_gap: 2.0,
            effective_range: 160.0,
            z: 20,
            matrix_seed: 2024,
            noise_kind: NoiseKind::Gaussian,
            noise_scale: 0.0,
            sigma_base: None,
            delta: DeltaPolicy::ExpectedNoiseNorm,
            bpdn: BpdnConfig::default(),
        }
    }
}

impl SensingConfig {
    pub fn geometry(&self) -> Result<SliceGeometry> {
        SliceGeometry::from_vehicle(self.vehicle_length, self.safe_gap, self.effective_range)
    }
}

/// Everything the channel produced for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReading {
    pub occupancy: OccupancyMatrix,
    pub received: Matrix,
    pub recovery: Recovery,
    pub counts: CountMatrix,
}

/// Sensor → controller link for one intersection: fuzzify, measure, add
/// noise, recover and defuzzify.
#[derive(Debug, Clone)]
pub struct SensingChannel {
    geometry: SliceGeometry,
    matrix: MeasurementMatrix,
    noise: NoiseModel,
    delta: f64,
    bpdn: BpdnConfig,
    rng: ChaCha8Rng,
    unconverged_columns: u64,
}

impl SensingChannel {
    /// `sigma_base` is required when the configured noise scale is non-zero
    /// and the config carries no override.
    pub fn new(
        config: &SensingConfig,
        lanes: usize,
        matrix_seed: u64,
        sigma_base: Option<f64>,
        noise_seed: u64,
    ) -> Result<Self> {
        let geometry = config.geometry()?;
        let matrix = MeasurementMatrix::negotiate(matrix_seed, config.z, lanes)?;
        let base = match (config.sigma_base, sigma_base) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) if config.noise_scale == 0.0 => 0.0,
            (None, None) => {
                return Err(Error::Sensing(
                    "noise scale is non-zero but no sigma_base was calibrated or configured".into(),
                ))
            }
        };
        let noise = NoiseModel::new(config.noise_kind, config.noise_scale, base)?;
        let delta = match config.delta {
            DeltaPolicy::ExpectedNoiseNorm => noise.expected_column_norm(config.z),
            DeltaPolicy::Fixed(d) if d >= 0.0 => d,
            DeltaPolicy::Fixed(d) => {
                return Err(Error::Sensing(format!("fixed delta must be >= 0, got {d}")))
            }
        };
        Ok(Self {
            geometry,
            matrix,
            noise,
            delta,
            bpdn: config.bpdn,
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
            unconverged_columns: 0,
        })
    }

    pub fn geometry(&self) -> &SliceGeometry {
        &self.geometry
    }

    pub fn matrix(&self) -> &MeasurementMatrix {
        &self.matrix
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn unconverged_columns(&self) -> u64 {
        self.unconverged_columns
    }

    /// Noise-free `A·X` for a set of lane distances (calibration input).
    pub fn clean_measurement(&self, distances: &[Vec<f64>]) -> Result<Matrix> {
        let x = build_occupancy(distances, &self.geometry)?;
        self.matrix.measure(&x.to_matrix())
    }

    pub fn sense(&mut self, distances: &[Vec<f64>]) -> Result<ChannelReading> {
        if distances.len() != self.matrix.cols() {
            return Err(Error::Shape(format!(
                "channel expects {} lanes, got {}",
                self.matrix.cols(),
                distances.len()
            )));
        }
        let occupancy = build_occupancy(distances, &self.geometry)?;
        self.roundtrip(occupancy)
    }

    /// Transmit and recover an already-built occupancy matrix.
    pub fn roundtrip(&mut self, occupancy: OccupancyMatrix) -> Result<ChannelReading> {
        let mut received = self.matrix.measure(&occupancy.to_matrix())?;
        self.noise.corrupt(&mut received, &mut self.rng);
        let recovery = if self.noise.is_silent() && self.delta == 0.0 && occupancy.count() == 0 {
            // nothing sent, nothing to solve
            Recovery {
                x_hat: Matrix::zeros(occupancy.lanes(), occupancy.slices()),
                residuals: vec![0.0; occupancy.slices()],
                converged: vec![true; occupancy.slices()],
            }
        } else {
            recover(&self.matrix, &received, self.delta, &self.bpdn)?
        };
        let bad = recovery.converged.iter().filter(|c| !**c).count() as u64;
        if bad > 0 {
            log::debug!("{bad} recovery columns did not meet the noise bound");
            self.unconverged_columns += bad;
        }
        let counts = defuzzify(&recovery.x_hat);
        Ok(ChannelReading {
            occupancy,
            received,
            recovery,
            counts,
        })
    }
}

/// `y′ = A·X + η` with a caller-owned RNG.
pub fn transmit<R: rand::Rng + ?Sized>(
    a: &MeasurementMatrix,
    x: &OccupancyMatrix,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Matrix> {
    let mut y = a.measure(&x.to_matrix())?;
    noise.corrupt(&mut y, rng);
    Ok(y)
}
