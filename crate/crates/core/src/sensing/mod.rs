//! Sparse occupancy sensing over a noisy compressed channel.

mod bpdn;
mod channel;
mod defuzzify;
mod measurement;
mod noise;
mod occupancy;

pub use bpdn::{recover, BpdnConfig, Recovery};
pub use channel::{transmit, ChannelReading, DeltaPolicy, SensingChannel, SensingConfig};
pub use defuzzify::{defuzzify, defuzzify_value, CountMatrix};
pub use measurement::MeasurementMatrix;
pub use noise::{calibrate_sigma_base, NoiseKind, NoiseModel, SIGMA_BASE_FRACTION};
pub use occupancy::{build_occupancy, OccupancyMatrix, SliceGeometry};
