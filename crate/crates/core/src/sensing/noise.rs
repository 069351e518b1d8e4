use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Fraction of the noise-free measurement RMS that one unit of noise scale
/// corresponds to.
pub const SIGMA_BASE_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            other => Err(Error::Sensing(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// Additive transmission noise with standard deviation `scale · sigma_base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub scale: f64,
    pub sigma_base: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, scale: f64, sigma_base: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Sensing(format!("noise scale must be >= 0, got {scale}")));
        }
        if !(sigma_base >= 0.0) || !sigma_base.is_finite() {
            return Err(Error::Sensing(format!("sigma_base must be >= 0, got {sigma_base}")));
        }
        Ok(Self {
            kind,
            scale,
            sigma_base,
        })
    }

    pub fn silent() -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            scale: 0.0,
            sigma_base: 0.0,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.scale * self.sigma_base
    }

    pub fn is_silent(&self) -> bool {
        self.std_dev() == 0.0
    }

    /// Expected norm of the noise on one `z`-long measurement column.
    pub fn expected_column_norm(&self, z: usize) -> f64 {
        (z as f64).sqrt() * self.std_dev()
    }

    pub fn corrupt<R: Rng + ?Sized>(&self, y: &mut Matrix, rng: &mut R) {
        let s = self.std_dev();
        if s == 0.0 {
            return;
        }
        match self.kind {
            NoiseKind::Gaussian => {
                let normal = Normal::new(0.0, s).expect("finite std");
                for v in y.as_mut_slice() {
                    *v += normal.sample(rng);
                }
            }
            NoiseKind::Uniform => {
                let half = 3f64.sqrt() * s;
                for v in y.as_mut_slice() {
                    *v += rng.gen_range(-half..half);
                }
            }
        }
    }
}

/// `0.3 × RMS` over every entry of the noise-free measurements `A·X`.
pub fn calibrate_sigma_base<'a>(products: impl IntoIterator<Item = &'a Matrix>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for m in products {
        sum += m.as_slice().iter().map(|v| v * v).sum::<f64>();
        count += m.len();
    }
    if count == 0 {
        return 0.0;
    }
    SIGMA_BASE_FRACTION * (sum / count as f64).sqrt()
}
