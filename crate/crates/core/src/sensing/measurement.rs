use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Random `z × n` measurement matrix agreed between sensor and controller.
/// Entries are i.i.d. `N(0, 1/z)`; the same seed always yields the same
/// matrix on both ends.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    seed: u64,
    a: Matrix,
    gram: Matrix,
    lipschitz: f64,
    /// Lower Cholesky factor of AᵀA when A has full column rank.
    cholesky: Option<DMatrix<f64>>,
}

impl MeasurementMatrix {
    pub fn negotiate(seed: u64, z: usize, n: usize) -> Result<Self> {
        if z == 0 || n == 0 {
            return Err(Error::Sensing(format!("measurement matrix must be non-empty, got {z}x{n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (1.0 / z as f64).sqrt()).expect("finite std");
        let data = (0..z * n).map(|_| normal.sample(&mut rng)).collect();
        let a = Matrix::from_vec(z, n, data)?;
        Ok(Self::from_matrix(seed, a))
    }

    /// Wraps an explicit matrix (tests, external negotiation).
    pub fn from_matrix(seed: u64, a: Matrix) -> Self {
        let gram = a.transpose().matmul(&a).expect("AᵀA is square");
        let n = gram.rows();
        let g = DMatrix::from_row_slice(n, n, gram.as_slice());
        let lipschitz = g
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let cholesky = if a.rows() >= n {
            g.cholesky().map(|c| c.l())
        } else {
            None
        };
        Self {
            seed,
            a,
            gram,
            lipschitz,
            cholesky,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub(crate) fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Largest eigenvalue of AᵀA, the gradient Lipschitz constant.
    pub(crate) fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Least-squares solve `AᵀA x = b` when A has full column rank.
    pub(crate) fn normal_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let l = self.cholesky.as_ref()?;
        let n = b.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        Some(x)
    }

    /// `A · X` for an `n × m` right-hand side.
    pub fn measure(&self, x: &Matrix) -> Result<Matrix> {
        self.a.matmul(x)
    }
}
