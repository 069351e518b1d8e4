#![allow(dead_code)]

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signal_lab::nn::Matrix;
use signal_lab::sensing::{
    calibrate_sigma_base, defuzzify, recover, transmit, BpdnConfig, MeasurementMatrix, NoiseKind, NoiseModel,
    OccupancyMatrix,
};

/// Binary occupancy with at most `max_k` vehicles per slice.
pub fn random_occupancy(rng: &mut ChaCha8Rng, n: usize, m: usize, max_k: usize) -> OccupancyMatrix {
    let mut x = OccupancyMatrix::empty(n, m);
    for j in 0..m {
        let k = rng.gen_range(0..=max_k);
        for i in sample(rng, n, k) {
            x.set(i, j);
        }
    }
    x
}

pub fn sigma_base(n: usize, z: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let products: Vec<Matrix> = (0..50)
        .map(|s| {
            let a = MeasurementMatrix::negotiate(10_000 + s, z, n).unwrap();
            a.measure(&random_occupancy(&mut rng, n, 20, 4).to_matrix()).unwrap()
        })
        .collect();
    calibrate_sigma_base(&products)
}

/// Fraction of entries recovered exactly at a given noise scale.
pub fn exact_rate(kind: NoiseKind, scale: f64, trials: u64, seed: u64) -> f64 {
    let (z, n, m) = (20, 12, 20);
    let base = sigma_base(n, z);
    let noise = NoiseModel::new(kind, scale, base).unwrap();
    let delta = noise.expected_column_norm(z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut total = 0usize;
    for t in 0..trials {
        let a = MeasurementMatrix::negotiate(seed * 100_000 + t, z, n).unwrap();
        let x = random_occupancy(&mut rng, n, m, 4);
        let y = transmit(&a, &x, &noise, &mut rng).unwrap();
        let rec = recover(&a, &y, delta, &BpdnConfig::default()).unwrap();
        let counts = defuzzify(&rec.x_hat);
        hits += counts
            .counts()
            .iter()
            .zip(x.cells())
            .filter(|(c, o)| **c == **o as u32)
            .count();
        total += x.cells().len();
    }
    hits as f64 / total as f64
}
