use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Discrete Ornstein-Uhlenbeck process
/// `x ← x + θ(μ − x) + σ·ξ`, parameterised by its stationary variance.
#[derive(Debug, Clone)]
pub struct OuNoise {
    pub theta: f64,
    pub mean: f64,
    pub sigma: f64,
    state: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl OuNoise {
    pub fn new(theta: f64, mean: f64, variance: f64, seed: u64) -> Self {
        // stationary variance of the discrete recursion is σ² / (2θ − θ²)
        let sigma = (variance * (2.0 * theta - theta * theta)).max(0.0).sqrt();
        Self {
            theta,
            mean,
            sigma,
            state: mean,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> f64 {
        let xi: f64 = StandardNormal.sample(&mut self.rng);
        self.state += self.theta * (self.mean - self.state) + self.sigma * xi;
        self.state
    }

    /// Restarts the process at its mean on a fresh random stream.
    pub fn reset(&mut self, stream: u64) {
        self.state = self.mean;
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.rng.set_stream(stream);
    }

    pub fn state(&self) -> f64 {
        self.state
    }
}
