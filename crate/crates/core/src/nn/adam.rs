use super::matrix::Matrix;
use super::tape::{ParamId, ParamStore};

/// Adaptive moment estimation with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Option<Matrix>>,
    second: Vec<Option<Matrix>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Descends along `grads`. Parameters without a gradient are untouched.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[(ParamId, Matrix)]) {
        if self.first.len() < store.len() {
            self.first.resize(store.len(), None);
            self.second.resize(store.len(), None);
        }
        self.step += 1;
        if self.lr == 0.0 {
            return;
        }
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (id, g) in grads {
            let i = id.index();
            let (rows, cols) = g.shape();
            let m = self.first[i].get_or_insert_with(|| Matrix::zeros(rows, cols));
            let v = self.second[i].get_or_insert_with(|| Matrix::zeros(rows, cols));
            let p = store.get_mut(*id);
            for (((p, m), v), g) in p
                .as_mut_slice()
                .iter_mut()
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
                .zip(g.as_slice())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let mh = *m / c1;
                let vh = *v / c2;
                *p -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}
