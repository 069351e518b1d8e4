use rand::Rng;

use super::matrix::Matrix;
use super::tape::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

/// Weights uniform in ±1/√fan_in, biases zero.
pub fn init_uniform(rng: &mut impl Rng, fan_in: usize, rows: usize, cols: usize) -> Matrix {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

/// Affine layer `y = x W + b` with `W: in×out`, `b: 1×out`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let weight = store.add(
            format!("{name}.weight"),
            init_uniform(rng, inputs, inputs, outputs),
        );
        let bias = store.add(format!("{name}.bias"), Matrix::zeros(1, outputs));
        Self {
            weight,
            bias,
            inputs,
            outputs,
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var, track: bool) -> Result<Var> {
        if tape.value(x).cols() != self.inputs {
            return Err(Error::Shape(format!(
                "linear expects {} input features, got {}",
                self.inputs,
                tape.value(x).cols()
            )));
        }
        let w = tape.param(store, self.weight, track);
        let b = tape.param(store, self.bias, track);
        let xw = tape.matmul(x, w)?;
        tape.add_row(xw, b)
    }
}

/// Self-attention over fixed-length sequences stacked along rows: an input
/// of `(batch * seq) × dim` is treated as `batch` independent sequences.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
    pub dim: usize,
}

impl MultiHeadAttention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        dim: usize,
        heads: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(Error::Shape(format!(
                "embedding dim {dim} is not divisible by {heads} heads"
            )));
        }
        Ok(Self {
            query: Linear::new(store, &format!("{name}.query"), dim, dim, rng),
            key: Linear::new(store, &format!("{name}.key"), dim, dim, rng),
            value: Linear::new(store, &format!("{name}.value"), dim, dim, rng),
            output: Linear::new(store, &format!("{name}.output"), dim, dim, rng),
            heads,
            dim,
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: Var,
        seq: usize,
        track: bool,
    ) -> Result<Var> {
        let q = self.query.forward(tape, store, x, track)?;
        let k = self.key.forward(tape, store, x, track)?;
        let v = self.value.forward(tape, store, x, track)?;
        let head_dim = self.dim / self.heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let context = if self.heads == 1 {
            tape.attention(q, k, v, seq, scale)?
        } else {
            let mut parts = Vec::with_capacity(self.heads);
            for h in 0..self.heads {
                let qh = tape.slice_cols(q, h * head_dim, head_dim)?;
                let kh = tape.slice_cols(k, h * head_dim, head_dim)?;
                let vh = tape.slice_cols(v, h * head_dim, head_dim)?;
                parts.push(tape.attention(qh, kh, vh, seq, scale)?);
            }
            tape.concat_cols(&parts)?
        };
        self.output.forward(tape, store, context, track)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Central finite differences of a scalar function of one parameter,
    /// evaluated with plain forward passes. Independent of `backward`.
    pub(crate) fn fd_param_grad(
        store: &mut ParamStore,
        id: ParamId,
        h: f64,
        f: &dyn Fn(&ParamStore) -> f64,
    ) -> Matrix {
        let (rows, cols) = store.get(id).shape();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows * cols {
            let orig = store.get(id).as_slice()[i];
            store.get_mut(id).as_mut_slice()[i] = orig + h;
            let up = f(store);
            store.get_mut(id).as_mut_slice()[i] = orig - h;
            let down = f(store);
            store.get_mut(id).as_mut_slice()[i] = orig;
            out.as_mut_slice()[i] = (up - down) / (2.0 * h);
        }
        out
    }

    pub(crate) fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        let num: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let den = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
            + b.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
        // floor keeps identically-zero gradients (e.g. key bias) from
        // dividing finite-difference noise by zero
        num / den.max(1e-3)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn linear_arithmetic() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lin = Linear::new(&mut store, "l", 2, 2, &mut rng);
        *store.get_mut(lin.weight) = Matrix::identity(2);
        *store.get_mut(lin.bias) = Matrix::row_vector(&[3.0, 3.0]);
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::row_vector(&[1.0, 2.0]));
        let y = lin.forward(&mut tape, &store, x, false).unwrap();
        assert_eq!(tape.value(y).as_slice(), &[4.0, 5.0]);

        *store.get_mut(lin.bias) = Matrix::zeros(1, 2);
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::row_vector(&[-0.25, 7.5]));
        let y = lin.forward(&mut tape, &store, x, false).unwrap();
        assert_eq!(tape.value(y).as_slice(), &[-0.25, 7.5]);
    }

    #[test]
    fn linear_rejects_wrong_width() {
        let mut store = ParamStore::new();
        let lin = Linear::new(&mut store, "l", 3, 2, &mut ChaCha8Rng::seed_from_u64(1));
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::zeros(1, 2));
        assert!(lin.forward(&mut tape, &store, x, false).is_err());
    }

    #[test]
    fn zero_input_gives_zero_weight_gradient() {
        let mut store = ParamStore::new();
        let lin = Linear::new(&mut store, "l", 4, 3, &mut ChaCha8Rng::seed_from_u64(2));
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::zeros(5, 4));
        let y = lin.forward(&mut tape, &store, x, true).unwrap();
        let s = tape.sigmoid(y);
        let loss = tape.sum_all(s);
        let grads = tape.backward(loss).unwrap();
        let gw = grads.params().into_iter().find(|(id, _)| *id == lin.weight).unwrap().1;
        assert!(gw.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut store = ParamStore::new();
            let lin = Linear::new(&mut store, "l", 3, 4, &mut rng);
            *store.get_mut(lin.bias) = random_matrix(&mut rng, 1, 4);
            let x = random_matrix(&mut rng, 2, 3);
            let f = |s: &ParamStore| {
                let mut t = Tape::new();
                let xv = t.constant(x.clone());
                let y = lin.forward(&mut t, s, xv, false).unwrap();
                let z = t.sigmoid(y);
                t.value(z).sum()
            };
            let mut t = Tape::new();
            let xv = t.constant(x.clone());
            let y = lin.forward(&mut t, &store, xv, true).unwrap();
            let z = t.sigmoid(y);
            let loss = t.sum_all(z);
            let grads = t.backward(loss).unwrap().params();
            for (id, g) in grads {
                let fd = fd_param_grad(&mut store, id, 1e-5, &f);
                assert!(rel_err(&g, &fd) < 1e-4, "rel err {}", rel_err(&g, &fd));
            }
        }
    }

    #[test]
    fn attention_symmetry_and_single_token() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut store = ParamStore::new();
        let mha = MultiHeadAttention::new(&mut store, "mha", 16, 1, &mut rng).unwrap();
        let token: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Matrix::from_rows(&[token.clone(), token.clone()]).unwrap();
        let mut t = Tape::new();
        let xv = t.constant(x);
        let y = mha.forward(&mut t, &store, xv, 2, false).unwrap();
        let out = t.value(y);
        assert!(out.row(0).iter().zip(out.row(1)).all(|(a, b)| (a - b).abs() < 1e-12));

        // one token: attention weight 1, output = W_o(W_v x + b_v) + b_o
        let x1 = Matrix::row_vector(&token);
        let mut t = Tape::new();
        let xv = t.constant(x1.clone());
        let y = mha.forward(&mut t, &store, xv, 1, false).unwrap();
        let mut t2 = Tape::new();
        let xv2 = t2.constant(x1);
        let v = mha.value.forward(&mut t2, &store, xv2, false).unwrap();
        let o = mha.output.forward(&mut t2, &store, v, false).unwrap();
        assert!(t.value(y).max_abs_diff(t2.value(o)) < 1e-12);
    }

    #[test]
    fn attention_rejects_indivisible_heads() {
        let mut store = ParamStore::new();
        assert!(MultiHeadAttention::new(&mut store, "m", 16, 3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn attention_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let heads = if trial % 2 == 0 { 1 } else { 4 };
            let mut store = ParamStore::new();
            let mha = MultiHeadAttention::new(&mut store, "mha", 16, heads, &mut rng).unwrap();
            for id in store.ids().collect::<Vec<_>>() {
                let (r, c) = store.get(id).shape();
                *store.get_mut(id) = random_matrix(&mut rng, r, c).map(|v| v * 0.5);
            }
            let x = random_matrix(&mut rng, 2, 16);
            let mix = random_matrix(&mut rng, 2, 16);
            // loss = Σ y ⊙ mix, evaluated without the tape's backward
            let eval = |s: &ParamStore, xx: &Matrix| -> f64 {
                let mut t = Tape::new();
                let xv = t.constant(xx.clone());
                let y = mha.forward(&mut t, s, xv, 2, false).unwrap();
                t.value(y).as_slice().iter().zip(mix.as_slice()).map(|(a, b)| a * b).sum()
            };

            let mut t = Tape::new();
            let xv = t.input(x.clone());
            let y = mha.forward(&mut t, &store, xv, 2, true).unwrap();
            let m = t.constant(mix.clone());
            let prod = t.mul(y, m).unwrap();
            let loss = t.sum_all(prod);
            let grads = t.backward(loss).unwrap();

            for (id, g) in grads.params() {
                let fd = fd_param_grad(&mut store, id, 1e-5, &|s| eval(s, &x));
                let e = rel_err(&g, &fd);
                assert!(e < 1e-4, "param {} rel err {e}", store.name(id));
            }
            let gx = grads.wrt(xv).unwrap().clone();
            let mut fdx = Matrix::zeros(2, 16);
            for i in 0..32 {
                let mut xp = x.clone();
                xp.as_mut_slice()[i] += 1e-5;
                let mut xm = x.clone();
                xm.as_mut_slice()[i] -= 1e-5;
                fdx.as_mut_slice()[i] = (eval(&store, &xp) - eval(&store, &xm)) / 2e-5;
            }
            assert!(rel_err(&gx, &fdx) < 1e-4);
        }
    }
}
