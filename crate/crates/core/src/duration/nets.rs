use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::StateBatch;
use crate::error::{Error, Result};
use crate::nn::{init_uniform, Linear, Matrix, MultiHeadAttention, ParamStore, Tape, Var};

/// Shape of the membership network and critic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub lanes: usize,
    pub segments: usize,
    /// Embedding width per segment; a lane embeds to `segments · embed`.
    pub embed: usize,
    pub heads: usize,
    pub hidden: usize,
    pub head_hidden: usize,
    /// Local lanes of every phase; all phases must list the same number.
    pub phase_lanes: Vec<Vec<usize>>,
}

impl NetConfig {
    pub fn new(lanes: usize, segments: usize, phase_lanes: Vec<Vec<usize>>) -> Result<Self> {
        let cfg = Self {
            lanes,
            segments,
            embed: 4,
            heads: 1,
            hidden: 16,
            head_hidden: 256,
            phase_lanes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let seq = self.phase_lanes.first().map_or(0, Vec::len);
        if seq == 0 || self.phase_lanes.iter().any(|p| p.len() != seq) {
            return Err(Error::Shape("every phase must serve the same, non-zero number of lanes".into()));
        }
        if self.phase_lanes.iter().flatten().any(|&l| l >= self.lanes) {
            return Err(Error::Shape("phase lane outside the lane range".into()));
        }
        if self.segments == 0 || self.embed == 0 || self.hidden == 0 || self.head_hidden == 0 {
            return Err(Error::Shape("network widths must be positive".into()));
        }
        Ok(())
    }

    pub fn lane_dim(&self) -> usize {
        self.segments * self.embed
    }

    pub fn phase_count(&self) -> usize {
        self.phase_lanes.len()
    }

    fn seq(&self) -> usize {
        self.phase_lanes[0].len()
    }
}

/// Lane embedding, per-phase lane attention and one-hot phase fusion.
#[derive(Debug, Clone)]
pub struct FuzzyFront {
    cfg: NetConfig,
    expand: Matrix,
    embed_weight: crate::nn::ParamId,
    embed_bias: crate::nn::ParamId,
    attention: MultiHeadAttention,
}

impl FuzzyFront {
    pub fn new(store: &mut ParamStore, name: &str, cfg: &NetConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let dim = cfg.lane_dim();
        // segment s feeds columns s·embed .. (s+1)·embed
        let mut expand = Matrix::zeros(cfg.segments, dim);
        for s in 0..cfg.segments {
            for e in 0..cfg.embed {
                expand.set(s, s * cfg.embed + e, 1.0);
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            expand,
            embed_weight: store.add(format!("{name}.embed.weight"), init_uniform(rng, 1, 1, dim)),
            embed_bias: store.add(format!("{name}.embed.bias"), Matrix::zeros(1, dim)),
            attention: MultiHeadAttention::new(store, &format!("{name}.attention"), dim, cfg.heads, rng)?,
        })
    }

    /// `batch × lane_dim` fused features of each state's selected phase.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, batch: &StateBatch, track: bool) -> Result<Var> {
        let cfg = &self.cfg;
        if batch.lanes != cfg.lanes || batch.segments.cols() != cfg.segments {
            return Err(Error::Shape(format!(
                "state is {} lanes x {} segments, network expects {} x {}",
                batch.lanes,
                batch.segments.cols(),
                cfg.lanes,
                cfg.segments
            )));
        }
        let phases = cfg.phase_count();
        if let Some(&p) = batch.phases.iter().find(|&&p| p >= phases) {
            return Err(Error::InvalidInput(format!("phase one-hot index {p} outside {phases} phases")));
        }
        let b = batch.len();
        let x = tape.constant(batch.segments.clone());
        let e = tape.constant(self.expand.clone());
        let xe = tape.matmul(x, e)?;
        let w = tape.param(store, self.embed_weight, track);
        let bias = tape.param(store, self.embed_bias, track);
        let scaled = tape.mul_row(xe, w)?;
        let pre = tape.add_row(scaled, bias)?;
        let lanes = tape.sigmoid(pre);

        let mut index = Vec::with_capacity(b * phases * cfg.seq());
        for i in 0..b {
            for p in &cfg.phase_lanes {
                index.extend(p.iter().map(|&l| i * cfg.lanes + l));
            }
        }
        let pairs = tape.gather_rows(lanes, index)?;
        let attended = self.attention.forward(tape, store, pairs, cfg.seq(), track)?;
        let per_phase = tape.mean_blocks(attended, cfg.seq())?;

        let mut select = Matrix::zeros(b, b * phases);
        for (i, &p) in batch.phases.iter().enumerate() {
            select.set(i, i * phases + p, 1.0);
        }
        let s = tape.constant(select);
        tape.matmul(s, per_phase)
    }
}

/// Membership network: front, two relu layers, relu head, sigmoid output.
#[derive(Debug, Clone)]
pub struct Actor {
    pub front: FuzzyFront,
    layers: Vec<Linear>,
    out: Linear,
}

impl Actor {
    pub fn new(store: &mut ParamStore, cfg: &NetConfig, rng: &mut impl Rng) -> Result<Self> {
        let front = FuzzyFront::new(store, "front", cfg, rng)?;
        let layers = vec![
            Linear::new(store, "mlp1", cfg.lane_dim(), cfg.hidden, rng),
            Linear::new(store, "mlp2", cfg.hidden, cfg.hidden, rng),
            Linear::new(store, "head1", cfg.hidden, cfg.head_hidden, rng),
            Linear::new(store, "head2", cfg.head_hidden, cfg.head_hidden, rng),
        ];
        let out = Linear::new(store, "out", cfg.head_hidden, 1, rng);
        // zero output layer: every fresh membership starts at sigmoid(0)
        *store.get_mut(out.weight) = Matrix::zeros(cfg.head_hidden, 1);
        Ok(Self { front, layers, out })
    }

    /// `batch × 1` memberships in (0, 1).
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, batch: &StateBatch, track: bool) -> Result<Var> {
        let mut h = self.front.forward(tape, store, batch, track)?;
        for l in &self.layers {
            let z = l.forward(tape, store, h, track)?;
            h = tape.relu(z);
        }
        let logit = self.out.forward(tape, store, h, track)?;
        Ok(tape.sigmoid(logit))
    }
}

/// Action-value network with its own front.
#[derive(Debug, Clone)]
pub struct Critic {
    pub front: FuzzyFront,
    state1: Linear,
    state2: Linear,
    action: Linear,
    joint1: Linear,
    joint2: Linear,
    out: Linear,
}

impl Critic {
    pub fn new(store: &mut ParamStore, cfg: &NetConfig, rng: &mut impl Rng) -> Result<Self> {
        let front = FuzzyFront::new(store, "front", cfg, rng)?;
        let critic = Self {
            front,
            state1: Linear::new(store, "state1", cfg.lane_dim(), 16, rng),
            state2: Linear::new(store, "state2", 16, 32, rng),
            action: Linear::new(store, "action", 1, 32, rng),
            joint1: Linear::new(store, "joint1", 64, cfg.head_hidden, rng),
            joint2: Linear::new(store, "joint2", cfg.head_hidden, cfg.head_hidden, rng),
            out: Linear::new(store, "out", cfg.head_hidden, 1, rng),
        };
        let w = store.get_mut(critic.out.weight);
        for v in w.as_mut_slice() {
            *v = rng.gen_range(-3e-3..3e-3);
        }
        Ok(critic)
    }

    /// `batch × 1` values of `(state, action)`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &StateBatch,
        action: Var,
        track: bool,
    ) -> Result<Var> {
        let f = self.front.forward(tape, store, batch, track)?;
        let s1 = self.state1.forward(tape, store, f, track)?;
        let s1 = tape.relu(s1);
        let s2 = self.state2.forward(tape, store, s1, track)?;
        let s2 = tape.relu(s2);
        let a = self.action.forward(tape, store, action, track)?;
        let a = tape.relu(a);
        let joint = tape.concat_cols(&[s2, a])?;
        let j1 = self.joint1.forward(tape, store, joint, track)?;
        let j1 = tape.relu(j1);
        let j2 = self.joint2.forward(tape, store, j1, track)?;
        let j2 = tape.relu(j2);
        self.out.forward(tape, store, j2, track)
    }
}
