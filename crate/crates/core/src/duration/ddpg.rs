use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nets::{Actor, Critic, NetConfig};
use super::replay::{ReplayBuffer, Transition};
use super::state::{DurationState, StateBatch};
use crate::error::{Error, Result};
use crate::nn::{soft_update, Adam, Checkpoint, Matrix, ParamId, ParamStore, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient updates per training round.
    pub epochs: usize,
    pub tau: f64,
    /// Updates between soft target refreshes.
    pub target_update_interval: u64,
    /// Queue sums are divided by this before becoming rewards.
    pub reward_scale: f64,
    pub ou_theta: f64,
    pub ou_mean: f64,
    pub ou_variance: f64,
    /// Rounds over which exploration decays linearly to zero.
    pub anneal_rounds: usize,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.8,
            actor_lr: 1e-5,
            critic_lr: 2e-3,
            batch_size: 20,
            buffer_capacity: 12_000,
            epochs: 200,
            tau: 0.95,
            target_update_interval: 5,
            reward_scale: 20.0,
            ou_theta: 0.15,
            ou_mean: 1.0,
            ou_variance: 2.0,
            anneal_rounds: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub mean_q: f64,
}

/// Actor-critic pair with target copies, optimisers and replay memory.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    config: DdpgConfig,
    net: NetConfig,
    actor: Actor,
    critic: Critic,
    actor_params: ParamStore,
    critic_params: ParamStore,
    actor_target: ParamStore,
    critic_target: ParamStore,
    actor_opt: Adam,
    critic_opt: Adam,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    updates: u64,
}

impl DdpgAgent {
    pub fn new(config: DdpgConfig, net: NetConfig, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.tau) || !(0.0..=1.0).contains(&config.gamma) {
            return Err(Error::InvalidInput("gamma and tau must lie in [0, 1]".into()));
        }
        if config.batch_size == 0 || config.target_update_interval == 0 || !(config.reward_scale > 0.0) {
            return Err(Error::InvalidInput("batch size, target interval and reward scale must be positive".into()));
        }
        let mut init = ChaCha8Rng::seed_from_u64(seed);
        let mut actor_params = ParamStore::new();
        let actor = Actor::new(&mut actor_params, &net, &mut init)?;
        let mut critic_params = ParamStore::new();
        let critic = Critic::new(&mut critic_params, &net, &mut init)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self {
            actor_opt: Adam::new(config.actor_lr),
            critic_opt: Adam::new(config.critic_lr),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            actor_target: actor_params.clone(),
            critic_target: critic_params.clone(),
            config,
            net,
            actor,
            critic,
            actor_params,
            critic_params,
            rng,
            updates: 0,
        })
    }

    pub fn config(&self) -> &DdpgConfig {
        &self.config
    }

    pub fn net_config(&self) -> &NetConfig {
        &self.net
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn actor_params(&self) -> &ParamStore {
        &self.actor_params
    }

    pub fn actor_params_mut(&mut self) -> &mut ParamStore {
        &mut self.actor_params
    }

    pub fn critic_params(&self) -> &ParamStore {
        &self.critic_params
    }

    pub fn critic_params_mut(&mut self) -> &mut ParamStore {
        &mut self.critic_params
    }

    pub fn actor_target(&self) -> &ParamStore {
        &self.actor_target
    }

    pub fn critic_target(&self) -> &ParamStore {
        &self.critic_target
    }

    /// Membership `h ∈ (0, 1)` for one state.
    pub fn act(&self, state: &DurationState) -> Result<f64> {
        Ok(self.act_batch(&[state])?[0])
    }

    pub fn act_batch(&self, states: &[&DurationState]) -> Result<Vec<f64>> {
        let batch = StateBatch::new(states)?;
        let mut tape = Tape::new();
        let a = self.actor.forward(&mut tape, &self.actor_params, &batch, false)?;
        Ok(tape.value(a).as_slice().to_vec())
    }

    pub fn q_values(&self, states: &[&DurationState], actions: &[f64]) -> Result<Vec<f64>> {
        let batch = StateBatch::new(states)?;
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::from_vec(actions.len(), 1, actions.to_vec())?);
        let q = self.critic.forward(&mut tape, &self.critic_params, &batch, a, false)?;
        Ok(tape.value(q).as_slice().to_vec())
    }

    pub fn remember(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// One critic and one actor step on a sampled batch; `None` while the
    /// buffer holds fewer than a batch.
    pub fn update(&mut self) -> Result<Option<UpdateStats>> {
        let batch: Vec<Transition> = match self.buffer.sample(self.config.batch_size, &mut self.rng) {
            Some(b) => b.into_iter().cloned().collect(),
            None => return Ok(None),
        };
        let refs: Vec<&Transition> = batch.iter().collect();
        let critic_loss = self.critic_step(&refs)?;
        let states: Vec<&DurationState> = batch.iter().map(|t| &t.state).collect();
        let mean_q = self.actor_step(&states)?;
        self.updates += 1;
        if self.updates % self.config.target_update_interval == 0 {
            soft_update(&self.actor_params, &mut self.actor_target, self.config.tau)?;
            soft_update(&self.critic_params, &mut self.critic_target, self.config.tau)?;
        }
        Ok(Some(UpdateStats { critic_loss, mean_q }))
    }

    /// `r + γ Q⁻(s′, μ⁻(s′))` for each transition.
    pub fn td_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let next: Vec<&DurationState> = batch.iter().map(|t| &t.next_state).collect();
        let nb = StateBatch::new(&next)?;
        let mut tape = Tape::new();
        let a = self.actor.forward(&mut tape, &self.actor_target, &nb, false)?;
        let q = self.critic.forward(&mut tape, &self.critic_target, &nb, a, false)?;
        Ok(batch
            .iter()
            .zip(tape.value(q).as_slice())
            .map(|(t, q)| t.reward + self.config.gamma * q)
            .collect())
    }

    /// Squared TD error before the step, averaged over the batch.
    pub fn critic_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        let targets = self.td_targets(batch)?;
        let states: Vec<&DurationState> = batch.iter().map(|t| &t.state).collect();
        let sb = StateBatch::new(&states)?;
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::from_vec(batch.len(), 1, batch.iter().map(|t| t.action).collect())?);
        let q = self.critic.forward(&mut tape, &self.critic_params, &sb, a, true)?;
        let y = tape.constant(Matrix::from_vec(batch.len(), 1, targets)?);
        let diff = tape.sub(q, y)?;
        let sq = tape.square(diff);
        let loss = tape.mean_all(sq);
        let value = tape.value(loss).get(0, 0);
        let grads = tape.backward(loss)?.params();
        self.critic_opt.step(&mut self.critic_params, &grads);
        Ok(value)
    }

    /// Gradient of `−mean Q(s, μ(s))` w.r.t. the actor parameters, through
    /// the (frozen) online critic. Also returns the mean Q.
    pub fn actor_gradient(&self, states: &[&DurationState]) -> Result<(Vec<(ParamId, Matrix)>, f64)> {
        let sb = StateBatch::new(states)?;
        let n = states.len() as f64;
        let critic = &self.critic;
        let critic_params = &self.critic_params;
        let mut mean_q = 0.0;
        let grads = self.actor_gradient_with(&sb, |actions| {
            let mut tape = Tape::new();
            let a = tape.input(actions.clone());
            let q = critic.forward(&mut tape, critic_params, &sb, a, false)?;
            mean_q = tape.value(q).sum() / n;
            let total = tape.sum_all(q);
            let g = tape.backward(total)?;
            Ok(g.wrt(a).cloned().unwrap_or_else(|| Matrix::zeros(actions.rows(), 1)))
        })?;
        Ok((grads, mean_q))
    }

    /// Chain rule `∂J/∂θ = Σ ∂J/∂a · ∂a/∂θ` where `dq_da` supplies `∂Q/∂a`
    /// for the current actions; `J = −mean Q`.
    fn actor_gradient_with(
        &self,
        sb: &StateBatch,
        dq_da: impl FnOnce(&Matrix) -> Result<Matrix>,
    ) -> Result<Vec<(ParamId, Matrix)>> {
        let mut tape = Tape::new();
        let a = self.actor.forward(&mut tape, &self.actor_params, sb, true)?;
        let g = dq_da(tape.value(a))?;
        let n = sb.len() as f64;
        let c = tape.constant(g.map(|v| -v / n));
        let weighted = tape.mul(a, c)?;
        let loss = tape.sum_all(weighted);
        Ok(tape.backward(loss)?.params())
    }

    pub fn actor_step(&mut self, states: &[&DurationState]) -> Result<f64> {
        let (grads, mean_q) = self.actor_gradient(states)?;
        self.actor_opt.step(&mut self.actor_params, &grads);
        Ok(mean_q)
    }

    /// Actor step against an externally supplied critic slope `∂Q/∂a`.
    pub fn actor_step_with(&mut self, states: &[&DurationState], dq_da: impl Fn(f64) -> f64) -> Result<()> {
        let sb = StateBatch::new(states)?;
        let grads = self.actor_gradient_with(&sb, |a| Ok(a.map(&dq_da)))?;
        self.actor_opt.step(&mut self.actor_params, &grads);
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.extend_from("actor", &self.actor_params);
        ck.extend_from("critic", &self.critic_params);
        ck.extend_from("actor_target", &self.actor_target);
        ck.extend_from("critic_target", &self.critic_target);
        ck
    }

    /// Loads weights; targets fall back to the online weights when absent.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        let mut actor = self.actor_params.clone();
        let mut critic = self.critic_params.clone();
        ck.restore_into("actor", &mut actor)?;
        ck.restore_into("critic", &mut critic)?;
        let mut actor_target = actor.clone();
        let mut critic_target = critic.clone();
        if ck.tensors.iter().any(|(n, _)| n.starts_with("actor_target.")) {
            ck.restore_into("actor_target", &mut actor_target)?;
        }
        if ck.tensors.iter().any(|(n, _)| n.starts_with("critic_target.")) {
            ck.restore_into("critic_target", &mut critic_target)?;
        }
        self.actor_params = actor;
        self.critic_params = critic;
        self.actor_target = actor_target;
        self.critic_target = critic_target;
        Ok(())
    }
}
