use serde::{Deserialize, Serialize};

use super::ddpg::{DdpgAgent, DdpgConfig};
use super::defuzz::defuzzify_duration;
use super::nets::NetConfig;
use super::ou::OuNoise;
use super::replay::Transition;
use super::state::{DurationState, SegmentLayout};
use crate::controller::{ControllerKind, Decision, DecisionInput, SignalController};
use crate::error::{Error, Result};
use crate::phase::{fuzzy_phase_select, CyclePhase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Fuzzy,
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationMode {
    Learned,
    Fixed(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyLightConfig {
    pub phase_mode: PhaseMode,
    pub duration_mode: DurationMode,
    pub layout: SegmentLayout,
    pub refer_duration: f64,
    pub ddpg: DdpgConfig,
}

/// Two-stage controller: fuzzy (or cyclic) phase choice on sensed counts,
/// then a learned or fixed green duration.
#[derive(Debug, Clone)]
pub struct FuzzyLight {
    config: FuzzyLightConfig,
    agent: Option<DdpgAgent>,
    training: bool,
    round: usize,
    seed: u64,
    cycles: Vec<Option<CyclePhase>>,
    pending: Vec<Option<(DurationState, f64)>>,
    noise: Vec<OuNoise>,
    episode_updates: usize,
    critic_losses: Vec<f64>,
}

impl FuzzyLight {
    pub fn new(config: FuzzyLightConfig, net: NetConfig, seed: u64) -> Result<Self> {
        if !(config.refer_duration > 0.0) {
            return Err(Error::InvalidInput("refer duration must be positive".into()));
        }
        if net.segments != config.layout.segments {
            return Err(Error::Shape("network and segment layout disagree".into()));
        }
        let agent = match config.duration_mode {
            DurationMode::Learned => Some(DdpgAgent::new(config.ddpg.clone(), net, seed)?),
            DurationMode::Fixed(_) => None,
        };
        Ok(Self {
            config,
            agent,
            training: false,
            round: 0,
            seed,
            cycles: Vec::new(),
            pending: Vec::new(),
            noise: Vec::new(),
            episode_updates: 0,
            critic_losses: Vec::new(),
        })
    }

    pub fn config(&self) -> &FuzzyLightConfig {
        &self.config
    }

    pub fn agent(&self) -> Option<&DdpgAgent> {
        self.agent.as_ref()
    }

    pub fn agent_mut(&mut self) -> Option<&mut DdpgAgent> {
        self.agent.as_mut()
    }

    /// Training episodes explore and learn; evaluation is greedy and frozen.
    pub fn set_training(&mut self, training: bool) {
        self.training = training && self.agent.is_some();
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    /// Training round index, used for exploration annealing.
    pub fn set_round(&mut self, round: usize) {
        self.round = round;
    }

    pub fn exploration_scale(&self) -> f64 {
        let n = self.config.ddpg.anneal_rounds;
        if n == 0 {
            return 0.0;
        }
        (1.0 - self.round as f64 / n as f64).max(0.0)
    }

    pub fn episode_updates(&self) -> usize {
        self.episode_updates
    }

    /// Mean critic loss over the last episode's updates.
    pub fn mean_critic_loss(&self) -> Option<f64> {
        if self.critic_losses.is_empty() {
            None
        } else {
            Some(self.critic_losses.iter().sum::<f64>() / self.critic_losses.len() as f64)
        }
    }

    fn run_updates_until(&mut self, due: usize) -> Result<()> {
        let Some(agent) = self.agent.as_mut() else {
            return Ok(());
        };
        while self.episode_updates < due {
            match agent.update()? {
                Some(s) => {
                    self.critic_losses.push(s.critic_loss);
                    self.episode_updates += 1;
                }
                None => break,
            }
        }
        Ok(())
    }
}

impl SignalController for FuzzyLight {
    fn kind(&self) -> ControllerKind {
        match (self.config.phase_mode, self.config.duration_mode) {
            (PhaseMode::Cycle, _) => ControllerKind::FuzzyCycle,
            (PhaseMode::Fuzzy, DurationMode::Fixed(_)) => ControllerKind::FuzzyPhaseFixedDuration,
            (PhaseMode::Fuzzy, DurationMode::Learned) => ControllerKind::FuzzyLight,
        }
    }

    fn needs_sensing(&self) -> bool {
        true
    }

    fn begin_episode(&mut self, intersections: usize, episode: u64) -> Result<()> {
        self.cycles = vec![None; intersections];
        self.noise = Vec::with_capacity(intersections);
        for i in 0..intersections {
            let d = &self.config.ddpg;
            let mut ou = OuNoise::new(d.ou_theta, d.ou_mean, d.ou_variance, self.seed);
            ou.reset(episode * 4096 + i as u64);
            self.noise.push(ou);
        }
        self.pending = vec![None; intersections];
        self.episode_updates = 0;
        self.critic_losses.clear();
        Ok(())
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> Result<Decision> {
        let counts = input
            .sensed
            .ok_or_else(|| Error::InvalidInput("fuzzy controllers need sensed counts".into()))?;
        let i = input.intersection;
        if i >= self.pending.len() {
            return Err(Error::InvalidInput("controller used before begin_episode".into()));
        }
        let phase = match self.config.phase_mode {
            PhaseMode::Fuzzy => fuzzy_phase_select(counts, input.phases)?.phase,
            PhaseMode::Cycle => {
                let n = input.phases.len();
                let c = match &mut self.cycles[i] {
                    Some(c) if c.len() == n => c,
                    slot => slot.insert(CyclePhase::new(n)?),
                };
                c.next_phase()
            }
        };
        let duration = match self.config.duration_mode {
            DurationMode::Fixed(d) => d,
            DurationMode::Learned => {
                let state = DurationState::from_counts(counts, &self.config.layout, phase)?;
                let agent = self.agent.as_mut().expect("learned mode has an agent");
                if self.training {
                    if let Some((s, a)) = self.pending[i].take() {
                        let reward = -(input.state.total_queue() as f64) / self.config.ddpg.reward_scale;
                        agent.remember(Transition {
                            state: s,
                            action: a,
                            reward,
                            next_state: state.clone(),
                        });
                    }
                }
                let h = agent.act(&state)?;
                let eps = if self.training {
                    self.exploration_scale() * self.noise[i].sample()
                } else {
                    0.0
                };
                let refer = self.config.refer_duration;
                let t = defuzzify_duration(h, refer, eps, input.bounds);
                if self.training {
                    // store the executed duration on the membership scale
                    self.pending[i] = Some((state, (t as f64 / refer).clamp(0.0, 1.0)));
                    let epochs = self.config.ddpg.epochs as u64;
                    let due = (epochs * (input.time as u64 + 1) / input.episode_length.max(1) as u64) as usize;
                    self.run_updates_until(due.min(self.config.ddpg.epochs))?;
                }
                t
            }
        };
        Ok(Decision { phase, duration })
    }

    fn end_episode(&mut self) -> Result<()> {
        if self.training {
            self.run_updates_until(self.config.ddpg.epochs)?;
        }
        for p in &mut self.pending {
            *p = None;
        }
        Ok(())
    }
}
