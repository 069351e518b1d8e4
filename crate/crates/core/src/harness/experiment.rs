use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerKind, FixedTimeController, MaxPressureController, SignalController};
use crate::duration::{DurationMode, FuzzyLight, FuzzyLightConfig, NetConfig, PhaseMode};
use crate::error::{Error, Result};
use crate::nn::Checkpoint;
use crate::phase::FixedTimePlan;
use crate::sensing::{NoiseKind, SensingConfig};
use crate::sim::{Arrival, LANES_PER_INTERSECTION};

use super::episode::{calibrate_scenario, run_episode, EpisodeOutcome};
use super::metrics::{mean_std, TransferReport};
use super::scenario::{derive_seed, LoadedScenario};

const AGENT_PURPOSE: u64 = 3;
/// Episode indices of frozen evaluations start here, clear of training.
pub const FROZEN_EPISODE_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            scale: 0.0,
        }
    }

    pub fn gaussian(scale: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            scale,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Train,
    #[default]
    Eval,
}

/// One row of the per-episode table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub scenario: String,
    pub scenario_hash: String,
    pub controller: String,
    pub noise_kind: String,
    pub noise_scale: f64,
    pub seed: u64,
    pub stage: Stage,
    pub round: usize,
    pub episode: u64,
    pub att: Option<f64>,
    pub throughput: usize,
    pub spawned: usize,
    pub stops: u64,
    pub reward_sum: f64,
    pub mean_green: f64,
}

/// Reported numbers for one (controller, noise, seed) cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: String,
    pub scenario_hash: String,
    pub controller: String,
    pub noise_kind: String,
    pub noise_scale: f64,
    pub seed: u64,
    pub episodes: usize,
    pub att_mean: f64,
    pub att_std: f64,
    pub throughput_mean: f64,
    pub stops_mean: f64,
    pub reward_mean: f64,
}

/// Experiment driver bound to one scenario.
#[derive(Debug)]
pub struct Experiment<'a> {
    sc: &'a LoadedScenario,
    sigma_base: OnceCell<f64>,
}

impl<'a> Experiment<'a> {
    pub fn new(sc: &'a LoadedScenario) -> Self {
        Self {
            sc,
            sigma_base: OnceCell::new(),
        }
    }

    pub fn scenario(&self) -> &LoadedScenario {
        self.sc
    }

    /// Configured base noise magnitude, or the calibrated one.
    pub fn sigma_base(&self) -> Result<f64> {
        if let Some(s) = self.sc.scenario.sensing.sigma_base {
            return Ok(s);
        }
        if let Some(s) = self.sigma_base.get() {
            return Ok(*s);
        }
        let s = calibrate_scenario(self.sc)?;
        log::info!("{}: calibrated sigma_base = {s:.4}", self.sc.name());
        Ok(*self.sigma_base.get_or_init(|| s))
    }

    fn sensing(&self, noise: NoiseSpec) -> Result<(SensingConfig, Option<f64>)> {
        let cfg = SensingConfig {
            noise_kind: noise.kind,
            noise_scale: noise.scale,
            ..self.sc.scenario.sensing.clone()
        };
        let base = if noise.scale > 0.0 { Some(self.sigma_base()?) } else { None };
        Ok((cfg, base))
    }

    pub fn net_config(&self) -> Result<NetConfig> {
        let phases = &self
            .sc
            .network
            .intersections
            .first()
            .ok_or_else(|| Error::Scenario("network has no intersections".into()))?
            .phases;
        NetConfig::new(
            LANES_PER_INTERSECTION,
            self.sc.scenario.training.layout.segments,
            phases.iter().map(|p| p.lanes.clone()).collect(),
        )
    }

    /// Fresh FuzzyLight-family controller for `seed`.
    pub fn fuzzy(&self, kind: ControllerKind, seed: u64) -> Result<FuzzyLight> {
        let t = &self.sc.scenario.training;
        let (phase_mode, duration_mode) = match kind {
            ControllerKind::FuzzyLight => (PhaseMode::Fuzzy, DurationMode::Learned),
            ControllerKind::FuzzyCycle => (PhaseMode::Cycle, DurationMode::Learned),
            ControllerKind::FuzzyPhaseFixedDuration => {
                (PhaseMode::Fuzzy, DurationMode::Fixed(self.sc.scenario.controllers.ablation_green))
            }
            other => return Err(Error::UnknownController(format!("{other} is not a fuzzy controller"))),
        };
        let config = FuzzyLightConfig {
            phase_mode,
            duration_mode,
            layout: t.layout,
            refer_duration: self.sc.refer_duration()?,
            ddpg: t.ddpg.clone(),
        };
        FuzzyLight::new(config, self.net_config()?, derive_seed(self.sc.scenario.seed, AGENT_PURPOSE, seed, 0))
    }

    pub fn controller(&self, kind: ControllerKind, seed: u64) -> Result<Box<dyn SignalController>> {
        let c = &self.sc.scenario.controllers;
        let phases = self.sc.network.intersections.first().map_or(0, |ix| ix.phases.len());
        Ok(match kind {
            ControllerKind::FixedTime => {
                Box::new(FixedTimeController::new(FixedTimePlan::uniform(phases, c.fixed_time_green)?))
            }
            ControllerKind::MaxPressure => Box::new(MaxPressureController {
                green: c.max_pressure_green,
                use_sensing: c.baselines_use_sensing,
            }),
            _ => Box::new(self.fuzzy(kind, seed)?),
        })
    }

    fn metrics(
        &self,
        kind: ControllerKind,
        seed: u64,
        noise: NoiseSpec,
        stage: Stage,
        round: usize,
        episode: u64,
        o: &EpisodeOutcome,
    ) -> EpisodeMetrics {
        EpisodeMetrics {
            scenario: self.sc.name().to_string(),
            scenario_hash: self.sc.hash.clone(),
            controller: kind.name().to_string(),
            noise_kind: noise.kind.name().to_string(),
            noise_scale: noise.scale,
            seed,
            stage,
            round,
            episode,
            att: o.att,
            throughput: o.throughput,
            spawned: o.spawned,
            stops: o.stops,
            reward_sum: o.reward_sum,
            mean_green: o.mean_green,
        }
    }

    fn episode(
        &self,
        arrivals: &[Arrival],
        controller: &mut dyn SignalController,
        seed: u64,
        noise: NoiseSpec,
        episode: u64,
    ) -> Result<EpisodeOutcome> {
        let (sensing, base) = self.sensing(noise)?;
        run_episode(self.sc, arrivals, &sensing, base, controller, seed, episode)
    }

    /// `rounds` × (training episode, evaluation episode). Rows come back in
    /// that order; `on_round` sees each evaluation row as it lands.
    pub fn train(
        &self,
        model: &mut FuzzyLight,
        seed: u64,
        noise: NoiseSpec,
        rounds: usize,
        mut on_round: impl FnMut(&EpisodeMetrics),
    ) -> Result<Vec<EpisodeMetrics>> {
        let kind = model.kind();
        let arrivals = self.sc.arrivals(seed)?;
        let mut rows = Vec::with_capacity(2 * rounds);
        for r in 0..rounds {
            model.set_round(r);
            model.set_training(true);
            let ep = 2 * r as u64;
            let o = self.episode(&arrivals, model, seed, noise, ep)?;
            rows.push(self.metrics(kind, seed, noise, Stage::Train, r, ep, &o));
            model.set_training(false);
            let o = self.episode(&arrivals, model, seed, noise, ep + 1)?;
            let row = self.metrics(kind, seed, noise, Stage::Eval, r, ep + 1, &o);
            on_round(&row);
            rows.push(row);
        }
        Ok(rows)
    }

    /// `count` frozen evaluation episodes.
    pub fn evaluate(
        &self,
        controller: &mut dyn SignalController,
        seed: u64,
        noise: NoiseSpec,
        count: usize,
    ) -> Result<Vec<EpisodeMetrics>> {
        let kind = controller.kind();
        let arrivals = self.sc.arrivals(seed)?;
        (0..count as u64)
            .map(|k| {
                let ep = FROZEN_EPISODE_BASE + k;
                let o = self.episode(&arrivals, controller, seed, noise, ep)?;
                Ok(self.metrics(kind, seed, noise, Stage::Eval, 0, ep, &o))
            })
            .collect()
    }

    /// Learned controllers train for `rounds` and report the last
    /// evaluation window; everything else is evaluated once.
    pub fn run_cell(
        &self,
        kind: ControllerKind,
        seed: u64,
        noise: NoiseSpec,
        rounds: usize,
    ) -> Result<(CellResult, Vec<EpisodeMetrics>, Option<FuzzyLight>)> {
        if kind.is_learned() {
            let mut model = self.fuzzy(kind, seed)?;
            let rows = self.train(&mut model, seed, noise, rounds, |row| {
                log::info!(
                    "{} seed {} round {}: eval ATT {}, mean green {:.1}s",
                    row.controller,
                    seed,
                    row.round + 1,
                    row.att.map_or("-".into(), |a| format!("{a:.1}")),
                    row.mean_green
                );
            })?;
            let window = self.sc.scenario.training.eval_window;
            let evals: Vec<&EpisodeMetrics> = rows.iter().filter(|r| r.stage == Stage::Eval).collect();
            let tail = &evals[evals.len().saturating_sub(window)..];
            let cell = self.summarise(kind, seed, noise, tail)?;
            Ok((cell, rows, Some(model)))
        } else {
            let mut c = self.controller(kind, seed)?;
            let arrivals = self.sc.arrivals(seed)?;
            let o = self.episode(&arrivals, c.as_mut(), seed, noise, 0)?;
            let row = self.metrics(kind, seed, noise, Stage::Eval, 0, 0, &o);
            let cell = self.summarise(kind, seed, noise, &[&row])?;
            Ok((cell, vec![row], None))
        }
    }

    pub fn summarise(
        &self,
        kind: ControllerKind,
        seed: u64,
        noise: NoiseSpec,
        rows: &[&EpisodeMetrics],
    ) -> Result<CellResult> {
        let atts: Vec<f64> = rows.iter().filter_map(|r| r.att).collect();
        let (att_mean, att_std) =
            mean_std(&atts).ok_or_else(|| Error::InvalidInput("no episode produced a travel time".into()))?;
        let n = rows.len() as f64;
        Ok(CellResult {
            scenario: self.sc.name().to_string(),
            scenario_hash: self.sc.hash.clone(),
            controller: kind.name().to_string(),
            noise_kind: noise.kind.name().to_string(),
            noise_scale: noise.scale,
            seed,
            episodes: rows.len(),
            att_mean,
            att_std,
            throughput_mean: rows.iter().map(|r| r.throughput as f64).sum::<f64>() / n,
            stops_mean: rows.iter().map(|r| r.stops as f64).sum::<f64>() / n,
            reward_mean: rows.iter().map(|r| r.reward_sum).sum::<f64>() / n,
        })
    }

    /// Evaluates a saved model frozen on this scenario against a native
    /// travel time `t_train`.
    pub fn transfer(
        &self,
        kind: ControllerKind,
        checkpoint: &Checkpoint,
        seeds: &[u64],
        noise: NoiseSpec,
        t_train: f64,
    ) -> Result<(TransferReport, Vec<CellResult>)> {
        if seeds.is_empty() {
            return Err(Error::InvalidInput("seed list is empty".into()));
        }
        let window = self.sc.scenario.training.eval_window;
        let mut cells = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut model = self.fuzzy(kind, seed)?;
            model
                .agent_mut()
                .ok_or_else(|| Error::Checkpoint(format!("{kind} has no trained network")))?
                .load_checkpoint(checkpoint)?;
            let rows = self.evaluate(&mut model, seed, noise, window)?;
            let refs: Vec<&EpisodeMetrics> = rows.iter().collect();
            cells.push(self.summarise(kind, seed, noise, &refs)?);
        }
        let t_transfer = cells.iter().map(|c| c.att_mean).sum::<f64>() / cells.len() as f64;
        Ok((TransferReport::new(t_train, t_transfer)?, cells))
    }
}

/// Every (controller, noise, seed) cell of a scenario, in that order.
pub fn run_experiment(
    sc: &LoadedScenario,
    controllers: &[ControllerKind],
    seeds: &[u64],
    noises: &[NoiseSpec],
    rounds: usize,
) -> Result<(Vec<CellResult>, Vec<EpisodeMetrics>)> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("seed list is empty".into()));
    }
    if controllers.is_empty() || noises.is_empty() {
        return Err(Error::InvalidInput("need at least one controller and one noise setting".into()));
    }
    let exp = Experiment::new(sc);
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &kind in controllers {
        for &noise in noises {
            for &seed in seeds {
                let (cell, r, _) = exp.run_cell(kind, seed, noise, rounds)?;
                cells.push(cell);
                rows.extend(r);
            }
        }
    }
    Ok((cells, rows))
}

/// Trains one model per seed under `train_noise`, then evaluates it frozen
/// at each sweep setting.
pub fn run_sweep(
    sc: &LoadedScenario,
    kind: ControllerKind,
    seeds: &[u64],
    train_noise: NoiseSpec,
    sweep: &[NoiseSpec],
    rounds: usize,
) -> Result<(Vec<CellResult>, Vec<EpisodeMetrics>)> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("seed list is empty".into()));
    }
    let exp = Experiment::new(sc);
    let window = sc.scenario.training.eval_window;
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &seed in seeds {
        let mut c = exp.controller(kind, seed)?;
        if kind.is_learned() {
            let mut model = exp.fuzzy(kind, seed)?;
            rows.extend(exp.train(&mut model, seed, train_noise, rounds, |_| {})?);
            c = Box::new(model);
        }
        for &noise in sweep {
            let r = exp.evaluate(c.as_mut(), seed, noise, window)?;
            let refs: Vec<&EpisodeMetrics> = r.iter().collect();
            cells.push(exp.summarise(kind, seed, noise, &refs)?);
            rows.extend(r);
        }
    }
    Ok((cells, rows))
}
