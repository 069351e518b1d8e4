use serde::Serialize;

use crate::controller::{DecisionInput, FixedTimeController, SignalController};
use crate::error::Result;
use crate::phase::FixedTimePlan;
use crate::sensing::{SensingChannel, SensingConfig};
use crate::sim::{World, LANES_PER_INTERSECTION};

use super::experiment::{Experiment, NoiseSpec};
use super::scenario::derive_seed;

/// One observation passed through the channel, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySample {
    pub time: u32,
    pub intersection: usize,
    pub occupancy: Vec<Vec<u8>>,
    pub received: Vec<Vec<f64>>,
    pub recovered: Vec<Vec<f64>>,
    pub counts: Vec<Vec<u32>>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryDump {
    pub scenario: String,
    pub noise_kind: String,
    pub noise_scale: f64,
    pub delta: f64,
    pub samples: Vec<RecoverySample>,
}

fn rows(m: &crate::nn::Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Runs fixed-time control and records the first `count` non-empty
/// observations of `intersection`.
pub fn recover_dump(exp: &Experiment<'_>, intersection: usize, noise: NoiseSpec, seed: u64, count: usize) -> Result<RecoveryDump> {
    let sc = exp.scenario();
    let net = &sc.network;
    let sim = sc.scenario.sim;
    if intersection >= net.intersection_count() {
        return Err(crate::Error::InvalidInput(format!("no intersection {intersection}")));
    }
    let sensing = SensingConfig {
        noise_kind: noise.kind,
        noise_scale: noise.scale,
        ..sc.scenario.sensing.clone()
    };
    let base = if noise.scale > 0.0 { Some(exp.sigma_base()?) } else { None };
    let mut channel = SensingChannel::new(
        &sensing,
        LANES_PER_INTERSECTION,
        sensing.matrix_seed.wrapping_add(intersection as u64),
        base,
        derive_seed(sc.scenario.seed, 4, seed, intersection as u64),
    )?;
    let phases = net.intersections[intersection].phases.len();
    let mut controller = FixedTimeController::new(FixedTimePlan::uniform(phases, sc.scenario.controllers.fixed_time_green)?);
    let mut world = World::new(net.clone(), sim, sc.arrivals(seed)?)?;
    controller.begin_episode(net.intersection_count(), 0)?;
    let mut samples = Vec::new();
    while !world.is_done() && samples.len() < count {
        for i in world.needing_decision() {
            let state = world.observe(i);
            if i == intersection && samples.len() < count {
                let reading = channel.sense(&state.distances)?;
                if reading.occupancy.count() > 0 {
                    let counts = &reading.counts;
                    let exact = (0..counts.lanes())
                        .all(|l| (0..counts.slices()).all(|s| counts.get(l, s) == u32::from(reading.occupancy.get(l, s))));
                    samples.push(RecoverySample {
                        time: world.time(),
                        intersection: i,
                        occupancy: (0..reading.occupancy.lanes())
                            .map(|l| (0..reading.occupancy.slices()).map(|s| reading.occupancy.get(l, s)).collect())
                            .collect(),
                        received: rows(&reading.received),
                        recovered: rows(&reading.recovery.x_hat),
                        counts: (0..counts.lanes()).map(|l| (0..counts.slices()).map(|s| counts.get(l, s)).collect()).collect(),
                        exact,
                    });
                }
            }
            let input = DecisionInput {
                intersection: i,
                time: world.time(),
                episode_length: sim.episode_length,
                state: &state,
                sensed: None,
                phases: &net.intersections[i].phases,
                bounds: sim.bounds,
            };
            let d = controller.decide(&input)?;
            world.apply_phase_change(i, d.phase, d.duration)?;
        }
        world.step();
    }
    Ok(RecoveryDump {
        scenario: sc.name().to_string(),
        noise_kind: noise.kind.name().to_string(),
        noise_scale: noise.scale,
        delta: channel.delta(),
        samples,
    })
}
