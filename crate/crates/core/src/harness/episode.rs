use crate::controller::{DecisionInput, FixedTimeController, SignalController};
use crate::error::Result;
use crate::phase::FixedTimePlan;
use crate::sensing::{calibrate_sigma_base, SensingChannel, SensingConfig};
use crate::sim::{Arrival, VehicleRecord, World, LANES_PER_INTERSECTION};

use super::metrics::compute_att;
use super::scenario::{derive_seed, LoadedScenario};

const NOISE_PURPOSE: u64 = 1;

/// Raw outcome of one simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub records: Vec<VehicleRecord>,
    pub att: Option<f64>,
    pub throughput: usize,
    pub spawned: usize,
    pub stops: u64,
    /// Sum of `−Σ queue / reward_scale` over every decision.
    pub reward_sum: f64,
    pub decisions: u64,
    /// Mean green duration handed out, seconds.
    pub mean_green: f64,
    pub unconverged_columns: u64,
}

/// One episode of `controller` on `arrivals`. The channel noise of episode
/// `episode` under experiment seed `seed` is fixed by those two numbers.
pub fn run_episode(
    sc: &LoadedScenario,
    arrivals: &[Arrival],
    sensing: &SensingConfig,
    sigma_base: Option<f64>,
    controller: &mut dyn SignalController,
    seed: u64,
    episode: u64,
) -> Result<EpisodeOutcome> {
    let net = &sc.network;
    let sim = sc.scenario.sim;
    let n = net.intersection_count();
    let mut world = World::new(net.clone(), sim, arrivals.to_vec())?;
    let mut channels = if controller.needs_sensing() {
        let noise_seed = derive_seed(sc.scenario.seed, NOISE_PURPOSE, seed, episode);
        (0..n)
            .map(|i| {
                SensingChannel::new(
                    sensing,
                    LANES_PER_INTERSECTION,
                    sensing.matrix_seed.wrapping_add(i as u64),
                    sigma_base,
                    derive_seed(noise_seed, 0, i as u64, 0),
                )
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let reward_scale = sc.scenario.training.ddpg.reward_scale;
    controller.begin_episode(n, episode)?;
    let mut reward_sum = 0.0;
    let mut decisions = 0;
    let mut green_total = 0u64;
    while !world.is_done() {
        for i in world.needing_decision() {
            let state = world.observe(i);
            let reading = match channels.get_mut(i) {
                Some(ch) => Some(ch.sense(&state.distances)?),
                None => None,
            };
            let input = DecisionInput {
                intersection: i,
                time: world.time(),
                episode_length: sim.episode_length,
                state: &state,
                sensed: reading.as_ref().map(|r| &r.counts),
                phases: &net.intersections[i].phases,
                bounds: sim.bounds,
            };
            let d = controller.decide(&input)?;
            reward_sum -= state.total_queue() as f64 / reward_scale;
            decisions += 1;
            green_total += u64::from(d.duration);
            world.apply_phase_change(i, d.phase, d.duration)?;
        }
        world.step();
    }
    controller.end_episode()?;
    let records = world.records();
    Ok(EpisodeOutcome {
        att: compute_att(&records, sim.episode_length),
        throughput: world.completed(),
        spawned: world.spawned(),
        stops: world.total_stops(),
        reward_sum,
        decisions,
        mean_green: if decisions == 0 { 0.0 } else { green_total as f64 / decisions as f64 },
        unconverged_columns: channels.iter().map(|c| c.unconverged_columns()).sum(),
        records,
    })
}

/// Base noise magnitude for this scenario: a fixed-time episode on the
/// calibration arrivals, with every intersection's noise-free `A·X`
/// collected at each decision.
pub fn calibrate_scenario(sc: &LoadedScenario) -> Result<f64> {
    let net = &sc.network;
    let sim = sc.scenario.sim;
    let n = net.intersection_count();
    let clean = SensingConfig {
        noise_scale: 0.0,
        ..sc.scenario.sensing.clone()
    };
    let channels = (0..n)
        .map(|i| {
            SensingChannel::new(&clean, LANES_PER_INTERSECTION, clean.matrix_seed.wrapping_add(i as u64), None, 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let phases = net.intersections.first().map_or(1, |ix| ix.phases.len());
    let mut controller = FixedTimeController::new(FixedTimePlan::uniform(
        phases,
        sc.scenario.controllers.fixed_time_green,
    )?);
    let mut world = World::new(net.clone(), sim, sc.arrivals(u64::MAX)?)?;
    controller.begin_episode(n, 0)?;
    let mut products = Vec::new();
    while !world.is_done() {
        for i in world.needing_decision() {
            let state = world.observe(i);
            products.push(channels[i].clean_measurement(&state.distances)?);
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
    Ok(calibrate_sigma_base(&products))
}
