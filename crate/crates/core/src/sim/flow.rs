use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::network::{local_lane, Heading, Movement, RoadNetwork, LANES_PER_INTERSECTION};
use crate::error::{Error, Result};

/// Share of each entry's demand that crosses the grid without turning.
pub const THROUGH_SHARE: f64 = 0.6;
/// Share turning left (and, separately, right) somewhere along the way.
pub const TURN_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalPattern {
    /// Explicit arrival times in seconds.
    Schedule { times: Vec<f64> },
    /// Poisson arrivals with `rate` vehicles per second.
    Poisson { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub route: usize,
    pub pattern: ArrivalPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub time: u32,
    pub route: usize,
}

/// Expands every flow into arrivals before `horizon`, ordered by time then
/// flow index. Each Poisson flow draws from its own ChaCha stream.
pub fn generate_arrivals(flows: &[Flow], net: &RoadNetwork, horizon: u32, seed: u64) -> Result<Vec<Arrival>> {
    let mut out = Vec::new();
    for (fi, flow) in flows.iter().enumerate() {
        if flow.route >= net.routes.len() {
            return Err(Error::Flow(format!("flow {fi} references missing route {}", flow.route)));
        }
        match &flow.pattern {
            ArrivalPattern::Schedule { times } => {
                for &t in times {
                    if !(t >= 0.0) || !t.is_finite() {
                        return Err(Error::Flow(format!("flow {fi}: arrival time {t} is invalid")));
                    }
                    if t < horizon as f64 {
                        out.push(Arrival {
                            time: t.floor() as u32,
                            route: flow.route,
                        });
                    }
                }
            }
            ArrivalPattern::Poisson { rate } => {
                if !(*rate >= 0.0) || !rate.is_finite() {
                    return Err(Error::Flow(format!("flow {fi}: rate {rate} must be >= 0")));
                }
                if *rate == 0.0 {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(fi as u64);
                let exp = Exp::new(*rate).expect("positive rate");
                let mut t = 0.0;
                loop {
                    t += exp.sample(&mut rng);
                    if t >= horizon as f64 {
                        break;
                    }
                    out.push(Arrival {
                        time: t.floor() as u32,
                        route: flow.route,
                    });
                }
            }
        }
    }
    // stable: ties keep flow order
    out.sort_by_key(|a| a.time);
    Ok(out)
}

/// Synthetic demand: every boundary approach emits `veh_per_hour` vehicles.
/// Of these, 60% cross the grid straight; 20% turn left and 20% turn right,
/// each split evenly over the intersections on the straight path, and
/// continue straight after turning. Routes are registered on `net`.
pub fn synthetic_flows(net: &mut RoadNetwork, veh_per_hour: f64) -> Result<Vec<Flow>> {
    if !(veh_per_hour >= 0.0) || !veh_per_hour.is_finite() {
        return Err(Error::Flow(format!("demand {veh_per_hour} veh/h must be >= 0")));
    }
    let rate = veh_per_hour / 3600.0;
    let mut flows = Vec::new();
    let mut entries: Vec<(usize, Heading)> = net
        .entry_lanes()
        .filter(|l| l.movement == Movement::Through)
        .map(|l| (l.intersection, l.heading))
        .collect();
    entries.sort();
    for (ix, h) in entries {
        let (row, col) = (ix / net.grid.cols, ix % net.grid.cols);
        let straight = straight_until_exit(net, ix, h, &[]);
        let path_len = straight.len();
        let mut add = |net: &mut RoadNetwork, moves: Vec<Movement>, share: f64| -> Result<()> {
            let route = net.route_from_movements(row, col, h, &moves)?;
            let id = net.add_route(route)?;
            flows.push(Flow {
                route: id,
                pattern: ArrivalPattern::Poisson { rate: rate * share },
            });
            Ok(())
        };
        add(net, straight, THROUGH_SHARE)?;
        for turn in [Movement::Left, Movement::Right] {
            for k in 0..path_len {
                let mut prefix = vec![Movement::Through; k];
                prefix.push(turn);
                let moves = straight_until_exit(net, ix, h, &prefix);
                add(net, moves, TURN_SHARE / path_len as f64)?;
            }
        }
    }
    Ok(flows)
}

/// Applies `prefix`, then goes straight until the vehicle leaves the grid.
fn straight_until_exit(net: &RoadNetwork, start: usize, heading: Heading, prefix: &[Movement]) -> Vec<Movement> {
    let mut moves = Vec::new();
    let mut at = start;
    let mut h = heading;
    let mut k = 0;
    loop {
        let m = prefix.get(k).copied().unwrap_or(Movement::Through);
        moves.push(m);
        let lane = &net.lanes[at * LANES_PER_INTERSECTION + local_lane(h, m)];
        match lane.downstream {
            Some(next) => {
                at = next;
                h = lane.out_heading();
            }
            None => return moves,
        }
        k += 1;
    }
}
