use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::flow::Arrival;
use super::network::{RoadNetwork, LANES_PER_INTERSECTION};
use super::signal::{DurationBounds, Light, SignalState};
use crate::error::{Error, Result};

/// Speed below which a vehicle counts as queued.
pub const STOP_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub episode_length: u32,
    /// Seconds between consecutive discharges from one lane.
    pub headway: u32,
    /// Bumper-to-bumper spacing of queued vehicles, metres.
    pub spacing: f64,
    pub bounds: DurationBounds,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            episode_length: 3600,
            headway: 2,
            spacing: 8.0,
            bounds: DurationBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Vehicle {
    route: usize,
    hop: usize,
    d: f64,
    speed: f64,
    stops: u32,
    spawn: u32,
    entered: u32,
    on_road: bool,
    completion: Option<u32>,
}

/// Outcome of one vehicle; uncompleted vehicles have `completion == None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: usize,
    pub route: usize,
    pub spawn: u32,
    pub completion: Option<u32>,
    pub stops: u32,
}

#[derive(Debug, Clone, Default)]
struct LaneQueue {
    vehicles: VecDeque<usize>,
    last_discharge: Option<u32>,
}

/// Ground-truth view of one intersection's incoming lanes.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionState {
    pub intersection: usize,
    pub time: u32,
    /// x(l): vehicles on each incoming lane.
    pub lane_counts: Vec<u32>,
    /// q(l): vehicles slower than the stop threshold.
    pub queues: Vec<u32>,
    /// Stop-line distances per lane, nearest first.
    pub distances: Vec<Vec<f64>>,
    /// Mean queue over the lanes a vehicle enters after crossing; zero for
    /// lanes leaving the grid.
    pub downstream_queues: Vec<f64>,
    pub phase: Option<usize>,
    pub green_elapsed: u32,
}

impl IntersectionState {
    pub fn total_queue(&self) -> u32 {
        self.queues.iter().sum()
    }
}

/// Point-queue simulator with one-second ticks.
#[derive(Debug, Clone)]
pub struct World {
    net: Arc<RoadNetwork>,
    config: SimConfig,
    time: u32,
    vehicles: Vec<Vehicle>,
    lanes: Vec<LaneQueue>,
    pending: Vec<VecDeque<usize>>,
    arrivals: Vec<Arrival>,
    next_arrival: usize,
    signals: Vec<SignalState>,
    completed: usize,
}

impl World {
    pub fn new(net: Arc<RoadNetwork>, config: SimConfig, arrivals: Vec<Arrival>) -> Result<Self> {
        if config.headway == 0 || !(config.spacing > 0.0) {
            return Err(Error::InvalidInput("headway and spacing must be positive".into()));
        }
        if arrivals.windows(2).any(|w| w[0].time > w[1].time) {
            return Err(Error::Flow("arrivals must be sorted by time".into()));
        }
        if let Some(a) = arrivals.iter().find(|a| a.route >= net.routes.len()) {
            return Err(Error::Flow(format!("arrival references missing route {}", a.route)));
        }
        let n_lanes = net.lanes.len();
        Ok(Self {
            signals: vec![SignalState::new(); net.intersection_count()],
            lanes: vec![LaneQueue::default(); n_lanes],
            pending: vec![VecDeque::new(); n_lanes],
            net,
            config,
            time: 0,
            vehicles: Vec::new(),
            arrivals,
            next_arrival: 0,
            completed: 0,
        })
    }

    pub fn network(&self) -> &Arc<RoadNetwork> {
        &self.net
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn is_done(&self) -> bool {
        self.time >= self.config.episode_length
    }

    pub fn signal(&self, intersection: usize) -> &SignalState {
        &self.signals[intersection]
    }

    /// Intersections whose plan has run out.
    pub fn needing_decision(&self) -> Vec<usize> {
        (0..self.signals.len())
            .filter(|&i| self.signals[i].needs_decision())
            .collect()
    }

    pub fn apply_phase_change(&mut self, intersection: usize, phase: usize, duration: u32) -> Result<()> {
        let phases = self
            .net
            .intersections
            .get(intersection)
            .ok_or(Error::UnknownPhase { intersection, phase })?
            .phases
            .len();
        self.signals[intersection].apply_phase_change(intersection, phase, phases, duration, self.config.bounds)
    }

    pub fn spawned(&self) -> usize {
        self.vehicles.len()
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    /// Vehicles spawned but not completed, including those still waiting
    /// to enter a full entry lane.
    pub fn in_network(&self) -> usize {
        self.vehicles.len() - self.completed
    }

    pub fn total_stops(&self) -> u64 {
        self.vehicles.iter().map(|v| v.stops as u64).sum()
    }

    pub fn records(&self) -> Vec<VehicleRecord> {
        self.vehicles
            .iter()
            .enumerate()
            .map(|(id, v)| VehicleRecord {
                id,
                route: v.route,
                spawn: v.spawn,
                completion: v.completion,
                stops: v.stops,
            })
            .collect()
    }

    fn lane_permits(&self, lane: usize) -> bool {
        let spec = &self.net.lanes[lane];
        if !spec.movement.is_controlled() {
            return true;
        }
        match self.signals[spec.intersection].light() {
            Light::Green(p) => self.net.intersections[spec.intersection].phases[p]
                .lanes
                .contains(&(lane % LANES_PER_INTERSECTION)),
            Light::Yellow(_) | Light::AllRed => false,
        }
    }

    fn has_room(&self, lane: usize) -> bool {
        let len = self.net.lanes[lane].length;
        match self.lanes[lane].vehicles.back() {
            Some(&v) => self.vehicles[v].d <= len - self.config.spacing,
            None => true,
        }
    }

    /// Advances the world by one second.
    pub fn step(&mut self) {
        let now = self.time;
        while let Some(a) = self.arrivals.get(self.next_arrival).copied() {
            if a.time > now {
                break;
            }
            self.next_arrival += 1;
            let first = self.net.routes[a.route].lanes[0];
            let id = self.vehicles.len();
            self.vehicles.push(Vehicle {
                route: a.route,
                hop: 0,
                d: 0.0,
                speed: self.net.lanes[first].speed,
                stops: 0,
                spawn: a.time,
                entered: now,
                on_road: false,
                completion: None,
            });
            self.pending[first].push_back(id);
        }
        for lane in 0..self.pending.len() {
            while let Some(&v) = self.pending[lane].front() {
                if !self.has_room(lane) {
                    break;
                }
                self.pending[lane].pop_front();
                let veh = &mut self.vehicles[v];
                veh.d = self.net.lanes[lane].length;
                veh.entered = now;
                veh.on_road = true;
                self.lanes[lane].vehicles.push_back(v);
            }
        }

        for lane in 0..self.lanes.len() {
            self.advance_lane(lane, now);
        }

        for s in &mut self.signals {
            s.tick();
        }
        self.time += 1;
    }

    fn advance_lane(&mut self, lane: usize, now: u32) {
        let (speed, spacing) = (self.net.lanes[lane].speed, self.config.spacing);
        let mut idx = 0;
        let mut floor = 0.0;
        while idx < self.lanes[lane].vehicles.len() {
            let v = self.lanes[lane].vehicles[idx];
            if self.vehicles[v].entered == now {
                floor = self.vehicles[v].d + spacing;
                idx += 1;
                continue;
            }
            let d_old = self.vehicles[v].d;
            let d_new = (d_old - speed).max(floor).min(d_old);
            if idx == 0 && d_new <= 0.0 && self.can_discharge(lane, v, now) {
                self.lanes[lane].vehicles.pop_front();
                self.lanes[lane].last_discharge = Some(now);
                self.discharge(lane, v, now);
                // the next vehicle becomes the front one
                floor = 0.0;
                continue;
            }
            let veh = &mut self.vehicles[v];
            let new_speed = d_old - d_new;
            if new_speed < STOP_SPEED && veh.speed >= STOP_SPEED {
                veh.stops += 1;
            }
            veh.d = d_new;
            veh.speed = new_speed;
            floor = d_new + spacing;
            idx += 1;
        }
    }

    fn can_discharge(&self, lane: usize, v: usize, now: u32) -> bool {
        if !self.lane_permits(lane) {
            return false;
        }
        if let Some(t) = self.lanes[lane].last_discharge {
            if now - t < self.config.headway {
                return false;
            }
        }
        let veh = &self.vehicles[v];
        let route = &self.net.routes[veh.route];
        match route.lanes.get(veh.hop + 1) {
            Some(&next) => self.has_room(next),
            None => true,
        }
    }

    fn discharge(&mut self, lane: usize, v: usize, now: u32) {
        let speed = self.net.lanes[lane].speed;
        let next = self.net.routes[self.vehicles[v].route].lanes.get(self.vehicles[v].hop + 1).copied();
        let veh = &mut self.vehicles[v];
        veh.speed = speed;
        match next {
            Some(next) => {
                veh.hop += 1;
                veh.d = self.net.lanes[next].length;
                veh.entered = now;
                self.lanes[next].vehicles.push_back(v);
            }
            None => {
                veh.on_road = false;
                veh.completion = Some(now + 1);
                self.completed += 1;
            }
        }
    }

    pub fn observe(&self, intersection: usize) -> IntersectionState {
        let base = intersection * LANES_PER_INTERSECTION;
        let mut lane_counts = Vec::with_capacity(LANES_PER_INTERSECTION);
        let mut queues = Vec::with_capacity(LANES_PER_INTERSECTION);
        let mut distances = Vec::with_capacity(LANES_PER_INTERSECTION);
        let mut downstream_queues = Vec::with_capacity(LANES_PER_INTERSECTION);
        for lane in base..base + LANES_PER_INTERSECTION {
            let q = &self.lanes[lane].vehicles;
            lane_counts.push(q.len() as u32);
            queues.push(self.queue_len(lane));
            distances.push(q.iter().map(|&v| self.vehicles[v].d).collect());
            downstream_queues.push(match self.net.downstream_lanes(lane) {
                Some(ls) => ls.iter().map(|&l| self.queue_len(l) as f64).sum::<f64>() / ls.len() as f64,
                None => 0.0,
            });
        }
        let s = &self.signals[intersection];
        IntersectionState {
            intersection,
            time: self.time,
            lane_counts,
            queues,
            distances,
            downstream_queues,
            phase: s.phase(),
            green_elapsed: s.green_elapsed(),
        }
    }

    fn queue_len(&self, lane: usize) -> u32 {
        self.lanes[lane]
            .vehicles
            .iter()
            .filter(|&&v| self.vehicles[v].speed < STOP_SPEED)
            .count() as u32
    }

    /// Test and tooling hook: places a vehicle of `route` directly on its
    /// first lane at distance `d` with the given speed.
    pub fn insert_vehicle(&mut self, route: usize, d: f64, speed: f64) -> Result<usize> {
        let lane = *self
            .net
            .routes
            .get(route)
            .ok_or_else(|| Error::Flow(format!("missing route {route}")))?
            .lanes
            .first()
            .expect("routes are non-empty");
        if !(0.0..=self.net.lanes[lane].length).contains(&d) {
            return Err(Error::InvalidInput(format!("distance {d} outside lane")));
        }
        if let Some(&last) = self.lanes[lane].vehicles.back() {
            if self.vehicles[last].d + self.config.spacing > d + 1e-9 {
                return Err(Error::InvalidInput("vehicles must be inserted front to back with spacing".into()));
            }
        }
        let id = self.vehicles.len();
        self.vehicles.push(Vehicle {
            route,
            hop: 0,
            d,
            speed,
            stops: 0,
            spawn: self.time,
            entered: u32::MAX,
            on_road: true,
            completion: None,
        });
        self.lanes[lane].vehicles.push_back(id);
        Ok(id)
    }

    pub fn vehicle_position(&self, id: usize) -> Option<(usize, f64, f64)> {
        let v = self.vehicles.get(id)?;
        if !v.on_road {
            return None;
        }
        Some((self.net.routes[v.route].lanes[v.hop], v.d, v.speed))
    }

    /// Lane, distance and speed of every vehicle on the road, in lane order.
    pub fn snapshot(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::new();
        for (l, q) in self.lanes.iter().enumerate() {
            for &v in &q.vehicles {
                out.push((v, l, self.vehicles[v].d, self.vehicles[v].speed));
            }
        }
        out
    }
}
