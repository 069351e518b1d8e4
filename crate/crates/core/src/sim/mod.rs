//! Grid traffic simulator: network topology, demand, signal plans and a
//! one-second point-queue stepper.

mod flow;
mod network;
mod signal;
mod world;

pub use flow::{generate_arrivals, synthetic_flows, Arrival, ArrivalPattern, Flow, THROUGH_SHARE, TURN_SHARE};
pub use network::{
    local_lane, GridSpec, Heading, IntersectionSpec, LaneSpec, Movement, Phase, PhaseSet, RoadNetwork, Route,
    LANES_PER_INTERSECTION,
};
pub use signal::{DurationBounds, Light, SignalState, ALL_RED_SECS, YELLOW_SECS};
pub use world::{IntersectionState, SimConfig, VehicleRecord, World, STOP_SPEED};
