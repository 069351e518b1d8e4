//! Second decision stage: how long the chosen phase stays green.

mod controller;
mod ddpg;
mod defuzz;
mod nets;
mod ou;
mod replay;
mod state;

pub use controller::{DurationMode, FuzzyLight, FuzzyLightConfig, PhaseMode};
pub use ddpg::{DdpgAgent, DdpgConfig, UpdateStats};
pub use defuzz::{defuzzify_duration, refer_duration};
pub use nets::{Actor, Critic, FuzzyFront, NetConfig};
pub use ou::OuNoise;
pub use replay::{ReplayBuffer, Transition};
pub use state::{DurationState, SegmentLayout, StateBatch};
