use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::duration::{DdpgConfig, SegmentLayout};
use crate::error::{Error, Result};
use crate::sensing::SensingConfig;
use crate::sim::{
    generate_arrivals, synthetic_flows, Arrival, ArrivalPattern, Flow, GridSpec, Heading, Movement, RoadNetwork,
    SimConfig,
};

/// Explicit flow: enter at `(row, col)` travelling `heading`, one movement
/// per intersection crossed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub origin: [usize; 2],
    pub heading: String,
    pub movements: Vec<String>,
    pub pattern: ArrivalPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSettings {
    pub fixed_time_green: u32,
    pub max_pressure_green: u32,
    /// Green of the fixed-duration ablation.
    pub ablation_green: u32,
    /// Feed recovered counts (rather than ground truth) to baselines.
    pub baselines_use_sensing: bool,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            fixed_time_green: 30,
            max_pressure_green: 15,
            ablation_green: 30,
            baselines_use_sensing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub rounds: usize,
    /// Evaluation episodes averaged at the end of training.
    pub eval_window: usize,
    /// Defaults to the longest lane over the fastest speed.
    pub refer_duration: Option<f64>,
    pub layout: SegmentLayout,
    pub ddpg: DdpgConfig,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self {
            rounds: 50,
            eval_window: 10,
            refer_duration: None,
            layout: SegmentLayout::default(),
            ddpg: DdpgConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sim: SimConfig,
    /// Synthetic demand per boundary approach, vehicles per hour.
    #[serde(default)]
    pub demand: Option<f64>,
    #[serde(default)]
    pub flows: Vec<FlowSpec>,
    #[serde(default)]
    pub sensing: SensingConfig,
    #[serde(default)]
    pub controllers: ControllerSettings,
    #[serde(default)]
    pub training: TrainingSettings,
}

/// A parsed scenario with its network built and routes registered.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub network: Arc<RoadNetwork>,
    pub flows: Vec<Flow>,
    /// Hex sha256 of the canonical scenario text.
    pub hash: String,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    /// Re-serialised form; hashing it keys results by content, not layout.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn build(self) -> Result<LoadedScenario> {
        if self.sim.episode_length == 0 {
            return Err(Error::Scenario("episode_length must be positive".into()));
        }
        if self.demand.is_none() && self.flows.is_empty() {
            return Err(Error::Scenario("scenario defines neither demand nor flows".into()));
        }
        let mut net = RoadNetwork::grid(self.grid)?;
        let mut flows = match self.demand {
            Some(v) => synthetic_flows(&mut net, v)?,
            None => Vec::new(),
        };
        for (i, f) in self.flows.iter().enumerate() {
            let heading = Heading::parse(&f.heading)?;
            let moves = f.movements.iter().map(|m| Movement::parse(m)).collect::<Result<Vec<_>>>()?;
            let route = net
                .route_from_movements(f.origin[0], f.origin[1], heading, &moves)
                .map_err(|e| Error::Scenario(format!("flow {i}: {e}")))?;
            let id = net.add_route(route)?;
            flows.push(Flow {
                route: id,
                pattern: f.pattern.clone(),
            });
        }
        let hash = self.hash()?;
        Ok(LoadedScenario {
            scenario: self,
            network: Arc::new(net),
            flows,
            hash,
        })
    }
}

impl LoadedScenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        Scenario::load(path)?.build()
    }

    pub fn name(&self) -> &str {
        &self.scenario.name
    }

    pub fn episode_length(&self) -> u32 {
        self.scenario.sim.episode_length
    }

    /// Arrivals for one experiment seed; fixed across that seed's episodes.
    pub fn arrivals(&self, seed: u64) -> Result<Vec<Arrival>> {
        generate_arrivals(
            &self.flows,
            &self.network,
            self.episode_length(),
            derive_seed(self.scenario.seed, 0, seed, 0),
        )
    }

    /// Defaults to the longest lane's free-flow travel time.
    pub fn refer_duration(&self) -> Result<f64> {
        match self.scenario.training.refer_duration {
            Some(r) => Ok(r),
            None => crate::duration::refer_duration(self.network.max_lane_length(), self.network.max_lane_speed()),
        }
    }
}

/// Independent seed for `(purpose, a, b)` under a scenario base seed.
pub fn derive_seed(base: u64, purpose: u64, a: u64, b: u64) -> u64 {
    let mut h = Sha256::new();
    for v in [base, purpose, a, b] {
        h.update(v.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}
