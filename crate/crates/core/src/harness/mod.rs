//! Scenario loading, episode running, metrics and result files.

mod dump;
mod episode;
mod experiment;
mod metrics;
mod output;
mod scenario;

pub use dump::{recover_dump, RecoveryDump, RecoverySample};
pub use episode::{calibrate_scenario, run_episode, EpisodeOutcome};
pub use experiment::{
    run_experiment, run_sweep, CellResult, EpisodeMetrics, Experiment, NoiseSpec, Stage, FROZEN_EPISODE_BASE,
};
pub use metrics::{
    compute_att, mean_std, rank_transfers, throughput_rate, throughput_rate_analysis, ThroughputRateReport,
    TransferReport,
};
pub use output::{append_csv, emit_results, read_results, summarise, write_json, Summary, SummaryGroup};
pub use scenario::{derive_seed, ControllerSettings, FlowSpec, LoadedScenario, Scenario, TrainingSettings};
