//! Deterministic multi-vessel simulation: kinematics, AIS sensing, obstacle
//! behaviours, scenarios, episodes, Monte-Carlo batches and accident replay.

pub mod batch;
pub mod behaviors;
pub mod episode;
pub mod kinematics;
pub mod replay;
pub mod scenario;
pub mod sensor;

pub use batch::{
    monte_carlo, scenario_seed, write_episodes_csv, write_metrics_csv, write_summary_csv, AggregateRow, BatchError,
    BatchResult, BatchSpec, Cell, EpisodeResult,
};
pub use behaviors::{behavior_policy, AgentView, BehaviorKind};
pub use episode::{
    run_episode, run_scenario, BeliefSource, DecisionRecord, EgoDriver, EpisodeLog, EpisodeSetup, MetricsRow,
    ObstacleDriver, Outcome, SimConfig, StepRecord, Track,
};
pub use kinematics::{step_kinematics, Command, EgoSpec};
pub use replay::{
    kodomari_config, kodomari_dims, kodomari_reconstruction, read_ais_csv, replay_accident, tracks_by_id,
    write_ais_csv, AisRecord, ReplayConfig, ReplayError, ReplayMode, VesselDims, KODOMARI_A, KODOMARI_B,
};
pub use scenario::{randomize_scenario, Mix, Scenario, ScenarioError, VesselSpec};
pub use sensor::{ais_observe, AisFix, AisReceiver, DEFAULT_AIS_DELAY};
