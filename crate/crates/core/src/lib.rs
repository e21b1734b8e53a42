//! Active intention-aware collision avoidance for autonomous surface vehicles.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`]: line-of-sight geometry, winding angles and the left/right
//!   passing classes derived from them, plus CPA kinematics.
//! * [`classifier`]: a stacked LSTM that predicts the passing class of an
//!   obstacle from a short window of AIS fixes, with a synthetic encounter
//!   generator and a from-scratch BPTT/Adam trainer.
//! * [`infogain`]: particle rollouts of candidate ego actions, binary Shannon
//!   entropy, information gain and its aggregation over obstacle clusters.
//! * [`planner`]: the discrete heading/speed action grid, no-go-zone pruning,
//!   the deviation/safety/information costs and the argmin selection for the
//!   MOA and VO planner families.
//! * [`simulator`]: deterministic 2-D kinematic traffic simulation, AIS sensor
//!   model, obstacle behaviours, Monte-Carlo batches and accident replay.

pub mod classifier;
pub mod infogain;
pub mod planner;
pub mod simulator;
pub mod topology;

pub use classifier::{ModelWeights, ObservationWindow, PassingBelief};
pub use infogain::{NoiseModel, ParticleSet};
pub use planner::{Action, LocalGoal, PlannerConfig, ShipDomain, Variant};
pub use simulator::{EgoSpec, EpisodeLog, MetricsRow, Scenario, VesselSpec};
pub use topology::{CpaResult, PassingLabel, PassingSide, TrackPair, VesselState};

/// 2-D vector in the local ENU frame (x = east, y = north), meters.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Independent RNG stream derived from a master seed (splitmix64 finalizer).
pub fn substream(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
