//! Heading/speed action grid and the MOA and VO planner families.
//!
//! Every planner scores the same discrete grid of 360 headings x 5 speed
//! ratios. Actions whose constant-velocity execution would carry the ego into
//! an obstacle's collision boundary form the no-go set and are never chosen.

mod cluster;
mod config;
mod cost;
mod nogo;
mod select;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::classifier::PassingBelief;
use crate::infogain::NoiseModel;
use crate::simulator::kinematics::{Command, EgoSpec};
use crate::topology::VesselState;

pub use cluster::{cluster_obstacles, ClusterSet, ClusterThresholds};
pub use config::{ConfigError, PlannerConfig};
pub use cost::{deviation_cost, gain_field, info_cost, safety_cost, InfoContext};
pub use nogo::{no_go_zone, NoGoMask};
pub use select::{select_action, vo_baseline, CostBreakdown, Decision};

/// Number of heading steps (1 deg apart).
pub const HEADING_STEPS: usize = 360;
/// Number of speed-ratio steps (0, 0.25, ..., 1).
pub const SPEED_STEPS: usize = 5;
pub const ACTION_COUNT: usize = HEADING_STEPS * SPEED_STEPS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("every action is in the no-go zone")]
    NoFeasibleAction,
    #[error("ego is already inside the collision boundary of obstacle {id}")]
    AlreadyInsideC { id: u32 },
}

/// One cell of the heading/speed action grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action {
    heading: u16,
    speed_step: u8,
}

impl Action {
    pub fn new(heading: u16, speed_step: u8) -> Option<Self> {
        ((heading as usize) < HEADING_STEPS && (speed_step as usize) < SPEED_STEPS)
            .then_some(Self { heading, speed_step })
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < ACTION_COUNT, "action index out of range");
        Self {
            heading: (i / SPEED_STEPS) as u16,
            speed_step: (i % SPEED_STEPS) as u8,
        }
    }

    pub fn index(&self) -> usize {
        self.heading as usize * SPEED_STEPS + self.speed_step as usize
    }

    pub fn heading(&self) -> u16 {
        self.heading
    }

    pub fn heading_deg(&self) -> f64 {
        self.heading as f64
    }

    pub fn speed_step(&self) -> u8 {
        self.speed_step
    }

    pub fn speed_ratio(&self) -> f64 {
        self.speed_step as f64 / (SPEED_STEPS - 1) as f64
    }

    pub fn command(&self, v_max: f64) -> Command {
        Command {
            heading_deg: self.heading_deg(),
            speed: self.speed_ratio() * v_max,
        }
    }

    /// Ego velocity if the action were executed instantly.
    pub fn velocity(&self, v_max: f64) -> crate::Vec2 {
        crate::topology::heading_unit(self.heading_deg()) * (self.speed_ratio() * v_max)
    }
}

/// The full grid, ordered by heading then speed.
pub fn action_space() -> Vec<Action> {
    (0..ACTION_COUNT).map(Action::from_index).collect()
}

/// Circular collision (C) and risky (R) boundaries around an obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShipDomain {
    pub collision_radius: f64,
    pub risky_radius: f64,
}

impl ShipDomain {
    /// `C = c_factor * max(lengths)`, `R = r_factor * C`.
    pub fn from_lengths(ego_length: f64, obs_length: f64, c_factor: f64, r_factor: f64) -> Self {
        let c = c_factor * ego_length.max(obs_length);
        Self {
            collision_radius: c,
            risky_radius: r_factor * c,
        }
    }

    /// Default domain: `C = 2 * max(lengths)`, `R = 2 * C`.
    pub fn for_pair(ego_length: f64, obs_length: f64) -> Self {
        Self::from_lengths(ego_length, obs_length, 2.0, 2.0)
    }
}

/// Planner family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// MOA with information gain and LSTM current beliefs.
    MoaLstm,
    /// MOA with information gain and particle current beliefs.
    MoaPlus,
    Moa,
    /// VO with per-obstacle information gain.
    VoPlus,
    Vo,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::MoaLstm,
        Variant::MoaPlus,
        Variant::Moa,
        Variant::VoPlus,
        Variant::Vo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::MoaLstm => "MOA_LSTM",
            Variant::MoaPlus => "MOA_PLUS",
            Variant::Moa => "MOA",
            Variant::VoPlus => "VO_PLUS",
            Variant::Vo => "VO",
        }
    }

    pub fn is_moa_family(&self) -> bool {
        matches!(self, Variant::MoaLstm | Variant::MoaPlus | Variant::Moa)
    }

    pub fn uses_information(&self) -> bool {
        matches!(self, Variant::MoaLstm | Variant::MoaPlus | Variant::VoPlus)
    }

    pub fn uses_classifier(&self) -> bool {
        matches!(self, Variant::MoaLstm)
    }

    /// The variant without the information term.
    pub fn base(&self) -> Variant {
        if self.is_moa_family() {
            Variant::Moa
        } else {
            Variant::Vo
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '+'], "_");
        match norm.as_str() {
            "MOA_LSTM" | "MOA_PLUS_LSTM" | "MOA__LSTM" => Ok(Variant::MoaLstm),
            "MOA_PLUS" | "MOA_" => Ok(Variant::MoaPlus),
            "MOA" => Ok(Variant::Moa),
            "VO_PLUS" | "VO_" => Ok(Variant::VoPlus),
            "VO" => Ok(Variant::Vo),
            _ => Err(format!(
                "unknown variant `{s}` (expected MOA_LSTM, MOA_PLUS, MOA, VO_PLUS or VO)"
            )),
        }
    }
}

/// Local goal of one planning cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalGoal {
    /// Bearing to the next waypoint, deg.
    pub theta_wp: f64,
    /// Desired speed ratio.
    pub v_wp: f64,
    /// Heading target used to suppress chattering, deg.
    pub theta_tgt: f64,
}

impl LocalGoal {
    pub fn toward(theta_wp: f64, v_wp: f64) -> Self {
        let theta_wp = crate::topology::wrap_heading(theta_wp);
        Self {
            theta_wp,
            v_wp,
            theta_tgt: theta_wp,
        }
    }
}

/// What the ego knows about one obstacle at planning time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleView {
    /// Estimated current state.
    pub state: VesselState,
    pub noise: NoiseModel,
    /// Classifier belief, when the variant uses one.
    pub belief: Option<PassingBelief>,
}

impl ObstacleView {
    pub fn new(state: VesselState, noise: NoiseModel) -> Self {
        Self {
            state,
            noise,
            belief: None,
        }
    }
}

/// Everything the planner reads in one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub ego: VesselState,
    pub spec: EgoSpec,
    pub obstacles: Vec<ObstacleView>,
}

impl Snapshot {
    pub fn domain(&self, obs: &ObstacleView, cfg: &PlannerConfig) -> ShipDomain {
        ShipDomain::from_lengths(
            self.ego.length,
            obs.state.length,
            cfg.collision_factor,
            cfg.risky_factor,
        )
    }

    pub fn domains(&self, cfg: &PlannerConfig) -> Vec<ShipDomain> {
        self.obstacles.iter().map(|o| self.domain(o, cfg)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn grid_shape() {
        let a = action_space();
        assert_eq!(a.len(), 1800);
        assert!(a.contains(&Action::new(0, 0).unwrap()));
        assert!(a.contains(&Action::new(359, 4).unwrap()));
        assert_eq!(Action::new(359, 4).unwrap().speed_ratio(), 1.0);
        let set: HashSet<_> = a.iter().collect();
        assert_eq!(set.len(), 1800);
        for (i, x) in a.iter().enumerate() {
            assert_eq!(x.index(), i);
        }
        assert!(Action::new(360, 0).is_none());
        assert!(Action::new(0, 5).is_none());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("moa+".parse::<Variant>().unwrap(), Variant::MoaPlus);
        assert!("APF".parse::<Variant>().is_err());
    }

    #[test]
    fn domain_sizes() {
        let d = ShipDomain::for_pair(2.5, 4.0);
        assert_eq!(d.collision_radius, 8.0);
        assert_eq!(d.risky_radius, 16.0);
    }
}
