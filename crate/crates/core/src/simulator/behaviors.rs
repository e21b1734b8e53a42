//! Motion policies for obstacle vessels.
//!
//! Non-cooperative vessels hold course and speed. Cooperative ones steer for
//! their own goal with one of four local planners: a potential field, a
//! dynamic window, or the VO / MOA planners from [`crate::planner`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::kinematics::{Command, EgoSpec};
use crate::infogain::NoiseModel;
use crate::planner::{select_action, LocalGoal, ObstacleView, PlannerConfig, ShipDomain, Snapshot, Variant};
use crate::topology::{bearing_deg, heading_delta, heading_unit, VesselState};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorKind {
    Cv,
    Apf,
    Dwa,
    Vo,
    Moa,
}

impl BehaviorKind {
    pub const COOPERATIVE: [BehaviorKind; 4] = [
        BehaviorKind::Apf,
        BehaviorKind::Dwa,
        BehaviorKind::Vo,
        BehaviorKind::Moa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BehaviorKind::Cv => "CV",
            BehaviorKind::Apf => "APF",
            BehaviorKind::Dwa => "DWA",
            BehaviorKind::Vo => "VO",
            BehaviorKind::Moa => "MOA",
        }
    }

    pub fn is_cooperative(&self) -> bool {
        *self != BehaviorKind::Cv
    }
}

impl fmt::Display for BehaviorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CV" => Ok(BehaviorKind::Cv),
            "APF" => Ok(BehaviorKind::Apf),
            "DWA" => Ok(BehaviorKind::Dwa),
            "VO" => Ok(BehaviorKind::Vo),
            "MOA" => Ok(BehaviorKind::Moa),
            other => Err(format!("unknown behavior `{other}`")),
        }
    }
}

/// What a cooperative agent sees when it decides.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub me: &'a VesselState,
    pub spec: &'a EgoSpec,
    pub goal: Vec2,
    /// Cruise speed, m/s.
    pub v_pref: f64,
    /// Truth states of every other vessel.
    pub others: &'a [VesselState],
}

const APF_INFLUENCE: f64 = 30.0;
const APF_REPULSION: f64 = 1500.0;
/// Share of the repulsion applied sideways, so an obstacle dead ahead still
/// produces a push (to starboard).
const APF_SWIRL: f64 = 0.5;

const DWA_LOOKAHEAD: usize = 5;
const DWA_HEADING_STEP: f64 = 5.0;

pub fn behavior_policy(kind: BehaviorKind, view: &AgentView, cfg: &PlannerConfig, seed: u64) -> Command {
    let me = view.me;
    if (view.goal - me.pos).norm() < 1e-9 {
        return Command::hold(me);
    }
    match kind {
        BehaviorKind::Cv => Command::hold(me),
        BehaviorKind::Apf => apf(view),
        BehaviorKind::Dwa => dwa(view),
        BehaviorKind::Vo => planned(view, cfg, Variant::Vo, seed),
        BehaviorKind::Moa => planned(view, cfg, Variant::Moa, seed),
    }
}

fn apf(view: &AgentView) -> Command {
    let me = view.me;
    let to_goal = view.goal - me.pos;
    let mut force = to_goal / to_goal.norm();
    for o in view.others {
        let away = me.pos - o.pos;
        let d = away.norm();
        if d <= 1e-9 || d >= APF_INFLUENCE {
            continue;
        }
        let mag = APF_REPULSION * (1.0 / d - 1.0 / APF_INFLUENCE) / (d * d);
        let u = away / d;
        let tangent = Vec2::new(-u.y, u.x);
        force += (u + tangent * APF_SWIRL) * mag;
    }
    if force.norm() < 1e-12 {
        return Command::hold(me);
    }
    Command {
        heading_deg: bearing_deg(&force),
        speed: view.v_pref,
    }
}

fn dwa(view: &AgentView) -> Command {
    let me = view.me;
    let spec = view.spec;
    let goal_bearing = bearing_deg(&(view.goal - me.pos));
    let steps = (spec.turn_rate_max / DWA_HEADING_STEP).floor() as i32;
    let speeds = [me.speed - spec.accel_max, me.speed, me.speed + spec.accel_max];
    let mut best: Option<(f64, Command)> = None;
    for k in -steps..=steps {
        let heading = me.heading_deg + k as f64 * DWA_HEADING_STEP;
        for v in speeds {
            if v < 0.0 || v > view.v_pref + 1e-9 {
                continue;
            }
            let vel = heading_unit(heading) * v;
            let mut clearance = f64::INFINITY;
            for o in view.others {
                let c = ShipDomain::for_pair(me.length, o.length).collision_radius;
                for s in 1..=DWA_LOOKAHEAD {
                    let dt = s as f64;
                    let d = (me.pos + vel * dt - o.pos - o.velocity() * dt).norm() - c;
                    clearance = clearance.min(d);
                }
            }
            if clearance < 0.0 {
                continue;
            }
            let align = 1.0 - heading_delta(heading, goal_bearing).abs() / 180.0;
            let speed_term = if view.v_pref > 0.0 { v / view.v_pref } else { 0.0 };
            let score = align + 0.5 * clearance.min(20.0) / 20.0 + 0.2 * speed_term;
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((
                    score,
                    Command {
                        heading_deg: heading,
                        speed: v,
                    },
                ));
            }
        }
    }
    best.map(|(_, c)| c).unwrap_or_else(|| Command::stop(me))
}

fn planned(view: &AgentView, cfg: &PlannerConfig, variant: Variant, seed: u64) -> Command {
    let me = view.me;
    let spec = EgoSpec {
        v_max: view.v_pref.max(0.1),
        length: me.length,
        beam: me.beam,
        ..*view.spec
    };
    let snap = Snapshot {
        ego: *me,
        spec,
        obstacles: view
            .others
            .iter()
            .filter(|o| (o.pos - me.pos).norm() <= cfg.sensing_range)
            .map(|o| ObstacleView::new(*o, NoiseModel::zero()))
            .collect(),
    };
    let goal = LocalGoal::toward(bearing_deg(&(view.goal - me.pos)), 1.0);
    let cfg = cfg.clone().with_variant(variant);
    match select_action(&snap, &goal, &cfg, seed, false) {
        Ok(d) => d.action.command(spec.v_max),
        Err(_) => Command::stop(me),
    }
}
