//! Scenario definition, randomization and the key-value scenario file.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::behaviors::BehaviorKind;
use super::kinematics::EgoSpec;
use crate::infogain::NoiseModel;
use crate::topology::{bearing_deg, VesselState};
use crate::Vec2;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Obstacles may not spawn closer than this to the ego start or goal, m.
pub const START_GOAL_CLEARANCE: f64 = 20.0;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("scenario format version {0} is not supported")]
    Version(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mix {
    /// 80% constant-velocity, 20% cooperative.
    Mixed8020,
    NonCoopOnly,
}

impl Mix {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mix::Mixed8020 => "MIXED_80_20",
            Mix::NonCoopOnly => "NON_COOP_ONLY",
        }
    }

    pub fn cooperative_count(&self, n: usize) -> usize {
        match self {
            Mix::Mixed8020 => (n as f64 * 0.2).round() as usize,
            Mix::NonCoopOnly => 0,
        }
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MIXED_80_20" | "MIXED" => Ok(Mix::Mixed8020),
            "NON_COOP_ONLY" | "NON_COOP" | "NONCOOP" => Ok(Mix::NonCoopOnly),
            other => Err(format!("unknown mix `{other}`")),
        }
    }
}

/// Initial condition, hull, policy and AIS noise of one obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselSpec {
    pub id: u32,
    pub pos: Vec2,
    pub heading_deg: f64,
    pub speed: f64,
    pub length: f64,
    pub beam: f64,
    pub behavior: BehaviorKind,
    pub noise: NoiseModel,
}

impl VesselSpec {
    pub fn initial_state(&self) -> VesselState {
        VesselState::new(self.id, 0.0, self.pos, self.heading_deg, self.speed).with_dims(self.length, self.beam)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Width and height of the square arena centred on the origin, m.
    pub arena: (f64, f64),
    pub ego_start: Vec2,
    pub ego_goal: Vec2,
    pub ego_spec: EgoSpec,
    pub obstacles: Vec<VesselSpec>,
    pub seed: u64,
    pub mix: Mix,
}

impl Scenario {
    /// Start `(0, -100)`, goal `(0, 100)` in a 200 m square, no obstacles.
    pub fn empty(seed: u64) -> Self {
        Self {
            arena: (200.0, 200.0),
            ego_start: Vec2::new(0.0, -100.0),
            ego_goal: Vec2::new(0.0, 100.0),
            ego_spec: EgoSpec::default(),
            obstacles: Vec::new(),
            seed,
            mix: Mix::NonCoopOnly,
        }
    }

    pub fn ego_initial_state(&self) -> VesselState {
        let heading = bearing_deg(&(self.ego_goal - self.ego_start));
        VesselState::new(0, 0.0, self.ego_start, heading, self.ego_spec.v_max)
            .with_dims(self.ego_spec.length, self.ego_spec.beam)
    }

    fn in_arena(&self, p: Vec2) -> bool {
        p.x.abs() <= self.arena.0 / 2.0 + 1e-9 && p.y.abs() <= self.arena.1 / 2.0 + 1e-9
    }

    /// Where a cooperative obstacle heads: the point where its initial course
    /// leaves the arena.
    pub fn obstacle_goal(&self, o: &VesselSpec) -> Vec2 {
        let d = crate::topology::heading_unit(o.heading_deg);
        let (hw, hh) = (self.arena.0 / 2.0, self.arena.1 / 2.0);
        let mut t = f64::INFINITY;
        for (p, v, lim) in [(o.pos.x, d.x, hw), (o.pos.y, d.y, hh)] {
            if v > 1e-12 {
                t = t.min((lim - p) / v);
            } else if v < -1e-12 {
                t = t.min((-lim - p) / v);
            }
        }
        o.pos + d * t.max(0.0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if !(self.arena.0 > 0.0 && self.arena.1 > 0.0) {
            return bad("arena must have positive size".into());
        }
        if (self.ego_start - self.ego_goal).norm() == 0.0 {
            return bad("start and goal coincide".into());
        }
        let mut ids = std::collections::HashSet::new();
        for o in &self.obstacles {
            if o.id == 0 || !ids.insert(o.id) {
                return bad(format!("obstacle ids must be unique and nonzero (id {})", o.id));
            }
            if !self.in_arena(o.pos) {
                return bad(format!("obstacle {} starts outside the arena", o.id));
            }
            if !(o.length > 0.0 && o.beam > 0.0 && o.speed >= 0.0) {
                return bad(format!("obstacle {} has invalid dimensions or speed", o.id));
            }
        }
        Ok(())
    }

    /// Key-value text; floats use shortest round-trip formatting, so
    /// `parse(to_text(s)) == s`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.ego_spec;
        let _ = writeln!(s, "format_version = {SCENARIO_FORMAT_VERSION}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mix = {}", self.mix);
        let _ = writeln!(s, "arena = {},{}", self.arena.0, self.arena.1);
        let _ = writeln!(s, "ego_start = {},{}", self.ego_start.x, self.ego_start.y);
        let _ = writeln!(s, "ego_goal = {},{}", self.ego_goal.x, self.ego_goal.y);
        let _ = writeln!(
            s,
            "ego = length={} beam={} sensing_range={} v_max={} turn_rate_max={} accel_max={}",
            e.length, e.beam, e.sensing_range, e.v_max, e.turn_rate_max, e.accel_max
        );
        for o in &self.obstacles {
            let n = &o.noise;
            let _ = writeln!(
                s,
                "obstacle = id={} x={} y={} heading={} speed={} length={} beam={} behavior={} sigma_x={} sigma_y={} sigma_theta={} sigma_v={}",
                o.id, o.pos.x, o.pos.y, o.heading_deg, o.speed, o.length, o.beam, o.behavior,
                n.sigma_x, n.sigma_y, n.sigma_theta, n.sigma_v
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut sc = Scenario::empty(0);
        let mut version = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let syn = |msg: String| ScenarioError::Syntax { line, msg };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| syn("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64, ScenarioError> {
                let x: f64 = v.trim().parse().map_err(|_| syn(format!("bad number `{v}`")))?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(syn(format!("non-finite number `{v}`")))
                }
            };
            let pair = |v: &str| -> Result<(f64, f64), ScenarioError> {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| syn(format!("expected `x,y`, found `{v}`")))?;
                Ok((num(a)?, num(b)?))
            };
            match key {
                "format_version" => {
                    let v: u32 = value.parse().map_err(|_| syn(format!("bad version `{value}`")))?;
                    if v != SCENARIO_FORMAT_VERSION {
                        return Err(ScenarioError::Version(v));
                    }
                    version = Some(v);
                }
                "seed" => sc.seed = value.parse().map_err(|_| syn(format!("bad seed `{value}`")))?,
                "mix" => sc.mix = value.parse().map_err(syn)?,
                "arena" => sc.arena = pair(value)?,
                "ego_start" => sc.ego_start = pair(value).map(|(x, y)| Vec2::new(x, y))?,
                "ego_goal" => sc.ego_goal = pair(value).map(|(x, y)| Vec2::new(x, y))?,
                "ego" => {
                    let f = fields(value, line)?;
                    let e = &mut sc.ego_spec;
                    for (k, v) in f {
                        let x = num(v)?;
                        match k {
                            "length" => e.length = x,
                            "beam" => e.beam = x,
                            "sensing_range" => e.sensing_range = x,
                            "v_max" => e.v_max = x,
                            "turn_rate_max" => e.turn_rate_max = x,
                            "accel_max" => e.accel_max = x,
                            other => return Err(syn(format!("unknown ego field `{other}`"))),
                        }
                    }
                }
                "obstacle" => {
                    let mut o = VesselSpec {
                        id: 0,
                        pos: Vec2::zeros(),
                        heading_deg: 0.0,
                        speed: 0.0,
                        length: 2.5,
                        beam: 1.0,
                        behavior: BehaviorKind::Cv,
                        noise: NoiseModel::zero(),
                    };
                    let mut seen_id = false;
                    for (k, v) in fields(value, line)? {
                        match k {
                            "id" => {
                                o.id = v.parse().map_err(|_| syn(format!("bad id `{v}`")))?;
                                seen_id = true;
                            }
                            "behavior" => o.behavior = v.parse().map_err(syn)?,
                            "x" => o.pos.x = num(v)?,
                            "y" => o.pos.y = num(v)?,
                            "heading" => o.heading_deg = num(v)?,
                            "speed" => o.speed = num(v)?,
                            "length" => o.length = num(v)?,
                            "beam" => o.beam = num(v)?,
                            "sigma_x" => o.noise.sigma_x = num(v)?,
                            "sigma_y" => o.noise.sigma_y = num(v)?,
                            "sigma_theta" => o.noise.sigma_theta = num(v)?,
                            "sigma_v" => o.noise.sigma_v = num(v)?,
                            other => return Err(syn(format!("unknown obstacle field `{other}`"))),
                        }
                    }
                    if !seen_id {
                        return Err(syn("obstacle needs an id".into()));
                    }
                    NoiseModel::new(o.noise.sigma_x, o.noise.sigma_y, o.noise.sigma_theta, o.noise.sigma_v)
                        .map_err(|e| syn(e.to_string()))?;
                    sc.obstacles.push(o);
                }
                other => return Err(syn(format!("unknown key `{other}`"))),
            }
        }
        if version.is_none() {
            return Err(ScenarioError::Syntax {
                line: 0,
                msg: "missing format_version".into(),
            });
        }
        sc.validate()?;
        Ok(sc)
    }
}

fn fields(value: &str, line: usize) -> Result<Vec<(&str, &str)>, ScenarioError> {
    value
        .split_whitespace()
        .map(|kv| {
            kv.split_once('=').ok_or_else(|| ScenarioError::Syntax {
                line,
                msg: format!("expected `name=value`, found `{kv}`"),
            })
        })
        .collect()
}

/// Random obstacle field for one Monte-Carlo run.
///
/// Lengths `U(1, 4)` m, speeds `U(0, 2)` m/s, uniform headings and positions
/// (away from the start and goal). Per-vessel noise levels are drawn from
/// `U(0, 0.3)` m, `U(0, 0.3)` rad and `U(0, 0.5)` m/s, and zeroed when
/// `noise` is false so that both settings share obstacle geometry.
pub fn randomize_scenario(n: usize, mix: Mix, noise: bool, seed: u64) -> Scenario {
    let mut sc = Scenario::empty(seed);
    sc.mix = mix;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hw, hh) = (sc.arena.0 / 2.0, sc.arena.1 / 2.0);
    for k in 0..n {
        let pos = loop {
            let p = Vec2::new(rng.random_range(-hw..hw), rng.random_range(-hh..hh));
            if (p - sc.ego_start).norm() > START_GOAL_CLEARANCE && (p - sc.ego_goal).norm() > START_GOAL_CLEARANCE {
                break p;
            }
        };
        let length = rng.random_range(1.0..4.0);
        let heading_deg = rng.random_range(0.0..360.0);
        let speed = rng.random_range(0.0..2.0);
        let sp = rng.random_range(0.0..0.3);
        let st = rng.random_range(0.0..0.3);
        let sv = rng.random_range(0.0..0.5);
        let nm = if noise {
            NoiseModel::new(sp, sp, st, sv).expect("valid noise")
        } else {
            NoiseModel::zero()
        };
        sc.obstacles.push(VesselSpec {
            id: k as u32 + 1,
            pos,
            heading_deg,
            speed,
            length,
            beam: length * 0.4,
            behavior: BehaviorKind::Cv,
            noise: nm,
        });
    }
    let coop = mix.cooperative_count(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &i in &order[..coop] {
        sc.obstacles[i].behavior = BehaviorKind::COOPERATIVE[rng.random_range(0..4)];
    }
    sc
}
