//! Particle predictions of passing beliefs under candidate actions, binary
//! entropy, information gain and its aggregation over obstacle clusters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::PassingBelief;
use crate::planner::Action;
use crate::simulator::kinematics::{step_kinematics, Command, EgoSpec};
use crate::topology::{heading_unit, LosSweep, PassingSide, VesselState, DEFAULT_DEAD_BAND};
use crate::Vec2;

/// Default particle count.
pub const DEFAULT_PARTICLES: usize = 1000;

/// Cap on the expected-belief rollout, seconds.
pub const DEFAULT_ROLLOUT_HORIZON: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoGainError {
    #[error("information gain {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error("noise standard deviations must be finite and non-negative")]
    InvalidNoise,
}

/// Per-obstacle standard deviations of AIS measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// m
    pub sigma_x: f64,
    /// m
    pub sigma_y: f64,
    /// rad
    pub sigma_theta: f64,
    /// m/s
    pub sigma_v: f64,
}

impl NoiseModel {
    pub fn new(sigma_x: f64, sigma_y: f64, sigma_theta: f64, sigma_v: f64) -> Result<Self, InfoGainError> {
        let nm = Self {
            sigma_x,
            sigma_y,
            sigma_theta,
            sigma_v,
        };
        if [sigma_x, sigma_y, sigma_theta, sigma_v]
            .iter()
            .all(|s| s.is_finite() && *s >= 0.0)
        {
            Ok(nm)
        } else {
            Err(InfoGainError::InvalidNoise)
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Trace of the diagonal covariance of `(x, y, theta, v)`.
    pub fn trace(&self) -> f64 {
        self.sigma_x.powi(2) + self.sigma_y.powi(2) + self.sigma_theta.powi(2) + self.sigma_v.powi(2)
    }
}

/// Gaussian samples of one obstacle's state, stored as positions and
/// velocities for the rollout kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    template: VesselState,
    x: Vec<f64>,
    y: Vec<f64>,
    vx: Vec<f64>,
    vy: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The nominal (unperturbed) obstacle state.
    pub fn nominal(&self) -> &VesselState {
        &self.template
    }

    pub fn state(&self, i: usize) -> VesselState {
        let vel = Vec2::new(self.vx[i], self.vy[i]);
        let speed = vel.norm();
        let heading_deg = if speed > 0.0 {
            crate::topology::bearing_deg(&vel)
        } else {
            self.template.heading_deg
        };
        VesselState {
            pos: Vec2::new(self.x[i], self.y[i]),
            heading_deg,
            speed,
            ..self.template
        }
    }

    pub fn states(&self) -> impl Iterator<Item = VesselState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// Draws `m` i.i.d. perturbations of `obs`; speed is clipped at zero.
pub fn sample_particles(obs: &VesselState, nm: &NoiseModel, m: usize, seed: u64) -> ParticleSet {
    assert!(m >= 1, "particle count must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = ParticleSet {
        template: *obs,
        x: Vec::with_capacity(m),
        y: Vec::with_capacity(m),
        vx: Vec::with_capacity(m),
        vy: Vec::with_capacity(m),
    };
    for _ in 0..m {
        let nx: f64 = StandardNormal.sample(&mut rng);
        let ny: f64 = StandardNormal.sample(&mut rng);
        let nt: f64 = StandardNormal.sample(&mut rng);
        let nv: f64 = StandardNormal.sample(&mut rng);
        let heading = obs.heading_deg + (nm.sigma_theta * nt).to_degrees();
        let speed = (obs.speed + nm.sigma_v * nv).max(0.0);
        let vel = heading_unit(heading) * speed;
        set.x.push(obs.pos.x + nm.sigma_x * nx);
        set.y.push(obs.pos.y + nm.sigma_y * ny);
        set.vx.push(vel.x);
        set.vy.push(vel.y);
    }
    set
}

/// Parameters of the expected-belief rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutConfig {
    /// Seconds; the rollout stops here if the obstacle has not cleared.
    pub horizon_s: f64,
    pub sensing_range: f64,
    pub dead_band: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            horizon_s: DEFAULT_ROLLOUT_HORIZON,
            sensing_range: 100.0,
            dead_band: DEFAULT_DEAD_BAND,
        }
    }
}

/// Ego trajectory under one action, sampled at 1 s.
///
/// The ego only manoeuvres while it is turning or accelerating toward the
/// commanded heading and speed; after `transient` steps its velocity is
/// constant, which lets the particle kernel treat the rest of the rollout in
/// closed form.
#[derive(Debug, Clone)]
pub struct EgoRollout {
    /// Positions at steps `0..=transient`.
    positions: Vec<Vec2>,
    /// Velocities after steps `1..=transient` (index 0 holds the initial one).
    velocities: Vec<Vec2>,
    steps: usize,
    length: f64,
}

impl EgoRollout {
    pub fn new(ego: &VesselState, cmd: Command, spec: &EgoSpec, horizon_s: f64) -> Self {
        assert!(horizon_s > 0.0, "rollout horizon must be positive");
        let steps = (horizon_s.floor() as usize).max(1);
        let target_speed = cmd.speed.clamp(0.0, spec.v_max);
        let mut s = *ego;
        let mut positions = vec![s.pos];
        let mut velocities = vec![s.velocity()];
        while positions.len() <= steps {
            let settled =
                s.speed == target_speed && crate::topology::heading_delta(s.heading_deg, cmd.heading_deg).abs() < 1e-12;
            if settled {
                break;
            }
            s = step_kinematics(&s, cmd, spec, 1.0);
            positions.push(s.pos);
            velocities.push(s.velocity());
        }
        Self {
            positions,
            velocities,
            steps,
            length: ego.length,
        }
    }

    pub fn for_action(ego: &VesselState, a: Action, spec: &EgoSpec, horizon_s: f64) -> Self {
        Self::new(ego, a.command(spec.v_max), spec, horizon_s)
    }

    fn transient(&self) -> usize {
        self.positions.len() - 1
    }

    /// Ego position at integer step `k`.
    pub fn position(&self, k: usize) -> Vec2 {
        let j = self.transient();
        if k <= j {
            self.positions[k]
        } else {
            self.positions[j] + self.velocities[j] * (k - j) as f64
        }
    }
}

/// Left/right/undetermined particle counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SideCounts {
    pub left: usize,
    pub right: usize,
    pub undetermined: usize,
}

impl SideCounts {
    /// Belief with undetermined particles split evenly between the sides.
    pub fn belief(&self) -> PassingBelief {
        let total = (self.left + self.right + self.undetermined) as f64;
        let p_l = (self.left as f64 + 0.5 * self.undetermined as f64) / total;
        PassingBelief::from_left(p_l)
    }
}

/// True if the segment `a -> b` passes within `sqrt(r_sq)` of the origin.
#[inline]
fn segment_hits(a: Vec2, b: Vec2, r_sq: f64) -> bool {
    let d = b - a;
    let dd = d.norm_squared();
    let s = if dd > 0.0 {
        (-a.dot(&d) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + d * s).norm_squared() <= r_sq
}

/// Classifies one relative trajectory; see [`classify_particles`].
#[inline]
fn classify_one(ego: &EgoRollout, p0: Vec2, pv: Vec2, contact_sq: f64, range_sq: f64, tan_db: f64) -> PassingSide {
    let j = ego.transient();
    let mut los = p0 - ego.positions[0];
    if los.norm_squared() <= contact_sq {
        return PassingSide::Undetermined;
    }
    let mut sweep = LosSweep::new(los);
    let mut exited: Option<LosSweep> = None;
    for k in 1..=j {
        let next = p0 + pv * k as f64 - ego.positions[k];
        if segment_hits(los, next, contact_sq) {
            return PassingSide::Undetermined;
        }
        sweep.push(next);
        if exited.is_none() && los.norm_squared() <= range_sq && next.norm_squared() > range_sq {
            exited = Some(sweep);
        }
        los = next;
        // tcpa <= 0: the obstacle is opening.
        if los.dot(&(pv - ego.velocities[k])) >= 0.0 {
            return sweep.classify(tan_db);
        }
    }
    if j < ego.steps {
        // Constant relative velocity from step j on: the line of sight moves
        // along a straight segment, and it keeps closing until t_star, so the
        // first opening sample is ceil(t_star) steps ahead.
        let v_rel = pv - ego.velocities[j];
        let vv = v_rel.norm_squared();
        let remaining = (ego.steps - j) as f64;
        let t_star = if vv > 0.0 { -los.dot(&v_rel) / vv } else { 0.0 };
        let open = t_star.ceil().max(1.0);
        let end = los + v_rel * open.min(remaining);
        if segment_hits(los, end, contact_sq) {
            return PassingSide::Undetermined;
        }
        sweep.push(end);
        if open <= remaining {
            return sweep.classify(tan_db);
        }
    }
    exited.unwrap_or(sweep).classify(tan_db)
}

/// Counts passing sides of every particle against a precomputed ego rollout.
///
/// Each particle moves at constant velocity. Its rollout ends at the first
/// step where it is opening from the ego, else where it leaves sensing range,
/// else at the horizon. A particle that comes into hull contact with the ego
/// has no passing side and counts as undetermined.
pub fn classify_particles(ego: &EgoRollout, particles: &ParticleSet, cfg: &RolloutConfig) -> SideCounts {
    let contact = 0.5 * (ego.length + particles.template.length);
    let contact_sq = contact * contact;
    let range_sq = cfg.sensing_range * cfg.sensing_range;
    let tan_db = cfg.dead_band.tan();
    let mut counts = SideCounts::default();
    for i in 0..particles.len() {
        let p0 = Vec2::new(particles.x[i], particles.y[i]);
        let pv = Vec2::new(particles.vx[i], particles.vy[i]);
        match classify_one(ego, p0, pv, contact_sq, range_sq, tan_db) {
            PassingSide::Left => counts.left += 1,
            PassingSide::Right => counts.right += 1,
            PassingSide::Undetermined => counts.undetermined += 1,
        }
    }
    counts
}

/// Predicted passing belief of an obstacle if the ego executes `a`.
pub fn passing_probability(
    ego: &VesselState,
    a: Action,
    spec: &EgoSpec,
    particles: &ParticleSet,
    cfg: &RolloutConfig,
) -> PassingBelief {
    let rollout = EgoRollout::for_action(ego, a, spec, cfg.horizon_s);
    classify_particles(&rollout, particles, cfg).belief()
}

/// Binary Shannon entropy in bits.
pub fn entropy(b: &PassingBelief) -> f64 {
    let h = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    (h(b.p_l) + h(b.p_r)).clamp(0.0, 1.0)
}

pub fn information_gain(current: &PassingBelief, expected: &PassingBelief) -> f64 {
    entropy(current) - entropy(expected)
}

/// Maps `I` in `[-1, 1]` to a cost in `[0, 1]`.
pub fn remap_gain(i: f64) -> Result<f64, InfoGainError> {
    if !(-1.0..=1.0).contains(&i) {
        return Err(InfoGainError::OutOfRange(i));
    }
    Ok((1.0 - i) / 2.0)
}

/// Weights of cluster members: each trace relative to the largest trace.
/// All-zero traces give uniform weights of 1.
pub fn obstacle_weights(noise: &[NoiseModel]) -> Vec<f64> {
    let max = noise.iter().map(NoiseModel::trace).fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![1.0; noise.len()];
    }
    noise.iter().map(|n| n.trace() / max).collect()
}

/// Weight-summed gain of one cluster and its weight `beta` (largest member weight).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterGain {
    pub value: f64,
    pub beta: f64,
}

pub fn cluster_gain(alphas: &[f64], gains: &[f64]) -> ClusterGain {
    assert_eq!(alphas.len(), gains.len(), "one weight per member");
    assert!(!alphas.is_empty(), "cluster must be nonempty");
    ClusterGain {
        value: alphas.iter().zip(gains).map(|(a, g)| a * g).sum(),
        beta: alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Sum of cluster gains weighted by their `beta`; zero with no clusters.
pub fn total_gain(clusters: &[ClusterGain]) -> f64 {
    clusters.iter().map(|c| c.beta * c.value).sum()
}

/// Information-gain cost over the full action grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GainField {
    values: Vec<f64>,
}

impl GainField {
    pub fn new(values: Vec<f64>) -> Self {
        assert_eq!(values.len(), crate::planner::ACTION_COUNT);
        Self { values }
    }

    pub fn get(&self, a: Action) -> f64 {
        self.values[a.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Heading (deg) minimizing the field at a fixed speed step.
    ///
    /// Flat minima are common (whole arcs of headings can leave no doubt about
    /// the passing side), so the result is the circular midpoint of the widest
    /// run of headings sharing the minimum value.
    pub fn min_heading(&self, speed_step: u8) -> f64 {
        let row: Vec<f64> = (0..360u16)
            .map(|h| self.get(Action::new(h, speed_step).expect("on-grid action")))
            .collect();
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * min.abs().max(1.0);
        let is_min: Vec<bool> = row.iter().map(|v| *v <= min + tol).collect();
        if is_min.iter().all(|m| *m) {
            return 0.0;
        }
        // Start scanning just after a non-minimal heading so runs don't wrap.
        let start = (0..360).find(|&h| !is_min[h]).unwrap();
        let (mut best_start, mut best_len) = (0, 0);
        let mut run_start = None;
        for off in 1..=360 {
            let h = (start + off) % 360;
            match (is_min[h], run_start) {
                (true, None) => run_start = Some(off),
                (false, Some(s)) => {
                    if off - s > best_len {
                        best_len = off - s;
                        best_start = s;
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
        let mid = (start + best_start) as f64 + (best_len as f64 - 1.0) / 2.0;
        mid.rem_euclid(360.0)
    }
}
