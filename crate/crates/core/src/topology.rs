//! Line-of-sight geometry and winding-number passing classes.
//!
//! Conventions used throughout the crate:
//!
//! * positions live in a local ENU frame in meters (x = east, y = north);
//! * headings are maritime degrees, clockwise from north, in `[0, 360)`;
//! * a vessel moving with heading `h` and speed `v` has velocity
//!   `v * (sin h, cos h)`;
//! * the winding angle of an obstacle is the signed total rotation of the
//!   ego-to-obstacle line of sight. Counter-clockwise rotation is positive and
//!   corresponds to the obstacle passing on the ego vessel's left.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::Vec2;

/// Default dead-band (rad) below which a winding angle is left undetermined.
pub const DEFAULT_DEAD_BAND: f64 = 0.05;

/// Default sensing range (m) used for the range-exit clearance rule.
pub const DEFAULT_SENSING_RANGE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("zero-length line-of-sight vector{}", match .index { Some(i) => format!(" at sample {i}"), None => String::new() })]
    ZeroLosVector { index: Option<usize> },
    #[error("track pair is empty")]
    EmptyTrack,
    #[error("track lengths differ: ego has {ego} samples, obstacle has {obs}")]
    LengthMismatch { ego: usize, obs: usize },
    #[error("ego and obstacle timestamps differ at sample {index}")]
    TimestampMismatch { index: usize },
    #[error("timestamps are not uniformly spaced by dt at sample {index}")]
    NonUniformSampling { index: usize },
    #[error("sampling interval must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("clearance index {index} is beyond the last sample {last}")]
    ClearanceOutOfRange { index: usize, last: usize },
}

/// Pose, heading and speed of one vessel at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselState {
    pub id: u32,
    /// Seconds.
    pub t: f64,
    pub pos: Vec2,
    /// Degrees clockwise from north, `[0, 360)`.
    pub heading_deg: f64,
    /// m/s, non-negative.
    pub speed: f64,
    pub length: f64,
    pub beam: f64,
}

impl VesselState {
    /// A vessel with the ego ASV's hull dimensions (2.5 m x 1.4 m).
    pub fn new(id: u32, t: f64, pos: Vec2, heading_deg: f64, speed: f64) -> Self {
        Self {
            id,
            t,
            pos,
            heading_deg: wrap_heading(heading_deg),
            speed: speed.max(0.0),
            length: 2.5,
            beam: 1.4,
        }
    }

    pub fn with_dims(mut self, length: f64, beam: f64) -> Self {
        self.length = length;
        self.beam = beam;
        self
    }

    pub fn velocity(&self) -> Vec2 {
        heading_unit(self.heading_deg) * self.speed
    }

    /// Constant-velocity extrapolation by `dt` seconds.
    pub fn propagate(&self, dt: f64) -> Self {
        Self {
            t: self.t + dt,
            pos: self.pos + self.velocity() * dt,
            ..*self
        }
    }
}

/// Unit vector pointing along a maritime heading.
pub fn heading_unit(heading_deg: f64) -> Vec2 {
    let (s, c) = heading_deg.to_radians().sin_cos();
    Vec2::new(s, c)
}

/// Maritime bearing (degrees clockwise from north) of a vector.
pub fn bearing_deg(v: &Vec2) -> f64 {
    wrap_heading(v.x.atan2(v.y).to_degrees())
}

/// Wraps any angle in degrees into `[0, 360)`.
pub fn wrap_heading(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Signed shortest rotation from `from` to `to`, in `(-180, 180]` degrees.
/// Positive is clockwise (starboard).
pub fn heading_delta(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Which side of the ego vessel an obstacle passes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PassingSide {
    /// Counter-clockwise line-of-sight sweep (P_l).
    Left,
    /// Clockwise line-of-sight sweep (P_r).
    Right,
    Undetermined,
}

impl PassingSide {
    pub fn as_str(&self) -> &'static str {
        match self {
            PassingSide::Left => "LEFT",
            PassingSide::Right => "RIGHT",
            PassingSide::Undetermined => "UNDETERMINED",
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            PassingSide::Left => PassingSide::Right,
            PassingSide::Right => PassingSide::Left,
            PassingSide::Undetermined => PassingSide::Undetermined,
        }
    }
}

impl std::str::FromStr for PassingSide {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "LEFT" => Ok(PassingSide::Left),
            "RIGHT" => Ok(PassingSide::Right),
            "UNDETERMINED" => Ok(PassingSide::Undetermined),
            other => Err(format!("unknown passing side `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassingLabel {
    pub side: PassingSide,
    /// Signed total winding angle, radians.
    pub winding_angle: f64,
}

impl PassingLabel {
    pub fn from_angle(winding_angle: f64, dead_band: f64) -> Self {
        let side = if winding_angle > dead_band {
            PassingSide::Left
        } else if winding_angle < -dead_band {
            PassingSide::Right
        } else {
            PassingSide::Undetermined
        };
        Self { side, winding_angle }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpaResult {
    /// Time to closest approach, clamped to be non-negative.
    pub tcpa: f64,
    /// Distance at closest approach.
    pub dcpa: f64,
    /// Bearing of the obstacle relative to the ego heading, clockwise, `[0, 360)`.
    pub rel_bearing_deg: f64,
}

/// Time-aligned ego and obstacle tracks sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPair {
    ego: Vec<VesselState>,
    obs: Vec<VesselState>,
    dt: f64,
}

impl TrackPair {
    pub fn new(ego: Vec<VesselState>, obs: Vec<VesselState>, dt: f64) -> Result<Self, TopologyError> {
        if !(dt > 0.0) {
            return Err(TopologyError::NonPositiveDt(dt));
        }
        if ego.is_empty() || obs.is_empty() {
            return Err(TopologyError::EmptyTrack);
        }
        if ego.len() != obs.len() {
            return Err(TopologyError::LengthMismatch {
                ego: ego.len(),
                obs: obs.len(),
            });
        }
        for (i, (e, o)) in ego.iter().zip(&obs).enumerate() {
            if (e.t - o.t).abs() > 1e-9 {
                return Err(TopologyError::TimestampMismatch { index: i });
            }
            if i > 0 && ((e.t - ego[i - 1].t) - dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(TopologyError::NonUniformSampling { index: i });
            }
        }
        Ok(Self { ego, obs, dt })
    }

    pub fn ego(&self) -> &[VesselState] {
        &self.ego
    }

    pub fn obs(&self) -> &[VesselState] {
        &self.obs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.ego.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ego.is_empty()
    }

    pub fn los(&self, index: usize) -> Vec2 {
        los_vector(&self.ego[index], &self.obs[index])
    }
}

/// Line-of-sight vector from the ego vessel to the obstacle, global frame.
pub fn los_vector(ego: &VesselState, obs: &VesselState) -> Vec2 {
    obs.pos - ego.pos
}

/// Signed rotation from `lambda_t` to `lambda_t1` in `(-pi, pi]`,
/// counter-clockwise positive.
pub fn winding_increment(lambda_t: &Vec2, lambda_t1: &Vec2) -> Result<f64, TopologyError> {
    if lambda_t.norm_squared() == 0.0 || lambda_t1.norm_squared() == 0.0 {
        return Err(TopologyError::ZeroLosVector { index: None });
    }
    Ok(cross(lambda_t, lambda_t1).atan2(lambda_t.dot(lambda_t1)))
}

/// Signed sum of line-of-sight increments from sample 0 up to
/// `clearance_index`.
pub fn winding_angle(pair: &TrackPair, clearance_index: usize) -> Result<f64, TopologyError> {
    let last = pair.len() - 1;
    if clearance_index > last {
        return Err(TopologyError::ClearanceOutOfRange {
            index: clearance_index,
            last,
        });
    }
    let mut total = 0.0;
    let mut prev = pair.los(0);
    if prev.norm_squared() == 0.0 {
        return Err(TopologyError::ZeroLosVector { index: Some(0) });
    }
    for k in 1..=clearance_index {
        let next = pair.los(k);
        total += winding_increment(&prev, &next).map_err(|_| TopologyError::ZeroLosVector { index: Some(k) })?;
        prev = next;
    }
    Ok(total)
}

/// Winding angle normalised to signed turns (`eta = 1 / 2pi`).
pub fn winding_number(pair: &TrackPair, clearance_index: usize) -> Result<f64, TopologyError> {
    Ok(winding_angle(pair, clearance_index)? / TAU)
}

/// Parameters of the passing label: the range-exit clearance rule and the
/// dead-band around zero winding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub sensing_range: f64,
    pub dead_band: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            sensing_range: DEFAULT_SENSING_RANGE,
            dead_band: DEFAULT_DEAD_BAND,
        }
    }
}

/// Sample at which the obstacle counts as cleared.
///
/// Precedence: the first sample after the start at which the obstacle is
/// opening (TCPA has reached zero), else the first sample at which it leaves
/// sensing range, else the last sample.
pub fn clearance_index(pair: &TrackPair, sensing_range: f64) -> usize {
    let n = pair.len();
    let opening = (1..n).find(|&k| cpa_metrics(&pair.ego[k], &pair.obs[k]).tcpa <= 0.0);
    if let Some(k) = opening {
        return k;
    }
    (1..n)
        .find(|&k| pair.los(k).norm() > sensing_range && pair.los(k - 1).norm() <= sensing_range)
        .unwrap_or(n - 1)
}

/// Topological passing class of an obstacle with the default configuration.
pub fn label_passing(pair: &TrackPair) -> Result<PassingLabel, TopologyError> {
    label_passing_with(pair, &LabelConfig::default())
}

pub fn label_passing_with(pair: &TrackPair, cfg: &LabelConfig) -> Result<PassingLabel, TopologyError> {
    let k = clearance_index(pair, cfg.sensing_range);
    let angle = winding_angle(pair, k)?;
    Ok(PassingLabel::from_angle(angle, cfg.dead_band))
}

/// Closest point of approach under constant-velocity extrapolation.
pub fn cpa_metrics(ego: &VesselState, obs: &VesselState) -> CpaResult {
    let los = los_vector(ego, obs);
    let v_rel = obs.velocity() - ego.velocity();
    let vv = v_rel.norm_squared();
    let tcpa = if vv > 0.0 {
        (-los.dot(&v_rel) / vv).max(0.0)
    } else {
        0.0
    };
    let dcpa = (los + v_rel * tcpa).norm();
    let rel_bearing_deg = if los.norm_squared() > 0.0 {
        wrap_heading(bearing_deg(&los) - ego.heading_deg)
    } else {
        0.0
    };
    CpaResult {
        tcpa,
        dcpa,
        rel_bearing_deg,
    }
}

/// Incremental passing classifier for a sampled line-of-sight chain.
///
/// Gives the same left/right/undetermined decision as summing
/// [`winding_increment`]s and applying the dead-band, but without any
/// trigonometry: the total angle is the direct angle between the first and
/// last LOS vectors plus one full turn for each crossing of the ray opposite
/// to the first LOS vector. The particle rollouts evaluate this millions of
/// times per planning cycle.
#[derive(Debug, Clone, Copy)]
pub struct LosSweep {
    first: Vec2,
    last_c: f64,
    last_e: f64,
    turns: i32,
}

impl LosSweep {
    pub fn new(first: Vec2) -> Self {
        Self {
            first,
            last_c: 0.0,
            last_e: first.norm_squared(),
            turns: 0,
        }
    }

    /// Appends the next LOS sample; the chain is assumed to move along the
    /// straight segment between consecutive samples.
    #[inline]
    pub fn push(&mut self, los: Vec2) {
        // `+ 0.0` folds -0.0 so the half-plane test matches atan2.
        let c = cross(&self.first, &los) + 0.0;
        let e = self.first.dot(&los);
        let upper_prev = self.last_c >= 0.0;
        let upper = c >= 0.0;
        if upper_prev != upper {
            // Where the segment meets the line through the first LOS vector.
            let s = self.last_c / (self.last_c - c);
            let e_cross = self.last_e + s * (e - self.last_e);
            if e_cross < 0.0 {
                self.turns += if upper_prev { 1 } else { -1 };
            }
        }
        self.last_c = c;
        self.last_e = e;
    }

    /// Class of the chain pushed so far. `tan_dead_band` is `tan(dead_band)`.
    #[inline]
    pub fn classify(&self, tan_dead_band: f64) -> PassingSide {
        if self.turns > 0 {
            return PassingSide::Left;
        }
        if self.turns < 0 {
            return PassingSide::Right;
        }
        let (c, e) = (self.last_c, self.last_e);
        if c > 0.0 && (e <= 0.0 || c > tan_dead_band * e) {
            PassingSide::Left
        } else if c < 0.0 && (e <= 0.0 || -c > tan_dead_band * e) {
            PassingSide::Right
        } else if c == 0.0 && e < 0.0 {
            // Exactly opposite: atan2 resolves this to +pi.
            PassingSide::Left
        } else {
            PassingSide::Undetermined
        }
    }

    /// Total swept angle (radians); used for diagnostics and tests.
    pub fn angle(&self) -> f64 {
        self.last_c.atan2(self.last_e) + TAU * self.turns as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn cv_pair(ego: VesselState, obs: VesselState, dt: f64, n: usize) -> TrackPair {
        let e = (0..n).map(|k| ego.propagate(k as f64 * dt)).collect();
        let o = (0..n).map(|k| obs.propagate(k as f64 * dt)).collect();
        TrackPair::new(e, o, dt).unwrap()
    }

    #[test]
    fn los_examples() {
        let ego = VesselState::new(0, 0.0, v(0.0, 0.0), 0.0, 0.0);
        let obs = VesselState::new(1, 0.0, v(10.0, 0.0), 0.0, 0.0);
        assert_eq!(los_vector(&ego, &obs), v(10.0, 0.0));
        let ego = VesselState::new(0, 0.0, v(-30.0, 0.0), 90.0, 2.5);
        let obs = VesselState::new(1, 0.0, v(0.0, 20.0), 225.0, 3.0);
        assert_eq!(los_vector(&ego, &obs), v(30.0, 20.0));
        assert_eq!(los_vector(&ego, &ego), v(0.0, 0.0));
    }

    #[test]
    fn increment_examples() {
        assert_eq!(winding_increment(&v(1.0, 0.0), &v(1.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            winding_increment(&v(1.0, 0.0), &v(0.0, 1.0)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        // Just below the negative x axis: atan2 sits on the -pi side.
        for eps in [1e-3, 1e-6, 1e-9] {
            let inc = winding_increment(&v(1.0, 0.0), &v(-1.0, -eps)).unwrap();
            assert!(inc < 0.0);
            assert_abs_diff_eq!(inc, -PI + eps, epsilon = 1e-9);
        }
        // Exactly opposite resolves to +pi.
        assert_eq!(winding_increment(&v(1.0, 0.0), &v(-1.0, 0.0)).unwrap(), PI);
        assert!(matches!(
            winding_increment(&v(0.0, 0.0), &v(1.0, 0.0)),
            Err(TopologyError::ZeroLosVector { .. })
        ));
    }

    #[test]
    fn antisymmetry() {
        let a = v(3.0, 1.0);
        let b = v(-1.0, 2.0);
        assert_abs_diff_eq!(
            winding_increment(&a, &b).unwrap(),
            -winding_increment(&b, &a).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn collision_course_is_null_at_every_prefix() {
        // Obstacle on the y axis closing head-on.
        let ego = VesselState::new(0, 0.0, v(0.0, 0.0), 0.0, 2.0);
        let obs = VesselState::new(1, 0.0, v(0.0, 80.0), 180.0, 1.5);
        let pair = cv_pair(ego, obs, 1.0, 20);
        for k in 0..20 {
            assert!(winding_angle(&pair, k).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn crossing_scenario_passes_left() {
        let ego = VesselState::new(0, 0.0, v(-30.0, 0.0), 90.0, 2.5);
        let obs = VesselState::new(1, 0.0, v(0.0, 20.0), 225.0, 3.0);
        let pair = cv_pair(ego, obs, 0.1, 200);
        let k = clearance_index(&pair, 100.0);
        let straight = winding_angle(&pair, k).unwrap();
        assert!(straight > DEFAULT_DEAD_BAND);

        let turned = VesselState::new(0, 0.0, v(-30.0, 0.0), 135.0, 2.5);
        let pair2 = cv_pair(turned, obs, 0.1, 200);
        assert_eq!(label_passing(&pair2).unwrap().side, PassingSide::Left);
        // Turning away from the obstacle makes the LOS rotate faster now,
        // even though the swept angle up to CPA is smaller.
        let rate = |e: &VesselState| cross(&los_vector(e, &obs), &(obs.velocity() - e.velocity()));
        assert_abs_diff_eq!(rate(&ego), 28.8, epsilon = 0.1);
        assert_abs_diff_eq!(rate(&turned), 67.2, epsilon = 0.1);
    }

    #[test]
    fn full_orbit_is_one_turn() {
        let n = 73;
        let ego: Vec<_> = (0..n)
            .map(|k| VesselState::new(0, k as f64, v(0.0, 0.0), 0.0, 0.0))
            .collect();
        let obs: Vec<_> = (0..n)
            .map(|k| {
                let a = k as f64 * TAU / 72.0;
                VesselState::new(1, k as f64, v(20.0 * a.cos(), 20.0 * a.sin()), 0.0, 0.0)
            })
            .collect();
        let pair = TrackPair::new(ego, obs, 1.0).unwrap();
        assert_abs_diff_eq!(winding_number(&pair, n - 1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn winding_number_scale() {
        let ego: Vec<_> = (0..3)
            .map(|k| VesselState::new(0, k as f64, v(0.0, 0.0), 0.0, 0.0))
            .collect();
        let pts = [v(1.0, 0.0), v(0.0, 1.0), v(-1.0, 1e-300)];
        let obs: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(k, p)| VesselState::new(1, k as f64, *p, 0.0, 0.0))
            .collect();
        let pair = TrackPair::new(ego, obs, 1.0).unwrap();
        assert_abs_diff_eq!(winding_number(&pair, 2).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(winding_number(&pair, 0).unwrap(), 0.0);
    }

    #[test]
    fn mirror_swaps_sides() {
        // Obstacle crossing from the ego's right bow to its left stern.
        let ego = VesselState::new(0, 0.0, v(0.0, 0.0), 0.0, 1.0);
        let obs = VesselState::new(1, 0.0, v(40.3, 30.0), 270.0, 2.0);
        let pair = cv_pair(ego, obs, 1.0, 60);
        let l = label_passing(&pair).unwrap();
        assert_eq!(l.side, PassingSide::Left);

        let m_ego = VesselState::new(0, 0.0, v(0.0, 0.0), 0.0, 1.0);
        let m_obs = VesselState::new(1, 0.0, v(-40.3, 30.0), 90.0, 2.0);
        let m = label_passing(&cv_pair(m_ego, m_obs, 1.0, 60)).unwrap();
        assert_eq!(m.side, PassingSide::Right);
        assert_abs_diff_eq!(m.winding_angle, -l.winding_angle, epsilon = 1e-12);
    }

    #[test]
    fn cpa_examples() {
        let ego = VesselState::new(0, 0.0, v(0.0, 0.0), 45.0, 2.0);
        let obs = VesselState::new(1, 0.0, v(50.0, 0.0), 45.0, 2.0);
        let r = cpa_metrics(&ego, &obs);
        assert_eq!(r.tcpa, 0.0);
        assert_abs_diff_eq!(r.dcpa, 50.0, epsilon = 1e-12);

        let ego = VesselState::new(0, 0.0, v(0.0, 0.0), 0.0, 2.0);
        let obs = VesselState::new(1, 0.0, v(0.0, 100.0), 180.0, 2.0);
        let r = cpa_metrics(&ego, &obs);
        assert_abs_diff_eq!(r.tcpa, 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.dcpa, 0.0, epsilon = 1e-9);
        assert_eq!(r.rel_bearing_deg, 0.0);
    }

    #[test]
    fn cpa_crossing_against_dense_search() {
        let ego = VesselState::new(0, 0.0, v(-30.0, 0.0), 90.0, 2.5);
        let obs = VesselState::new(1, 0.0, v(0.0, 20.0), 225.0, 3.0);
        let r = cpa_metrics(&ego, &obs);
        let (mut best_t, mut best_d) = (0.0, f64::INFINITY);
        for i in 0..3000 {
            let t = i as f64 * 0.01;
            let d = (obs.propagate(t).pos - ego.propagate(t).pos).norm();
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        assert!((r.tcpa - best_t).abs() < 0.05, "{} vs {}", r.tcpa, best_t);
        assert!((r.dcpa - best_d).abs() < 0.05, "{} vs {}", r.dcpa, best_d);
        assert!((r.tcpa - 7.0).abs() < 0.05);
        assert!((r.dcpa - 5.7).abs() < 0.05);
    }

    #[test]
    fn heading_helpers() {
        assert_eq!(wrap_heading(-90.0), 270.0);
        assert_eq!(wrap_heading(360.0), 0.0);
        assert_eq!(wrap_heading(-1e-18), 0.0);
        assert_eq!(heading_delta(350.0, 10.0), 20.0);
        assert_eq!(heading_delta(10.0, 350.0), -20.0);
        assert_eq!(heading_delta(0.0, 180.0), 180.0);
        assert_abs_diff_eq!(bearing_deg(&v(1.0, 0.0)), 90.0, epsilon = 1e-12);
    }

    #[test]
    fn track_pair_validation() {
        let a = VesselState::new(0, 0.0, v(0.0, 0.0), 0.0, 0.0);
        let b = VesselState::new(1, 0.5, v(1.0, 0.0), 0.0, 0.0);
        assert!(matches!(
            TrackPair::new(vec![a], vec![b], 1.0),
            Err(TopologyError::TimestampMismatch { index: 0 })
        ));
        assert!(matches!(
            TrackPair::new(vec![a], vec![], 1.0),
            Err(TopologyError::EmptyTrack)
        ));
        assert!(matches!(
            TrackPair::new(vec![a], vec![a], 0.0),
            Err(TopologyError::NonPositiveDt(_))
        ));
    }

    #[test]
    fn sweep_matches_atan2_on_edge_cases() {
        let cases: Vec<Vec<Vec2>> = vec![
            vec![v(1.0, 0.0), v(0.0, 1.0), v(-1.0, 0.1), v(-1.0, -0.1)],
            vec![v(1.0, 0.0), v(0.0, -1.0), v(-1.0, -0.1), v(-1.0, 0.1), v(0.0, 1.0)],
            vec![v(5.0, 5.0), v(5.0, 5.01)],
            vec![v(5.0, 5.0), v(-5.0, -5.0)],
        ];
        for chain in cases {
            let mut sweep = LosSweep::new(chain[0]);
            let mut total = 0.0;
            for w in chain.windows(2) {
                total += winding_increment(&w[0], &w[1]).unwrap();
                sweep.push(w[1]);
            }
            assert_abs_diff_eq!(sweep.angle(), total, epsilon = 1e-12);
            let expect = PassingLabel::from_angle(total, DEFAULT_DEAD_BAND).side;
            assert_eq!(sweep.classify(DEFAULT_DEAD_BAND.tan()), expect);
        }
    }
}
