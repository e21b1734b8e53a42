//! First-order vessel kinematics with turn-rate and acceleration limits.

use serde::{Deserialize, Serialize};

use crate::topology::{heading_delta, heading_unit, wrap_heading, VesselState};

/// Hull dimensions, sensing range and motion limits of a vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoSpec {
    pub length: f64,
    pub beam: f64,
    pub sensing_range: f64,
    /// m/s
    pub v_max: f64,
    /// deg/s
    pub turn_rate_max: f64,
    /// m/s^2
    pub accel_max: f64,
}

impl Default for EgoSpec {
    fn default() -> Self {
        Self {
            length: 2.5,
            beam: 1.4,
            sensing_range: 100.0,
            v_max: 2.5,
            turn_rate_max: 45.0,
            accel_max: 1.0,
        }
    }
}

/// Commanded heading (deg) and absolute speed (m/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub heading_deg: f64,
    pub speed: f64,
}

impl Command {
    pub fn hold(s: &VesselState) -> Self {
        Self {
            heading_deg: s.heading_deg,
            speed: s.speed,
        }
    }

    pub fn stop(s: &VesselState) -> Self {
        Self {
            heading_deg: s.heading_deg,
            speed: 0.0,
        }
    }
}

/// Heading after one rate-limited step toward `target` along the shorter arc.
/// An exactly opposite target turns clockwise.
pub fn step_heading(current: f64, target: f64, max_step: f64) -> f64 {
    let d = heading_delta(current, target);
    if d.abs() <= max_step {
        wrap_heading(target)
    } else {
        wrap_heading(current + max_step * d.signum())
    }
}

pub fn step_speed(current: f64, target: f64, max_step: f64) -> f64 {
    current + (target - current).clamp(-max_step, max_step)
}

/// Advances `s` by `dt` seconds under `cmd`.
///
/// The commanded speed is clipped to `[0, v_max]`; the position integrates the
/// velocity after the heading/speed update.
pub fn step_kinematics(s: &VesselState, cmd: Command, spec: &EgoSpec, dt: f64) -> VesselState {
    assert!(dt > 0.0, "dt must be positive");
    let target_speed = cmd.speed.clamp(0.0, spec.v_max);
    let heading_deg = step_heading(s.heading_deg, cmd.heading_deg, spec.turn_rate_max * dt);
    let speed = step_speed(s.speed, target_speed, spec.accel_max * dt).max(0.0);
    let pos = s.pos + heading_unit(heading_deg) * (speed * dt);
    VesselState {
        t: s.t + dt,
        pos,
        heading_deg,
        speed,
        ..*s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;
    use approx::assert_abs_diff_eq;

    fn start(h: f64, v: f64) -> VesselState {
        VesselState::new(0, 0.0, Vec2::zeros(), h, v)
    }

    #[test]
    fn hold_heading() {
        let s = start(30.0, 1.0);
        let n = step_kinematics(&s, Command::hold(&s), &EgoSpec::default(), 0.5);
        assert_eq!(n.heading_deg, 30.0);
        assert_eq!(n.speed, 1.0);
    }

    #[test]
    fn opposite_turns_clockwise() {
        let s = start(0.0, 0.0);
        let cmd = Command {
            heading_deg: 180.0,
            speed: 0.0,
        };
        let n = step_kinematics(&s, cmd, &EgoSpec::default(), 1.0);
        assert_eq!(n.heading_deg, 45.0);
        let n = step_kinematics(
            &start(10.0, 0.0),
            Command {
                heading_deg: 350.0,
                speed: 0.0,
            },
            &EgoSpec::default(),
            0.1,
        );
        assert_abs_diff_eq!(n.heading_deg, 5.5, epsilon = 1e-12);
    }

    #[test]
    fn straight_full_speed() {
        let spec = EgoSpec::default();
        let mut s = start(0.0, 2.5);
        let cmd = Command::hold(&s);
        for _ in 0..20 {
            s = step_kinematics(&s, cmd, &spec, 0.5);
        }
        assert_abs_diff_eq!(s.pos.y, 25.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.pos.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.t, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn acceleration_is_limited() {
        let spec = EgoSpec::default();
        let s = start(0.0, 0.0);
        let cmd = Command {
            heading_deg: 0.0,
            speed: 10.0,
        };
        let n = step_kinematics(&s, cmd, &spec, 0.5);
        assert_eq!(n.speed, 0.5);
        let mut s = n;
        for _ in 0..10 {
            s = step_kinematics(&s, cmd, &spec, 0.5);
        }
        assert_eq!(s.speed, spec.v_max);
    }
}
