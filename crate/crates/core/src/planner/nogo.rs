use super::{Action, PlannerError, ShipDomain, ACTION_COUNT};
use crate::topology::VesselState;
use crate::Vec2;

/// Membership of the no-go set A' over the action grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoGoMask {
    forbidden: Vec<bool>,
}

impl NoGoMask {
    pub fn empty() -> Self {
        Self {
            forbidden: vec![false; ACTION_COUNT],
        }
    }

    pub fn contains(&self, a: Action) -> bool {
        self.forbidden[a.index()]
    }

    pub fn count(&self) -> usize {
        self.forbidden.iter().filter(|f| **f).count()
    }

    pub fn is_full(&self) -> bool {
        self.forbidden.iter().all(|f| *f)
    }
}

/// Whether relative velocity `v_rel` (ego minus obstacle) drives the ego
/// into the disc of radius `c` around `los` within `horizon` seconds.
///
/// `v_rel` must lie inside the cone of tangents from the ego to the disc, and
/// the ray must reach the near edge of the disc in time.
pub(crate) fn enters_disc(los: Vec2, v_rel: Vec2, c: f64, horizon: f64) -> bool {
    let dist_sq = los.norm_squared();
    let speed_sq = v_rel.norm_squared();
    if speed_sq == 0.0 {
        return false;
    }
    let along = los.dot(&v_rel);
    if along <= 0.0 {
        return false;
    }
    // cos^2 of the tangent half-angle is 1 - c^2/|los|^2.
    let cos_sq = 1.0 - c * c / dist_sq;
    if along * along <= cos_sq * dist_sq * speed_sq {
        return false;
    }
    let speed = speed_sq.sqrt();
    let t_closest = along / speed_sq;
    let miss_sq = (dist_sq - along * t_closest).max(0.0);
    let t_entry = t_closest - (c * c - miss_sq).max(0.0).sqrt() / speed;
    t_entry <= horizon
}

/// Actions whose constant-velocity execution enters some obstacle's
/// collision boundary within `horizon` seconds.
///
/// Fails if the ego is already inside a collision boundary.
pub fn no_go_zone(
    ego: &VesselState,
    obstacles: &[VesselState],
    domains: &[ShipDomain],
    v_max: f64,
    horizon: f64,
) -> Result<NoGoMask, PlannerError> {
    for (o, d) in obstacles.iter().zip(domains) {
        if (o.pos - ego.pos).norm() < d.collision_radius {
            return Err(PlannerError::AlreadyInsideC { id: o.id });
        }
    }
    Ok(mask_with_escape(ego, obstacles, domains, v_max, horizon))
}

/// Like [`no_go_zone`], but for an obstacle whose boundary already contains
/// the ego every closing action is forbidden instead of failing.
pub(crate) fn mask_with_escape(
    ego: &VesselState,
    obstacles: &[VesselState],
    domains: &[ShipDomain],
    v_max: f64,
    horizon: f64,
) -> NoGoMask {
    let mut mask = NoGoMask::empty();
    let velocities: Vec<Vec2> = (0..ACTION_COUNT)
        .map(|i| Action::from_index(i).velocity(v_max))
        .collect();
    for (o, d) in obstacles.iter().zip(domains) {
        let los = o.pos - ego.pos;
        let vo = o.velocity();
        let inside = los.norm() < d.collision_radius;
        for (i, va) in velocities.iter().enumerate() {
            if mask.forbidden[i] {
                continue;
            }
            let v_rel = va - vo;
            let hit = if inside {
                los.dot(&v_rel) > 0.0
            } else {
                enters_disc(los, v_rel, d.collision_radius, horizon)
            };
            if hit {
                mask.forbidden[i] = true;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn min_distance_brute(los: Vec2, v_rel: Vec2, horizon: f64) -> f64 {
        (0..=20_000)
            .map(|k| (los - v_rel * (horizon * k as f64 / 20_000.0)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn no_obstacles_empty() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 1.0);
        let m = no_go_zone(&ego, &[], &[], 2.5, 20.0).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn stationary_obstacle_ahead() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 2.5);
        let obs = VesselState::new(1, 0.0, Vec2::new(0.0, 20.0), 0.0, 0.0);
        let d = ShipDomain {
            collision_radius: 5.0,
            risky_radius: 10.0,
        };
        let m = no_go_zone(&ego, &[obs], &[d], 2.5, 20.0).unwrap();
        assert!(m.contains(Action::new(0, 4).unwrap()));
        assert!(!m.contains(Action::new(180, 4).unwrap()));
        assert!(!m.contains(Action::new(0, 0).unwrap()));
        // Tangent half-angle is asin(5/20) = 14.48 deg.
        assert!(m.contains(Action::new(14, 4).unwrap()));
        assert!(!m.contains(Action::new(15, 4).unwrap()));
    }

    #[test]
    fn crossing_current_action_forbidden() {
        let ego = VesselState::new(0, 0.0, Vec2::new(-30.0, 0.0), 90.0, 2.5);
        let obs = VesselState::new(1, 0.0, Vec2::new(0.0, 20.0), 225.0, 3.0).with_dims(4.0, 1.5);
        let d = ShipDomain::for_pair(2.5, 4.0);
        let m = no_go_zone(&ego, &[obs], &[d], 2.5, 20.0).unwrap();
        assert!(m.contains(Action::new(90, 4).unwrap()));
        assert!(!m.contains(Action::new(135, 4).unwrap()));
    }

    #[test]
    fn inside_is_an_error() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 2.5);
        let obs = VesselState::new(7, 0.0, Vec2::new(0.0, 2.0), 0.0, 0.0);
        let d = ShipDomain::for_pair(2.5, 2.5);
        assert_eq!(
            no_go_zone(&ego, &[obs], &[d], 2.5, 20.0),
            Err(PlannerError::AlreadyInsideC { id: 7 })
        );
        let m = mask_with_escape(&ego, &[obs], &[d], 2.5, 20.0);
        assert!(m.contains(Action::new(0, 4).unwrap()));
        assert!(!m.contains(Action::new(180, 4).unwrap()));
    }

    proptest! {
        #[test]
        fn cone_test_matches_sampled_distance(
            lx in -60.0..60.0f64, ly in -60.0..60.0f64,
            vx in -4.0..4.0f64, vy in -4.0..4.0f64,
            c in 1.0..16.0f64,
        ) {
            let los = Vec2::new(lx, ly);
            prop_assume!(los.norm() > c + 0.5);
            let v = Vec2::new(vx, vy);
            let brute = min_distance_brute(los, v, 20.0);
            // Skip grazing cases the sampled oracle cannot resolve.
            prop_assume!((brute - c).abs() > 1e-3);
            prop_assert_eq!(enters_disc(los, v, c, 20.0), brute < c);
        }
    }
}
