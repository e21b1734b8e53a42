use super::{ClassifierError, ObservationWindow};
use crate::topology::VesselState;

pub const FEATURES: usize = 7;

/// `dx, dy, range, sin psi, cos psi, sin los, cos los`, where `psi` is the
/// obstacle heading and `los` the bearing of the line of sight, both
/// clockwise from north.
pub type FeatureVector = [f64; FEATURES];

/// Features of one obstacle fix relative to the ego; `None` when the two
/// positions coincide.
pub fn feature_vector(ego: &VesselState, obs: &VesselState) -> Option<FeatureVector> {
    let d = obs.pos - ego.pos;
    let range = d.norm();
    if range == 0.0 {
        return None;
    }
    let (s, c) = obs.heading_deg.to_radians().sin_cos();
    Some([d.x, d.y, range, s, c, d.x / range, d.y / range])
}

/// One feature vector per fix; coincident fixes are dropped.
pub fn extract_features(window: &ObservationWindow) -> Result<Vec<FeatureVector>, ClassifierError> {
    let seq: Vec<FeatureVector> = window
        .ego()
        .iter()
        .zip(window.fixes())
        .filter_map(|(e, o)| feature_vector(e, o))
        .collect();
    if seq.is_empty() {
        Err(ClassifierError::EmptyWindow)
    } else {
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec2;
    use approx::assert_abs_diff_eq;

    fn window(ego: VesselState, obs: VesselState) -> ObservationWindow {
        ObservationWindow::new(obs.id, vec![obs], vec![ego], 10.0).unwrap()
    }

    #[test]
    fn east_obstacle_heading_west() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 1.0);
        let obs = VesselState::new(1, 0.0, Vec2::new(10.0, 0.0), 270.0, 1.0);
        let f = extract_features(&window(ego, obs)).unwrap()[0];
        let expect = [10.0, 0.0, 10.0, -1.0, 0.0, 1.0, 0.0];
        for (a, b) in f.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn north_obstacle() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 1.0);
        let obs = VesselState::new(1, 0.0, Vec2::new(0.0, 20.0), 0.0, 1.0);
        let f = extract_features(&window(ego, obs)).unwrap()[0];
        assert_eq!(f, [0.0, 20.0, 20.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn coincident_dropped() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 1.0);
        let obs = VesselState::new(1, 0.0, Vec2::zeros(), 0.0, 1.0);
        assert!(matches!(
            extract_features(&window(ego, obs)),
            Err(ClassifierError::EmptyWindow)
        ));
        let w = ObservationWindow::new(
            1,
            vec![
                obs,
                VesselState {
                    t: 1.0,
                    pos: Vec2::new(3.0, 4.0),
                    ..obs
                },
            ],
            vec![ego, VesselState { t: 1.0, ..ego }],
            10.0,
        )
        .unwrap();
        let seq = extract_features(&w).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq[0][2], 5.0);
    }

    #[test]
    fn unit_norm_pairs() {
        let ego = VesselState::new(0, 0.0, Vec2::new(3.0, -7.0), 10.0, 1.0);
        for k in 0..50 {
            let a = k as f64 * 0.37;
            let obs = VesselState::new(1, 0.0, Vec2::new(40.0 * a.cos(), 25.0 * a.sin()), k as f64 * 13.0, 1.0);
            let f = feature_vector(&ego, &obs).unwrap();
            assert!((f[3] * f[3] + f[4] * f[4] - 1.0).abs() < 1e-9);
            assert!((f[5] * f[5] + f[6] * f[6] - 1.0).abs() < 1e-9);
            assert!((f[0].hypot(f[1]) - f[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn window_validation() {
        let ego = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 1.0);
        let obs = VesselState::new(1, 0.0, Vec2::new(5.0, 5.0), 0.0, 1.0);
        assert!(ObservationWindow::new(1, vec![], vec![], 10.0).is_err());
        assert!(ObservationWindow::new(1, vec![obs, obs], vec![ego, ego], 10.0).is_err());
        let late = VesselState { t: 11.0, ..obs };
        assert!(ObservationWindow::new(1, vec![obs, late], vec![ego, ego], 10.0).is_err());
    }
}
