//! AIS-like 1 Hz broadcasts with Gaussian noise and a fixed reception delay.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::infogain::NoiseModel;
use crate::substream;
use crate::topology::VesselState;
use crate::Vec2;

pub const DEFAULT_AIS_DELAY: f64 = 0.5;

/// One received broadcast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AisFix {
    pub id: u32,
    /// Emission time, s.
    pub t: f64,
    /// Time from which the receiver may read the fix, s.
    pub available_at: f64,
    /// Noisy position, heading and speed; `state.t == t`.
    pub state: VesselState,
}

fn on_grid(t: f64) -> Option<u64> {
    let r = t.round();
    ((t - r).abs() < 1e-9 && r >= 0.0).then_some(r as u64)
}

/// The broadcast of `truth` at time `t`, if `t` is a whole second.
///
/// Noise is drawn from a stream keyed by `(seed, id, t)`, so a fix does not
/// depend on which other fixes were generated.
pub fn ais_observe(truth: &VesselState, nm: &NoiseModel, t: f64, delay: f64, seed: u64) -> Option<AisFix> {
    let k = on_grid(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(substream(substream(seed, truth.id as u64), k));
    let mut n = || -> f64 { StandardNormal.sample(&mut rng) };
    let (nx, ny, nh, nv) = (n(), n(), n(), n());
    let state = VesselState::new(
        truth.id,
        t,
        truth.pos + Vec2::new(nm.sigma_x * nx, nm.sigma_y * ny),
        truth.heading_deg + (nm.sigma_theta * nh).to_degrees(),
        truth.speed + nm.sigma_v * nv,
    )
    .with_dims(truth.length, truth.beam);
    Some(AisFix {
        id: truth.id,
        t,
        available_at: t + delay,
        state,
    })
}

/// Receiver side: fixes in flight and the recent history per vessel.
#[derive(Debug, Clone, Default)]
pub struct AisReceiver {
    /// `(vessel index, fix)`
    pending: Vec<(usize, AisFix)>,
    /// Per vessel index, oldest first.
    received: Vec<Vec<AisFix>>,
    keep: usize,
}

impl AisReceiver {
    pub fn new(vessels: usize, keep: usize) -> Self {
        Self {
            pending: Vec::new(),
            received: vec![Vec::new(); vessels],
            keep: keep.max(1),
        }
    }

    pub fn emit(&mut self, slot: usize, fix: AisFix) {
        self.pending.push((slot, fix));
    }

    /// Moves every fix available by `now` into the history.
    pub fn deliver(&mut self, now: f64) {
        let mut i = 0;
        while i < self.pending.len() {
            if self.pending[i].1.available_at <= now + 1e-9 {
                let (slot, f) = self.pending.remove(i);
                let hist = &mut self.received[slot];
                hist.push(f);
                if hist.len() > self.keep {
                    hist.remove(0);
                }
            } else {
                i += 1;
            }
        }
    }

    pub fn history(&self, slot: usize) -> &[AisFix] {
        &self.received[slot]
    }

    pub fn latest(&self, slot: usize) -> Option<&AisFix> {
        self.received[slot].last()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> VesselState {
        VesselState::new(4, 3.0, Vec2::new(10.0, -5.0), 45.0, 1.5)
    }

    #[test]
    fn zero_noise_is_truth() {
        let f = ais_observe(&truth(), &NoiseModel::zero(), 3.0, 0.5, 1).unwrap();
        assert_eq!(f.state, truth());
        assert_eq!(f.available_at, 3.5);
    }

    #[test]
    fn only_whole_seconds() {
        let nm = NoiseModel::zero();
        assert!(ais_observe(&truth(), &nm, 2.5, 0.5, 1).is_none());
        assert!(ais_observe(&truth(), &nm, 2.0, 0.5, 1).is_some());
    }

    #[test]
    fn empirical_sigma() {
        let nm = NoiseModel::new(0.3, 0.2, 0.1, 0.4).unwrap();
        let s = VesselState::new(1, 0.0, Vec2::zeros(), 180.0, 3.0);
        let n = 10_000;
        let (mut sx, mut sy, mut sh, mut sv) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..n {
            let f = ais_observe(&s, &nm, k as f64, 0.0, 77).unwrap();
            sx += f.state.pos.x.powi(2);
            sy += f.state.pos.y.powi(2);
            sh += (f.state.heading_deg - 180.0).to_radians().powi(2);
            sv += (f.state.speed - 3.0).powi(2);
        }
        let est = |s: f64| (s / n as f64).sqrt();
        for (got, want) in [(est(sx), 0.3), (est(sy), 0.2), (est(sh), 0.1), (est(sv), 0.4)] {
            assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
        }
    }

    #[test]
    fn delay_holds_fixes_back() {
        let mut rx = AisReceiver::new(1, 4);
        let f = ais_observe(&truth(), &NoiseModel::zero(), 3.0, 0.5, 1).unwrap();
        rx.emit(0, f);
        rx.deliver(3.0);
        assert!(rx.latest(0).is_none());
        rx.deliver(3.5);
        assert_eq!(rx.latest(0).unwrap().t, 3.0);
        assert_eq!(rx.latest(0).unwrap().id, 4);
        for k in 4..10 {
            let f = ais_observe(&truth(), &NoiseModel::zero(), k as f64, 0.5, 1).unwrap();
            rx.emit(0, f);
            rx.deliver(k as f64 + 0.5);
        }
        assert_eq!(rx.history(0).len(), 4);
        assert_eq!(rx.history(0)[0].t, 6.0);
    }
}
