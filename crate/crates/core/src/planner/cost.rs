use rayon::prelude::*;

use super::{
    cluster_obstacles, Action, ClusterSet, LocalGoal, ObstacleView, PlannerConfig, ShipDomain, Snapshot, ACTION_COUNT,
};
use crate::classifier::PassingBelief;
use crate::infogain::{
    classify_particles, cluster_gain, entropy, obstacle_weights, remap_gain, sample_particles, total_gain, EgoRollout,
    GainField, NoiseModel, ParticleSet, RolloutConfig,
};
use crate::simulator::kinematics::Command;
use crate::topology::{cpa_metrics, heading_delta, VesselState};
use crate::Vec2;

/// `w_f f(theta) + w_f2 f2(theta) + w_g g(v)` with normalized absolute
/// heading and speed-ratio differences.
pub fn deviation_cost(a: Action, goal: &LocalGoal, cfg: &PlannerConfig) -> f64 {
    let f = heading_delta(goal.theta_wp, a.heading_deg()).abs() / 180.0;
    let f2 = heading_delta(goal.theta_tgt, a.heading_deg()).abs() / 180.0;
    let g = (a.speed_ratio() - goal.v_wp).abs();
    cfg.w_f * f + cfg.w_f2 * f2 + cfg.w_g * g
}

/// Closest distance between the ego moving at `v_ego` and an obstacle at
/// constant velocity over `[0, horizon]`, and the time it occurs.
pub(crate) fn closest_approach(ego_pos: Vec2, v_ego: Vec2, obs: &VesselState, horizon: f64) -> (f64, f64) {
    let los = obs.pos - ego_pos;
    let w = obs.velocity() - v_ego;
    let ww = w.norm_squared();
    let t = if ww > 0.0 {
        (-los.dot(&w) / ww).clamp(0.0, horizon)
    } else {
        0.0
    };
    ((los + w * t).norm(), t)
}

/// DCPA used by the safety cost: the closest distance less an allowance
/// combining `margin` with one standard deviation of the obstacle's predicted
/// position at that time. The allowance is capped at half the width of the
/// ramp between C and R.
pub(crate) fn predicted_dcpa(
    ego_pos: Vec2,
    v_ego: Vec2,
    obs: &ObstacleView,
    d: &ShipDomain,
    margin: f64,
    horizon: f64,
) -> f64 {
    let (dist, t) = closest_approach(ego_pos, v_ego, &obs.state, horizon);
    let nm = &obs.noise;
    let var = margin * margin
        + 0.5 * (nm.sigma_x.powi(2) + nm.sigma_y.powi(2))
        + (nm.sigma_v * t).powi(2)
        + (obs.state.speed * nm.sigma_theta * t).powi(2);
    dist - var.sqrt().min(0.5 * (d.risky_radius - d.collision_radius))
}

/// 1 at or inside the collision boundary, 0 at or beyond the risky boundary,
/// linear in between.
pub(crate) fn ramp(dcpa: f64, d: &ShipDomain) -> f64 {
    ((d.risky_radius - dcpa) / (d.risky_radius - d.collision_radius)).clamp(0.0, 1.0)
}

/// Worst-obstacle DCPA cost of executing `a`.
pub fn safety_cost(a: Action, snap: &Snapshot, domains: &[ShipDomain], cfg: &PlannerConfig) -> f64 {
    let va = a.velocity(snap.spec.v_max);
    snap.obstacles
        .iter()
        .zip(domains)
        .map(|(o, d)| {
            ramp(
                predicted_dcpa(snap.ego.pos, va, o, d, cfg.safety_margin, cfg.horizon),
                d,
            )
        })
        .fold(0.0, f64::max)
}

/// Per-cycle state of the information cost: particle clouds of the relevant
/// obstacles, their current entropies and aggregation weights.
#[derive(Debug, Clone)]
pub struct InfoContext {
    ego: VesselState,
    spec: crate::simulator::EgoSpec,
    rollout: RolloutConfig,
    /// Snapshot indices of the obstacles that contribute.
    members: Vec<usize>,
    particles: Vec<ParticleSet>,
    current: Vec<PassingBelief>,
    current_entropy: Vec<f64>,
    /// Per-member `alpha_i` within its cluster.
    alphas: Vec<f64>,
    /// `sum_k beta_k sum_i alpha_i`, which maps the total gain into [0, 1].
    norm: f64,
    /// `beta_k * alpha_i / norm`, used for the lower bound.
    weights: Vec<f64>,
    rule_factor: Option<f64>,
    clusters: ClusterSet,
}

impl InfoContext {
    /// Obstacles contribute when they are within sensing range and still
    /// closing with a CPA inside the rollout horizon. MOA variants weight them
    /// by cluster; VO variants treat every obstacle on its own.
    pub fn new(snap: &Snapshot, cfg: &PlannerConfig, seed: u64) -> Self {
        let rollout = RolloutConfig {
            horizon_s: cfg.horizon,
            sensing_range: cfg.sensing_range,
            dead_band: cfg.dead_band,
        };
        let members: Vec<usize> = snap
            .obstacles
            .iter()
            .enumerate()
            .filter(|(_, o)| {
                let cpa = cpa_metrics(&snap.ego, &o.state);
                (o.state.pos - snap.ego.pos).norm() <= cfg.sensing_range && cpa.tcpa > 0.0 && cpa.tcpa <= cfg.horizon
            })
            .map(|(i, _)| i)
            .collect();
        let particles: Vec<ParticleSet> = members
            .iter()
            .map(|&i| {
                let o = &snap.obstacles[i];
                sample_particles(
                    &o.state,
                    &o.noise,
                    cfg.particles,
                    crate::substream(seed, o.state.id as u64),
                )
            })
            .collect();

        let hold = EgoRollout::new(&snap.ego, Command::hold(&snap.ego), &snap.spec, cfg.horizon);
        let current: Vec<PassingBelief> = members
            .iter()
            .zip(&particles)
            .map(
                |(&i, p)| match (cfg.variant.uses_classifier(), snap.obstacles[i].belief) {
                    (true, Some(b)) => b,
                    _ => classify_particles(&hold, p, &rollout).belief(),
                },
            )
            .collect();
        let current_entropy = current.iter().map(entropy).collect();

        let states: Vec<VesselState> = members.iter().map(|&i| snap.obstacles[i].state).collect();
        let clusters = if cfg.variant.is_moa_family() {
            cluster_obstacles(&states, &snap.ego, &cfg.cluster_thresholds())
        } else {
            ClusterSet::singletons(states.len(), &states)
        };
        let mut alphas = vec![0.0; members.len()];
        let mut weights = vec![0.0; members.len()];
        for c in &clusters.clusters {
            let noise: Vec<NoiseModel> = c.iter().map(|&k| snap.obstacles[members[k]].noise).collect();
            let a = obstacle_weights(&noise);
            let beta = a.iter().copied().fold(0.0, f64::max);
            for (&k, a) in c.iter().zip(&a) {
                alphas[k] = *a;
                weights[k] = beta * a;
            }
        }
        let norm: f64 = weights.iter().sum();
        if norm > 0.0 {
            weights.iter_mut().for_each(|w| *w /= norm);
        }
        Self {
            ego: snap.ego,
            spec: snap.spec,
            rollout,
            members,
            particles,
            current,
            current_entropy,
            alphas,
            norm,
            weights,
            rule_factor: cfg.rule_compliance.then_some(cfg.rule_factor),
            clusters,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Snapshot indices of contributing obstacles.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn current_beliefs(&self) -> &[PassingBelief] {
        &self.current
    }

    pub fn clusters(&self) -> &ClusterSet {
        &self.clusters
    }

    /// A value no action's information cost can fall below.
    pub fn lower_bound(&self) -> f64 {
        let f = self.rule_factor.unwrap_or(1.0);
        self.weights
            .iter()
            .zip(&self.current_entropy)
            .map(|(w, h)| w * f * (1.0 - h) / 2.0)
            .sum()
    }

    /// Expected beliefs of every contributing obstacle under `a`.
    pub fn expected_beliefs(&self, a: Action) -> Vec<PassingBelief> {
        let rollout = EgoRollout::for_action(&self.ego, a, &self.spec, self.rollout.horizon_s);
        self.particles
            .iter()
            .map(|p| classify_particles(&rollout, p, &self.rollout).belief())
            .collect()
    }

    /// Weighted remapped information gain of `a`, in `[0, 1]`.
    pub fn cost(&self, a: Action) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let expected = self.expected_beliefs(a);
        let tilde: Vec<f64> = expected
            .iter()
            .zip(&self.current_entropy)
            .map(|(b, h)| {
                // Both entropies lie in [0, 1], so the gain is always in range.
                let t = remap_gain(h - entropy(b)).expect("gain within [-1, 1]");
                match self.rule_factor {
                    Some(f) if b.p_l > b.p_r => t * f,
                    _ => t,
                }
            })
            .collect();
        let per_cluster: Vec<_> = self
            .clusters
            .clusters
            .iter()
            .map(|c| {
                let a: Vec<f64> = c.iter().map(|&k| self.alphas[k]).collect();
                let g: Vec<f64> = c.iter().map(|&k| tilde[k]).collect();
                cluster_gain(&a, &g)
            })
            .collect();
        (total_gain(&per_cluster) / self.norm).clamp(0.0, 1.0)
    }
}

/// Information cost of every action on the grid.
pub fn gain_field(snap: &Snapshot, cfg: &PlannerConfig, seed: u64) -> GainField {
    let ctx = InfoContext::new(snap, cfg, seed);
    GainField::new(
        (0..ACTION_COUNT)
            .into_par_iter()
            .map(|i| ctx.cost(Action::from_index(i)))
            .collect(),
    )
}

/// Information cost of `a`; builds a fresh context, so prefer
/// [`InfoContext::cost`] inside loops.
pub fn info_cost(a: Action, snap: &Snapshot, cfg: &PlannerConfig, seed: u64) -> f64 {
    InfoContext::new(snap, cfg, seed).cost(a)
}
