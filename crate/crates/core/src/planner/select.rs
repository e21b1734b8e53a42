use rayon::prelude::*;

use super::cost::{predicted_dcpa, ramp, InfoContext};
use super::nogo::mask_with_escape;
use super::{deviation_cost, Action, LocalGoal, NoGoMask, PlannerConfig, PlannerError, Snapshot, ACTION_COUNT};
use crate::classifier::PassingBelief;
use crate::topology::{heading_delta, heading_unit, VesselState};

/// Cost terms of one action.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub j_d: f64,
    pub j_s: f64,
    pub j_i: f64,
    pub total: f64,
}

/// Result of one planning cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub costs: CostBreakdown,
    pub in_no_go_count: usize,
    /// Current passing beliefs of the obstacles that entered the information
    /// cost, keyed by obstacle id.
    pub beliefs: Vec<(u32, PassingBelief)>,
    /// Per-action costs and no-go flags, when requested.
    pub field: Option<Vec<(CostBreakdown, bool)>>,
}

const CHUNK: usize = 32;

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Tie-break: smallest deviation from the hysteresis heading, then fastest,
/// then smallest heading.
fn tie_key(a: Action, theta_tgt: f64) -> (f64, i32, u16) {
    (
        heading_delta(theta_tgt, a.heading_deg()).abs(),
        -(a.speed_step() as i32),
        a.heading(),
    )
}

fn better(a: (Action, f64), b: (Action, f64), theta_tgt: f64) -> bool {
    if approx_eq(a.1, b.1) {
        tie_key(a.0, theta_tgt) < tie_key(b.0, theta_tgt)
    } else {
        a.1 < b.1
    }
}

struct Problem<'a> {
    snap: &'a Snapshot,
    goal: &'a LocalGoal,
    cfg: &'a PlannerConfig,
    mask: NoGoMask,
    info: Option<InfoContext>,
}

impl<'a> Problem<'a> {
    fn new(snap: &'a Snapshot, goal: &'a LocalGoal, cfg: &'a PlannerConfig, seed: u64) -> Self {
        let states: Vec<VesselState> = snap.obstacles.iter().map(|o| o.state).collect();
        let domains = snap.domains(cfg);
        let mask = mask_with_escape(&snap.ego, &states, &domains, snap.spec.v_max, cfg.nogo_horizon);
        let info = (cfg.variant.uses_information() && cfg.w_i > 0.0).then(|| InfoContext::new(snap, cfg, seed));
        Self {
            snap,
            goal,
            cfg,
            mask,
            info,
        }
    }

    /// Everything except the information term.
    fn base(&self, a: Action) -> CostBreakdown {
        let snap = self.snap;
        let v_max = snap.spec.v_max;
        if self.cfg.variant.is_moa_family() {
            let va = a.velocity(v_max);
            let j_s = snap
                .obstacles
                .iter()
                .map(|o| {
                    let d = snap.domain(o, self.cfg);
                    ramp(
                        predicted_dcpa(snap.ego.pos, va, o, &d, self.cfg.safety_margin, self.cfg.horizon),
                        &d,
                    )
                })
                .fold(0.0, f64::max);
            let j_d = deviation_cost(a, self.goal, self.cfg);
            CostBreakdown {
                j_d,
                j_s,
                j_i: 0.0,
                total: j_d + self.cfg.w_s * j_s,
            }
        } else {
            // Distance to the goal velocity, in units of v_max.
            let goal_v = heading_unit(self.goal.theta_wp) * (self.goal.v_wp * v_max);
            let j_d = (a.velocity(v_max) - goal_v).norm() / v_max;
            CostBreakdown {
                j_d,
                j_s: 0.0,
                j_i: 0.0,
                total: j_d,
            }
        }
    }

    fn with_info(&self, mut c: CostBreakdown, a: Action) -> CostBreakdown {
        if let Some(info) = &self.info {
            c.j_i = info.cost(a);
            c.total += self.cfg.w_i * c.j_i;
        }
        c
    }

    fn beliefs(&self) -> Vec<(u32, PassingBelief)> {
        match &self.info {
            Some(info) => info
                .members()
                .iter()
                .zip(info.current_beliefs())
                .map(|(&i, b)| (self.snap.obstacles[i].state.id, *b))
                .collect(),
            None => Vec::new(),
        }
    }

    fn field(&self) -> Vec<(CostBreakdown, bool)> {
        (0..ACTION_COUNT)
            .into_par_iter()
            .map(|i| {
                let a = Action::from_index(i);
                (self.with_info(self.base(a), a), self.mask.contains(a))
            })
            .collect()
    }

    /// Exact argmin over the feasible grid.
    ///
    /// Candidates are visited in order of their cost without the information
    /// term; since that term is bounded below, the scan stops once no
    /// remaining candidate can beat the incumbent.
    fn solve(&self) -> Result<(Action, CostBreakdown), PlannerError> {
        let theta_tgt = self.goal.theta_tgt;
        let mut cands: Vec<(Action, CostBreakdown)> = (0..ACTION_COUNT)
            .map(Action::from_index)
            .filter(|a| !self.mask.contains(*a))
            .map(|a| (a, self.base(a)))
            .collect();
        if cands.is_empty() {
            return Err(PlannerError::NoFeasibleAction);
        }
        cands.sort_by(|x, y| {
            x.1.total
                .total_cmp(&y.1.total)
                .then_with(|| tie_key(x.0, theta_tgt).partial_cmp(&tie_key(y.0, theta_tgt)).unwrap())
        });
        let Some(info) = &self.info else {
            let mut best = cands[0];
            for c in &cands[1..] {
                if better((c.0, c.1.total), (best.0, best.1.total), theta_tgt) {
                    best = *c;
                }
            }
            return Ok(best);
        };
        let lb = self.cfg.w_i * info.lower_bound();
        let mut best: Option<(Action, CostBreakdown)> = None;
        for chunk in cands.chunks(CHUNK) {
            if let Some(b) = best {
                let bound = b.1.total + 2e-12 * b.1.total.abs().max(1.0);
                if chunk[0].1.total + lb > bound {
                    break;
                }
            }
            let scored: Vec<(Action, CostBreakdown)> =
                chunk.par_iter().map(|&(a, c)| (a, self.with_info(c, a))).collect();
            for s in scored {
                best = Some(match best {
                    Some(b) if !better((s.0, s.1.total), (b.0, b.1.total), theta_tgt) => b,
                    _ => s,
                });
            }
        }
        Ok(best.expect("at least one feasible candidate"))
    }
}

/// Minimizes `J_d + w_s J_s + w_i J_i` over the feasible action grid.
///
/// VO variants are routed to [`vo_baseline`]. `seed` fixes the particle
/// clouds. With `want_field` the full per-action cost field is returned.
pub fn select_action(
    snap: &Snapshot,
    goal: &LocalGoal,
    cfg: &PlannerConfig,
    seed: u64,
    want_field: bool,
) -> Result<Decision, PlannerError> {
    let p = Problem::new(snap, goal, cfg, seed);
    let field = want_field.then(|| p.field());
    let (action, costs) = p.solve()?;
    Ok(Decision {
        action,
        costs,
        in_no_go_count: p.mask.count(),
        beliefs: p.beliefs(),
        field,
    })
}

/// Velocity-obstacle planner: the feasible grid velocity closest to the goal
/// velocity, plus `w_i J_i` over individual obstacles for `VO_PLUS`.
pub fn vo_baseline(
    snap: &Snapshot,
    goal: &LocalGoal,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<Decision, PlannerError> {
    assert!(!cfg.variant.is_moa_family(), "vo_baseline needs a VO variant");
    select_action(snap, goal, cfg, seed, false)
}
