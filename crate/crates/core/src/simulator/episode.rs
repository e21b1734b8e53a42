//! Episode execution: fixed-step physics, 1 Hz AIS and planning, outcome
//! bookkeeping and the per-step log.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::behaviors::{behavior_policy, AgentView, BehaviorKind};
use super::kinematics::{step_kinematics, Command, EgoSpec};
use super::scenario::Scenario;
use super::sensor::{ais_observe, AisReceiver, DEFAULT_AIS_DELAY};
use crate::classifier::{
    extract_features, lstm_forward_batch, FeatureVector, ModelWeights, ObservationWindow, PassingBelief,
};
use crate::infogain::NoiseModel;
use crate::planner::{
    select_action, Action, CostBreakdown, LocalGoal, ObstacleView, PlannerConfig, ShipDomain, Snapshot, Variant,
};
use crate::substream;
use crate::topology::{bearing_deg, heading_delta, wrap_heading, VesselState};
use crate::Vec2;

const AIS_STREAM: u64 = 1;
const RANDOM_BELIEF_STREAM: u64 = 2;
const PLANNER_STREAM: u64 = 3;
const AGENT_STREAM: u64 = 4;

/// Where the ego's classifier beliefs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefSource {
    /// The trained model, when the variant uses one and weights are given.
    Model,
    /// Uniformly random `p_l` per obstacle and cycle (robustness runs).
    Randomized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Physics step, s; `1 / dt` must be a whole number.
    pub dt: f64,
    pub timeout_s: f64,
    pub goal_radius: f64,
    pub ais_delay: f64,
    /// Classifier observation horizon, s.
    pub window_s: f64,
    pub planner: PlannerConfig,
    pub belief: BeliefSource,
    /// Positions are multiplied by this before feature extraction, so a model
    /// trained at one length scale can read geometrically similar traffic at
    /// another.
    pub classifier_scale: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            timeout_s: 300.0,
            goal_radius: 5.0,
            ais_delay: DEFAULT_AIS_DELAY,
            window_s: crate::classifier::DEFAULT_WINDOW_S,
            planner: PlannerConfig::default(),
            belief: BeliefSource::Model,
            classifier_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Nearmiss,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "SUCCESS",
            Outcome::Nearmiss => "NEARMISS",
            Outcome::Collision => "COLLISION",
            Outcome::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A time-stamped track that can be sampled at any time; linear
/// interpolation between records and constant velocity past the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    states: Vec<VesselState>,
}

impl Track {
    /// `states` must be nonempty and strictly increasing in time.
    pub fn new(states: Vec<VesselState>) -> Option<Self> {
        if states.is_empty() || states.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return None;
        }
        Some(Self { states })
    }

    pub fn states(&self) -> &[VesselState] {
        &self.states
    }

    pub fn at(&self, t: f64) -> VesselState {
        let s = &self.states;
        let first = s[0];
        if t <= first.t {
            return VesselState { t, ..first };
        }
        let last = *s.last().unwrap();
        if t >= last.t {
            return last.propagate(t - last.t);
        }
        let i = s.partition_point(|x| x.t <= t) - 1;
        let (a, b) = (s[i], s[i + 1]);
        let u = (t - a.t) / (b.t - a.t);
        VesselState {
            t,
            pos: a.pos + (b.pos - a.pos) * u,
            heading_deg: wrap_heading(a.heading_deg + heading_delta(a.heading_deg, b.heading_deg) * u),
            speed: a.speed + (b.speed - a.speed) * u,
            ..a
        }
    }
}

/// How an obstacle moves.
#[derive(Debug, Clone, PartialEq)]
pub enum ObstacleDriver {
    Behavior {
        kind: BehaviorKind,
        goal: Vec2,
        v_pref: f64,
    },
    Scripted(Track),
}

/// How the ego moves.
#[derive(Debug, Clone, Copy)]
pub enum EgoDriver<'a> {
    Planner {
        variant: Variant,
        weights: Option<&'a ModelWeights>,
    },
    Scripted(&'a Track),
}

/// Everything needed to run one episode.
#[derive(Debug, Clone)]
pub struct EpisodeSetup<'a> {
    pub ego: VesselState,
    pub ego_spec: EgoSpec,
    pub ego_goal: Vec2,
    pub ego_driver: EgoDriver<'a>,
    /// Initial state, motion and AIS noise of each obstacle.
    pub obstacles: Vec<(VesselState, ObstacleDriver, NoiseModel)>,
    pub seed: u64,
}

/// One planning cycle of the ego.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub t: f64,
    /// `None` when no feasible action existed and the ego stopped.
    pub action: Option<Action>,
    pub command: Command,
    pub costs: Option<CostBreakdown>,
    pub in_no_go_count: usize,
    /// Current beliefs used by the planner, by obstacle id.
    pub beliefs: Vec<(u32, PassingBelief)>,
    /// Emission time of the newest fix read for each obstacle in view.
    pub fix_times: Vec<(u32, f64)>,
    pub planner_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub ego: VesselState,
    pub obstacles: Vec<VesselState>,
    /// Index into [`EpisodeLog::decisions`] when the ego planned this step.
    pub decision: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub seed: u64,
    /// `None` for scripted ego motion.
    pub variant: Option<Variant>,
    pub steps: Vec<StepRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub outcome: Outcome,
    pub nearmiss_count: usize,
    /// Smallest ego-obstacle centre distance over the episode, m.
    pub min_cpa: f64,
    pub traveled: f64,
    /// Distinct obstacles that came within sensing range.
    pub encounters: usize,
    /// Mean number of obstacles within sensing range per planning cycle.
    pub mean_in_range: f64,
}

/// Per-episode metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub outcome: Outcome,
    pub success: bool,
    pub nearmiss_count: usize,
    pub min_cpa: f64,
    pub traveled: f64,
    pub planner_ms_mean: f64,
    pub planner_ms_std: f64,
    pub encounters: usize,
    pub mean_in_range: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EpisodeLog {
    pub fn metrics(&self) -> MetricsRow {
        let times: Vec<f64> = self.decisions.iter().map(|d| d.planner_ms).collect();
        let (m, s) = mean_std(&times);
        MetricsRow {
            outcome: self.outcome,
            success: self.outcome == Outcome::Success,
            nearmiss_count: self.nearmiss_count,
            min_cpa: self.min_cpa,
            traveled: self.traveled,
            planner_ms_mean: m,
            planner_ms_std: s,
            encounters: self.encounters,
            mean_in_range: self.mean_in_range,
        }
    }

    pub fn final_ego(&self) -> VesselState {
        self.steps.last().expect("episode has steps").ego
    }

    /// Per-step CSV: one row per vessel and step. Beliefs, costs and the
    /// chosen action are filled on planning steps only.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let e = |e: csv::Error| std::io::Error::other(e);
        w.write_record([
            "t",
            "vessel_id",
            "x",
            "y",
            "heading_deg",
            "speed_mps",
            "p_l",
            "p_r",
            "J_d",
            "J_s",
            "J_i",
            "chosen_heading",
            "chosen_speed",
            "in_no_go_count",
        ])
        .map_err(e)?;
        for st in &self.steps {
            let d = st.decision.map(|i| &self.decisions[i]);
            let mut row = |s: &VesselState, extra: [String; 8]| {
                let mut r = vec![
                    st.t.to_string(),
                    s.id.to_string(),
                    s.pos.x.to_string(),
                    s.pos.y.to_string(),
                    s.heading_deg.to_string(),
                    s.speed.to_string(),
                ];
                r.extend(extra);
                w.write_record(&r).map_err(e)
            };
            let ego_extra = match d {
                Some(d) => [
                    String::new(),
                    String::new(),
                    opt(d.costs.map(|c| c.j_d)),
                    opt(d.costs.map(|c| c.j_s)),
                    opt(d.costs.map(|c| c.j_i)),
                    d.command.heading_deg.to_string(),
                    d.command.speed.to_string(),
                    d.in_no_go_count.to_string(),
                ],
                None => Default::default(),
            };
            row(&st.ego, ego_extra)?;
            for o in &st.obstacles {
                let b = d.and_then(|d| d.beliefs.iter().find(|(id, _)| *id == o.id).map(|(_, b)| *b));
                let mut extra: [String; 8] = Default::default();
                extra[0] = opt(b.map(|b| b.p_l));
                extra[1] = opt(b.map(|b| b.p_r));
                row(o, extra)?;
            }
        }
        w.flush()
    }
}

/// Runs a scenario with the ego controlled by `variant`. `weights` feed the
/// classifier of `MOA_LSTM`; without them that variant falls back to
/// particle beliefs.
pub fn run_scenario(sc: &Scenario, variant: Variant, cfg: &SimConfig, weights: Option<&ModelWeights>) -> EpisodeLog {
    let setup = EpisodeSetup {
        ego: sc.ego_initial_state(),
        ego_spec: sc.ego_spec,
        ego_goal: sc.ego_goal,
        ego_driver: EgoDriver::Planner { variant, weights },
        obstacles: sc
            .obstacles
            .iter()
            .map(|o| {
                let driver = ObstacleDriver::Behavior {
                    kind: o.behavior,
                    goal: sc.obstacle_goal(o),
                    v_pref: o.speed,
                };
                (o.initial_state(), driver, o.noise)
            })
            .collect(),
        seed: sc.seed,
    };
    run_episode(&setup, cfg)
}

struct Bookkeeping {
    inside_r: Vec<bool>,
    nearmiss: usize,
    min_cpa: f64,
}

impl Bookkeeping {
    /// Returns true on collision.
    fn update(&mut self, ego: &VesselState, obs: &[VesselState], domains: &[ShipDomain]) -> bool {
        let mut collided = false;
        for (i, (o, d)) in obs.iter().zip(domains).enumerate() {
            let sep = (o.pos - ego.pos).norm();
            self.min_cpa = self.min_cpa.min(sep);
            if sep < d.collision_radius {
                collided = true;
            }
            let inside = sep < d.risky_radius;
            if inside && !self.inside_r[i] {
                self.nearmiss += 1;
            }
            self.inside_r[i] = inside;
        }
        collided
    }
}

/// The episode loop shared by scenario runs and replays.
pub fn run_episode(setup: &EpisodeSetup, cfg: &SimConfig) -> EpisodeLog {
    let per_second = (1.0 / cfg.dt).round() as usize;
    assert!(
        per_second >= 1 && ((per_second as f64) * cfg.dt - 1.0).abs() < 1e-9,
        "1/dt must be a whole number"
    );
    let max_steps = (cfg.timeout_s / cfg.dt).round() as usize;
    let n = setup.obstacles.len();
    let mut ego = setup.ego;
    let mut obs: Vec<VesselState> = setup.obstacles.iter().map(|o| o.0).collect();
    let domains: Vec<ShipDomain> = obs
        .iter()
        .map(|o| {
            ShipDomain::from_lengths(
                setup.ego_spec.length,
                o.length,
                cfg.planner.collision_factor,
                cfg.planner.risky_factor,
            )
        })
        .collect();
    let obstacle_specs: Vec<EgoSpec> = obs
        .iter()
        .map(|o| EgoSpec {
            length: o.length,
            beam: o.beam,
            v_max: setup.ego_spec.v_max.max(o.speed),
            ..setup.ego_spec
        })
        .collect();
    let mut rx = AisReceiver::new(n, (cfg.window_s.ceil() as usize + 2).max(2));
    let mut book = Bookkeeping {
        inside_r: vec![false; n],
        nearmiss: 0,
        min_cpa: f64::INFINITY,
    };
    let mut steps: Vec<StepRecord> = Vec::with_capacity(max_steps + 1);
    let mut decisions: Vec<DecisionRecord> = Vec::new();
    let mut ego_cmd = Command::hold(&ego);
    let mut obs_cmd: Vec<Command> = obs.iter().map(Command::hold).collect();
    let mut prev: Option<(f64, bool)> = None;
    let mut seen = vec![false; n];
    let mut in_range_total = 0usize;
    let mut cycles = 0usize;
    let mut traveled = 0.0;
    let mut outcome = Outcome::Timeout;
    let ais_seed = substream(setup.seed, AIS_STREAM);

    for k in 0..=max_steps {
        let t = k as f64 * cfg.dt;
        let whole = k % per_second == 0;
        if whole {
            for (i, o) in obs.iter().enumerate() {
                if let Some(f) = ais_observe(o, &setup.obstacles[i].2, t, cfg.ais_delay, ais_seed) {
                    rx.emit(i, f);
                }
            }
        }
        rx.deliver(t);
        steps.push(StepRecord {
            t,
            ego,
            obstacles: obs.clone(),
            decision: None,
        });

        if book.update(&ego, &obs, &domains) {
            outcome = Outcome::Collision;
            break;
        }
        if (ego.pos - setup.ego_goal).norm() <= cfg.goal_radius {
            outcome = if book.nearmiss == 0 {
                Outcome::Success
            } else {
                Outcome::Nearmiss
            };
            break;
        }
        if k == max_steps {
            break;
        }

        if whole {
            let in_range: Vec<usize> = (0..n)
                .filter(|&i| (obs[i].pos - ego.pos).norm() <= cfg.planner.sensing_range)
                .collect();
            for &i in &in_range {
                seen[i] = true;
            }
            in_range_total += in_range.len();
            cycles += 1;

            if let EgoDriver::Planner { variant, weights } = setup.ego_driver {
                let d = plan(setup, cfg, variant, weights, &rx, &steps, &ego, k, prev);
                prev = Some((d.command.heading_deg, d.costs.is_some_and(|c| c.j_s > 0.0)));
                ego_cmd = d.command;
                steps.last_mut().unwrap().decision = Some(decisions.len());
                decisions.push(d);
            }

            for i in 0..n {
                if let ObstacleDriver::Behavior { kind, goal, v_pref } = &setup.obstacles[i].1 {
                    if *kind == BehaviorKind::Cv {
                        continue;
                    }
                    let mut others: Vec<VesselState> = Vec::with_capacity(n);
                    others.push(ego);
                    others.extend(obs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, o)| *o));
                    let view = AgentView {
                        me: &obs[i],
                        spec: &obstacle_specs[i],
                        goal: *goal,
                        v_pref: *v_pref,
                        others: &others,
                    };
                    let seed = substream(substream(setup.seed, AGENT_STREAM), (k as u64) << 16 | i as u64);
                    obs_cmd[i] = behavior_policy(*kind, &view, &cfg.planner, seed);
                }
            }
        }

        let next_t = t + cfg.dt;
        let prev_pos = ego.pos;
        ego = match setup.ego_driver {
            EgoDriver::Planner { .. } => step_kinematics(&ego, ego_cmd, &setup.ego_spec, cfg.dt),
            EgoDriver::Scripted(track) => track.at(next_t),
        };
        traveled += (ego.pos - prev_pos).norm();
        for i in 0..n {
            obs[i] = match &setup.obstacles[i].1 {
                ObstacleDriver::Behavior { .. } => step_kinematics(&obs[i], obs_cmd[i], &obstacle_specs[i], cfg.dt),
                ObstacleDriver::Scripted(track) => track.at(next_t),
            };
        }
    }

    EpisodeLog {
        seed: setup.seed,
        variant: match setup.ego_driver {
            EgoDriver::Planner { variant, .. } => Some(variant),
            EgoDriver::Scripted(_) => None,
        },
        steps,
        decisions,
        outcome,
        nearmiss_count: book.nearmiss,
        min_cpa: book.min_cpa,
        traveled,
        encounters: seen.iter().filter(|s| **s).count(),
        mean_in_range: if cycles == 0 {
            0.0
        } else {
            in_range_total as f64 / cycles as f64
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn plan(
    setup: &EpisodeSetup,
    cfg: &SimConfig,
    variant: Variant,
    weights: Option<&ModelWeights>,
    rx: &AisReceiver,
    steps: &[StepRecord],
    ego: &VesselState,
    k: usize,
    prev: Option<(f64, bool)>,
) -> DecisionRecord {
    let t = k as f64 * cfg.dt;
    let started = Instant::now();
    let mut views = Vec::new();
    let mut slots = Vec::new();
    let mut fix_times = Vec::new();
    for i in 0..setup.obstacles.len() {
        let Some(f) = rx.latest(i) else { continue };
        let est = VesselState {
            t,
            ..f.state.propagate(t - f.t)
        };
        if (est.pos - ego.pos).norm() > cfg.planner.sensing_range {
            continue;
        }
        views.push(ObstacleView::new(est, setup.obstacles[i].2));
        slots.push(i);
        fix_times.push((f.state.id, f.t));
    }

    if variant.uses_classifier() {
        match cfg.belief {
            BeliefSource::Model => {
                if let Some(w) = weights {
                    let seqs: Vec<Option<Vec<FeatureVector>>> =
                        slots.iter().map(|&i| window_features(rx, i, steps, cfg)).collect();
                    let usable: Vec<&[FeatureVector]> = seqs.iter().flatten().map(|s| s.as_slice()).collect();
                    if let Ok(beliefs) = lstm_forward_batch(w, &usable) {
                        let mut it = beliefs.into_iter();
                        for (v, s) in views.iter_mut().zip(&seqs) {
                            if s.is_some() {
                                v.belief = it.next();
                            }
                        }
                    }
                }
            }
            BeliefSource::Randomized => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(substream(substream(setup.seed, RANDOM_BELIEF_STREAM), k as u64));
                for v in &mut views {
                    v.belief = Some(PassingBelief::from_left(rng.random()));
                }
            }
        }
    }

    let theta_wp = bearing_deg(&(setup.ego_goal - ego.pos));
    let mut goal = LocalGoal::toward(theta_wp, 1.0);
    if let Some((theta, true)) = prev {
        goal.theta_tgt = wrap_heading(theta);
    }
    let snap = Snapshot {
        ego: *ego,
        spec: setup.ego_spec,
        obstacles: views,
    };
    let pcfg = cfg.planner.clone().with_variant(variant);
    let seed = substream(substream(setup.seed, PLANNER_STREAM), k as u64);
    let (action, command, costs, in_no_go_count, beliefs) = match select_action(&snap, &goal, &pcfg, seed, false) {
        Ok(d) => (
            Some(d.action),
            d.action.command(setup.ego_spec.v_max),
            Some(d.costs),
            d.in_no_go_count,
            d.beliefs,
        ),
        Err(_) => (None, Command::stop(ego), None, crate::planner::ACTION_COUNT, Vec::new()),
    };
    DecisionRecord {
        t,
        action,
        command,
        costs,
        in_no_go_count,
        beliefs,
        fix_times,
        planner_ms: started.elapsed().as_secs_f64() * 1e3,
    }
}

/// Features of the fixes received for slot `i` within the observation
/// horizon, paired with the ego's own states at the emission times.
fn window_features(rx: &AisReceiver, i: usize, steps: &[StepRecord], cfg: &SimConfig) -> Option<Vec<FeatureVector>> {
    let hist = rx.history(i);
    let newest = hist.last()?.t;
    let scale = cfg.classifier_scale;
    let mut fixes = Vec::new();
    let mut egos = Vec::new();
    for f in hist.iter().filter(|f| f.t >= newest - cfg.window_s - 1e-9) {
        let k = (f.t / cfg.dt).round() as usize;
        let e = steps.get(k)?.ego;
        fixes.push(VesselState {
            pos: f.state.pos * scale,
            ..f.state
        });
        egos.push(VesselState {
            pos: e.pos * scale,
            ..e
        });
    }
    let w = ObservationWindow::new(hist.last()?.id, fixes, egos, cfg.window_s).ok()?;
    extract_features(&w).ok()
}
