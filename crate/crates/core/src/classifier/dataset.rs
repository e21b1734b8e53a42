//! Synthetic encounter generation and the per-step dataset CSV.
//!
//! Encounters are built backwards from a chosen closest point of approach,
//! simulated at 1 Hz under constant velocity or a steady turn, labelled from
//! the noiseless tracks and observed through noisy position fixes.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::features::{feature_vector, FeatureVector, FEATURES};
use super::ClassifierError;
use crate::topology::{clearance_index, label_passing_with, LabelConfig, PassingSide, TrackPair, VesselState};
use crate::Vec2;

/// One labelled feature window.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEncounter {
    pub encounter_id: u64,
    /// Fix timestamps, seconds since the encounter start.
    pub times: Vec<f64>,
    pub features: Vec<FeatureVector>,
    pub label: PassingSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub n: usize,
    /// Fixes per window, inclusive range.
    pub min_fixes: usize,
    pub max_fixes: usize,
    pub ego_speed: (f64, f64),
    pub obs_speed: (f64, f64),
    pub obs_length: (f64, f64),
    /// Latest closest approach after the encounter start, seconds.
    pub tcpa_max: f64,
    /// Largest |DCPA| kept, m.
    pub dcpa_max: f64,
    /// Smallest |DCPA| kept, m; raise it to exclude ambiguous geometry.
    pub dcpa_min: f64,
    /// Initial range is at most this, m.
    pub initial_range_max: f64,
    /// Probability that each vessel holds a steady turn instead of a straight course.
    pub turning_fraction: f64,
    /// deg/s
    pub turn_rate_max: f64,
    /// Upper bounds of the per-encounter noise standard deviations
    /// (position m, heading rad); each is drawn uniformly below its bound.
    pub sigma_pos_max: f64,
    pub sigma_heading_max: f64,
    pub label: LabelConfig,
    /// When true every window ends at the clearance sample.
    pub final_window: bool,
    pub max_attempts_per_encounter: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n: 4000,
            min_fixes: 2,
            max_fixes: 11,
            ego_speed: (0.5, 2.5),
            obs_speed: (0.0, 2.0),
            obs_length: (1.0, 4.0),
            tcpa_max: 120.0,
            dcpa_max: 50.0,
            dcpa_min: 0.0,
            initial_range_max: 100.0,
            turning_fraction: 0.3,
            turn_rate_max: 3.0,
            sigma_pos_max: 0.3,
            sigma_heading_max: 0.3,
            label: LabelConfig::default(),
            final_window: false,
            max_attempts_per_encounter: 200,
        }
    }
}

impl DatasetConfig {
    fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InfeasibleConfig(m.to_string()));
        if self.min_fixes == 0 || self.min_fixes > self.max_fixes {
            return bad("need 1 <= min_fixes <= max_fixes");
        }
        for (lo, hi) in [self.ego_speed, self.obs_speed, self.obs_length] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad("ranges must satisfy 0 <= lo <= hi");
            }
        }
        if !(self.dcpa_min >= 0.0 && self.dcpa_min <= self.dcpa_max && self.tcpa_max > 1.0) {
            return bad("inconsistent DCPA/TCPA gates");
        }
        if self.sigma_pos_max < 0.0 || self.sigma_heading_max < 0.0 || !(0.0..=1.0).contains(&self.turning_fraction) {
            return bad("noise bounds and turning fraction out of range");
        }
        Ok(())
    }
}

/// A generated encounter with its noiseless tracks.
#[derive(Debug, Clone)]
pub(crate) struct Generated {
    pub encounter: LabeledEncounter,
    // Only the label-consistency tests look at the tracks.
    #[cfg_attr(not(test), allow(dead_code))]
    pub pair: TrackPair,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn simulate(start: VesselState, turn_rate: f64, steps: usize) -> Vec<VesselState> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = start;
    out.push(s);
    for _ in 0..steps {
        s = VesselState::new(
            s.id,
            s.t + 1.0,
            s.pos + s.velocity(),
            s.heading_deg + turn_rate,
            s.speed,
        )
        .with_dims(s.length, s.beam);
        out.push(s);
    }
    out
}

fn sample_one(cfg: &DatasetConfig, id: u64, rng: &mut ChaCha8Rng) -> Option<Generated> {
    let ego_h = rng.random_range(0.0..360.0);
    let obs_h = rng.random_range(0.0..360.0);
    let ego_v = uniform(rng, cfg.ego_speed);
    let obs_v = uniform(rng, cfg.obs_speed);
    let length = uniform(rng, cfg.obs_length);
    let tcpa = rng.random_range(1.0..cfg.tcpa_max);
    let dcpa = uniform(rng, (cfg.dcpa_min, cfg.dcpa_max)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let turn = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(cfg.turning_fraction) {
            uniform(rng, (-cfg.turn_rate_max, cfg.turn_rate_max))
        } else {
            0.0
        }
    };
    let ego_turn = turn(rng);
    let obs_turn = turn(rng);
    let sigma_pos = uniform(rng, (0.0, cfg.sigma_pos_max));
    let sigma_h = uniform(rng, (0.0, cfg.sigma_heading_max));
    let window_len = rng.random_range(cfg.min_fixes..=cfg.max_fixes);
    let end_u: f64 = rng.random();

    let ego0 = VesselState::new(0, 0.0, Vec2::zeros(), ego_h, ego_v);
    let obs_dir = VesselState::new(1, 0.0, Vec2::zeros(), obs_h, obs_v);
    let v_rel = obs_dir.velocity() - ego0.velocity();
    let speed = v_rel.norm();
    if speed < 0.1 {
        return None;
    }
    // Left-hand normal of the relative track.
    let normal = Vec2::new(-v_rel.y, v_rel.x) / speed;
    let p0 = normal * dcpa - v_rel * tcpa;
    let r0 = p0.norm();
    if r0 > cfg.initial_range_max || r0 < 1.0 {
        return None;
    }
    let obs0 = VesselState::new(1, 0.0, p0, obs_h, obs_v).with_dims(length, length * 0.4);
    let steps = (tcpa + 60.0).ceil() as usize;
    let ego = simulate(ego0, ego_turn, steps);
    let obs = simulate(obs0, obs_turn, steps);
    let pair = TrackPair::new(ego, obs, 1.0).ok()?;
    let label = label_passing_with(&pair, &cfg.label).ok()?;
    if label.side == PassingSide::Undetermined {
        return None;
    }
    let clear = clearance_index(&pair, cfg.label.sensing_range);
    if clear + 1 < window_len {
        return None;
    }
    let end = if cfg.final_window {
        clear
    } else {
        let lo = window_len - 1;
        lo + ((end_u * (clear - lo + 1) as f64) as usize).min(clear - lo)
    };
    let start = end + 1 - window_len;

    let pos_noise = Normal::new(0.0, sigma_pos).ok()?;
    let h_noise = Normal::new(0.0, sigma_h).ok()?;
    let mut times = Vec::with_capacity(window_len);
    let mut features = Vec::with_capacity(window_len);
    for k in start..=end {
        let truth = pair.obs()[k];
        if (truth.pos - pair.ego()[k].pos).norm() > cfg.label.sensing_range {
            return None;
        }
        let fix = VesselState {
            pos: truth.pos + Vec2::new(pos_noise.sample(rng), pos_noise.sample(rng)),
            heading_deg: truth.heading_deg + h_noise.sample(rng).to_degrees(),
            ..truth
        };
        if let Some(f) = feature_vector(&pair.ego()[k], &fix) {
            times.push(k as f64);
            features.push(f);
        }
    }
    if features.is_empty() {
        return None;
    }
    Some(Generated {
        encounter: LabeledEncounter {
            encounter_id: id,
            times,
            features,
            label: label.side,
        },
        pair,
    })
}

pub(crate) fn generate_with_tracks(cfg: &DatasetConfig, seed: u64) -> Result<Vec<Generated>, ClassifierError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let want_left = cfg.n - cfg.n / 2;
    let want_right = cfg.n / 2;
    let (mut left, mut right) = (0, 0);
    let mut out = Vec::with_capacity(cfg.n);
    let budget = cfg.max_attempts_per_encounter.saturating_mul(cfg.n.max(1));
    let mut attempts = 0;
    while left < want_left || right < want_right {
        if attempts >= budget {
            return Err(ClassifierError::InfeasibleConfig(format!(
                "only {left} LEFT and {right} RIGHT encounters after {attempts} attempts"
            )));
        }
        attempts += 1;
        let Some(g) = sample_one(cfg, out.len() as u64, &mut rng) else {
            continue;
        };
        match g.encounter.label {
            PassingSide::Left if left < want_left => left += 1,
            PassingSide::Right if right < want_right => right += 1,
            _ => continue,
        }
        out.push(g);
    }
    Ok(out)
}

/// `cfg.n` labelled windows, split as evenly as possible between LEFT and
/// RIGHT (LEFT gets the odd one). Deterministic in `seed`.
pub fn generate_synthetic_dataset(cfg: &DatasetConfig, seed: u64) -> Result<Vec<LabeledEncounter>, ClassifierError> {
    Ok(generate_with_tracks(cfg, seed)?
        .into_iter()
        .map(|g| g.encounter)
        .collect())
}

const HEADER: [&str; 10] = [
    "encounter_id",
    "t",
    "dx",
    "dy",
    "range",
    "sin_psi",
    "cos_psi",
    "sin_los",
    "cos_los",
    "label",
];

/// One row per fix.
pub fn write_dataset_csv<W: Write>(data: &[LabeledEncounter], out: W) -> Result<(), ClassifierError> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| ClassifierError::Io(e.into());
    w.write_record(HEADER).map_err(to_io)?;
    for e in data {
        for (t, f) in e.times.iter().zip(&e.features) {
            let mut row = Vec::with_capacity(HEADER.len());
            row.push(e.encounter_id.to_string());
            row.push(t.to_string());
            row.extend(f.iter().map(|v| v.to_string()));
            row.push(e.label.as_str().to_string());
            w.write_record(&row).map_err(to_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Groups consecutive rows with the same id into encounters.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<LabeledEncounter>, ClassifierError> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |line: usize, m: String| ClassifierError::MalformedDataset(format!("row {line}: {m}"));
    let headers = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if headers.iter().map(str::trim).ne(HEADER) {
        return Err(ClassifierError::MalformedDataset(format!(
            "expected header {}",
            HEADER.join(",")
        )));
    }
    let mut out: Vec<LabeledEncounter> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let num = |k: usize| -> Result<f64, ClassifierError> {
            let v: f64 = rec[k]
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("bad number `{}`", &rec[k])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(line, "non-finite value".into()))
            }
        };
        let id: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| bad(line, format!("bad id `{}`", &rec[0])))?;
        let t = num(1)?;
        let mut f = [0.0; FEATURES];
        for (k, v) in f.iter_mut().enumerate() {
            *v = num(2 + k)?;
        }
        let label: PassingSide = rec[9].parse().map_err(|e: String| bad(line, e))?;
        if label == PassingSide::Undetermined {
            return Err(bad(line, "training labels must be LEFT or RIGHT".into()));
        }
        match out.last_mut() {
            Some(e) if e.encounter_id == id => {
                if e.label != label {
                    return Err(bad(line, format!("label changes within encounter {id}")));
                }
                if !(t > *e.times.last().unwrap()) {
                    return Err(bad(line, "timestamps must increase within an encounter".into()));
                }
                e.times.push(t);
                e.features.push(f);
            }
            _ => out.push(LabeledEncounter {
                encounter_id: id,
                times: vec![t],
                features: vec![f],
                label,
            }),
        }
    }
    Ok(out)
}
