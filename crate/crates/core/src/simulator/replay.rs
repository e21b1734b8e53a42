//! Accident replay from AIS-style tracks: the recorded obstacles follow their
//! tracks verbatim while the ego either repeats its own record or is
//! re-planned.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use super::episode::{
    run_episode, BeliefSource, EgoDriver, EpisodeLog, EpisodeSetup, ObstacleDriver, SimConfig, Track,
};
use super::kinematics::EgoSpec;
use crate::classifier::ModelWeights;
use crate::infogain::NoiseModel;
use crate::planner::{PlannerConfig, Variant};
use crate::topology::{heading_unit, VesselState};
use crate::Vec2;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("malformed AIS CSV at line {line}: {msg}")]
    MalformedCsv { line: usize, msg: String },
    #[error("vessel {0} not found in the records")]
    UnknownVessel(u32),
    #[error("no dimensions given for vessel {0}")]
    MissingDims(u32),
    #[error("track of vessel {0} has repeated or unordered timestamps")]
    BadTrack(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One AIS row in local ENU metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AisRecord {
    pub t: f64,
    pub id: u32,
    pub pos: Vec2,
    pub heading_deg: f64,
    pub speed: f64,
}

pub const AIS_CSV_HEADER: [&str; 6] = ["t_s", "id", "x_m", "y_m", "heading_deg", "speed_mps"];

/// Reads `t_s,id,x_m,y_m,heading_deg,speed_mps` rows. Positions must already
/// be in a local east/north frame; convert lat/lon first (an equirectangular
/// projection about the scene centre is adequate at these ranges).
pub fn read_ais_csv<R: Read>(input: R) -> Result<Vec<AisRecord>, ReplayError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| ReplayError::MalformedCsv {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.iter().ne(AIS_CSV_HEADER) {
        return Err(ReplayError::MalformedCsv {
            line: 1,
            msg: format!("expected header {}", AIS_CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let bad = |msg: String| ReplayError::MalformedCsv { line, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", rec.len())));
        }
        let f = |k: usize| -> Result<f64, ReplayError> {
            let v: f64 = rec[k]
                .parse()
                .map_err(|_| bad(format!("`{}` is not a number", &rec[k])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("non-finite {}", AIS_CSV_HEADER[k])))
            }
        };
        let id: u32 = rec[1]
            .parse()
            .map_err(|_| bad(format!("`{}` is not a vessel id", &rec[1])))?;
        let speed = f(5)?;
        if speed < 0.0 {
            return Err(bad("negative speed".into()));
        }
        out.push(AisRecord {
            t: f(0)?,
            id,
            pos: Vec2::new(f(2)?, f(3)?),
            heading_deg: f(4)?,
            speed,
        });
    }
    Ok(out)
}

pub fn write_ais_csv<W: Write>(records: &[AisRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| std::io::Error::other(e);
    w.write_record(AIS_CSV_HEADER).map_err(e)?;
    for r in records {
        w.write_record([
            format!("{}", r.t),
            r.id.to_string(),
            format!("{:.2}", r.pos.x),
            format!("{:.2}", r.pos.y),
            format!("{:.1}", r.heading_deg),
            format!("{:.2}", r.speed),
        ])
        .map_err(e)?;
    }
    w.flush()
}

/// Hull dimensions, which AIS position reports do not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselDims {
    pub id: u32,
    pub length: f64,
    pub beam: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayMode {
    /// The ego follows its own record.
    Historical,
    Planned {
        variant: Variant,
        belief: BeliefSource,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayConfig {
    pub sim: SimConfig,
    /// Limits of the ego when planned; its length and beam come from `dims`.
    pub ego_spec: EgoSpec,
    pub dims: Vec<VesselDims>,
    /// Broadcast noise applied to the recorded obstacles.
    pub noise: NoiseModel,
    pub seed: u64,
}

/// Splits records into per-vessel tracks sorted by time.
pub fn tracks_by_id(records: &[AisRecord], dims: &[VesselDims]) -> Result<BTreeMap<u32, Track>, ReplayError> {
    let mut by_id: BTreeMap<u32, Vec<VesselState>> = BTreeMap::new();
    for r in records {
        by_id
            .entry(r.id)
            .or_default()
            .push(VesselState::new(r.id, r.t, r.pos, r.heading_deg, r.speed));
    }
    let mut out = BTreeMap::new();
    for (id, mut states) in by_id {
        let d = dims.iter().find(|d| d.id == id).ok_or(ReplayError::MissingDims(id))?;
        states.sort_by(|a, b| a.t.total_cmp(&b.t));
        for s in &mut states {
            *s = s.with_dims(d.length, d.beam);
        }
        out.insert(id, Track::new(states).ok_or(ReplayError::BadTrack(id))?);
    }
    Ok(out)
}

/// Replays `records` with vessel `ego_id` as the ego. The planned ego starts
/// from its first record and heads for its last recorded position.
pub fn replay_accident(
    records: &[AisRecord],
    ego_id: u32,
    mode: ReplayMode,
    cfg: &ReplayConfig,
    weights: Option<&ModelWeights>,
) -> Result<EpisodeLog, ReplayError> {
    let mut tracks = tracks_by_id(records, &cfg.dims)?;
    let ego_track = tracks.remove(&ego_id).ok_or(ReplayError::UnknownVessel(ego_id))?;
    let first = ego_track.states()[0];
    let last = *ego_track.states().last().unwrap();
    let t0 = first.t;
    // Episodes start at t = 0.
    let shift = |tr: &Track| {
        Track::new(tr.states().iter().map(|s| VesselState { t: s.t - t0, ..*s }).collect()).expect("shift keeps order")
    };
    let ego_track = shift(&ego_track);
    let obstacles: Vec<(VesselState, ObstacleDriver, NoiseModel)> = tracks
        .values()
        .map(|tr| {
            let tr = shift(tr);
            (tr.at(0.0), ObstacleDriver::Scripted(tr), cfg.noise)
        })
        .collect();
    let ego_spec = EgoSpec {
        length: first.length,
        beam: first.beam,
        ..cfg.ego_spec
    };
    let mut sim = cfg.sim.clone();
    let ego_driver = match mode {
        ReplayMode::Historical => EgoDriver::Scripted(&ego_track),
        ReplayMode::Planned { variant, belief } => {
            sim.belief = belief;
            EgoDriver::Planner { variant, weights }
        }
    };
    let setup = EpisodeSetup {
        ego: VesselState { t: 0.0, ..first },
        ego_spec,
        ego_goal: last.pos,
        ego_driver,
        obstacles,
        seed: cfg.seed,
    };
    Ok(run_episode(&setup, &sim))
}

pub const KODOMARI_A: u32 = 1;
pub const KODOMARI_B: u32 = 2;

/// Recorded time at which both reconstructed tracks reach the same point.
const KODOMARI_IMPACT_S: f64 = 300.0;
const KODOMARI_DURATION_S: f64 = 600.0;

/// Straight-line reconstruction of the Cape Kodomari collision: vessel A
/// (12.6 m, 100 deg, 5.8 m/s) and vessel B (225 m, 225 deg, 5.7 m/s), both
/// holding course and speed into the same point. B sees A on its starboard
/// bow and is the give-way vessel.
pub fn kodomari_reconstruction() -> Vec<AisRecord> {
    let mut out = Vec::new();
    for (id, heading, speed) in [(KODOMARI_A, 100.0, 5.8), (KODOMARI_B, 225.0, 5.7)] {
        let v = heading_unit(heading) * speed;
        for k in 0..=KODOMARI_DURATION_S as usize {
            let t = k as f64;
            out.push(AisRecord {
                t,
                id,
                pos: v * (t - KODOMARI_IMPACT_S),
                heading_deg: heading,
                speed,
            });
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.id.cmp(&b.id)));
    out
}

pub fn kodomari_dims() -> Vec<VesselDims> {
    vec![
        VesselDims {
            id: KODOMARI_A,
            length: 12.6,
            beam: 3.8,
        },
        VesselDims {
            id: KODOMARI_B,
            length: 225.0,
            beam: 32.0,
        },
    ]
}

/// Ship-scale settings for the reconstruction. Distances and horizons grow
/// with the vessels; positions are shrunk by `classifier_scale` before they
/// reach the classifier so its inputs resemble the small-craft training data.
pub fn kodomari_config() -> ReplayConfig {
    let planner = PlannerConfig {
        rule_compliance: true,
        sensing_range: 3000.0,
        horizon: 300.0,
        nogo_horizon: 120.0,
        collision_factor: 0.5,
        risky_factor: 2.0,
        safety_margin: 10.0,
        tau_d: 500.0,
        ..PlannerConfig::default()
    };
    let sim = SimConfig {
        timeout_s: 900.0,
        goal_radius: 50.0,
        planner,
        classifier_scale: 100.0 / 3000.0,
        ..SimConfig::default()
    };
    ReplayConfig {
        sim,
        ego_spec: EgoSpec {
            v_max: 5.8,
            turn_rate_max: 10.0,
            accel_max: 0.5,
            ..EgoSpec::default()
        },
        dims: kodomari_dims(),
        noise: NoiseModel::new(10.0, 10.0, 0.05, 0.2).expect("valid noise"),
        seed: 2015,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::Outcome;

    #[test]
    fn csv_round_trip() {
        let recs = kodomari_reconstruction();
        let mut buf = Vec::new();
        write_ais_csv(&recs, &mut buf).unwrap();
        let back = read_ais_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.t, b.t);
            assert!((a.pos - b.pos).norm() < 0.01);
        }
    }

    #[test]
    fn malformed_rows() {
        let head = "t_s,id,x_m,y_m,heading_deg,speed_mps\n";
        for (body, line) in [
            ("0,1,0,0,90\n", 2),
            ("0,1,0,0,90,1\n1,x,0,0,90,1\n", 3),
            ("0,1,0,nan,90,1\n", 2),
            ("0,1,0,0,90,-1\n", 2),
        ] {
            match read_ais_csv(format!("{head}{body}").as_bytes()) {
                Err(ReplayError::MalformedCsv { line: l, .. }) => assert_eq!(l, line, "{body}"),
                other => panic!("{body}: {other:?}"),
            }
        }
        assert!(matches!(
            read_ais_csv("time,id\n0,1\n".as_bytes()),
            Err(ReplayError::MalformedCsv { line: 1, .. })
        ));
    }

    #[test]
    fn reconstruction_meets_at_impact() {
        let recs = kodomari_reconstruction();
        let at = |id: u32| {
            recs.iter()
                .find(|r| r.id == id && r.t == KODOMARI_IMPACT_S)
                .unwrap()
                .pos
        };
        assert!((at(KODOMARI_A) - at(KODOMARI_B)).norm() < 1e-9);
        // B has A on its starboard side.
        let a0 = recs.iter().find(|r| r.id == KODOMARI_A).unwrap();
        let b0 = recs.iter().find(|r| r.id == KODOMARI_B).unwrap();
        let rel = crate::topology::heading_delta(225.0, crate::topology::bearing_deg(&(a0.pos - b0.pos)));
        assert!(rel > 0.0 && rel < 90.0, "{rel}");
    }

    #[test]
    fn unknown_ego_and_missing_dims() {
        let recs = kodomari_reconstruction();
        let cfg = kodomari_config();
        assert!(matches!(
            replay_accident(&recs, 9, ReplayMode::Historical, &cfg, None),
            Err(ReplayError::UnknownVessel(9))
        ));
        let mut cfg2 = cfg.clone();
        cfg2.dims.pop();
        assert!(matches!(
            replay_accident(&recs, KODOMARI_A, ReplayMode::Historical, &cfg2, None),
            Err(ReplayError::MissingDims(KODOMARI_B))
        ));
    }

    #[test]
    fn historical_replay_collides() {
        let log = replay_accident(
            &kodomari_reconstruction(),
            KODOMARI_A,
            ReplayMode::Historical,
            &kodomari_config(),
            None,
        )
        .unwrap();
        assert_eq!(log.outcome, Outcome::Collision);
        assert!(log.decisions.is_empty());
    }
}
