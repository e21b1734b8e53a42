//! Text format for a single planning snapshot.
//!
//! ```text
//! format_version = 1
//! ego = x=-30 y=0 heading=90 speed=2.5 length=2.5 beam=1.4
//! ego_limits = sensing_range=100 v_max=2.5 turn_rate_max=45 accel_max=1
//! obstacle = id=1 x=0 y=20 heading=225 speed=3 length=4 beam=1.5 sigma_x=0.3 sigma_y=0.3 sigma_theta=0.3 sigma_v=0.5
//! ```
//!
//! Headings are degrees clockwise from north, positions meters east/north.
//! An obstacle may carry a classifier belief as `p_l=0.8`. `#` starts a
//! comment.

use std::fmt::Write as _;

use thiserror::Error;

use asvplan_core::planner::{ObstacleView, Snapshot};
use asvplan_core::{EgoSpec, NoiseModel, PassingBelief, Vec2, VesselState};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unsupported snapshot format version {0}")]
    Version(u32),
    #[error("snapshot has no ego line")]
    MissingEgo,
}

pub fn parse_snapshot(text: &str) -> Result<Snapshot, SnapshotError> {
    let mut ego = None;
    let mut spec = EgoSpec::default();
    let mut obstacles = Vec::new();
    let mut version = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let syn = |msg: String| SnapshotError::Syntax { line, msg };
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| syn("expected `key = value`".into()))?;
        let fields = || -> Result<Vec<(&str, f64)>, SnapshotError> {
            value
                .split_whitespace()
                .map(|kv| {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| syn(format!("expected `name=value`, found `{kv}`")))?;
                    let x: f64 = v.parse().map_err(|_| syn(format!("bad number `{v}`")))?;
                    if !x.is_finite() {
                        return Err(syn(format!("non-finite number `{v}`")));
                    }
                    Ok((k, x))
                })
                .collect()
        };
        match key.trim() {
            "format_version" => {
                let v: u32 = value
                    .trim()
                    .parse()
                    .map_err(|_| syn(format!("bad version `{}`", value.trim())))?;
                if v != SNAPSHOT_FORMAT_VERSION {
                    return Err(SnapshotError::Version(v));
                }
                version = Some(v);
            }
            "ego" => {
                let mut s = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 0.0).with_dims(spec.length, spec.beam);
                for (k, x) in fields()? {
                    match k {
                        "x" => s.pos.x = x,
                        "y" => s.pos.y = x,
                        "heading" => s.heading_deg = x,
                        "speed" => s.speed = x,
                        "length" => s.length = x,
                        "beam" => s.beam = x,
                        other => return Err(syn(format!("unknown ego field `{other}`"))),
                    }
                }
                if !(s.length > 0.0 && s.beam > 0.0 && s.speed >= 0.0) {
                    return Err(syn("ego needs positive dimensions and non-negative speed".into()));
                }
                ego = Some(s);
            }
            "ego_limits" => {
                for (k, x) in fields()? {
                    match k {
                        "sensing_range" => spec.sensing_range = x,
                        "v_max" => spec.v_max = x,
                        "turn_rate_max" => spec.turn_rate_max = x,
                        "accel_max" => spec.accel_max = x,
                        other => return Err(syn(format!("unknown ego_limits field `{other}`"))),
                    }
                }
                if !(spec.sensing_range > 0.0 && spec.v_max > 0.0 && spec.turn_rate_max > 0.0 && spec.accel_max > 0.0) {
                    return Err(syn("ego limits must be positive".into()));
                }
            }
            "obstacle" => {
                let mut s = VesselState::new(0, 0.0, Vec2::zeros(), 0.0, 0.0).with_dims(2.5, 1.0);
                let mut sig = [0.0; 4];
                let mut p_l = None;
                let mut seen_id = false;
                for (k, x) in fields()? {
                    match k {
                        "id" => {
                            if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
                                return Err(syn(format!("bad id `{x}`")));
                            }
                            s.id = x as u32;
                            seen_id = true;
                        }
                        "x" => s.pos.x = x,
                        "y" => s.pos.y = x,
                        "heading" => s.heading_deg = x,
                        "speed" => s.speed = x,
                        "length" => s.length = x,
                        "beam" => s.beam = x,
                        "sigma_x" => sig[0] = x,
                        "sigma_y" => sig[1] = x,
                        "sigma_theta" => sig[2] = x,
                        "sigma_v" => sig[3] = x,
                        "p_l" => p_l = Some(x),
                        other => return Err(syn(format!("unknown obstacle field `{other}`"))),
                    }
                }
                if !seen_id {
                    return Err(syn("obstacle needs an id".into()));
                }
                if !(s.length > 0.0 && s.beam > 0.0 && s.speed >= 0.0) {
                    return Err(syn(format!(
                        "obstacle {} needs positive dimensions and non-negative speed",
                        s.id
                    )));
                }
                let noise = NoiseModel::new(sig[0], sig[1], sig[2], sig[3]).map_err(|e| syn(e.to_string()))?;
                let mut view = ObstacleView::new(s, noise);
                if let Some(p) = p_l {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(syn(format!("p_l {p} outside [0, 1]")));
                    }
                    view.belief = Some(PassingBelief::from_left(p));
                }
                obstacles.push(view);
            }
            other => return Err(syn(format!("unknown key `{other}`"))),
        }
    }
    if version.is_none() {
        return Err(SnapshotError::Syntax {
            line: 0,
            msg: "missing format_version".into(),
        });
    }
    let ego = ego.ok_or(SnapshotError::MissingEgo)?;
    spec.length = ego.length;
    spec.beam = ego.beam;
    Ok(Snapshot { ego, spec, obstacles })
}

pub fn snapshot_to_text(s: &Snapshot) -> String {
    let mut out = String::new();
    let e = &s.ego;
    let _ = writeln!(out, "format_version = {SNAPSHOT_FORMAT_VERSION}");
    let _ = writeln!(
        out,
        "ego = x={} y={} heading={} speed={} length={} beam={}",
        e.pos.x, e.pos.y, e.heading_deg, e.speed, e.length, e.beam
    );
    let _ = writeln!(
        out,
        "ego_limits = sensing_range={} v_max={} turn_rate_max={} accel_max={}",
        s.spec.sensing_range, s.spec.v_max, s.spec.turn_rate_max, s.spec.accel_max
    );
    for o in &s.obstacles {
        let (st, n) = (&o.state, &o.noise);
        let _ = write!(
            out,
            "obstacle = id={} x={} y={} heading={} speed={} length={} beam={} sigma_x={} sigma_y={} sigma_theta={} sigma_v={}",
            st.id, st.pos.x, st.pos.y, st.heading_deg, st.speed, st.length, st.beam,
            n.sigma_x, n.sigma_y, n.sigma_theta, n.sigma_v
        );
        if let Some(b) = o.belief {
            let _ = write!(out, " p_l={}", b.p_l);
        }
        out.push('\n');
    }
    out
}
