use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use asvplan_core::classifier::{
    evaluate, generate_synthetic_dataset, load_weights, lstm_train, lstm_train_from, read_dataset_csv, weights_to_json,
    BinaryMetrics, ClassifierError, DatasetConfig, LabeledEncounter, TrainConfig,
};
use asvplan_core::planner::{gain_field, Action, ConfigError, SPEED_STEPS};
use asvplan_core::simulator::{
    kodomari_config, kodomari_dims, monte_carlo, read_ais_csv, replay_accident, run_scenario, write_episodes_csv,
    write_metrics_csv, write_summary_csv, BatchSpec, BehaviorKind, BeliefSource, EpisodeLog, Outcome, ReplayMode,
    SimConfig, VesselDims,
};
use asvplan_core::{substream, ModelWeights, PlannerConfig, Scenario, ShipDomain, Variant};

use crate::manifest::{revision, RunManifest};
use crate::snapshot::parse_snapshot;
use crate::svg::{self, Path as SvgPath, Series};
use crate::{
    data, Cli, Command, ReplayKind, EXIT_DATAERR, EXIT_IOERR, EXIT_OK, EXIT_SOFTWARE, EXIT_UNSAFE, EXIT_USAGE,
    THREADS_ENV,
};

/// Exit status of an episode that ran out of time without incident.
pub const EXIT_TIMEOUT: u8 = 3;

/// F1 of the classifier on recorded AIS traffic, quoted in training and
/// evaluation reports for comparison with the synthetic-data score.
pub const REFERENCE_F1: f64 = 0.9256;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::BadInput(_) => EXIT_DATAERR,
            CliError::Diverged(_) => EXIT_SOFTWARE,
            CliError::Output { .. } => EXIT_IOERR,
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::DivergedLoss { .. } => CliError::Diverged(e.to_string()),
            other => CliError::BadInput(other.to_string()),
        }
    }
}

/// What a command reports back for the manifest.
struct Report {
    outcome: String,
    exit: u8,
    details: serde_json::Value,
}

/// Writes into the output directory and remembers what was written.
struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn put(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Output { path, source })?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn put_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|source| CliError::Output {
            path: self.dir.join(name),
            source,
        })?;
        self.put(name, buf)
    }
}

fn threads_from_env() -> Result<usize, CliError> {
    let auto = || std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(auto()),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(auto()),
            Ok(n) => Ok(n),
            Err(_) => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a non-negative integer, found `{v}`"
            ))),
        },
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn planner_config(cli: &Cli) -> Result<Option<PlannerConfig>, CliError> {
    let Some(path) = &cli.config else { return Ok(None) };
    let text = read_text(path)?;
    PlannerConfig::parse(&text)
        .map(Some)
        .map_err(|e: ConfigError| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn weights(cli: &Cli) -> Result<ModelWeights, CliError> {
    match &cli.weights {
        Some(p) => load_weights(p).map_err(|e| CliError::BadInput(format!("{}: {e}", p.display()))),
        None => Ok(data::bundled_weights()),
    }
}

fn outcome_exit(o: Outcome) -> u8 {
    match o {
        Outcome::Success => EXIT_OK,
        Outcome::Collision | Outcome::Nearmiss => EXIT_UNSAFE,
        Outcome::Timeout => EXIT_TIMEOUT,
    }
}

/// Runs one parsed command line and returns the process exit code. `args`
/// is recorded verbatim in the manifest.
pub fn run(cli: &Cli, args: Vec<String>) -> Result<u8, CliError> {
    let start = Instant::now();
    let threads = threads_from_env()?;
    if std::env::var_os(THREADS_ENV).is_some() {
        // Fails only if a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    fs::create_dir_all(&cli.out).map_err(|source| CliError::Output {
        path: cli.out.clone(),
        source,
    })?;
    let mut out = OutDir {
        dir: cli.out.clone(),
        written: Vec::new(),
    };
    let result = match &cli.command {
        Command::Simulate { scenario } => simulate(cli, scenario, &mut out),
        Command::Batch { spec, preset } => batch(cli, spec.as_deref(), preset, threads, &mut out),
        Command::Train {
            dataset,
            samples,
            test_samples,
            epochs,
            hidden,
            batch_size,
            lr,
            resume,
        } => {
            let mut tc = TrainConfig::default();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            tc.hidden = hidden.unwrap_or(tc.hidden);
            tc.batch_size = batch_size.unwrap_or(tc.batch_size);
            tc.lr = lr.unwrap_or(tc.lr);
            train(
                cli,
                dataset.as_deref(),
                *samples,
                *test_samples,
                &tc,
                resume.as_deref(),
                &mut out,
            )
        }
        Command::Eval { dataset, samples } => eval(cli, dataset.as_deref(), *samples, &mut out),
        Command::Replay {
            ais,
            ego_id,
            mode,
            dims,
        } => replay(cli, ais.as_deref(), *ego_id, *mode, dims, &mut out),
        Command::Gainfield { snapshot, speed_step } => gainfield(cli, snapshot, *speed_step, &mut out),
    };
    let (report, err) = match result {
        Ok(r) => (r, None),
        Err(e) => (
            Report {
                outcome: "ERROR".into(),
                exit: e.exit_code(),
                details: json!({ "error": e.to_string() }),
            },
            Some(e),
        ),
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        args,
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        seed: cli.seed.unwrap_or(0),
        revision: revision(),
        out_dir: cli.out.display().to_string(),
        threads,
        wall_clock_s: start.elapsed().as_secs_f64(),
        outcome: report.outcome,
        exit_code: report.exit,
        outputs: out.written.clone(),
        details: report.details,
    };
    manifest.write(&cli.out).map_err(|source| CliError::Output {
        path: cli.out.clone(),
        source,
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(report.exit),
    }
}

/// Minimum center distance from the ego to any obstacle, per step.
fn separation_series(log: &EpisodeLog) -> Vec<(f64, f64)> {
    log.steps
        .iter()
        .filter_map(|s| {
            s.obstacles
                .iter()
                .map(|o| (o.pos - s.ego.pos).norm())
                .min_by(f64::total_cmp)
                .map(|d| (s.t, d))
        })
        .collect()
}

fn vessel_paths(log: &EpisodeLog, ego_label: &str, ego_color: &str, cooperative: impl Fn(u32) -> bool) -> Vec<SvgPath> {
    let mut paths = vec![SvgPath {
        label: ego_label.to_string(),
        color: ego_color.to_string(),
        points: log.steps.iter().map(|s| (s.ego.pos.x, s.ego.pos.y)).collect(),
        is_ego: true,
    }];
    let ids: Vec<u32> = log
        .steps
        .first()
        .map(|s| s.obstacles.iter().map(|o| o.id).collect())
        .unwrap_or_default();
    for id in ids {
        let points = log
            .steps
            .iter()
            .filter_map(|s| s.obstacles.iter().find(|o| o.id == id).map(|o| (o.pos.x, o.pos.y)))
            .collect();
        paths.push(SvgPath {
            label: format!("vessel {id}"),
            color: if cooperative(id) { svg::CYAN } else { svg::GRAY }.to_string(),
            points,
            is_ego: false,
        });
    }
    paths
}

fn simulate(cli: &Cli, path: &Path, out: &mut OutDir) -> Result<Report, CliError> {
    let mut sc =
        Scenario::parse(&read_text(path)?).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    let variant = cli.variant.unwrap_or(Variant::MoaLstm);
    let cfg = SimConfig {
        planner: planner_config(cli)?.unwrap_or_default().with_variant(variant),
        ..SimConfig::default()
    };
    let w = if variant.uses_classifier() {
        Some(weights(cli)?)
    } else {
        None
    };
    let log = run_scenario(&sc, variant, &cfg, w.as_ref());
    let m = log.metrics();

    out.put_with("episode.csv", |buf| log.write_csv(buf))?;
    let mut metrics =
        String::from("variant,outcome,success,nearmiss_count,min_cpa,traveled,encounters,mean_in_range\n");
    let _ = writeln!(
        metrics,
        "{},{},{},{},{},{},{},{}",
        variant, m.outcome, m.success as u8, m.nearmiss_count, m.min_cpa, m.traveled, m.encounters, m.mean_in_range
    );
    out.put("metrics.csv", metrics)?;
    let coop = |id: u32| {
        sc.obstacles
            .iter()
            .any(|o| o.id == id && o.behavior != BehaviorKind::Cv)
    };
    let paths = vessel_paths(&log, variant.as_str(), svg::variant_color(variant.as_str()), coop);
    let title = format!("{} | {} | seed {}", variant, m.outcome, sc.seed);
    out.put(
        "trajectory.svg",
        svg::trajectory(&title, &paths, Some((sc.ego_goal.x, sc.ego_goal.y))),
    )?;
    Ok(Report {
        outcome: m.outcome.to_string(),
        exit: outcome_exit(m.outcome),
        details: json!({
            "variant": variant.as_str(),
            "scenario_seed": sc.seed,
            "min_cpa": m.min_cpa,
            "nearmiss_count": m.nearmiss_count,
            "traveled": m.traveled,
            "planner_ms_mean": m.planner_ms_mean,
            "planner_ms_std": m.planner_ms_std,
        }),
    })
}

fn batch(
    cli: &Cli,
    spec_path: Option<&Path>,
    preset: &str,
    threads: usize,
    out: &mut OutDir,
) -> Result<Report, CliError> {
    let mut spec = match spec_path {
        Some(p) => BatchSpec::parse(&read_text(p)?).map_err(|e| CliError::BadInput(format!("{}: {e}", p.display())))?,
        None => BatchSpec::preset(preset, 0)
            .ok_or_else(|| CliError::Usage(format!("unknown preset `{preset}` (expected smoke or full)")))?,
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(v) = cli.variant {
        spec.variants = vec![v];
    }
    let cfg = SimConfig {
        planner: planner_config(cli)?.unwrap_or_default(),
        ..SimConfig::default()
    };
    let w = if spec.variants.iter().any(Variant::uses_classifier) {
        Some(weights(cli)?)
    } else {
        None
    };
    let started = Instant::now();
    let res = monte_carlo(&spec, &cfg, w.as_ref(), threads).map_err(|e| CliError::BadInput(e.to_string()))?;
    let elapsed = started.elapsed().as_secs_f64();

    out.put_with("metrics.csv", |b| write_metrics_csv(&res, b))?;
    out.put_with("summary.csv", |b| write_summary_csv(&res, b))?;
    out.put_with("episodes.csv", |b| write_episodes_csv(&res, b))?;

    let mut categories = Vec::new();
    for &n in &spec.bins {
        for &mix in &spec.mixes {
            for &noise in &spec.noise {
                categories.push((n, mix, noise));
            }
        }
    }
    let labels: Vec<String> = categories
        .iter()
        .map(|(n, mix, noise)| format!("{n} {mix} {}", if *noise { "noise" } else { "clean" }))
        .collect();
    let series: Vec<(String, String, Vec<f64>)> = spec
        .variants
        .iter()
        .map(|&v| {
            let vals = categories
                .iter()
                .map(|&(n, mix, noise)| res.row(v, n, mix, noise).map_or(0.0, |r| r.success_rate))
                .collect();
            (v.to_string(), svg::variant_color(v.as_str()).to_string(), vals)
        })
        .collect();
    out.put(
        "comparison.svg",
        svg::grouped_bars(
            &format!("success rate, {} scenarios per cell", spec.scenarios_per_bin),
            "success rate",
            &labels,
            &series,
        ),
    )?;
    let rows: Vec<serde_json::Value> = res
        .rows
        .iter()
        .map(|r| {
            json!({
                "variant": r.cell.variant.as_str(),
                "n_obstacles": r.cell.n,
                "mix": r.cell.mix.as_str(),
                "noise": r.cell.noise,
                "success_rate": r.success_rate,
            })
        })
        .collect();
    Ok(Report {
        outcome: "COMPLETED".into(),
        exit: EXIT_OK,
        details: json!({
            "episodes": res.episodes.len(),
            "batch_seconds": elapsed,
            "worker_threads": threads,
            "available_parallelism": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            "rows": rows,
        }),
    })
}

fn metrics_json(m: &BinaryMetrics) -> serde_json::Value {
    json!({
        "n": m.total(),
        "tp": m.tp,
        "fp": m.fp,
        "tn": m.tn,
        "fn": m.fn_,
        "accuracy": m.accuracy,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
    })
}

/// Dataset seeds derived from the run seed; `eval` reuses the held-out one
/// so that `train` and `eval` with the same seed score the same encounters.
const TRAIN_DATA_STREAM: u64 = 1;
const TEST_DATA_STREAM: u64 = 2;
const TRAIN_STREAM: u64 = 3;

fn load_dataset(path: &Path) -> Result<Vec<LabeledEncounter>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    read_dataset_csv(io::BufReader::new(f)).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn generated(n: usize, seed: u64) -> Result<Vec<LabeledEncounter>, CliError> {
    Ok(generate_synthetic_dataset(
        &DatasetConfig {
            n,
            ..DatasetConfig::default()
        },
        seed,
    )?)
}

fn train(
    cli: &Cli,
    dataset: Option<&Path>,
    samples: usize,
    test_samples: usize,
    tc: &TrainConfig,
    resume: Option<&Path>,
    out: &mut OutDir,
) -> Result<Report, CliError> {
    let seed = cli.seed.unwrap_or(0);
    let data = match dataset {
        Some(p) => load_dataset(p)?,
        None => generated(samples, substream(seed, TRAIN_DATA_STREAM))?,
    };
    let test = if test_samples > 0 {
        generated(test_samples, substream(seed, TEST_DATA_STREAM))?
    } else {
        Vec::new()
    };
    let (w, rep) = match resume {
        Some(p) => {
            let init = load_weights(p).map_err(|e| CliError::BadInput(format!("{}: {e}", p.display())))?;
            if init.hidden() != tc.hidden {
                return Err(CliError::BadInput(format!(
                    "{}: hidden size {} does not match --hidden {}",
                    p.display(),
                    init.hidden(),
                    tc.hidden
                )));
            }
            lstm_train_from(init, &data, tc, substream(seed, TRAIN_STREAM))?
        }
        None => lstm_train(&data, tc, substream(seed, TRAIN_STREAM))?,
    };
    let m = evaluate(&w, &test);
    out.put("weights.json", weights_to_json(&w))?;
    let epochs: Vec<serde_json::Value> = rep
        .epochs
        .iter()
        .map(|e| json!({ "epoch": e.epoch, "lr": e.lr, "train_loss": e.train_loss, "val_loss": e.val_loss, "val_f1": e.val_f1 }))
        .collect();
    let report = json!({
        "train_size": rep.train_size,
        "val_size": rep.val_size,
        "hidden": tc.hidden,
        "epochs": tc.epochs,
        "batch_size": tc.batch_size,
        "lr": tc.lr,
        "history": epochs,
        "test": metrics_json(&m),
        "reference_f1": REFERENCE_F1,
    });
    out.put(
        "report.json",
        serde_json::to_string_pretty(&report).expect("json") + "\n",
    )?;
    if !rep.epochs.is_empty() {
        let line = |label: &str, color: &str, pts: Vec<(f64, f64)>| Series {
            label: label.into(),
            color: color.into(),
            dashed: false,
            points: pts,
        };
        let mut series = vec![line(
            "train loss",
            "#1f77b4",
            rep.epochs.iter().map(|e| (e.epoch as f64, e.train_loss)).collect(),
        )];
        let val: Vec<(f64, f64)> = rep
            .epochs
            .iter()
            .filter_map(|e| e.val_loss.map(|v| (e.epoch as f64, v)))
            .collect();
        if !val.is_empty() {
            series.push(line("validation loss", "#ff7f0e", val));
        }
        out.put(
            "training.svg",
            svg::lines("classifier training", "epoch", "cross-entropy", &series, &[]),
        )?;
    }
    Ok(Report {
        outcome: "TRAINED".into(),
        exit: EXIT_OK,
        details: json!({ "test_f1": m.f1, "reference_f1": REFERENCE_F1, "train_size": rep.train_size }),
    })
}

fn eval(cli: &Cli, dataset: Option<&Path>, samples: usize, out: &mut OutDir) -> Result<Report, CliError> {
    let w = weights(cli)?;
    let data = match dataset {
        Some(p) => load_dataset(p)?,
        None => generated(samples, substream(cli.seed.unwrap_or(0), TEST_DATA_STREAM))?,
    };
    let started = Instant::now();
    let m = evaluate(&w, &data);
    let per_window_ms = started.elapsed().as_secs_f64() * 1e3 / data.len().max(1) as f64;
    let report = json!({ "test": metrics_json(&m), "reference_f1": REFERENCE_F1 });
    out.put(
        "report.json",
        serde_json::to_string_pretty(&report).expect("json") + "\n",
    )?;
    Ok(Report {
        outcome: "EVALUATED".into(),
        exit: EXIT_OK,
        details: json!({ "f1": m.f1, "reference_f1": REFERENCE_F1, "inference_ms_per_window": per_window_ms }),
    })
}

fn parse_dims(specs: &[String]) -> Result<Vec<VesselDims>, CliError> {
    specs
        .iter()
        .map(|s| {
            let bad = || CliError::Usage(format!("--dims expects `id:length:beam`, found `{s}`"));
            let parts: Vec<&str> = s.split(':').collect();
            let [id, l, b] = parts.as_slice() else {
                return Err(bad());
            };
            let id: u32 = id.parse().map_err(|_| bad())?;
            let length: f64 = l.parse().map_err(|_| bad())?;
            let beam: f64 = b.parse().map_err(|_| bad())?;
            if !(length > 0.0 && beam > 0.0 && length.is_finite() && beam.is_finite()) {
                return Err(bad());
            }
            Ok(VesselDims { id, length, beam })
        })
        .collect()
}

fn replay(
    cli: &Cli,
    ais: Option<&Path>,
    ego_id: u32,
    kind: ReplayKind,
    dims: &[String],
    out: &mut OutDir,
) -> Result<Report, CliError> {
    let records = match ais {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| CliError::BadInput(format!("{}: {e}", p.display())))?;
            read_ais_csv(io::BufReader::new(f)).map_err(|e| CliError::BadInput(format!("{}: {e}", p.display())))?
        }
        None => read_ais_csv(data::KODOMARI_CSV.as_bytes()).expect("bundled AIS file is valid"),
    };
    let mut cfg = kodomari_config();
    if !dims.is_empty() {
        cfg.dims = parse_dims(dims)?;
    } else if cfg.dims.is_empty() {
        cfg.dims = kodomari_dims();
    }
    if let Some(p) = planner_config(cli)? {
        cfg.sim.planner = p;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let variant = cli.variant.unwrap_or(Variant::MoaLstm);
    let w = if variant.uses_classifier() && kind != ReplayKind::Historical {
        Some(weights(cli)?)
    } else {
        None
    };
    let mode = match kind {
        ReplayKind::Historical => ReplayMode::Historical,
        ReplayKind::Planned => ReplayMode::Planned {
            variant,
            belief: BeliefSource::Model,
        },
        ReplayKind::Randomized => ReplayMode::Planned {
            variant,
            belief: BeliefSource::Randomized,
        },
    };
    let bad = |e: asvplan_core::simulator::ReplayError| CliError::BadInput(e.to_string());
    let log = replay_accident(&records, ego_id, mode, &cfg, w.as_ref()).map_err(bad)?;
    let historical = match kind {
        ReplayKind::Historical => None,
        _ => Some(replay_accident(&records, ego_id, ReplayMode::Historical, &cfg, None).map_err(bad)?),
    };

    let ego_len = cfg.dims.iter().find(|d| d.id == ego_id).map_or(0.0, |d| d.length);
    let obs_len = cfg
        .dims
        .iter()
        .filter(|d| d.id != ego_id)
        .map(|d| d.length)
        .fold(0.0, f64::max);
    let domain = ShipDomain::from_lengths(
        ego_len,
        obs_len,
        cfg.sim.planner.collision_factor,
        cfg.sim.planner.risky_factor,
    );
    let sep = separation_series(&log);
    let min_sep = sep.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);

    out.put_with("episode.csv", |b| log.write_csv(b))?;
    let mut csv = String::from("t,separation_m\n");
    for (t, d) in &sep {
        let _ = writeln!(csv, "{t},{d}");
    }
    out.put("separation.csv", csv)?;

    let label = match kind {
        ReplayKind::Historical => "historical".to_string(),
        ReplayKind::Planned => variant.to_string(),
        ReplayKind::Randomized => format!("{variant} (random beliefs)"),
    };
    let color = match kind {
        ReplayKind::Historical => "#000000",
        _ => svg::variant_color(variant.as_str()),
    };
    let mut series = vec![Series {
        label: label.clone(),
        color: color.into(),
        dashed: false,
        points: sep,
    }];
    if let Some(h) = &historical {
        series.push(Series {
            label: "historical".into(),
            color: "#000000".into(),
            dashed: true,
            points: separation_series(h),
        });
    }
    let refs = [
        (
            "collision radius".to_string(),
            domain.collision_radius,
            "#d62728".to_string(),
        ),
        ("risky radius".to_string(), domain.risky_radius, "#ff7f0e".to_string()),
    ];
    out.put(
        "separation.svg",
        svg::lines(
            &format!("separation, {}", log.outcome),
            "time (s)",
            "separation (m)",
            &series,
            &refs,
        ),
    )?;
    let paths = vessel_paths(&log, &label, color, |_| false);
    out.put(
        "trajectory.svg",
        svg::trajectory(&format!("replay, ego {ego_id}"), &paths, None),
    )?;

    Ok(Report {
        outcome: log.outcome.to_string(),
        exit: outcome_exit(log.outcome),
        details: json!({
            "mode": format!("{kind:?}").to_lowercase(),
            "variant": variant.as_str(),
            "ego_id": ego_id,
            "min_separation_m": min_sep,
            "collision_radius_m": domain.collision_radius,
            "risky_radius_m": domain.risky_radius,
            "historical_outcome": historical.as_ref().map(|h| h.outcome.to_string()),
        }),
    })
}

fn gainfield(cli: &Cli, path: &Path, speed_step: u8, out: &mut OutDir) -> Result<Report, CliError> {
    if speed_step as usize >= SPEED_STEPS {
        return Err(CliError::Usage(format!("--speed-step must be below {SPEED_STEPS}")));
    }
    let snap = parse_snapshot(&read_text(path)?).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let variant = cli.variant.unwrap_or(Variant::MoaPlus);
    let cfg = planner_config(cli)?.unwrap_or_default().with_variant(variant);
    let seed = cli.seed.unwrap_or(0);
    let field = gain_field(&snap, &cfg, seed);
    let min_heading = field.min_heading(speed_step);

    let mut csv = String::from("heading_deg,speed_ratio,I_tilde\n");
    for (i, v) in field.values().iter().enumerate() {
        let a = Action::from_index(i);
        let _ = writeln!(csv, "{},{},{}", a.heading(), a.speed_ratio(), v);
    }
    out.put("gainfield.csv", csv)?;
    let value = |h: usize, k: usize| field.get(Action::new(h as u16, k as u8).expect("on grid"));
    out.put(
        "gainfield.svg",
        svg::polar_heatmap(
            &format!("information cost, {variant}, minimum at {min_heading} deg"),
            360,
            SPEED_STEPS,
            value,
            (!snap.obstacles.is_empty()).then_some(min_heading),
        ),
    )?;
    Ok(Report {
        outcome: "COMPUTED".into(),
        exit: EXIT_OK,
        details: json!({
            "variant": variant.as_str(),
            "speed_step": speed_step,
            "min_heading_deg": min_heading,
            "min_value": field.values().iter().copied().fold(f64::INFINITY, f64::min),
            "max_value": field.values().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }),
    })
}
