//! Monte-Carlo batches over obstacle count, traffic mix, noise and variant.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use super::episode::{run_scenario, MetricsRow, Outcome, SimConfig};
use super::scenario::{randomize_scenario, Mix};
use crate::classifier::ModelWeights;
use crate::planner::Variant;
use crate::substream;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid batch: {0}")]
    Invalid(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Which cells to run and how many scenarios per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub bins: Vec<usize>,
    pub mixes: Vec<Mix>,
    pub noise: Vec<bool>,
    pub variants: Vec<Variant>,
    pub scenarios_per_bin: usize,
    pub seed: u64,
    /// Fill the planner timing columns. Wall-clock numbers make the output
    /// differ between runs.
    pub timing: bool,
}

impl BatchSpec {
    /// Full grid, 100 scenarios per cell.
    pub fn full(seed: u64) -> Self {
        Self {
            bins: vec![10, 20, 30],
            mixes: vec![Mix::Mixed8020, Mix::NonCoopOnly],
            noise: vec![true, false],
            variants: Variant::ALL.to_vec(),
            scenarios_per_bin: 100,
            seed,
            timing: false,
        }
    }

    /// Full grid with 5 scenarios per cell.
    pub fn smoke(seed: u64) -> Self {
        Self {
            scenarios_per_bin: 5,
            ..Self::full(seed)
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "smoke" => Some(Self::smoke(seed)),
            "full" => Some(Self::full(seed)),
            _ => None,
        }
    }

    /// `key = value` lines over the smoke preset. Keys: `preset`, `bins`,
    /// `mixes`, `noise`, `variants` (comma lists), `scenarios_per_bin`,
    /// `seed`, `timing`.
    pub fn parse(text: &str) -> Result<Self, BatchError> {
        let mut spec = Self::smoke(0);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |msg: String| BatchError::Syntax { line, msg };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            let value = value.trim();
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            match key.trim() {
                "preset" => {
                    let seed = spec.seed;
                    spec = Self::preset(value, seed).ok_or_else(|| syntax(format!("unknown preset `{value}`")))?;
                }
                "bins" => {
                    spec.bins = list()
                        .map(|s| s.parse::<usize>().map_err(|e| syntax(e.to_string())))
                        .collect::<Result<_, _>>()?
                }
                "mixes" => {
                    spec.mixes = list()
                        .map(|s| s.parse::<Mix>().map_err(syntax))
                        .collect::<Result<_, _>>()?
                }
                "noise" => {
                    spec.noise = list()
                        .map(|s| match s {
                            "on" | "true" => Ok(true),
                            "off" | "false" => Ok(false),
                            _ => Err(syntax(format!("noise must be on or off, found `{s}`"))),
                        })
                        .collect::<Result<_, _>>()?
                }
                "variants" => {
                    spec.variants = list()
                        .map(|s| s.parse::<Variant>().map_err(syntax))
                        .collect::<Result<_, _>>()?
                }
                "scenarios_per_bin" => spec.scenarios_per_bin = value.parse().map_err(|e| syntax(format!("{e}")))?,
                "seed" => spec.seed = value.parse().map_err(|e| syntax(format!("{e}")))?,
                "timing" => spec.timing = value.parse().map_err(|e| syntax(format!("{e}")))?,
                other => return Err(syntax(format!("unknown key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BatchError> {
        if self.bins.is_empty() || self.mixes.is_empty() || self.noise.is_empty() || self.variants.is_empty() {
            return Err(BatchError::Invalid("every axis needs at least one value".into()));
        }
        if self.scenarios_per_bin == 0 {
            return Err(BatchError::Invalid("scenarios_per_bin must be positive".into()));
        }
        Ok(())
    }

    /// Every (cell, scenario index) pair in output order.
    fn jobs(&self) -> Vec<(Cell, usize)> {
        let mut out = Vec::new();
        for &n in &self.bins {
            for &mix in &self.mixes {
                for &noise in &self.noise {
                    for &variant in &self.variants {
                        for k in 0..self.scenarios_per_bin {
                            out.push((Cell { variant, n, mix, noise }, k));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Scenario seed shared by every variant, mix and noise setting of a bin.
pub fn scenario_seed(batch_seed: u64, n: usize, index: usize) -> u64 {
    substream(substream(batch_seed, n as u64), index as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub variant: Variant,
    pub n: usize,
    pub mix: Mix,
    pub noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub cell: Cell,
    pub index: usize,
    pub seed: u64,
    pub metrics: MetricsRow,
}

/// Aggregate of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub cell: Cell,
    pub episodes: usize,
    pub success_rate: f64,
    pub collisions: usize,
    pub timeouts: usize,
    pub nearmiss_total: usize,
    pub min_cpa_mean: f64,
    pub min_cpa_std: f64,
    pub traveled_mean: f64,
    pub traveled_std: f64,
    pub planner_ms_mean: Option<f64>,
    pub planner_ms_std: Option<f64>,
    /// Mean distinct obstacles met per episode.
    pub te: f64,
    /// Mean obstacles in sensing range per planning cycle.
    pub aet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub spec: BatchSpec,
    pub episodes: Vec<EpisodeResult>,
    pub rows: Vec<AggregateRow>,
}

impl BatchResult {
    pub fn row(&self, variant: Variant, n: usize, mix: Mix, noise: bool) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.cell == Cell { variant, n, mix, noise })
    }
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.clone().sum::<f64>() / n as f64;
    let v = xs.map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    (m, v.sqrt())
}

fn aggregate(cell: Cell, eps: &[&EpisodeResult], timing: bool) -> AggregateRow {
    let m = || eps.iter().map(|e| e.metrics);
    let count = |o: Outcome| m().filter(|r| r.outcome == o).count();
    let (cpa_m, cpa_s) = mean_std(m().map(|r| r.min_cpa));
    let (tr_m, tr_s) = mean_std(m().map(|r| r.traveled));
    let (ms_m, ms_s) = mean_std(m().map(|r| r.planner_ms_mean));
    let n = eps.len() as f64;
    AggregateRow {
        cell,
        episodes: eps.len(),
        success_rate: count(Outcome::Success) as f64 / n,
        collisions: count(Outcome::Collision),
        timeouts: count(Outcome::Timeout),
        nearmiss_total: m().map(|r| r.nearmiss_count).sum(),
        min_cpa_mean: cpa_m,
        min_cpa_std: cpa_s,
        traveled_mean: tr_m,
        traveled_std: tr_s,
        planner_ms_mean: timing.then_some(ms_m),
        planner_ms_std: timing.then_some(ms_s),
        te: m().map(|r| r.encounters as f64).sum::<f64>() / n,
        aet: m().map(|r| r.mean_in_range).sum::<f64>() / n,
    }
}

/// Runs every job of `spec` on a pool of `threads` workers. Results do not
/// depend on the thread count.
pub fn monte_carlo(
    spec: &BatchSpec,
    cfg: &SimConfig,
    weights: Option<&ModelWeights>,
    threads: usize,
) -> Result<BatchResult, BatchError> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let jobs = spec.jobs();
    let episodes: Vec<EpisodeResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, index)| {
                let seed = scenario_seed(spec.seed, cell.n, index);
                let sc = randomize_scenario(cell.n, cell.mix, cell.noise, seed);
                let log = run_scenario(&sc, cell.variant, cfg, weights);
                EpisodeResult {
                    cell,
                    index,
                    seed,
                    metrics: log.metrics(),
                }
            })
            .collect()
    });
    let mut rows = Vec::new();
    for chunk in episodes.chunk_by(|a, b| a.cell == b.cell) {
        let refs: Vec<&EpisodeResult> = chunk.iter().collect();
        rows.push(aggregate(chunk[0].cell, &refs, spec.timing));
    }
    Ok(BatchResult {
        spec: spec.clone(),
        episodes,
        rows,
    })
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn noise_str(noise: bool) -> &'static str {
    if noise {
        "on"
    } else {
        "off"
    }
}

/// One row per cell.
pub fn write_metrics_csv<W: Write>(res: &BatchResult, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| std::io::Error::other(e);
    w.write_record([
        "variant",
        "n_obstacles",
        "mix",
        "noise",
        "success_rate",
        "nearmiss_total",
        "min_cpa_mean",
        "traveled_mean",
        "planner_ms_mean",
        "planner_ms_std",
    ])
    .map_err(e)?;
    for r in &res.rows {
        w.write_record([
            r.cell.variant.to_string(),
            r.cell.n.to_string(),
            r.cell.mix.to_string(),
            noise_str(r.cell.noise).to_string(),
            num(r.success_rate),
            r.nearmiss_total.to_string(),
            num(r.min_cpa_mean),
            num(r.traveled_mean),
            opt_num(r.planner_ms_mean),
            opt_num(r.planner_ms_std),
        ])
        .map_err(e)?;
    }
    w.flush()
}

/// Comparison table: one row per (n, mix, noise) with the success rate of
/// each variant, then the encounter statistics of the first variant's runs.
pub fn write_summary_csv<W: Write>(res: &BatchResult, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| std::io::Error::other(e);
    let mut header = vec!["n_obstacles".to_string(), "mix".into(), "noise".into()];
    header.extend(res.spec.variants.iter().map(|v| format!("success_{v}")));
    header.extend(["TE".to_string(), "AET".to_string()]);
    w.write_record(&header).map_err(e)?;
    for &n in &res.spec.bins {
        for &mix in &res.spec.mixes {
            for &noise in &res.spec.noise {
                let mut rec = vec![n.to_string(), mix.to_string(), noise_str(noise).to_string()];
                let rows: Vec<Option<&AggregateRow>> =
                    res.spec.variants.iter().map(|&v| res.row(v, n, mix, noise)).collect();
                rec.extend(rows.iter().map(|r| r.map(|r| num(r.success_rate)).unwrap_or_default()));
                let first = rows.first().copied().flatten();
                rec.push(first.map(|r| num(r.te)).unwrap_or_default());
                rec.push(first.map(|r| num(r.aet)).unwrap_or_default());
                w.write_record(&rec).map_err(e)?;
            }
        }
    }
    w.flush()
}

/// Per-episode rows, for post-hoc analysis.
pub fn write_episodes_csv<W: Write>(res: &BatchResult, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| std::io::Error::other(e);
    w.write_record([
        "variant",
        "n_obstacles",
        "mix",
        "noise",
        "index",
        "seed",
        "outcome",
        "nearmiss_count",
        "min_cpa",
        "traveled",
        "encounters",
        "mean_in_range",
    ])
    .map_err(e)?;
    for ep in &res.episodes {
        let m = &ep.metrics;
        w.write_record([
            ep.cell.variant.to_string(),
            ep.cell.n.to_string(),
            ep.cell.mix.to_string(),
            noise_str(ep.cell.noise).to_string(),
            ep.index.to_string(),
            ep.seed.to_string(),
            m.outcome.to_string(),
            m.nearmiss_count.to_string(),
            num(m.min_cpa),
            num(m.traveled),
            m.encounters.to_string(),
            num(m.mean_in_range),
        ])
        .map_err(e)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BatchSpec {
        BatchSpec {
            bins: vec![3],
            mixes: vec![Mix::Mixed8020],
            noise: vec![true, false],
            variants: vec![Variant::Moa, Variant::Vo],
            scenarios_per_bin: 2,
            seed: 11,
            timing: false,
        }
    }

    fn quick() -> SimConfig {
        let mut c = SimConfig::default();
        c.planner.particles = 50;
        c
    }

    fn csv_bytes(res: &BatchResult) -> Vec<u8> {
        let mut buf = Vec::new();
        write_metrics_csv(res, &mut buf).unwrap();
        buf
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let a = monte_carlo(&tiny(), &quick(), None, 1).unwrap();
        let b = monte_carlo(&tiny(), &quick(), None, 3).unwrap();
        assert_eq!(csv_bytes(&a), csv_bytes(&b));
        assert_eq!(a.rows.len(), 4);
        assert!(a.rows.iter().all(|r| r.episodes == 2 && r.planner_ms_mean.is_none()));
    }

    #[test]
    fn seeds_are_matched_across_variants() {
        let res = monte_carlo(&tiny(), &quick(), None, 1).unwrap();
        let seeds = |v: Variant| -> Vec<u64> {
            res.episodes
                .iter()
                .filter(|e| e.cell.variant == v && e.cell.noise)
                .map(|e| e.seed)
                .collect()
        };
        assert_eq!(seeds(Variant::Moa), seeds(Variant::Vo));
    }

    #[test]
    fn aggregate_matches_hand_count() {
        let res = monte_carlo(&tiny(), &quick(), None, 1).unwrap();
        for r in &res.rows {
            let eps: Vec<&EpisodeResult> = res.episodes.iter().filter(|e| e.cell == r.cell).collect();
            let succ = eps.iter().filter(|e| e.metrics.success).count();
            assert_eq!(r.success_rate, succ as f64 / eps.len() as f64);
            let nm: usize = eps.iter().map(|e| e.metrics.nearmiss_count).sum();
            assert_eq!(r.nearmiss_total, nm);
        }
    }

    #[test]
    fn parse_spec() {
        let s =
            BatchSpec::parse("preset = full\nseed = 4\nbins = 10, 20\nnoise = off\nvariants = MOA, VO_PLUS\n").unwrap();
        assert_eq!(s.scenarios_per_bin, 100);
        assert_eq!(s.bins, vec![10, 20]);
        assert_eq!(s.noise, vec![false]);
        assert_eq!(s.variants, vec![Variant::Moa, Variant::VoPlus]);
        assert_eq!(s.seed, 4);
        assert!(matches!(
            BatchSpec::parse("bins = x"),
            Err(BatchError::Syntax { line: 1, .. })
        ));
        assert!(matches!(BatchSpec::parse("what = 1"), Err(BatchError::Syntax { .. })));
        assert!(matches!(
            BatchSpec::parse("scenarios_per_bin = 0"),
            Err(BatchError::Invalid(_))
        ));
    }

    #[test]
    fn summary_has_one_column_per_variant() {
        let res = monte_carlo(&tiny(), &quick(), None, 1).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n_obstacles,mix,noise,success_MOA,success_VO,TE,AET"
        );
        assert_eq!(lines.count(), 2);
    }
}
