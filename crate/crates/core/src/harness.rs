//! Experiment runner: seeded run matrices, trace files, aggregation, the
//! base-dimension sweep and linear-rate fits.
//!
//! Output layout for one experiment directory:
//!
//! * `{algorithm}__seed{seed}.csv`: the trace, header `evals,iter,best_f,wall_ms`
//! * `{algorithm}__seed{seed}.json`: [`RunMeta`] sidecar
//! * `summary__{mode}.json` and `summary__{mode}__{algorithm}.csv`: written by
//!   [`aggregate_dir`]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{self, BaselineParams, CgOptions};
use crate::error::{Error, Result};
use crate::solar::{solar_run, SolarConfig};
use crate::testbed::{InstanceSpec, ProblemInstance};
use crate::trace::Trace;

/// One algorithm entry of an experiment; `name` labels its output files and
/// defaults to the kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Solar {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        config: SolarConfig,
    },
    ZoGd {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BaselineParams,
    },
    ZoGdLinesearch {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BaselineParams,
    },
    MomentumThreePoint {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BaselineParams,
    },
    Cg {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BaselineParams,
        cg: CgOptions,
    },
    SimulatedAnnealing {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BaselineParams,
    },
    Msbh {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        params: BaselineParams,
    },
}

impl AlgorithmConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            AlgorithmConfig::Solar { .. } => "solar",
            AlgorithmConfig::ZoGd { .. } => "zo_gd",
            AlgorithmConfig::ZoGdLinesearch { .. } => "zo_gd_linesearch",
            AlgorithmConfig::MomentumThreePoint { .. } => "momentum_three_point",
            AlgorithmConfig::Cg { .. } => "cg",
            AlgorithmConfig::SimulatedAnnealing { .. } => "simulated_annealing",
            AlgorithmConfig::Msbh { .. } => "msbh",
        }
    }

    pub fn label(&self) -> String {
        let name = match self {
            AlgorithmConfig::Solar { name, .. }
            | AlgorithmConfig::ZoGd { name, .. }
            | AlgorithmConfig::ZoGdLinesearch { name, .. }
            | AlgorithmConfig::MomentumThreePoint { name, .. }
            | AlgorithmConfig::Cg { name, .. }
            | AlgorithmConfig::SimulatedAnnealing { name, .. }
            | AlgorithmConfig::Msbh { name, .. } => name,
        };
        name.clone().unwrap_or_else(|| self.kind().to_string())
    }

    fn params(&self) -> Option<&BaselineParams> {
        match self {
            AlgorithmConfig::Solar { .. } => None,
            AlgorithmConfig::ZoGd { params, .. }
            | AlgorithmConfig::ZoGdLinesearch { params, .. }
            | AlgorithmConfig::MomentumThreePoint { params, .. }
            | AlgorithmConfig::Cg { params, .. }
            | AlgorithmConfig::SimulatedAnnealing { params, .. }
            | AlgorithmConfig::Msbh { params, .. } => Some(params),
        }
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        let label = self.label();
        if label.is_empty()
            || !label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            || label.contains("__")
        {
            return Err(Error::InvalidConfig(format!("bad algorithm name `{label}`")));
        }
        match self {
            AlgorithmConfig::Solar { config, .. } => {
                config.validate(instance.dim())?;
                if config.variant.needs_gradient() && !instance.function.has_gradient() {
                    return Err(Error::GradientUnavailable);
                }
                Ok(())
            }
            AlgorithmConfig::Cg { params, .. } => {
                if !instance.function.has_gradient() {
                    return Err(Error::GradientUnavailable);
                }
                params.validate()
            }
            _ => self.params().expect("baseline").validate(),
        }
    }

    /// Runs once with the evaluation cap set to `budget`.
    pub fn run(&self, instance: &ProblemInstance, budget: u64, rng: &mut ChaCha8Rng) -> Result<RunResult> {
        if budget == 0 {
            return Err(Error::ZeroBudget);
        }
        let mut obj = instance.objective();
        let (bx, x0) = (&instance.bx, instance.x0.as_slice());
        let capped = |p: &BaselineParams| BaselineParams {
            max_evals: budget,
            ..p.clone()
        };
        let (trace, f_best, x_best) = match self {
            AlgorithmConfig::Solar { config, .. } => {
                let cfg = SolarConfig {
                    max_evals: Some(config.max_evals.map_or(budget, |m| m.min(budget))),
                    ..config.clone()
                };
                let r = solar_run(&mut obj, bx, x0, &cfg, rng)?;
                (r.trace, r.f_best, r.x_best)
            }
            other => {
                let p = capped(other.params().expect("baseline"));
                let r = match other {
                    AlgorithmConfig::ZoGd { .. } => baselines::zo_gd(&mut obj, bx, x0, &p, rng)?,
                    AlgorithmConfig::ZoGdLinesearch { .. } => {
                        baselines::zo_gd_linesearch(&mut obj, bx, x0, &p, rng)?
                    }
                    AlgorithmConfig::MomentumThreePoint { .. } => {
                        baselines::momentum_three_point(&mut obj, bx, x0, &p, rng)?
                    }
                    AlgorithmConfig::Cg { cg, .. } => baselines::cg(&mut obj, bx, x0, &p, cg, rng)?,
                    AlgorithmConfig::SimulatedAnnealing { .. } => {
                        baselines::simulated_annealing(&mut obj, bx, x0, &p, rng)?
                    }
                    AlgorithmConfig::Msbh { .. } => baselines::msbh(&mut obj, bx, x0, &p, rng)?,
                    AlgorithmConfig::Solar { .. } => unreachable!(),
                };
                (r.trace, r.f_best, r.x_best)
            }
        };
        Ok(RunResult {
            trace,
            f_best,
            x_best,
            evals: obj.oracle_calls(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub trace: Trace,
    pub f_best: f64,
    pub x_best: Vec<f64>,
    pub evals: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub algorithms: Vec<AlgorithmConfig>,
    pub seeds: Vec<u64>,
    /// Maximum oracle calls per run.
    pub budget: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Trace thinning stride in evaluations; also the aggregation grid step.
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Concurrent runs; `None` uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_stride() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Checks the config and builds its instance.
    pub fn validate(&self) -> Result<ProblemInstance> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if self.budget == 0 {
            return Err(Error::ZeroBudget);
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms listed".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::InvalidConfig("duplicate seeds".into()));
        }
        let instance = self.instance.build()?;
        let mut labels = BTreeSet::new();
        for alg in &self.algorithms {
            alg.validate(&instance)?;
            if !labels.insert(alg.label()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate algorithm name `{}`",
                    alg.label()
                )));
            }
        }
        Ok(instance)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the rng stream for `seed` under `master`: the first eight bytes
/// (little endian) of SHA-256 over both values' little-endian bytes.
pub fn stream_seed(master: u64, seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn stream_rng(master: u64, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, seed))
}

/// Sidecar metadata written next to every trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algorithm: String,
    pub kind: String,
    pub instance: String,
    pub seed: u64,
    pub master_seed: u64,
    pub stream_seed: u64,
    pub budget: u64,
    pub stride: u64,
    pub f0: f64,
    pub f_star: Option<f64>,
    pub f_best: f64,
    pub final_evals: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub meta: RunMeta,
    pub trace: Trace,
    pub x_best: Vec<f64>,
}

pub fn trace_file_stem(algorithm: &str, seed: u64) -> String {
    format!("{algorithm}__seed{seed}")
}

/// Runs every (algorithm, seed) pair in memory, in parallel. Output order is
/// algorithm-major, then seed order, regardless of scheduling.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    let instance = cfg.validate()?;
    let hash = cfg.hash();
    let f0 = instance.f0();
    let jobs: Vec<(&AlgorithmConfig, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| cfg.seeds.iter().map(move |s| (a, *s)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(alg, seed)| {
                let stream = stream_seed(cfg.master_seed, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(stream);
                let r = alg.run(&instance, cfg.budget, &mut rng)?;
                info!(
                    "{} seed {seed}: f_best = {} after {} evals",
                    alg.label(),
                    r.f_best,
                    r.evals
                );
                Ok(RunOutput {
                    meta: RunMeta {
                        algorithm: alg.label(),
                        kind: alg.kind().to_string(),
                        instance: instance.name.clone(),
                        seed,
                        master_seed: cfg.master_seed,
                        stream_seed: stream,
                        budget: cfg.budget,
                        stride: cfg.stride,
                        f0,
                        f_star: instance.f_star,
                        f_best: r.f_best,
                        final_evals: r.evals,
                        config_hash: hash.clone(),
                        config: cfg.clone(),
                    },
                    trace: r.trace.thinned(cfg.stride),
                    x_best: r.x_best,
                })
            })
            .collect()
    })
}

/// Writes the trace CSV and sidecar JSON of each run into `dir`.
pub fn write_outputs(dir: &Path, runs: &[RunOutput]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(runs.len());
    for run in runs {
        let stem = trace_file_stem(&run.meta.algorithm, run.meta.seed);
        let csv = dir.join(format!("{stem}.csv"));
        fs::write(&csv, run.trace.to_csv())?;
        fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&run.meta)?,
        )?;
        written.push(csv);
    }
    Ok(written)
}

/// [`execute`] followed by [`write_outputs`] into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let runs = execute(cfg)?;
    write_outputs(&cfg.output_dir, &runs)
}

/// A trace with the labels aggregation needs.
#[derive(Clone, Debug)]
pub struct LabeledTrace {
    pub algorithm: String,
    pub instance: String,
    pub seed: u64,
    pub trace: Trace,
}

impl From<&RunOutput> for LabeledTrace {
    fn from(run: &RunOutput) -> Self {
        Self {
            algorithm: run.meta.algorithm.clone(),
            instance: run.meta.instance.clone(),
            seed: run.meta.seed,
            trace: run.trace.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Mean plus or minus one population standard deviation.
    Stddev,
    /// Curves of the seeds with the best and worst final values.
    Minmax,
}

impl std::str::FromStr for AggregateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stddev" => Ok(Self::Stddev),
            "minmax" => Ok(Self::Minmax),
            _ => Err(Error::InvalidConfig(format!("unknown aggregate mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFinal {
    pub seed: u64,
    pub f_best: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: String,
    pub instance: String,
    pub mode: AggregateMode,
    pub evals: Vec<u64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub finals: Vec<SeedFinal>,
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("evals,mean,lower,upper\n");
        for i in 0..self.evals.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.evals[i], self.mean[i], self.lower[i], self.upper[i]
            ));
        }
        s
    }
}

/// Resamples the traces onto `0, stride, 2*stride, ...` up to the largest
/// final eval count and builds the mean and shadow curves.
pub fn aggregate(traces: &[LabeledTrace], mode: AggregateMode, stride: u64) -> Result<Summary> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidConfig("no traces to aggregate".into()))?;
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be positive".into()));
    }
    for t in traces {
        if t.instance != first.instance {
            return Err(Error::MixedInstances(first.instance.clone(), t.instance.clone()));
        }
        if t.algorithm != first.algorithm {
            return Err(Error::MixedAlgorithms(first.algorithm.clone(), t.algorithm.clone()));
        }
        if t.trace.is_empty() {
            return Err(Error::MalformedTrace(format!("empty trace for seed {}", t.seed)));
        }
    }
    // canonical order so the result does not depend on the input order
    let mut sorted: Vec<&LabeledTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| {
        a.seed
            .cmp(&b.seed)
            .then_with(|| a.trace.payload_csv().cmp(&b.trace.payload_csv()))
    });

    let max_evals = sorted
        .iter()
        .map(|t| t.trace.last().expect("non-empty").evals)
        .max()
        .expect("non-empty");
    let evals: Vec<u64> = (0..=max_evals.div_ceil(stride)).map(|k| k * stride).collect();
    let curves: Vec<Vec<f64>> = sorted
        .iter()
        .map(|t| evals.iter().map(|&e| t.trace.value_at(e).expect("non-empty")).collect())
        .collect();
    let m = curves.len() as f64;
    let mean: Vec<f64> = (0..evals.len())
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / m)
        .collect();

    let (lower, upper) = match mode {
        AggregateMode::Stddev => {
            let sd: Vec<f64> = (0..evals.len())
                .map(|i| {
                    let var = curves.iter().map(|c| (c[i] - mean[i]).powi(2)).sum::<f64>() / m;
                    var.sqrt()
                })
                .collect();
            (
                mean.iter().zip(&sd).map(|(a, s)| a - s).collect(),
                mean.iter().zip(&sd).map(|(a, s)| a + s).collect(),
            )
        }
        AggregateMode::Minmax => {
            let final_of = |k: usize| *curves[k].last().expect("non-empty grid");
            let best = (0..curves.len())
                .min_by(|&a, &b| final_of(a).total_cmp(&final_of(b)))
                .expect("non-empty");
            let worst = (0..curves.len())
                .max_by(|&a, &b| final_of(a).total_cmp(&final_of(b)).then(b.cmp(&a)))
                .expect("non-empty");
            // the best-final seed can sit above the mean early on; clamp so
            // the band always contains the mean
            (
                curves[best].iter().zip(&mean).map(|(c, a)| c.min(*a)).collect(),
                curves[worst].iter().zip(&mean).map(|(c, a)| c.max(*a)).collect(),
            )
        }
    };

    Ok(Summary {
        algorithm: first.algorithm.clone(),
        instance: first.instance.clone(),
        mode,
        evals,
        mean,
        lower,
        upper,
        finals: sorted
            .iter()
            .map(|t| SeedFinal {
                seed: t.seed,
                f_best: t.trace.final_best().expect("non-empty"),
            })
            .collect(),
    })
}

/// Reads every `*.csv` trace with a sidecar in `dir`. Returns the traces and
/// the largest stride recorded in the sidecars.
pub fn load_dir(dir: &Path) -> Result<(Vec<LabeledTrace>, u64)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_stem().is_some_and(|s| !s.to_string_lossy().starts_with("summary__"))
        })
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    let mut stride = 1;
    for csv in paths {
        let meta: RunMeta = serde_json::from_str(&fs::read_to_string(csv.with_extension("json"))?)?;
        let trace = Trace::from_csv(&fs::read_to_string(&csv)?)?;
        stride = stride.max(meta.stride);
        out.push(LabeledTrace {
            algorithm: meta.algorithm,
            instance: meta.instance,
            seed: meta.seed,
            trace,
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig(format!("no traces in {}", dir.display())));
    }
    Ok((out, stride))
}

/// Aggregates each algorithm found in `dir` and writes the summary files.
pub fn aggregate_dir(dir: &Path, mode: AggregateMode) -> Result<Vec<Summary>> {
    let (traces, stride) = load_dir(dir)?;
    let instance = &traces[0].instance;
    if let Some(t) = traces.iter().find(|t| &t.instance != instance) {
        return Err(Error::MixedInstances(instance.clone(), t.instance.clone()));
    }
    let mut groups: BTreeMap<&str, Vec<LabeledTrace>> = BTreeMap::new();
    for t in &traces {
        groups.entry(&t.algorithm).or_default().push(t.clone());
    }
    let tag = match mode {
        AggregateMode::Stddev => "stddev",
        AggregateMode::Minmax => "minmax",
    };
    let mut summaries = Vec::new();
    for (alg, group) in groups {
        let s = aggregate(&group, mode, stride)?;
        fs::write(dir.join(format!("summary__{tag}__{alg}.csv")), s.to_csv())?;
        summaries.push(s);
    }
    fs::write(
        dir.join(format!("summary__{tag}.json")),
        serde_json::to_string_pretty(&summaries)?,
    )?;
    Ok(summaries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: usize,
    pub b_over_n: f64,
    /// `relative` when `f*` is known, else `absolute`.
    pub metric: String,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    pub budget: u64,
    pub max_evals_used: u64,
}

/// Runs Solar for each base dimension in `b_values` with the same budget and
/// seeds, reporting final (relative) suboptimality. Values with `b >= n` or
/// `b == 0` are skipped with a warning.
pub fn sweep_b(
    instance: &ProblemInstance,
    template: &SolarConfig,
    b_values: &[usize],
    budget: u64,
    seeds: &[u64],
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let n = instance.dim();
    let metric = if instance.f_star.is_some() { "relative" } else { "absolute" };
    let mut rows = Vec::new();
    for &b in b_values {
        if b == 0 || b >= n {
            warn!("skipping b = {b}: need 1 <= b < n = {n}");
            continue;
        }
        let alg = AlgorithmConfig::Solar {
            name: None,
            config: SolarConfig {
                base_dim: b,
                ..template.clone()
            },
        };
        alg.validate(instance)?;
        let results: Vec<RunResult> = seeds
            .par_iter()
            .map(|&seed| alg.run(instance, budget, &mut stream_rng(master_seed, seed)))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = results
            .iter()
            .map(|r| instance.relative_suboptimality(r.f_best))
            .collect();
        rows.push(SweepRow {
            b,
            b_over_n: b as f64 / n as f64,
            metric: metric.to_string(),
            best: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            worst: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            budget,
            max_evals_used: results.iter().map(|r| r.evals).max().unwrap_or(0),
        });
    }
    Ok(rows)
}

/// Converts `b/n` ratios to base dimensions, rounding to the nearest integer
/// (at least 1).
pub fn ratios_to_b(ratios: &[f64], n: usize) -> Vec<usize> {
    ratios
        .iter()
        .map(|r| ((r * n as f64).round() as usize).max(1))
        .collect()
}

pub fn sweep_table_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("b,b_over_n,metric,best,mean,worst,budget,max_evals_used\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.b, r.b_over_n, r.metric, r.best, r.mean, r.worst, r.budget, r.max_evals_used
        ));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Negated slope of `ln(best_f - f*)` against the iteration index.
    pub alpha: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares rate over records with `lo <= iter <= hi`.
pub fn fit_linear_rate(trace: &Trace, lo: u64, hi: u64, f_star: f64) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.iter >= lo && r.iter <= hi)
        .map(|r| (r.iter as f64, r.best_f))
        .collect();
    if lo >= hi || pts.len() < 2 {
        return Err(Error::InvalidWindow { lo, hi });
    }
    if let Some(&(k, f)) = pts.iter().find(|(_, f)| !(*f > f_star + 1e-15)) {
        return Err(Error::Domain(format!(
            "best_f = {f} at iteration {k} is not above f* = {f_star}"
        )));
    }
    let ys: Vec<f64> = pts.iter().map(|(_, f)| (f - f_star).ln()).collect();
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|(k, _)| k).sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|(k, _)| (k - xbar).powi(2)).sum();
    let sxy: f64 = pts.iter().zip(&ys).map(|((k, _), y)| (k - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .zip(&ys)
        .map(|((k, _), y)| (y - ybar - slope * (k - xbar)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        alpha: -slope,
        r_squared,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRecord;

    fn constant(seed: u64, v: f64, evals: u64) -> LabeledTrace {
        LabeledTrace {
            algorithm: "a".into(),
            instance: "i".into(),
            seed,
            trace: Trace {
                records: vec![TraceRecord {
                    evals,
                    iter: 0,
                    best_f: v,
                    wall_ms: 0.0,
                }],
            },
        }
    }

    #[test]
    fn stream_seeds_differ() {
        let s: BTreeSet<u64> = (0..100).map(|i| stream_seed(7, i)).collect();
        assert_eq!(s.len(), 100);
        assert_ne!(stream_seed(0, 1), stream_seed(1, 0));
        assert_eq!(stream_seed(3, 4), stream_seed(3, 4));
    }

    #[test]
    fn stddev_of_two_constants() {
        let s = aggregate(&[constant(0, 1.0, 1), constant(1, 3.0, 1)], AggregateMode::Stddev, 1)
            .unwrap();
        assert!(s.mean.iter().all(|v| *v == 2.0));
        assert!(s.lower.iter().all(|v| *v == 1.0));
        assert!(s.upper.iter().all(|v| *v == 3.0));
    }

    #[test]
    fn single_trace_curves_coincide() {
        for mode in [AggregateMode::Stddev, AggregateMode::Minmax] {
            let s = aggregate(&[constant(0, 4.0, 10)], mode, 3).unwrap();
            assert_eq!(s.mean, s.lower);
            assert_eq!(s.mean, s.upper);
            assert_eq!(s.evals, vec![0, 3, 6, 9, 12]);
        }
    }

    #[test]
    fn minmax_picks_best_and_worst_final() {
        let ts = [constant(0, 2.0, 1), constant(1, 1.0, 1), constant(2, 3.0, 1)];
        let s = aggregate(&ts, AggregateMode::Minmax, 1).unwrap();
        assert!(s.lower.iter().all(|v| *v == 1.0));
        assert!(s.upper.iter().all(|v| *v == 3.0));
    }

    #[test]
    fn mixed_instances_rejected() {
        let mut b = constant(1, 1.0, 1);
        b.instance = "other".into();
        assert!(matches!(
            aggregate(&[constant(0, 1.0, 1), b], AggregateMode::Stddev, 1),
            Err(Error::MixedInstances(..))
        ));
    }

    #[test]
    fn geometric_trace_rate() {
        let records = (0..40)
            .map(|k| TraceRecord {
                evals: k + 1,
                iter: k,
                best_f: 3.0 + 2f64.powi(-(k as i32)),
                wall_ms: 0.0,
            })
            .collect();
        let fit = fit_linear_rate(&Trace { records }, 0, 39, 3.0).unwrap();
        assert!((fit.alpha - 2f64.ln()).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trace_rate_is_zero() {
        let records = (0..10)
            .map(|k| TraceRecord {
                evals: k + 1,
                iter: k,
                best_f: 5.0,
                wall_ms: 0.0,
            })
            .collect();
        let fit = fit_linear_rate(&Trace { records }, 2, 8, 1.0).unwrap();
        assert_eq!(fit.alpha, 0.0);
        assert!(fit_linear_rate(&Trace::new(), 0, 5, 0.0).is_err());
    }

    #[test]
    fn window_outside_trace_is_an_error() {
        let records = (0..10)
            .map(|k| TraceRecord {
                evals: k + 1,
                iter: k,
                best_f: 5.0,
                wall_ms: 0.0,
            })
            .collect();
        let t = Trace { records };
        assert!(matches!(
            fit_linear_rate(&t, 50, 60, 0.0),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(matches!(fit_linear_rate(&t, 0, 5, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok = r#"{"instance":"quad-10","algorithms":[{"kind":"solar"}],"seeds":[0],"budget":10}"#;
        assert!(ExperimentConfig::from_json(ok).is_ok());
        let bad = r#"{"instance":"quad-10","algorithms":[],"seeds":[0],"budget":10,"extra":1}"#;
        assert!(ExperimentConfig::from_json(bad).is_err());
        let bad_alg = r#"{"instance":"quad-10","algorithms":[{"kind":"solar","k":1}],"seeds":[0],"budget":10}"#;
        assert!(ExperimentConfig::from_json(bad_alg).is_err());
    }

    #[test]
    fn ratio_grid_to_base_dims() {
        let ratios: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        assert_eq!(ratios_to_b(&ratios, 10), (1..10).collect::<Vec<_>>());
        assert_eq!(ratios_to_b(&[0.01], 10), vec![1]);
    }
}
