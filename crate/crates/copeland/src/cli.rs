//! The `copeland` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use copeland_core::analysis::SeparationReport;
use copeland_core::rank::{copeland_ranking, topk_by, SpectralBaseline};
use copeland_core::sample::draw_observations;
use copeland_core::setfamily::separation_family;
use serde::Serialize;

use crate::config::{read_config, ConfigMap};
use crate::error::{Error, Result};
use crate::harness::{
    parse_estimators, run_experiment, run_realdata, write_realdata_records, write_records, Estimator, ExperimentConfig,
    RealDataConfig,
};
use crate::io;
use crate::spec::{parse_family, parse_model, ModelDefaults};

#[derive(Debug, Parser)]
#[command(name = "copeland", version, about = "Top-k recovery from pairwise comparisons by counting wins")]
pub struct Cli {
    /// Report errors on stderr as a JSON object.
    #[arg(long, global = true)]
    pub error_json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the comparison matrix of a model as CSV.
    GenMatrix(GenMatrix),
    /// Draw observations from a matrix.
    Simulate(Simulate),
    /// Top-k (and optionally the full ranking) from observations, as JSON.
    Rank(Rank),
    /// Separation thresholds of a matrix, as JSON.
    Thresholds(Thresholds),
    /// Run a benchmark experiment.
    Bench(Box<Bench>),
    /// Subsampling evaluation of collected comparisons against a known ranking.
    EvalReal(EvalReal),
}

#[derive(Debug, Args)]
pub struct GenMatrix {
    /// Model spec, e.g. `btl:spread=4` or `planted:k=10,delta=0.1`.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// Default block size for planted models.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for seeded models that do not fix their own.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObsFormat {
    /// `item_a,item_b,comparisons,wins_a`, one row per pair.
    Counts,
    /// `item_a,item_b,winner`, one row per comparison.
    Comparisons,
}

#[derive(Debug, Args)]
pub struct Simulate {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub r: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ObsFormat::Counts)]
    pub format: ObsFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Rank {
    /// Comparisons or counts CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "copeland")]
    pub estimator: String,
    /// Also report the full ranking.
    #[arg(long)]
    pub ranking: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Thresholds {
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub h: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Fixed repetitions; reports the implied alpha.
    #[arg(long)]
    pub r: Option<u64>,
    /// Target alpha for `r_required`.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Set-family spec; adds `delta_family`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Bench {
    /// `key = value` configuration file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub estimators: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub master_seed: Option<String>,
    #[arg(long)]
    pub timing: Option<String>,
    #[arg(long)]
    pub reinstantiate: Option<String>,
    #[arg(long)]
    pub spread: Option<String>,
    #[arg(long)]
    pub low_alpha_factor: Option<String>,
    /// Worker threads (default: $COPELAND_THREADS, else one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Results CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl Bench {
    fn overrides(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("model", &self.model),
            ("suite", &self.suite),
            ("n", &self.n),
            ("k", &self.k),
            ("h", &self.h),
            ("p", &self.p),
            ("alpha", &self.alpha),
            ("r", &self.r),
            ("trials", &self.trials),
            ("estimators", &self.estimators),
            ("family", &self.family),
            ("master_seed", &self.master_seed),
            ("timing", &self.timing),
            ("reinstantiate", &self.reinstantiate),
            ("spread", &self.spread),
            ("low_alpha_factor", &self.low_alpha_factor),
        ]
    }

    pub fn config_map(&self) -> Result<ConfigMap> {
        let mut map = match &self.config {
            Some(path) => read_config(path)?,
            None => ConfigMap::new(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

#[derive(Debug, Args)]
pub struct EvalReal {
    /// Comparisons or counts CSV.
    #[arg(long)]
    pub observations: PathBuf,
    /// Item ids, one per line, best first.
    #[arg(long)]
    pub truth: PathBuf,
    /// Default: ceil(n / 4).
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated subsampling fractions.
    #[arg(long, default_value = "1")]
    pub q: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "copeland,spectral_baseline")]
    pub estimators: String,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Per-trial CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-q averages as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn finish(mut w: Box<dyn Write>) -> Result<()> {
    w.flush().map_err(|e| Error::runtime(format!("write: {e}")))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::runtime(e.to_string()))?;
    writeln!(w).map_err(|e| Error::runtime(e.to_string()))?;
    finish(w)
}

fn gen_matrix(a: &GenMatrix) -> Result<()> {
    let t = parse_model(&a.model, ModelDefaults { n: a.n, k: a.k, seed: a.seed })?;
    let m = t.spec.build()?;
    let mut w = sink(a.out.as_deref())?;
    io::write_matrix(&m, &mut w).map_err(|e| Error::runtime(e.to_string()))?;
    finish(w)
}

fn simulate(a: &Simulate) -> Result<()> {
    let m = io::read_matrix(&a.matrix)?;
    let obs = draw_observations(&m, a.p, a.r, a.seed)?;
    let mut w = sink(a.out.as_deref())?;
    match a.format {
        ObsFormat::Counts => io::write_counts(&obs, None, &mut w)?,
        ObsFormat::Comparisons => io::write_comparisons(&obs, None, &mut w)?,
    }
    finish(w)
}

#[derive(Serialize)]
struct RankOutput<'a> {
    estimator: Estimator,
    n: usize,
    k: usize,
    topk: Vec<&'a str>,
    tie_broken: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<&'a str>>,
}

fn rank(a: &Rank) -> Result<()> {
    let est: Estimator = a.estimator.parse()?;
    let (obs, ids) = io::read_observations(&a.input)?;
    let n = obs.n();
    if a.k == 0 || a.k > n {
        return Err(Error::usage(format!("k = {} must satisfy 1 <= k <= n = {n}", a.k)));
    }
    let topk = est.topk(&obs, a.k)?;
    let ranking = match (a.ranking, est) {
        (false, _) => None,
        (true, Estimator::Copeland) => Some(copeland_ranking(&obs).order),
        (true, Estimator::SpectralBaseline) => Some(topk_by(&SpectralBaseline::default().scores(&obs)?, n)?.items),
    };
    let name = |v: &[usize]| v.iter().map(|&i| ids[i].as_str()).collect::<Vec<_>>();
    let out = RankOutput {
        estimator: est,
        n,
        k: a.k,
        topk: name(&topk.items),
        tie_broken: topk.tie_broken,
        ranking: ranking.as_deref().map(name),
    };
    write_json(&out, a.out.as_deref())
}

#[derive(Serialize)]
struct ThresholdOutput {
    n: usize,
    k: usize,
    h: usize,
    delta: f64,
    alpha_implied: Option<f64>,
    r_required: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_family: Option<f64>,
}

fn thresholds(a: &Thresholds) -> Result<()> {
    let m = match (&a.matrix, &a.model) {
        (Some(path), _) => io::read_matrix(path)?,
        (None, Some(spec)) => parse_model(spec, ModelDefaults { n: a.n, k: Some(a.k), seed: a.seed })?.spec.build()?,
        (None, None) => return Err(Error::usage("give --matrix or --model")),
    };
    let rep = SeparationReport::compute(&m, a.k, a.h, a.p, a.r, a.alpha)?;
    let delta_family = match &a.family {
        Some(spec) => {
            let family = parse_family(spec, m.n(), a.k)?;
            Some(separation_family(&copeland_core::analysis::scores(&m), &family)?)
        }
        None => None,
    };
    let out = ThresholdOutput {
        n: rep.n,
        k: rep.k,
        h: rep.h,
        delta: rep.delta,
        alpha_implied: rep.alpha_implied,
        r_required: rep.r_required,
        delta_family,
    };
    write_json(&out, a.out.as_deref())
}

fn bench(a: &Bench) -> Result<()> {
    let cfg = ExperimentConfig::from_map(&a.config_map()?)?;
    let out = run_experiment(&cfg, a.threads)?;
    let w = sink(a.out.as_deref())?;
    write_records(&out.records, w)?;
    if let Some(path) = &a.summary {
        write_json(&out.summary, Some(path))?;
    }
    Ok(())
}

fn parse_q_grid(list: &str) -> Result<Vec<f64>> {
    let grid = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| Error::usage(format!("cannot parse q = `{s}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if grid.is_empty() {
        return Err(Error::usage("empty q grid"));
    }
    Ok(grid)
}

fn eval_real(a: &EvalReal) -> Result<()> {
    let cfg = RealDataConfig {
        k: a.k,
        q_grid: parse_q_grid(&a.q)?,
        trials: a.trials,
        seed: a.seed,
        estimators: parse_estimators(&a.estimators)?,
    };
    let out = run_realdata(&a.observations, &a.truth, &cfg, a.threads)?;
    write_realdata_records(&out.records, sink(a.out.as_deref())?)?;
    if let Some(path) = &a.summary {
        let body = serde_json::json!({ "n": out.n, "k": out.k, "results": out.summary });
        write_json(&body, Some(path))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenMatrix(a) => gen_matrix(a),
        Command::Simulate(a) => simulate(a),
        Command::Rank(a) => rank(a),
        Command::Thresholds(a) => thresholds(a),
        Command::Bench(a) => bench(a),
        Command::EvalReal(a) => eval_real(a),
    }
}

fn report(e: &Error, json: bool) {
    if json {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("copeland: {e}");
    }
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = Error::usage(e.render().to_string().trim_end());
            report(&err, args.iter().any(|a| a == "--error-json"));
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            report(&e, cli.error_json);
            e.exit_code()
        }
    }
}
