//! Monte-Carlo experiments and subsampling evaluation on collected data.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use copeland_core::analysis::{implied_alpha, required_repetitions, scores};
use copeland_core::metrics::{allowed_success, exact_success, hamming_success, GroundTruth};
use copeland_core::model::{ComparisonMatrix, ModelSpec, QualityVector};
use copeland_core::rank::{copeland_topk, SpectralBaseline, TopKEstimate};
use copeland_core::sample::{draw_observations, subsample, ObservationSet};
use copeland_core::seed::{derive_seed, Stage};
use copeland_core::setfamily::SetFamily;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigMap, Lookup};
use crate::error::{Error, Result};
use crate::io;
use crate::spec::{parse_family, parse_model, ModelDefaults, ModelTemplate, DEFAULT_SPREAD};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "COPELAND_THREADS";

/// Suite models run at this fraction of the target `alpha`.
pub const DEFAULT_LOW_ALPHA_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Copeland,
    SpectralBaseline,
}

impl Estimator {
    pub const ALL: [Estimator; 2] = [Estimator::Copeland, Estimator::SpectralBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Copeland => "copeland",
            Estimator::SpectralBaseline => "spectral_baseline",
        }
    }

    pub fn topk(self, obs: &ObservationSet, k: usize) -> copeland_core::Result<TopKEstimate> {
        match self {
            Estimator::Copeland => copeland_topk(obs, k),
            Estimator::SpectralBaseline => SpectralBaseline::default().topk(obs, k),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "copeland" => Ok(Estimator::Copeland),
            "spectral_baseline" | "spectral" => Ok(Estimator::SpectralBaseline),
            other => Err(Error::usage(format!("unknown estimator `{other}`"))),
        }
    }
}

pub fn parse_estimators(list: &str) -> Result<Vec<Estimator>> {
    let mut out: Vec<Estimator> = Vec::new();
    for e in list.split(',').filter(|s| !s.trim().is_empty()) {
        let e = e.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if out.is_empty() {
        return Err(Error::usage("no estimators selected"));
    }
    Ok(out)
}

/// How the number of repetitions per pair is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    /// Smallest `r` meeting this `alpha` for the model's separation.
    Alpha(f64),
    Repetitions(u64),
}

/// One model in an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub label: String,
    pub template: ModelTemplate,
    /// Multiplies the configured `alpha` for this model.
    pub alpha_scale: f64,
}

impl ModelEntry {
    pub fn new(template: ModelTemplate) -> Self {
        Self { label: template.spec.kind().to_string(), template, alpha_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub models: Vec<ModelEntry>,
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub p: f64,
    pub design: Design,
    pub trials: usize,
    pub estimators: Vec<Estimator>,
    /// Set-family spec for `allowed_success`; defaults to the Hamming
    /// family for `h` (exact when `h = 0`).
    pub family: Option<String>,
    pub master_seed: u64,
    /// Record estimator wall time; off writes `elapsed_ns = 0` so result
    /// files are reproducible byte for byte.
    pub timing: bool,
    /// Rebuild seeded models in every trial instead of once.
    pub reinstantiate: bool,
}

pub const CONFIG_KEYS: &[&str] = &[
    "model",
    "suite",
    "n",
    "k",
    "h",
    "p",
    "alpha",
    "r",
    "trials",
    "estimators",
    "family",
    "master_seed",
    "timing",
    "reinstantiate",
    "spread",
    "low_alpha_factor",
];

/// Seed for seeded models that do not fix their own.
pub fn model_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, trial as u64, Stage::Model)
}

impl ExperimentConfig {
    /// One model with `p = 1`, `h = 0`, one trial, both estimators.
    pub fn new(model: ModelTemplate, k: usize, design: Design) -> Self {
        Self {
            n: model.spec.n(),
            models: vec![ModelEntry::new(model)],
            k,
            h: 0,
            p: 1.0,
            design,
            trials: 1,
            estimators: Estimator::ALL.to_vec(),
            family: None,
            master_seed: 0,
            timing: false,
            reinstantiate: false,
        }
    }

    /// Six-model benchmark: BTL, Thurstone, BTL with an outlier, an SST
    /// matrix, a two-population BTL mixture, and BTL at a reduced `alpha`.
    pub fn six_model_suite(
        n: usize,
        k: usize,
        alpha: f64,
        trials: usize,
        master_seed: u64,
        spread: f64,
        low_alpha_factor: f64,
    ) -> Result<Self> {
        let defaults = ModelDefaults { n: Some(n), k: Some(k), seed: model_seed(master_seed, 0) };
        let spread = format!("spread={spread}");
        let entry = |label: &str, spec: &str, scale: f64| -> Result<ModelEntry> {
            Ok(ModelEntry { label: label.to_string(), template: parse_model(spec, defaults)?, alpha_scale: scale })
        };
        let models = vec![
            entry("btl", &format!("btl:{spread}"), 1.0)?,
            entry("thurstone", &format!("thurstone:{spread}"), 1.0)?,
            entry("btl_outlier", &format!("btl_outlier:{spread}"), 1.0)?,
            entry("sst_diagonal", "sst_diagonal", 1.0)?,
            entry("btl_mixture", &format!("btl_mixture:{spread}"), 1.0)?,
            entry("btl_low_alpha", &format!("btl:{spread}"), low_alpha_factor)?,
        ];
        let cfg = Self {
            models,
            n,
            k,
            h: 0,
            p: 1.0,
            design: Design::Alpha(alpha),
            trials,
            estimators: Estimator::ALL.to_vec(),
            family: None,
            master_seed,
            timing: false,
            reinstantiate: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Build from configuration keys (see [`CONFIG_KEYS`]).
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let l = Lookup::new(map, CONFIG_KEYS)?;
        let master_seed = l.get("master_seed")?.unwrap_or(0);
        let n: Option<usize> = l.get("n")?;
        let k: usize = l.get("k")?.ok_or_else(|| Error::usage("k is required"))?;
        let design = match (l.get("alpha")?, l.get("r")?) {
            (Some(a), None) => Design::Alpha(a),
            (None, Some(r)) => Design::Repetitions(r),
            _ => return Err(Error::usage("give exactly one of alpha and r")),
        };
        let trials = l.get("trials")?.unwrap_or(1);
        let mut cfg = match (l.str("suite"), l.str("model")) {
            (Some("six_model"), None) => {
                let Design::Alpha(alpha) = design else {
                    return Err(Error::usage("the six_model suite is driven by alpha, not r"));
                };
                let n = n.ok_or_else(|| Error::usage("n is required"))?;
                Self::six_model_suite(
                    n,
                    k,
                    alpha,
                    trials,
                    master_seed,
                    l.get("spread")?.unwrap_or(DEFAULT_SPREAD),
                    l.get("low_alpha_factor")?.unwrap_or(DEFAULT_LOW_ALPHA_FACTOR),
                )?
            }
            (Some(other), None) => return Err(Error::usage(format!("unknown suite `{other}`"))),
            (None, Some(spec)) => {
                if l.str("spread").is_some() || l.str("low_alpha_factor").is_some() {
                    return Err(Error::usage("spread and low_alpha_factor apply to suites only"));
                }
                let defaults = ModelDefaults { n, k: Some(k), seed: model_seed(master_seed, 0) };
                let mut cfg = Self::new(parse_model(spec, defaults)?, k, design);
                cfg.trials = trials;
                cfg.master_seed = master_seed;
                cfg
            }
            _ => return Err(Error::usage("give exactly one of model and suite")),
        };
        if let Some(h) = l.get("h")? {
            cfg.h = h;
        }
        if let Some(p) = l.get("p")? {
            cfg.p = p;
        }
        if let Some(e) = l.str("estimators") {
            cfg.estimators = parse_estimators(e)?;
        }
        cfg.family = l.str("family").map(str::to_string);
        cfg.timing = l.flag("timing")?.unwrap_or(false);
        cfg.reinstantiate = l.flag("reinstantiate")?.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::usage("no models"));
        }
        if let Some(m) = self.models.iter().find(|m| m.template.spec.n() != self.n) {
            return Err(Error::usage(format!(
                "model {} has n = {}, expected {}",
                m.label,
                m.template.spec.n(),
                self.n
            )));
        }
        if self.k == 0 || self.k >= self.n {
            return Err(Error::usage(format!("k = {} must satisfy 1 <= k < n = {}", self.k, self.n)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::usage(format!("p = {} not in (0, 1]", self.p)));
        }
        if self.trials == 0 {
            return Err(Error::usage("trials must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::usage("no estimators selected"));
        }
        match self.design {
            Design::Alpha(a) if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::usage(format!("alpha = {a} must be positive")))
            }
            Design::Repetitions(0) => return Err(Error::usage("r must be at least 1")),
            _ => {}
        }
        self.set_family()?;
        Ok(())
    }

    pub fn family_spec(&self) -> String {
        match &self.family {
            Some(f) => f.clone(),
            None if self.h == 0 => "exact".into(),
            None => format!("hamming:h={}", self.h),
        }
    }

    fn set_family(&self) -> Result<SetFamily> {
        parse_family(&self.family_spec(), self.n, self.k)
    }
}

/// One estimator on one trial; a row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub model: String,
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub p: f64,
    pub r: u64,
    pub alpha: f64,
    pub trial: usize,
    pub estimator: Estimator,
    pub exact_success: bool,
    pub hamming_error: usize,
    pub allowed_success: bool,
    pub tie_broken: bool,
    pub elapsed_ns: u64,
    pub derived_seed: u64,
    /// The estimator returned an error; metrics are set to worst case.
    #[serde(skip)]
    pub estimator_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummary {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub trials: usize,
    pub exact_failures: usize,
    pub exact_failure_fraction: f64,
    pub hamming_failures: usize,
    pub hamming_failure_fraction: f64,
    pub allowed_failures: usize,
    pub allowed_failure_fraction: f64,
    pub mean_hamming_error: f64,
    pub tie_broken: usize,
    pub estimator_failures: usize,
    pub elapsed_ns: TimingSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub kind: String,
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub p: f64,
    /// Target `alpha`, or the implied one when `r` is fixed. Absent when
    /// the model is rebuilt per trial under a fixed `r`.
    pub alpha: Option<f64>,
    /// Absent when the model is rebuilt per trial under an `alpha` target;
    /// the results CSV then carries each trial's `r`.
    pub r: Option<u64>,
    /// `Delta_{k,h}` of the model (absent when rebuilt per trial).
    pub separation: Option<f64>,
    pub quality: Option<Vec<f64>>,
    pub reinstantiated: bool,
    pub estimators: Vec<EstimatorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub master_seed: u64,
    pub trials: usize,
    pub family: String,
    pub timing: bool,
    pub models: Vec<ModelSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

struct Instance {
    matrix: ComparisonMatrix,
    truth: GroundTruth,
    separation: f64,
    r: u64,
    alpha: f64,
}

fn instantiate(cfg: &ExperimentConfig, entry: &ModelEntry, spec: &ModelSpec) -> Result<Instance> {
    let matrix = spec.build()?;
    let tau = scores(&matrix);
    let truth = GroundTruth::from_scores(&tau, cfg.k)?;
    let separation = tau.separation_hamming(cfg.k, cfg.h)?;
    let (r, alpha) = match cfg.design {
        Design::Alpha(a) => {
            let alpha = a * entry.alpha_scale;
            let r = required_repetitions(cfg.n, cfg.p, separation, alpha).map_err(|e| match e {
                copeland_core::Error::ZeroSeparation => Error::usage(format!(
                    "model {} has zero separation at k = {}, h = {}; no r meets alpha = {alpha}",
                    entry.label, cfg.k, cfg.h
                )),
                e => Error::from(e).context(&entry.label),
            })?;
            (r, alpha)
        }
        Design::Repetitions(r) => (r, implied_alpha(cfg.n, cfg.p, r, separation)),
    };
    Ok(Instance { matrix, truth, separation, r, alpha })
}

fn trial_spec(entry: &ModelEntry, master_seed: u64, trial: usize) -> ModelSpec {
    let spec = &entry.template.spec;
    match spec {
        ModelSpec::SstDiagonal { seed, .. } if entry.template.seed_fixed => {
            spec.with_seed(derive_seed(*seed, trial as u64, Stage::Model))
        }
        _ => spec.with_seed(model_seed(master_seed, trial)),
    }
}

fn evaluate(
    cfg: &ExperimentConfig,
    entry: &ModelEntry,
    inst: &Instance,
    family: &SetFamily,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    let seed = derive_seed(cfg.master_seed, trial as u64, Stage::Observations);
    let obs = draw_observations(&inst.matrix, cfg.p, inst.r, seed)?;
    let mut out = Vec::with_capacity(cfg.estimators.len());
    for &est in &cfg.estimators {
        let start = Instant::now();
        let result = est.topk(&obs, cfg.k);
        let elapsed = start.elapsed();
        let mut rec = TrialRecord {
            model: entry.label.clone(),
            n: cfg.n,
            k: cfg.k,
            h: cfg.h,
            p: cfg.p,
            r: inst.r,
            alpha: inst.alpha,
            trial,
            estimator: est,
            exact_success: false,
            hamming_error: 2 * cfg.k,
            allowed_success: false,
            tie_broken: false,
            elapsed_ns: if cfg.timing { u64::try_from(elapsed.as_nanos()).unwrap_or(u64::MAX) } else { 0 },
            derived_seed: seed,
            estimator_failed: true,
        };
        if let Ok(topk) = result {
            let (_, distance) = hamming_success(&topk, &inst.truth, cfg.h)?;
            rec.exact_success = exact_success(&topk, &inst.truth)?;
            rec.hamming_error = distance;
            rec.allowed_success = allowed_success(&topk, &inst.truth, family)?;
            rec.tie_broken = topk.tie_broken;
            rec.estimator_failed = false;
        }
        out.push(rec);
    }
    Ok(out)
}

/// Thread count from [`THREADS_ENV`], or 0 (one per core) when unset.
pub fn default_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| Error::usage(format!("{THREADS_ENV} = `{v}` is not a thread count"))),
    }
}

/// Run `f` on a pool of `threads` workers (0: [`default_threads`]).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let threads = if threads == 0 { default_threads()? } else { threads };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Run every model for `cfg.trials` trials on `threads` workers
/// (0: [`default_threads`]). Records come back in (model, trial,
/// estimator) order whatever the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let family = cfg.set_family()?;
    with_threads(threads, || {
        let mut records = Vec::new();
        let mut models = Vec::new();
        for entry in &cfg.models {
            let per_trial = cfg.reinstantiate && entry.template.spec.is_seeded();
            let shared = if per_trial { None } else { Some(instantiate(cfg, entry, &entry.template.spec)?) };
            let rows: Vec<Vec<TrialRecord>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| match &shared {
                    Some(inst) => evaluate(cfg, entry, inst, &family, t),
                    None => {
                        let inst = instantiate(cfg, entry, &trial_spec(entry, cfg.master_seed, t))?;
                        evaluate(cfg, entry, &inst, &family, t)
                    }
                })
                .collect::<Result<_>>()?;
            let rows: Vec<TrialRecord> = rows.into_iter().flatten().collect();
            let alpha = match (&shared, cfg.design) {
                (Some(inst), _) => Some(inst.alpha),
                (None, Design::Alpha(a)) => Some(a * entry.alpha_scale),
                (None, Design::Repetitions(_)) => None,
            };
            models.push(ModelSummary {
                model: entry.label.clone(),
                kind: entry.template.spec.kind().to_string(),
                n: cfg.n,
                k: cfg.k,
                h: cfg.h,
                p: cfg.p,
                alpha,
                r: match (&shared, cfg.design) {
                    (Some(inst), _) => Some(inst.r),
                    (None, Design::Repetitions(r)) => Some(r),
                    (None, Design::Alpha(_)) => None,
                },
                separation: shared.as_ref().map(|i| i.separation),
                quality: entry.template.quality().map(|w: &QualityVector| w.as_slice().to_vec()),
                reinstantiated: per_trial,
                estimators: summarize(&rows, &cfg.estimators, cfg.h),
            });
            records.extend(rows);
        }
        Ok(ExperimentOutput {
            records,
            summary: ExperimentSummary {
                master_seed: cfg.master_seed,
                trials: cfg.trials,
                family: cfg.family_spec(),
                timing: cfg.timing,
                models,
            },
        })
    })?
}

/// Aggregate one model's records per estimator.
pub fn summarize(records: &[TrialRecord], estimators: &[Estimator], h: usize) -> Vec<EstimatorSummary> {
    estimators
        .iter()
        .map(|&est| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.estimator == est).collect();
            let count = |f: &dyn Fn(&TrialRecord) -> bool| rows.iter().filter(|r| f(r)).count();
            let trials = rows.len();
            let frac = |c: usize| if trials == 0 { 0.0 } else { c as f64 / trials as f64 };
            let exact_failures = count(&|r| !r.exact_success);
            let hamming_failures = count(&|r| r.hamming_error > 2 * h);
            let allowed_failures = count(&|r| !r.allowed_success);
            let times: Vec<u64> = rows.iter().map(|r| r.elapsed_ns).collect();
            EstimatorSummary {
                estimator: est,
                trials,
                exact_failures,
                exact_failure_fraction: frac(exact_failures),
                hamming_failures,
                hamming_failure_fraction: frac(hamming_failures),
                allowed_failures,
                allowed_failure_fraction: frac(allowed_failures),
                mean_hamming_error: if trials == 0 {
                    0.0
                } else {
                    rows.iter().map(|r| r.hamming_error as f64).sum::<f64>() / trials as f64
                },
                tie_broken: count(&|r| r.tie_broken),
                estimator_failures: count(&|r| r.estimator_failed),
                elapsed_ns: TimingSummary {
                    min: times.iter().copied().min().unwrap_or(0),
                    max: times.iter().copied().max().unwrap_or(0),
                    mean: if trials == 0 { 0.0 } else { times.iter().sum::<u64>() as f64 / trials as f64 },
                },
            }
        })
        .collect()
}

pub fn write_records<W: std::io::Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::runtime(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataConfig {
    /// Defaults to `ceil(n / 4)`.
    pub k: Option<usize>,
    pub q_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
}

impl Default for RealDataConfig {
    fn default() -> Self {
        Self { k: None, q_grid: vec![1.0], trials: 1, seed: 0, estimators: Estimator::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataRecord {
    pub q: f64,
    pub trial: usize,
    pub estimator: Estimator,
    pub hamming_error: usize,
    pub exact_success: bool,
    pub tie_broken: bool,
    pub estimator_failed: bool,
    pub derived_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataSummary {
    pub q: f64,
    pub estimator: Estimator,
    pub trials: usize,
    pub mean_hamming_error: f64,
    pub estimator_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataOutput {
    pub n: usize,
    pub k: usize,
    /// Identifier of each item index.
    pub ids: Vec<String>,
    pub records: Vec<RealDataRecord>,
    pub summary: Vec<RealDataSummary>,
}

/// Load observations and a truth ranking, then run [`evaluate_realdata`].
pub fn run_realdata(
    obs_file: &Path,
    truth_file: &Path,
    cfg: &RealDataConfig,
    threads: usize,
) -> Result<RealDataOutput> {
    let (obs, ids) = io::read_observations(obs_file)?;
    let truth = io::read_truth(truth_file)?;
    evaluate_realdata(&obs, &ids, &truth, cfg, threads)
}

/// Subsample `obs` at each `q`, rank, and score the top-k against `truth`
/// (identifiers, best first). Items in `truth` never compared are appended
/// after the observed ones.
pub fn evaluate_realdata(
    obs: &ObservationSet,
    ids: &[String],
    truth: &[String],
    cfg: &RealDataConfig,
    threads: usize,
) -> Result<RealDataOutput> {
    let mut ids = ids.to_vec();
    if let Some(unknown) = ids.iter().find(|id| !truth.contains(id)) {
        return Err(Error::data(format!("item {unknown} is not in the truth ranking")));
    }
    for id in truth {
        if !ids.contains(id) {
            ids.push(id.clone());
        }
    }
    let n = ids.len();
    let obs = if n == obs.n() {
        obs.clone()
    } else {
        let rows = obs.iter_pairs().map(|(i, j, c)| (i, j, c.comparisons, c.wins_low));
        ObservationSet::from_pair_counts(n, obs.r(), obs.p(), rows)?
    };
    let k = cfg.k.unwrap_or(n.div_ceil(4));
    if k == 0 || k > n {
        return Err(Error::usage(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    if cfg.trials == 0 {
        return Err(Error::usage("trials must be at least 1"));
    }
    if let Some(q) = cfg.q_grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::usage(format!("q = {q} not in [0, 1]")));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::usage("no estimators selected"));
    }
    let order: Vec<usize> = truth.iter().map(|id| ids.iter().position(|x| x == id).unwrap_or(0)).collect();
    let truth = GroundTruth::from_order(order, k)?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.q_grid.len()).flat_map(|qi| (0..cfg.trials).map(move |t| (qi, t))).collect();
    let records: Vec<Vec<RealDataRecord>> = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(qi, t)| {
                let q = cfg.q_grid[qi];
                let seed = derive_seed(cfg.seed, ((qi as u64) << 32) | t as u64, Stage::Subsample);
                let sub = subsample(&obs, q, seed)?;
                cfg.estimators
                    .iter()
                    .map(|&est| {
                        let mut rec = RealDataRecord {
                            q,
                            trial: t,
                            estimator: est,
                            hamming_error: 2 * k,
                            exact_success: false,
                            tie_broken: false,
                            estimator_failed: true,
                            derived_seed: seed,
                        };
                        if let Ok(topk) = est.topk(&sub, k) {
                            rec.hamming_error = hamming_success(&topk, &truth, 0)?.1;
                            rec.exact_success = exact_success(&topk, &truth)?;
                            rec.tie_broken = topk.tie_broken;
                            rec.estimator_failed = false;
                        }
                        Ok(rec)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()
    })??;
    let records: Vec<RealDataRecord> = records.into_iter().flatten().collect();
    let mut summary = Vec::new();
    for &q in &cfg.q_grid {
        for &est in &cfg.estimators {
            let rows: Vec<&RealDataRecord> = records.iter().filter(|r| r.q == q && r.estimator == est).collect();
            summary.push(RealDataSummary {
                q,
                estimator: est,
                trials: rows.len(),
                mean_hamming_error: rows.iter().map(|r| r.hamming_error as f64).sum::<f64>() / rows.len() as f64,
                estimator_failures: rows.iter().filter(|r| r.estimator_failed).count(),
            });
        }
    }
    Ok(RealDataOutput { n, k, ids, records, summary })
}

pub fn write_realdata_records<W: std::io::Write>(records: &[RealDataRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::runtime(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn planted_cfg(extra: &str) -> ExperimentConfig {
        let text = format!("model = planted:delta=0.2\nn = 12\nk = 3\nalpha = 4\ntrials = 5\n{extra}");
        ExperimentConfig::from_map(&parse_config(&text).unwrap()).unwrap()
    }

    #[test]
    fn config_from_map() {
        let cfg = planted_cfg("estimators = copeland\nmaster_seed = 7\nh = 1\n");
        assert_eq!(cfg.n, 12);
        assert_eq!(cfg.estimators, [Estimator::Copeland]);
        assert_eq!(cfg.family_spec(), "hamming:h=1");
        assert_eq!(cfg.design, Design::Alpha(4.0));
        assert_eq!(cfg.models[0].label, "planted");
    }

    #[test]
    fn config_errors() {
        let bad = [
            "model = btl\nn = 5\nk = 2\n",
            "model = btl\nn = 5\nk = 2\nalpha = 1\nr = 3\n",
            "model = btl\nn = 5\nk = 5\nalpha = 1\n",
            "model = btl\nn = 5\nk = 2\nalpha = 1\ntrials = 0\n",
            "model = btl\nn = 5\nk = 2\nalpha = 1\ncolour = red\n",
            "model = btl\nsuite = six_model\nn = 5\nk = 2\nalpha = 1\n",
            "suite = six_model\nn = 8\nk = 2\nr = 3\n",
            "model = btl\nn = 5\nk = 2\nalpha = 1\nestimators = magic\n",
            "model = btl\nn = 5\nk = 2\nalpha = 1\nfamily = hamming:h=3\n",
        ];
        for text in bad {
            let e = ExperimentConfig::from_map(&parse_config(text).unwrap()).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{text}: {e}");
        }
    }

    #[test]
    fn zero_separation_is_a_usage_error() {
        let mut cfg = planted_cfg("");
        cfg.models[0].template.spec = ModelSpec::Planted { n: 12, k: 3, delta: 0.0 };
        let e = run_experiment(&cfg, 1).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn records_and_summary_agree() {
        let cfg = planted_cfg("h = 1\n");
        let out = run_experiment(&cfg, 2).unwrap();
        assert_eq!(out.records.len(), 10);
        for (i, r) in out.records.iter().enumerate() {
            assert_eq!(r.trial, i / 2);
            assert_eq!(r.hamming_error % 2, 0);
            assert_eq!(r.elapsed_ns, 0);
        }
        let s = &out.summary.models[0];
        assert_eq!(s.estimators.len(), 2);
        assert!((s.separation.unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn seeded_models_rebuild_per_trial_on_request() {
        let text = "model = sst_diagonal\nn = 10\nk = 3\nr = 50\ntrials = 3\nreinstantiate = on\n";
        let cfg = ExperimentConfig::from_map(&parse_config(text).unwrap()).unwrap();
        let out = run_experiment(&cfg, 1).unwrap();
        assert!(out.summary.models[0].reinstantiated);
        assert_eq!(out.summary.models[0].separation, None);
        assert_eq!(out.summary.models[0].r, Some(50));
    }

    #[test]
    fn suite_has_six_models() {
        let cfg = ExperimentConfig::six_model_suite(40, 10, 4.0, 1, 3, 4.0, 0.1).unwrap();
        let labels: Vec<&str> = cfg.models.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, ["btl", "thurstone", "btl_outlier", "sst_diagonal", "btl_mixture", "btl_low_alpha"]);
        assert_eq!(cfg.models[5].alpha_scale, 0.1);
    }
}
