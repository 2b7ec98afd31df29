use copeland::harness::{
    evaluate_realdata, run_experiment, summarize, Design, Estimator, ExperimentConfig, RealDataConfig,
};
use copeland::spec::ModelTemplate;
use copeland_core::model::{gen_planted_set, ModelSpec};
use copeland_core::rank::copeland_topk;
use copeland_core::sample::{draw_observations, ObservationSet};

fn planted(n: usize, k: usize, delta: f64, alpha: f64, trials: usize) -> ExperimentConfig {
    let t = ModelTemplate { spec: ModelSpec::Planted { n, k, delta }, seed_fixed: true };
    let mut cfg = ExperimentConfig::new(t, k, Design::Alpha(alpha));
    cfg.trials = trials;
    cfg.master_seed = 8;
    cfg
}

#[test]
fn planted_at_high_alpha_never_fails() {
    let mut cfg = planted(40, 8, 0.1, 8.0, 100);
    cfg.estimators = vec![Estimator::Copeland];
    let out = run_experiment(&cfg, 0).unwrap();
    assert_eq!(out.records.len(), 100);
    assert!(out.records.iter().all(|r| r.exact_success && r.allowed_success && r.hamming_error == 0));
    assert_eq!(out.summary.models[0].estimators[0].exact_failure_fraction, 0.0);
}

#[test]
fn repeated_runs_give_identical_records() {
    let cfg = planted(20, 5, 0.05, 1.0, 1);
    assert_eq!(run_experiment(&cfg, 1).unwrap(), run_experiment(&cfg, 1).unwrap());
    let mut many = cfg.clone();
    many.trials = 12;
    assert_eq!(run_experiment(&many, 1).unwrap(), run_experiment(&many, 3).unwrap());
}

#[test]
fn trials_share_observations_across_estimators() {
    let cfg = planted(20, 5, 0.05, 1.0, 6);
    let out = run_experiment(&cfg, 0).unwrap();
    for pair in out.records.chunks(2) {
        assert_eq!(pair[0].trial, pair[1].trial);
        assert_eq!(pair[0].derived_seed, pair[1].derived_seed);
        assert_eq!((pair[0].estimator, pair[1].estimator), (Estimator::Copeland, Estimator::SpectralBaseline));
    }
    let seeds: std::collections::BTreeSet<u64> = out.records.iter().map(|r| r.derived_seed).collect();
    assert_eq!(seeds.len(), 6);
}

#[test]
fn summary_fractions_recount() {
    // Low alpha so that some trials fail.
    let mut cfg = planted(30, 6, 0.1, 0.5, 40);
    cfg.h = 1;
    let out = run_experiment(&cfg, 0).unwrap();
    let summary = &out.summary.models[0].estimators;
    assert_eq!(summary, &summarize(&out.records, &cfg.estimators, 1));
    for s in summary {
        let rows: Vec<_> = out.records.iter().filter(|r| r.estimator == s.estimator).collect();
        let mean = |f: &dyn Fn(&&copeland::harness::TrialRecord) -> bool| {
            rows.iter().filter(|r| f(r)).count() as f64 / rows.len() as f64
        };
        assert_eq!(s.exact_failure_fraction, mean(&|r| !r.exact_success));
        assert_eq!(s.allowed_failure_fraction, mean(&|r| !r.allowed_success));
        assert_eq!(s.hamming_failure_fraction, mean(&|r| r.hamming_error > 2));
    }
    assert!(summary[0].exact_failures > 0, "expected some failures at alpha = 0.5");
}

#[test]
fn disconnected_baseline_is_recorded_not_fatal() {
    // With a tiny p the comparison graph is disconnected in most trials.
    let mut cfg = planted(30, 6, 0.3, 1.0, 10);
    cfg.p = 0.01;
    cfg.design = Design::Repetitions(1);
    let out = run_experiment(&cfg, 0).unwrap();
    let base = &out.summary.models[0].estimators[1];
    assert_eq!(base.estimator, Estimator::SpectralBaseline);
    assert!(base.estimator_failures > 0);
    for r in out.records.iter().filter(|r| r.estimator_failed) {
        assert_eq!(r.hamming_error, 12);
        assert!(!r.exact_success && !r.allowed_success);
    }
}

fn fixture() -> (ObservationSet, Vec<String>, Vec<String>) {
    let m = gen_planted_set(12, &[2, 5, 7], 0.35).unwrap();
    let obs = draw_observations(&m, 1.0, 150, 21).unwrap();
    let ids: Vec<String> = (0..12).map(|i| format!("item{i}")).collect();
    let truth: Vec<String> = [2, 5, 7, 0, 1, 3, 4, 6, 8, 9, 10, 11].iter().map(|&i| format!("item{i}")).collect();
    (obs, ids, truth)
}

#[test]
fn realdata_full_sample_recovers_planted_set() {
    let (obs, ids, truth) = fixture();
    let cfg = RealDataConfig { k: Some(3), trials: 1, ..RealDataConfig::default() };
    let out = evaluate_realdata(&obs, &ids, &truth, &cfg, 1).unwrap();
    assert_eq!(out.k, 3);
    assert!(out.records.iter().all(|r| r.hamming_error == 0));
    // q = 1 keeps everything, so repeated trials agree.
    let cfg = RealDataConfig { k: Some(3), trials: 4, ..RealDataConfig::default() };
    let out = evaluate_realdata(&obs, &ids, &truth, &cfg, 2).unwrap();
    assert_eq!(out.records.len(), 8);
    assert!(out.records.iter().all(|r| r.hamming_error == 0 && r.exact_success));
}

#[test]
fn realdata_default_k_and_empty_subsample() {
    let (obs, ids, truth) = fixture();
    let cfg = RealDataConfig { q_grid: vec![0.0], estimators: vec![Estimator::Copeland], ..RealDataConfig::default() };
    let out = evaluate_realdata(&obs, &ids, &truth, &cfg, 1).unwrap();
    assert_eq!(out.k, 3);
    // No data: every count is zero and the lowest indices win the ties.
    let empty = ObservationSet::empty(12, 1, None);
    assert_eq!(copeland_topk(&empty, 3).unwrap().items, [0, 1, 2]);
    let want = 2 * (3 - [0usize, 1, 2].iter().filter(|i| [2, 5, 7].contains(*i)).count());
    assert_eq!(out.records[0].hamming_error, want);
    assert!(out.records[0].tie_broken);
}

#[test]
fn realdata_truth_checks() {
    let (obs, ids, truth) = fixture();
    let cfg = RealDataConfig::default();
    let e = evaluate_realdata(&obs, &ids, &truth[..11], &cfg, 1).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    // Items only in the truth file join with no comparisons.
    let mut longer = truth.clone();
    longer.push("newcomer".into());
    let out = evaluate_realdata(&obs, &ids, &longer, &RealDataConfig { k: Some(3), ..cfg.clone() }, 1).unwrap();
    assert_eq!(out.n, 13);
    assert_eq!(out.ids.last().unwrap(), "newcomer");
    let e = evaluate_realdata(&obs, &ids, &truth, &RealDataConfig { k: Some(13), ..cfg }, 1).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}
