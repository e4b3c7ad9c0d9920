use std::fs;

use proptest::prelude::*;
use solar_core::harness::{
    aggregate, aggregate_dir, execute, run_experiment, AggregateMode, ExperimentConfig,
    LabeledTrace,
};
use solar_core::{Error, Trace, TraceRecord};

fn config(dir: &std::path::Path, instance: &str, budget: u64) -> ExperimentConfig {
    let json = format!(
        r#"{{
            "instance": "{instance}",
            "algorithms": [
                {{"kind": "solar", "config": {{"outer_iterations": 10, "inner_iterations": 100000, "base_dim": 2}}}},
                {{"kind": "simulated_annealing", "name": "sa"}}
            ],
            "seeds": [0, 1, 2],
            "budget": {budget},
            "output_dir": {dir:?},
            "stride": 5
        }}"#
    );
    ExperimentConfig::from_json(&json).unwrap()
}

#[test]
fn two_algorithms_three_seeds_six_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "quad-10", 2000);
    let files = run_experiment(&cfg).unwrap();
    assert_eq!(files.len(), 6);
    let csvs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "csv")
        .count();
    assert_eq!(csvs, 6);
    assert!(dir.path().join("sa__seed2.json").exists());
    assert!(dir.path().join("solar__seed0.csv").exists());
}

#[test]
fn rerun_gives_identical_payloads() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut c1 = config(d1.path(), "quad-10", 3000);
    c1.workers = Some(1);
    let mut c2 = config(d2.path(), "quad-10", 3000);
    c2.workers = Some(4);
    run_experiment(&c1).unwrap();
    run_experiment(&c2).unwrap();
    for stem in ["solar__seed0", "solar__seed1", "sa__seed2"] {
        let read = |d: &std::path::Path| {
            Trace::from_csv(&fs::read_to_string(d.join(format!("{stem}.csv"))).unwrap())
                .unwrap()
                .payload_csv()
        };
        assert_eq!(read(d1.path()), read(d2.path()), "{stem}");
    }
}

#[test]
fn budget_caps_every_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "rastrigin-200", 1000);
    cfg.algorithms[0] = serde_json::from_str(
        r#"{"kind": "solar", "config": {"outer_iterations": 10, "inner_iterations": 1000, "base_dim": 20}}"#,
    )
    .unwrap();
    for run in execute(&cfg).unwrap() {
        assert!(run.trace.last().unwrap().evals <= 1000);
        assert!(run.meta.final_evals <= 1000);
        assert!(run.trace.is_monotone());
    }
}

#[test]
fn trace_files_round_trip_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "quad-10", 1500);
    let runs = execute(&cfg).unwrap();
    solar_core::harness::write_outputs(dir.path(), &runs).unwrap();
    for run in &runs {
        let stem = format!("{}__seed{}", run.meta.algorithm, run.meta.seed);
        let parsed = Trace::from_csv(&fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap()).unwrap();
        assert_eq!(parsed, run.trace);
    }
    for mode in [AggregateMode::Stddev, AggregateMode::Minmax] {
        let summaries = aggregate_dir(dir.path(), mode).unwrap();
        assert_eq!(summaries.len(), 2);
        for s in &summaries {
            assert_eq!(s.finals.len(), 3);
            assert!(s.evals.windows(2).all(|w| w[1] - w[0] == 5));
            for i in 0..s.evals.len() {
                assert!(s.lower[i] <= s.mean[i] && s.mean[i] <= s.upper[i]);
            }
        }
    }
    assert!(dir.path().join("summary__minmax.json").exists());
    assert!(dir.path().join("summary__stddev__sa.csv").exists());
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "quad-10", 100);
    cfg.seeds.clear();
    assert!(matches!(execute(&cfg), Err(Error::InvalidConfig(_))));
    let cfg = config(dir.path(), "no-such-instance", 100);
    assert!(matches!(execute(&cfg), Err(Error::UnknownInstance(_))));
    let cfg = config(dir.path(), "quad-10", 0);
    assert!(matches!(execute(&cfg), Err(Error::ZeroBudget)));
    // cg on a function without gradient
    let json = r#"{"instance": "dvg02-5", "seeds": [0], "budget": 100,
        "algorithms": [{"kind": "cg", "cg": {"formula": "fletcher_reeves", "restarts": false}}]}"#;
    let cfg = ExperimentConfig::from_json(json).unwrap();
    assert!(matches!(execute(&cfg), Err(Error::GradientUnavailable)));
}

#[test]
fn inline_instance_config() {
    let json = r#"{"instance": {"family": "quadratic", "n": 4, "scale": 1.0, "half_width": 5.0, "seed": 3},
        "seeds": [7], "budget": 500, "algorithms": [{"kind": "momentum_three_point"}]}"#;
    let cfg = ExperimentConfig::from_json(json).unwrap();
    let runs = execute(&cfg).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(runs[0].meta.instance, "quad-4-s3");
}

fn synthetic(seed: u64, pts: &[(u64, f64)]) -> LabeledTrace {
    let mut best = f64::INFINITY;
    let records = pts
        .iter()
        .map(|&(e, f)| {
            best = best.min(f);
            TraceRecord {
                evals: e,
                iter: e,
                best_f: best,
                wall_ms: 0.0,
            }
        })
        .collect();
    LabeledTrace {
        algorithm: "x".into(),
        instance: "y".into(),
        seed,
        trace: Trace { records },
    }
}

proptest! {
    #[test]
    fn aggregation_is_permutation_invariant(
        raw in prop::collection::vec(prop::collection::vec((1u64..20, -100.0f64..100.0), 1..30), 1..6),
        perm_seed in any::<u64>(),
        stride in 1u64..10,
    ) {
        let traces: Vec<LabeledTrace> = raw
            .iter()
            .enumerate()
            .map(|(s, steps)| {
                let mut e = 0;
                let pts: Vec<(u64, f64)> = steps.iter().map(|(d, f)| { e += d; (e, *f) }).collect();
                synthetic(s as u64, &pts)
            })
            .collect();
        let mut shuffled = traces.clone();
        let k = shuffled.len();
        for i in (1..k).rev() {
            shuffled.swap(i, (perm_seed as usize).wrapping_mul(i + 7) % (i + 1));
        }
        for mode in [AggregateMode::Stddev, AggregateMode::Minmax] {
            let a = aggregate(&traces, mode, stride).unwrap();
            let b = aggregate(&shuffled, mode, stride).unwrap();
            prop_assert_eq!(&a, &b);
            for i in 0..a.evals.len() {
                prop_assert!(a.lower[i] <= a.mean[i] && a.mean[i] <= a.upper[i]);
            }
        }
    }
}
