//! End-to-end trainer behavior: artifact layout, determinism, resume,
//! baseline equivalences, numerical aborts, and learning dynamics that
//! the run and sweep drivers promise.

use std::fs;
use std::path::Path;

use icr_lab::checkpoint::load_checkpoint;
use icr_lab::config::{ObjectiveMode, SelectionVariant, SweepVariation, TrainConfig};
use icr_lab::trainer::{self, TrainError};
use tempfile::tempdir;

/// Shrinks the default run so a test finishes in well under a second.
fn quick_config(seed: u64, steps: u64) -> TrainConfig {
    TrainConfig {
        seed,
        steps,
        ..TrainConfig::default()
    }
}

fn metrics_bytes(dir: &Path) -> Vec<u8> {
    fs::read(trainer::metrics_path(dir)).unwrap()
}

fn weight_bits(checkpoint: &Path) -> Vec<u64> {
    load_checkpoint(checkpoint)
        .unwrap()
        .params
        .weights()
        .iter()
        .map(|w| w.to_bits())
        .collect()
}

#[test]
fn two_identical_runs_produce_identical_artifacts() {
    let config = quick_config(11, 12);
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    trainer::run(&config, a.path()).unwrap();
    trainer::run(&config, b.path()).unwrap();

    assert_eq!(metrics_bytes(a.path()), metrics_bytes(b.path()));
    assert_eq!(
        fs::read(a.path().join("config.resolved")).unwrap(),
        fs::read(b.path().join("config.resolved")).unwrap()
    );
    let final_a = trainer::checkpoint_path(a.path(), 12);
    let final_b = trainer::checkpoint_path(b.path(), 12);
    assert_eq!(fs::read(final_a).unwrap(), fs::read(final_b).unwrap());
}

#[test]
fn step_records_do_not_depend_on_worker_count() {
    let config = quick_config(5, 6);
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let several = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    single.install(|| trainer::run(&config, a.path()).unwrap());
    several.install(|| trainer::run(&config, b.path()).unwrap());
    assert_eq!(metrics_bytes(a.path()), metrics_bytes(b.path()));
}

#[test]
fn zero_step_run_writes_the_initial_checkpoint_only() {
    let config = quick_config(1, 0);
    let dir = tempdir().unwrap();
    let output = trainer::run(&config, dir.path()).unwrap();

    assert!(output.records.is_empty());
    assert_eq!(output.state.step, 0);
    assert!(metrics_bytes(dir.path()).is_empty());
    assert!(dir.path().join("config.resolved").is_file());
    let names: Vec<String> = fs::read_dir(dir.path().join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, ["step_000000.json"]);
}

#[test]
fn checkpoints_land_on_the_cadence_and_final_step() {
    let config = TrainConfig {
        checkpoint_every: 4,
        ..quick_config(2, 10)
    };
    let dir = tempdir().unwrap();
    trainer::run(&config, dir.path()).unwrap();

    let mut names: Vec<String> = fs::read_dir(dir.path().join("checkpoints"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "step_000000.json",
            "step_000004.json",
            "step_000008.json",
            "step_000010.json",
        ]
    );
}

#[test]
fn resume_from_mid_run_checkpoint_reproduces_the_tail() {
    let config = TrainConfig {
        checkpoint_every: 5,
        ..quick_config(3, 20)
    };
    let full = tempdir().unwrap();
    trainer::run(&config, full.path()).unwrap();

    let resumed = tempdir().unwrap();
    fs::create_dir_all(resumed.path().join("checkpoints")).unwrap();
    let mid = trainer::checkpoint_path(full.path(), 10);
    let output = trainer::resume(&mid, resumed.path()).unwrap();

    let steps: Vec<u64> = output.records.iter().map(|r| r.step).collect();
    assert_eq!(steps, (10..=19).collect::<Vec<u64>>());

    let full_lines = String::from_utf8(metrics_bytes(full.path())).unwrap();
    let tail: Vec<&str> = full_lines.lines().skip(10).collect();
    let resumed_lines = String::from_utf8(metrics_bytes(resumed.path())).unwrap();
    assert_eq!(resumed_lines.lines().collect::<Vec<&str>>(), tail);

    assert_eq!(
        weight_bits(&trainer::checkpoint_path(full.path(), 20)),
        weight_bits(&trainer::checkpoint_path(resumed.path(), 20))
    );
}

#[test]
fn runaway_learning_rate_aborts_with_a_numerical_error() {
    let config = TrainConfig {
        learning_rate: 1e6,
        ..quick_config(1, 3)
    };
    let dir = tempdir().unwrap();
    let err = trainer::run(&config, dir.path()).unwrap_err();
    assert!(err.is_numerical(), "unexpected error: {err}");
    assert!(matches!(err, TrainError::Numerical { .. }));

    // The last checkpoint written before the abort still loads, so the
    // run stays resumable after the configuration is repaired.
    let initial = trainer::checkpoint_path(dir.path(), 0);
    assert!(load_checkpoint(&initial).is_ok());
}

#[test]
fn zero_lambda_penalty_modes_match_the_plain_baseline_bitwise() {
    let run_mode = |mode: ObjectiveMode| {
        let config = TrainConfig {
            objective_mode: mode,
            lambda: 0.0,
            ..quick_config(7, 15)
        };
        let dir = tempdir().unwrap();
        trainer::run(&config, dir.path()).unwrap();
        let metrics = metrics_bytes(dir.path());
        let bits = weight_bits(&trainer::checkpoint_path(dir.path(), 15));
        (metrics, bits)
    };

    let baseline = run_mode(ObjectiveMode::Grpo);
    assert_eq!(run_mode(ObjectiveMode::GrpoLpf), baseline);
    assert_eq!(run_mode(ObjectiveMode::GrpoLpg), baseline);

    let regularized = run_mode(ObjectiveMode::Icr);
    assert_eq!(run_mode(ObjectiveMode::IcrLpf), regularized);
}

#[test]
fn icr_without_any_correct_rollouts_matches_grpo_bitwise() {
    // A three-token budget filled by the strongly biased THINK head:
    // every rollout truncates, so no group ever has a correct member
    // and the regularizer target set stays empty.
    let run_mode = |mode: ObjectiveMode| {
        let config = TrainConfig {
            objective_mode: mode,
            length_budget: 3,
            lpf_lmin: 1,
            lpf_lmax: 3,
            eval_length_budget: 3,
            think_bias: 40.0,
            ..quick_config(4, 6)
        };
        let dir = tempdir().unwrap();
        let output = trainer::run(&config, dir.path()).unwrap();
        assert!(output.records.iter().all(|r| r.train_accuracy == 0.0));
        let metrics = metrics_bytes(dir.path());
        let bits = weight_bits(&trainer::checkpoint_path(dir.path(), 6));
        (metrics, bits)
    };

    assert_eq!(run_mode(ObjectiveMode::Icr), run_mode(ObjectiveMode::Grpo));
}

#[test]
fn momentum_runs_complete_and_differ_from_plain_gradient_ascent() {
    let run_with = |momentum: f64| {
        let config = TrainConfig {
            momentum,
            ..quick_config(6, 10)
        };
        let dir = tempdir().unwrap();
        trainer::run(&config, dir.path()).unwrap();
        weight_bits(&trainer::checkpoint_path(dir.path(), 10))
    };

    let plain = run_with(0.0);
    let heavy_ball = run_with(0.9);
    assert!(plain.iter().all(|bits| f64::from_bits(*bits).is_finite()));
    assert!(heavy_ball
        .iter()
        .all(|bits| f64::from_bits(*bits).is_finite()));
    assert_ne!(plain, heavy_ball);
}

#[test]
fn default_configuration_learns_across_seeds() {
    // The stock run must lift train accuracy well above the
    // overthinking-biased start on every seed, not merely on average.
    for seed in 1..=5 {
        let config = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let dir = tempdir().unwrap();
        let output = trainer::run(&config, dir.path()).unwrap();
        let first = output.records.first().unwrap().train_accuracy;
        let last = output.records.last().unwrap().train_accuracy;
        assert!(
            last > first,
            "seed {seed}: accuracy went {first:.4} -> {last:.4}"
        );
    }
}

#[test]
fn sweep_penalty_strength_orders_final_lengths() {
    let seeds: Vec<u64> = (1..=5).collect();
    let mut variations = Vec::new();
    for &lambda in &[0.5, 2.0] {
        for &seed in &seeds {
            variations.push(SweepVariation {
                objective_mode: ObjectiveMode::GrpoLpg,
                lambda,
                selection_variant: SelectionVariant::ShortestCorrect,
                seed,
            });
        }
    }
    let base = TrainConfig::default();
    let dir = tempdir().unwrap();
    let output = trainer::sweep(&base, &variations, dir.path()).unwrap();
    assert!(output.failures().is_empty());
    assert!(dir.path().join("pareto.csv").is_file());
    assert_eq!(output.summaries.len(), variations.len());

    let final_length = |lambda: f64, seed: u64| {
        output
            .summaries
            .iter()
            .find_map(|s| match &s.outcome {
                Ok(point)
                    if point.lambda == lambda && point.run_id.ends_with(&format!("seed{seed}")) =>
                {
                    Some(point.mean_length)
                }
                _ => None,
            })
            .unwrap()
    };
    let ordered = seeds
        .iter()
        .filter(|&&seed| final_length(2.0, seed) <= final_length(0.5, seed))
        .count();
    assert!(
        ordered >= 4,
        "stronger penalty left longer responses in {} of 5 seeds",
        5 - ordered
    );
}

#[test]
fn duplicate_sweep_variations_produce_identical_rows() {
    let variation = SweepVariation {
        objective_mode: ObjectiveMode::Grpo,
        lambda: 0.5,
        selection_variant: SelectionVariant::ShortestCorrect,
        seed: 9,
    };
    let base = quick_config(0, 4);
    let dir = tempdir().unwrap();
    let output = trainer::sweep(&base, &[variation.clone(), variation], dir.path()).unwrap();

    let points: Vec<_> = output
        .summaries
        .iter()
        .map(|s| s.outcome.as_ref().unwrap())
        .collect();
    assert_eq!(points[0].run_id, points[1].run_id);
    assert_eq!(points[0].mean_length, points[1].mean_length);
    assert_eq!(points[0].accuracy, points[1].accuracy);
}
