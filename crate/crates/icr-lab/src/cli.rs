//! Command-line interface: configuration loading, subcommand dispatch,
//! and exit-code mapping.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors (including
//! I/O), 2 on numerical aborts during training, 3 on oracle failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::checkpoint::load_checkpoint;
use crate::config::{ConfigFile, TrainConfig};
use crate::policy::FeatureLayout;
use crate::rng::seeded_stream;
use crate::tasks::{CorrectnessLaw, GroupDistribution, TaskSpec, UniformLengths};
use crate::trainer::{self, TrainError};
use crate::verification;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for usage, configuration, and I/O errors.
pub const EXIT_INVALID: i32 = 1;
/// Exit code for numerical aborts.
pub const EXIT_NUMERICAL: i32 = 2;
/// Exit code for oracle failures.
pub const EXIT_ORACLE: i32 = 3;

/// A desk-scale laboratory for on-policy reinforcement learning with
/// verifiable rewards, group-relative advantages, length penalties, and
/// implicit compression regularization.
#[derive(Parser, Debug)]
#[command(name = "icr-lab", version, disable_help_subcommand = true)]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Configuration override, applied after the file (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Cap on worker threads (does not affect results).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Master seed override (applied last).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a policy, writing metrics, checkpoints, and the resolved
    /// configuration into the output directory.
    Train {
        /// Continue from a checkpoint file instead of starting fresh.
        #[arg(long, value_name = "CHECKPOINT")]
        resume: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on held-out queries at the evaluation
    /// sampling settings (low temperature, nucleus cutoff, scaled
    /// budget).
    Eval {
        /// Checkpoint file to evaluate.
        #[arg(long, value_name = "CHECKPOINT")]
        checkpoint: PathBuf,
    },
    /// Run every sweep variation in the configuration grid and write the
    /// combined Pareto table.
    Sweep,
    /// Run the self-check oracle suite and print one line per oracle.
    Check,
    /// Sample synthetic rollout groups and emit them as CSV.
    SimulateGroups(SimulateArgs),
}

/// Parameters of the synthetic group distribution.
#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Number of groups to sample.
    #[arg(long, default_value_t = 1000)]
    pub groups: usize,

    /// Members per group.
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,

    /// Correctness law: probability of correctness as a function of
    /// length.
    #[arg(long, value_parser = ["decreasing", "increasing", "constant"], default_value = "decreasing")]
    pub law: String,

    /// Correctness probability for the constant law.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,

    /// Minimum member length.
    #[arg(long, default_value_t = 1)]
    pub min_length: usize,

    /// Maximum member length.
    #[arg(long, default_value_t = 64)]
    pub max_length: usize,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Failure {
        Failure {
            code: if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            },
            message: e.to_string(),
        }
    }
}

impl From<crate::config::ConfigError> for Failure {
    fn from(e: crate::config::ConfigError) -> Failure {
        Failure::invalid(e.to_string())
    }
}

impl From<crate::checkpoint::CheckpointError> for Failure {
    fn from(e: crate::checkpoint::CheckpointError) -> Failure {
        Failure::invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::invalid(e.to_string())
    }
}

/// Parses `argv` and runs the requested command, returning the process
/// exit code. Output goes to stdout; failures are reported on stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else
            // is a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(workers) = cli.workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// Loads the configuration file (if any) and applies overrides: `--set`
/// pairs in order, then the `--seed` shorthand.
fn resolve_config(cli: &Cli) -> Result<ConfigFile, Failure> {
    let mut file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::invalid(format!("cannot read config {}: {e}", path.display()))
            })?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    file.apply_overrides(cli.set.iter().map(String::as_str))?;
    if let Some(seed) = cli.seed {
        file.train.seed = seed;
    }
    Ok(file)
}

fn require_out(cli: &Cli, command: &str) -> Result<PathBuf, Failure> {
    cli.out
        .clone()
        .ok_or_else(|| Failure::invalid(format!("`{command}` requires --out DIR")))
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Train { resume } => {
            let out = require_out(cli, "train")?;
            let output = match resume {
                Some(checkpoint) => {
                    if cli.config.is_some() || !cli.set.is_empty() || cli.seed.is_some() {
                        return Err(Failure::invalid(
                            "--resume continues with the checkpointed configuration; \
                             configuration flags are not allowed",
                        ));
                    }
                    trainer::resume(checkpoint, &out)?
                }
                None => {
                    let file = resolve_config(cli)?;
                    file.train.validate()?;
                    trainer::run(&file.train, &out)?
                }
            };
            println!(
                "completed {} steps ({} this invocation) -> {}",
                output.state.step,
                output.records.len(),
                trainer::metrics_path(&out).display()
            );
            if let Some(last) = output.records.last() {
                let mut line = format!(
                    "final: train_accuracy={:.4} mean_length={:.2}",
                    last.train_accuracy, last.mean_length
                );
                if let (Some(acc), Some(len)) = (last.eval_accuracy, last.eval_mean_length) {
                    let _ = write!(line, " eval_accuracy={acc:.4} eval_mean_length={len:.2}");
                }
                println!("{line}");
            }
            Ok(())
        }
        Command::Eval { checkpoint } => {
            let loaded = load_checkpoint(checkpoint)?;
            let mut file = ConfigFile {
                train: loaded.config.clone(),
                sweep: Default::default(),
            };
            file.apply_overrides(cli.set.iter().map(String::as_str))?;
            if let Some(seed) = cli.seed {
                file.train.seed = seed;
            }
            let config = file.train;
            config.validate()?;
            let task = TaskSpec::new(config.digit_base, config.query_len, config.length_budget);
            let layout = FeatureLayout::new(&task, config.position_buckets);
            if layout != *loaded.params.layout() {
                return Err(Failure::invalid(
                    "configuration overrides change the feature layout; \
                     the checkpointed parameters are incompatible",
                ));
            }
            let (accuracy, mean_length) =
                trainer::evaluate(&loaded.params, &task, &config, loaded.step);
            println!(
                "checkpoint step {}: eval_accuracy={:.4} eval_mean_length={:.2} ({} queries)",
                loaded.step, accuracy, mean_length, config.eval_queries
            );
            if let Some(out) = &cli.out {
                fs::create_dir_all(out)?;
                let report = serde_json::json!({
                    "checkpoint_step": loaded.step,
                    "eval_accuracy": accuracy,
                    "eval_mean_length": mean_length,
                    "eval_queries": config.eval_queries,
                });
                fs::write(out.join("eval.json"), format!("{report}\n"))
                    .map_err(|e| Failure::invalid(e.to_string()))?;
            }
            Ok(())
        }
        Command::Sweep => {
            let out = require_out(cli, "sweep")?;
            let file = resolve_config(cli)?;
            file.train.validate()?;
            let variations = file.sweep.expand(&file.train);
            fs::create_dir_all(&out)?;
            fs::write(out.join("config.resolved"), file.render())?;
            println!("sweep: {} variations", variations.len());
            let result = trainer::sweep(&file.train, &variations, &out)?;
            for summary in &result.summaries {
                match &summary.outcome {
                    Ok(point) => println!(
                        "run {}: accuracy={:.4} mean_length={:.2}",
                        summary.run_id, point.accuracy, point.mean_length
                    ),
                    Err(failure) => {
                        println!("run {}: FAILED: {}", summary.run_id, failure.message)
                    }
                }
            }
            println!(
                "wrote {} ({} rows)",
                out.join("pareto.csv").display(),
                result.rows.len()
            );
            let failures = result.failures();
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure {
                    code: if failures.iter().any(|(_, f)| f.numerical) {
                        EXIT_NUMERICAL
                    } else {
                        EXIT_INVALID
                    },
                    message: format!("{} of {} runs failed", failures.len(), variations.len()),
                })
            }
        }
        Command::Check => {
            let seed = cli.seed.unwrap_or(0);
            let reports = verification::run_all(seed);
            for report in &reports {
                println!("{report}");
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed == 0 {
                println!("oracle suite: {} checks passed", reports.len());
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_ORACLE,
                    message: format!("{failed} of {} oracle checks failed", reports.len()),
                })
            }
        }
        Command::SimulateGroups(args) => {
            let csv = simulate_groups_csv(args, cli.seed.unwrap_or(0))?;
            match &cli.out {
                Some(out) => {
                    fs::create_dir_all(out)?;
                    let path = out.join("groups.csv");
                    fs::write(&path, csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

/// Samples groups from the requested distribution and renders them with
/// the fixed `group_id,member_id,length,correct` schema.
fn simulate_groups_csv(args: &SimulateArgs, seed: u64) -> Result<String, Failure> {
    if args.group_size == 0 || args.groups == 0 {
        return Err(Failure::invalid("--groups and --group-size must be >= 1"));
    }
    if args.min_length == 0 || args.min_length > args.max_length {
        return Err(Failure::invalid(
            "lengths must satisfy 1 <= min-length <= max-length",
        ));
    }
    if !(0.0..=1.0).contains(&args.p) {
        return Err(Failure::invalid("--p must lie in [0, 1]"));
    }
    let correctness = match args.law.as_str() {
        "decreasing" => CorrectnessLaw::decreasing(args.max_length),
        "increasing" => CorrectnessLaw::increasing(args.max_length),
        "constant" => CorrectnessLaw::Constant(args.p),
        other => return Err(Failure::invalid(format!("unknown law `{other}`"))),
    };
    let dist = GroupDistribution {
        lengths: UniformLengths {
            lo: args.min_length,
            hi: args.max_length,
        },
        correctness,
        group_size: args.group_size,
    };
    let mut stream = seeded_stream(seed, 0x600);
    let mut csv = String::from("group_id,member_id,length,correct\n");
    for group_id in 0..args.groups {
        for (member_id, (length, correct)) in dist.sample_group(&mut stream).iter().enumerate() {
            let _ = writeln!(csv, "{group_id},{member_id},{length},{correct}");
        }
    }
    Ok(csv)
}

/// Convenience used by tests: the path of the resolved-config snapshot a
/// run writes.
pub fn resolved_config_path(out_dir: &Path) -> PathBuf {
    out_dir.join("config.resolved")
}

/// Re-parses a resolved-config snapshot into a training configuration.
pub fn load_resolved_config(path: &Path) -> Result<TrainConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    ConfigFile::parse(&text)
        .map(|file| file.train)
        .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(args)
    }

    #[test]
    fn subcommands_and_global_flags_parse() {
        let cli = parse(&[
            "icr-lab",
            "train",
            "--config",
            "c.cfg",
            "--set",
            "steps=5",
            "--set",
            "lambda=2",
            "--out",
            "outdir",
            "--workers",
            "2",
            "--seed",
            "9",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Train { resume: None }));
        assert_eq!(cli.set, vec!["steps=5", "lambda=2"]);
        assert_eq!(cli.seed, Some(9));
        assert_eq!(cli.workers, Some(2));
    }

    #[test]
    fn unknown_flags_and_subcommands_are_usage_errors() {
        assert!(parse(&["icr-lab", "trigger"]).is_err());
        assert!(parse(&["icr-lab", "train", "--bogus"]).is_err());
        assert!(parse(&["icr-lab"]).is_err());
    }

    #[test]
    fn run_cli_maps_usage_errors_to_exit_one() {
        assert_eq!(run_cli(["icr-lab", "no-such-command"]), EXIT_INVALID);
        assert_eq!(run_cli(["icr-lab", "--help"]), EXIT_OK);
    }

    #[test]
    fn train_requires_an_output_directory() {
        assert_eq!(run_cli(["icr-lab", "train"]), EXIT_INVALID);
    }

    #[test]
    fn overrides_flow_into_the_resolved_config() {
        let cli = parse(&[
            "icr-lab",
            "train",
            "--set",
            "steps=7",
            "--set",
            "objective_mode=icr",
            "--seed",
            "4",
        ])
        .unwrap();
        let file = resolve_config(&cli).unwrap();
        assert_eq!(file.train.steps, 7);
        assert_eq!(
            file.train.objective_mode,
            crate::config::ObjectiveMode::Icr
        );
        assert_eq!(file.train.seed, 4);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let cli = parse(&["icr-lab", "train", "--set", "bogus_key=1"]).unwrap();
        assert!(resolve_config(&cli).is_err());
        let cli = parse(&["icr-lab", "train", "--set", "steps"]).unwrap();
        assert!(resolve_config(&cli).is_err());
    }

    #[test]
    fn simulated_groups_have_the_fixed_schema_and_are_seeded() {
        let args = SimulateArgs {
            groups: 3,
            group_size: 2,
            law: "decreasing".into(),
            p: 0.5,
            min_length: 1,
            max_length: 16,
        };
        let csv = simulate_groups_csv(&args, 1).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "group_id,member_id,length,correct");
        assert_eq!(csv.lines().count(), 1 + 3 * 2);
        for (i, line) in csv.lines().skip(1).enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 4);
            assert_eq!(fields[0].parse::<usize>().unwrap(), i / 2);
            assert_eq!(fields[1].parse::<usize>().unwrap(), i % 2);
            let length: usize = fields[2].parse().unwrap();
            assert!((1..=16).contains(&length));
            assert!(fields[3] == "true" || fields[3] == "false");
        }
        assert_eq!(simulate_groups_csv(&args, 1).unwrap(), csv);
        assert_ne!(simulate_groups_csv(&args, 2).unwrap(), csv);
    }

    #[test]
    fn simulate_group_arguments_are_validated() {
        let mut args = SimulateArgs {
            groups: 1,
            group_size: 8,
            law: "constant".into(),
            p: 1.5,
            min_length: 1,
            max_length: 8,
        };
        assert!(simulate_groups_csv(&args, 0).is_err());
        args.p = 0.5;
        args.min_length = 9;
        assert!(simulate_groups_csv(&args, 0).is_err());
    }
}
