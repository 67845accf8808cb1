//! Run configuration: typed fields, plain-text parsing, overrides, and
//! validation.
//!
//! Configuration files are plain text with one `key = value` pair per
//! line. Blank lines are skipped and `#` starts a comment (full line or
//! trailing). Keys mirror [`TrainConfig`] fields one-to-one; `--set
//! key=value` overrides apply after file parsing through the same path.
//! Unknown keys are errors in both places.
//!
//! A file may also carry an optional sweep grid (`sweep_*` keys listing
//! comma-separated values); the grid expands to the cartesian product of
//! its axes, with each variation overriding the base configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which terms the training objective combines.
///
/// Every mode except `only-regularizer` includes the clipped-surrogate
/// policy-gradient term over group-normalized advantages. The `+lpf` and
/// `+lpg` suffixes add a length penalty to the scalar reward before
/// advantages are computed; `icr` modes add the shortest-correct
/// regularizer to the objective itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// Clipped surrogate over correctness-only rewards.
    #[serde(rename = "grpo")]
    Grpo,
    /// Surrogate plus a fixed-ramp length penalty in the reward.
    #[serde(rename = "grpo+lpf")]
    GrpoLpf,
    /// Surrogate plus a group-wise min-max length penalty in the reward.
    #[serde(rename = "grpo+lpg")]
    GrpoLpg,
    /// Surrogate plus the shortest-correct compression regularizer.
    #[serde(rename = "icr")]
    Icr,
    /// Both the fixed-ramp penalty and the compression regularizer.
    #[serde(rename = "icr+lpf")]
    IcrLpf,
    /// The compression regularizer alone, no surrogate term.
    #[serde(rename = "only-regularizer")]
    OnlyRegularizer,
}

impl ObjectiveMode {
    /// All modes, in canonical order.
    pub const ALL: [ObjectiveMode; 6] = [
        ObjectiveMode::Grpo,
        ObjectiveMode::GrpoLpf,
        ObjectiveMode::GrpoLpg,
        ObjectiveMode::Icr,
        ObjectiveMode::IcrLpf,
        ObjectiveMode::OnlyRegularizer,
    ];

    /// Whether the clipped-surrogate policy-gradient term is present.
    pub fn has_surrogate(self) -> bool {
        !matches!(self, ObjectiveMode::OnlyRegularizer)
    }

    /// Whether the shortest-correct regularizer is present.
    pub fn has_regularizer(self) -> bool {
        matches!(
            self,
            ObjectiveMode::Icr | ObjectiveMode::IcrLpf | ObjectiveMode::OnlyRegularizer
        )
    }

    /// Whether the reward includes the fixed-ramp length penalty.
    pub fn has_fixed_length_penalty(self) -> bool {
        matches!(self, ObjectiveMode::GrpoLpf | ObjectiveMode::IcrLpf)
    }

    /// Whether the reward includes the group-wise length penalty.
    pub fn has_group_length_penalty(self) -> bool {
        matches!(self, ObjectiveMode::GrpoLpg)
    }

    fn as_str(self) -> &'static str {
        match self {
            ObjectiveMode::Grpo => "grpo",
            ObjectiveMode::GrpoLpf => "grpo+lpf",
            ObjectiveMode::GrpoLpg => "grpo+lpg",
            ObjectiveMode::Icr => "icr",
            ObjectiveMode::IcrLpf => "icr+lpf",
            ObjectiveMode::OnlyRegularizer => "only-regularizer",
        }
    }
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "grpo" => Ok(ObjectiveMode::Grpo),
            "grpo+lpf" => Ok(ObjectiveMode::GrpoLpf),
            "grpo+lpg" => Ok(ObjectiveMode::GrpoLpg),
            "icr" => Ok(ObjectiveMode::Icr),
            "icr+lpf" => Ok(ObjectiveMode::IcrLpf),
            "only-regularizer" => Ok(ObjectiveMode::OnlyRegularizer),
            other => Err(ConfigError::InvalidValue {
                key: "objective_mode".into(),
                value: other.into(),
                expected: "one of grpo, grpo+lpf, grpo+lpg, icr, icr+lpf, only-regularizer".into(),
            }),
        }
    }
}

/// How the regularizer's target set is selected within a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionVariant {
    /// Shortest correct rollouts (the standard rule).
    #[serde(rename = "shortest-correct")]
    ShortestCorrect,
    /// Every rollout in the group, correct or not.
    #[serde(rename = "all-samples")]
    AllSamples,
    /// Shortest rollouts regardless of correctness.
    #[serde(rename = "shortest-any")]
    ShortestAny,
}

impl SelectionVariant {
    fn as_str(self) -> &'static str {
        match self {
            SelectionVariant::ShortestCorrect => "shortest-correct",
            SelectionVariant::AllSamples => "all-samples",
            SelectionVariant::ShortestAny => "shortest-any",
        }
    }
}

impl fmt::Display for SelectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionVariant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "shortest-correct" => Ok(SelectionVariant::ShortestCorrect),
            "all-samples" => Ok(SelectionVariant::AllSamples),
            "shortest-any" => Ok(SelectionVariant::ShortestAny),
            other => Err(ConfigError::InvalidValue {
                key: "selection_variant".into(),
                value: other.into(),
                expected: "one of shortest-correct, all-samples, shortest-any".into(),
            }),
        }
    }
}

/// Full configuration of one training run.
///
/// Defaults are the desk-scale settings: small groups and budgets that
/// keep a 300-step run in the seconds-to-minutes range while preserving
/// the qualitative training dynamics of interest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Rollouts per query (G). Default 8.
    pub group_size: usize,
    /// Queries per batch (|B|). Default 32.
    pub batch_queries: usize,
    /// Rollouts per gradient step within a batch. Default 64.
    pub minibatch_size: usize,
    /// Lower clip width for the surrogate ratio. Default 0.2.
    pub clip_low: f64,
    /// Upper clip width for the surrogate ratio. Default 0.2.
    pub clip_high: f64,
    /// Gradient-ascent step size. Default 2.0, sized for the desk-scale task.
    pub learning_rate: f64,
    /// Momentum coefficient for the optional heavy-ball term; 0 disables.
    pub momentum: f64,
    /// Softmax temperature for training rollouts. Default 1.0.
    pub sample_temperature: f64,
    /// Maximum tokens per training rollout (L_max). Default 64.
    pub length_budget: usize,
    /// Which objective terms to train with.
    pub objective_mode: ObjectiveMode,
    /// Regularizer target-set selection rule.
    pub selection_variant: SelectionVariant,
    /// Length-penalty weight λ in the shaped reward.
    pub lambda: f64,
    /// Base regularizer coefficient α0.
    pub alpha0: f64,
    /// Fixed-ramp penalty start (no penalty at or below). Default 24.
    pub lpf_lmin: usize,
    /// Fixed-ramp penalty end (full −1 beyond). Default 48.
    pub lpf_lmax: usize,
    /// Master seed for every random stream in the run.
    pub seed: u64,
    /// Number of training steps.
    pub steps: u64,
    /// Digit alphabet size of the modular-sum task (B_digits).
    pub digit_base: usize,
    /// Digits per query.
    pub query_len: usize,
    /// Equal-width position buckets over [0, length_budget].
    pub position_buckets: usize,
    /// Initial logit bias of the THINK token (overthinking-biased start).
    pub think_bias: f64,
    /// Evaluate every this many steps (and always on the final step).
    pub eval_every: u64,
    /// Held-out queries per evaluation pass.
    pub eval_queries: usize,
    /// Softmax temperature for evaluation rollouts. Default 0.1.
    pub eval_temperature: f64,
    /// Nucleus (top-p) cutoff for evaluation sampling; 1.0 disables.
    pub eval_top_p: f64,
    /// Maximum tokens per evaluation rollout (scaled-up budget).
    pub eval_length_budget: usize,
    /// Checkpoint every this many steps (and always on the final step).
    pub checkpoint_every: u64,
    /// Half-width of the neutral band in regime classification.
    pub regime_deadband: f64,
    /// Scale the regularizer weight by batch_queries instead of keeping
    /// the per-group weight batch-size invariant. Off by default.
    pub icr_alpha_batch_scaled: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            group_size: 8,
            batch_queries: 32,
            minibatch_size: 64,
            clip_low: 0.2,
            clip_high: 0.2,
            learning_rate: 2.0,
            momentum: 0.0,
            sample_temperature: 1.0,
            length_budget: 64,
            objective_mode: ObjectiveMode::Grpo,
            selection_variant: SelectionVariant::ShortestCorrect,
            lambda: 0.5,
            alpha0: 0.5,
            lpf_lmin: 24,
            lpf_lmax: 48,
            seed: 0,
            steps: 300,
            digit_base: 4,
            query_len: 2,
            position_buckets: 8,
            think_bias: 2.0,
            eval_every: 10,
            eval_queries: 256,
            eval_temperature: 0.1,
            eval_top_p: 0.95,
            eval_length_budget: 128,
            checkpoint_every: 25,
            regime_deadband: 0.02,
            icr_alpha_batch_scaled: false,
        }
    }
}

/// Errors raised while reading or validating configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: expected {expected}")]
    InvalidValue {
        key: String,
        value: String,
        expected: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// One axis combination of a sweep grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepVariation {
    pub objective_mode: ObjectiveMode,
    pub lambda: f64,
    pub selection_variant: SelectionVariant,
    pub seed: u64,
}

impl SweepVariation {
    /// Stable identifier used for run directories and Pareto rows.
    /// Derived from the variation alone, so duplicate variations map to
    /// identical identifiers.
    pub fn run_id(&self) -> String {
        format!(
            "{}_lam{}_{}_seed{}",
            self.objective_mode, self.lambda, self.selection_variant, self.seed
        )
    }
}

/// Sweep grid axes; the grid is the cartesian product of the non-empty
/// axes, with empty axes falling back to the base configuration's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepGrid {
    pub objective_modes: Vec<ObjectiveMode>,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub selection_variants: Vec<SelectionVariant>,
}

impl SweepGrid {
    /// Whether any axis was given.
    pub fn is_empty(&self) -> bool {
        self.objective_modes.is_empty()
            && self.lambdas.is_empty()
            && self.seeds.is_empty()
            && self.selection_variants.is_empty()
    }

    /// Expands the grid against a base configuration, in deterministic
    /// order (modes, then λ, then variants, then seeds).
    pub fn expand(&self, base: &TrainConfig) -> Vec<SweepVariation> {
        let modes = fallback(&self.objective_modes, base.objective_mode);
        let lambdas = fallback(&self.lambdas, base.lambda);
        let variants = fallback(&self.selection_variants, base.selection_variant);
        let seeds = fallback(&self.seeds, base.seed);
        let mut out = Vec::new();
        for &objective_mode in &modes {
            for &lambda in &lambdas {
                for &selection_variant in &variants {
                    for &seed in &seeds {
                        out.push(SweepVariation {
                            objective_mode,
                            lambda,
                            selection_variant,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

fn fallback<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

/// A parsed configuration file: the base run configuration plus an
/// optional sweep grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub train: TrainConfig,
    pub sweep: SweepGrid,
}

impl ConfigFile {
    /// Parses configuration text (see module docs for the format).
    pub fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        let mut file = ConfigFile::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.trim().to_string(),
            })?;
            file.set(key.trim(), value.trim())?;
        }
        Ok(file)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let t = &mut self.train;
        match key {
            "group_size" => t.group_size = parse_num(key, value)?,
            "batch_queries" => t.batch_queries = parse_num(key, value)?,
            "minibatch_size" => t.minibatch_size = parse_num(key, value)?,
            "clip_low" => t.clip_low = parse_num(key, value)?,
            "clip_high" => t.clip_high = parse_num(key, value)?,
            "learning_rate" => t.learning_rate = parse_num(key, value)?,
            "momentum" => t.momentum = parse_num(key, value)?,
            "sample_temperature" => t.sample_temperature = parse_num(key, value)?,
            "length_budget" => t.length_budget = parse_num(key, value)?,
            "objective_mode" => t.objective_mode = value.parse()?,
            "selection_variant" => t.selection_variant = value.parse()?,
            "lambda" => t.lambda = parse_num(key, value)?,
            "alpha0" => t.alpha0 = parse_num(key, value)?,
            "lpf_lmin" => t.lpf_lmin = parse_num(key, value)?,
            "lpf_lmax" => t.lpf_lmax = parse_num(key, value)?,
            "seed" => t.seed = parse_num(key, value)?,
            "steps" => t.steps = parse_num(key, value)?,
            "digit_base" => t.digit_base = parse_num(key, value)?,
            "query_len" => t.query_len = parse_num(key, value)?,
            "position_buckets" => t.position_buckets = parse_num(key, value)?,
            "think_bias" => t.think_bias = parse_num(key, value)?,
            "eval_every" => t.eval_every = parse_num(key, value)?,
            "eval_queries" => t.eval_queries = parse_num(key, value)?,
            "eval_temperature" => t.eval_temperature = parse_num(key, value)?,
            "eval_top_p" => t.eval_top_p = parse_num(key, value)?,
            "eval_length_budget" => t.eval_length_budget = parse_num(key, value)?,
            "checkpoint_every" => t.checkpoint_every = parse_num(key, value)?,
            "regime_deadband" => t.regime_deadband = parse_num(key, value)?,
            "icr_alpha_batch_scaled" => t.icr_alpha_batch_scaled = parse_bool(key, value)?,
            "sweep_objective_modes" => {
                self.sweep.objective_modes = parse_list(value, |v| v.parse())?
            }
            "sweep_lambdas" => self.sweep.lambdas = parse_list(value, |v| parse_num("lambda", v))?,
            "sweep_seeds" => self.sweep.seeds = parse_list(value, |v| parse_num("seed", v))?,
            "sweep_selection_variants" => {
                self.sweep.selection_variants = parse_list(value, |v| v.parse())?
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies a sequence of `key=value` overrides.
    pub fn apply_overrides<'a, I: IntoIterator<Item = &'a str>>(
        &mut self,
        overrides: I,
    ) -> Result<(), ConfigError> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: 0,
                text: item.to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Renders the resolved configuration as parseable text, sweep axes
    /// included when present. `parse(render(x)) == x`.
    pub fn render(&self) -> String {
        let t = &self.train;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("group_size", t.group_size.to_string());
        kv("batch_queries", t.batch_queries.to_string());
        kv("minibatch_size", t.minibatch_size.to_string());
        kv("clip_low", fmt_f64(t.clip_low));
        kv("clip_high", fmt_f64(t.clip_high));
        kv("learning_rate", fmt_f64(t.learning_rate));
        kv("momentum", fmt_f64(t.momentum));
        kv("sample_temperature", fmt_f64(t.sample_temperature));
        kv("length_budget", t.length_budget.to_string());
        kv("objective_mode", t.objective_mode.to_string());
        kv("selection_variant", t.selection_variant.to_string());
        kv("lambda", fmt_f64(t.lambda));
        kv("alpha0", fmt_f64(t.alpha0));
        kv("lpf_lmin", t.lpf_lmin.to_string());
        kv("lpf_lmax", t.lpf_lmax.to_string());
        kv("seed", t.seed.to_string());
        kv("steps", t.steps.to_string());
        kv("digit_base", t.digit_base.to_string());
        kv("query_len", t.query_len.to_string());
        kv("position_buckets", t.position_buckets.to_string());
        kv("think_bias", fmt_f64(t.think_bias));
        kv("eval_every", t.eval_every.to_string());
        kv("eval_queries", t.eval_queries.to_string());
        kv("eval_temperature", fmt_f64(t.eval_temperature));
        kv("eval_top_p", fmt_f64(t.eval_top_p));
        kv("eval_length_budget", t.eval_length_budget.to_string());
        kv("checkpoint_every", t.checkpoint_every.to_string());
        kv("regime_deadband", fmt_f64(t.regime_deadband));
        kv(
            "icr_alpha_batch_scaled",
            t.icr_alpha_batch_scaled.to_string(),
        );
        if !self.sweep.objective_modes.is_empty() {
            kv("sweep_objective_modes", join(&self.sweep.objective_modes));
        }
        if !self.sweep.lambdas.is_empty() {
            let items: Vec<String> = self.sweep.lambdas.iter().map(|&x| fmt_f64(x)).collect();
            kv("sweep_lambdas", items.join(","));
        }
        if !self.sweep.seeds.is_empty() {
            kv("sweep_seeds", join(&self.sweep.seeds));
        }
        if !self.sweep.selection_variants.is_empty() {
            kv(
                "sweep_selection_variants",
                join(&self.sweep.selection_variants),
            );
        }
        out
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Formats an f64 so that parsing it back reproduces the value exactly.
fn fmt_f64(x: f64) -> String {
    let mut buf = ryu_style(x);
    if !buf.contains('.') && !buf.contains('e') && !buf.contains("inf") && !buf.contains("NaN") {
        buf.push_str(".0");
    }
    buf
}

fn ryu_style(x: f64) -> String {
    // `{}` on f64 produces the shortest string that round-trips.
    format!("{x}")
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "a number".into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "true or false".into(),
        }),
    }
}

fn parse_list<T>(
    value: &str,
    parse: impl Fn(&str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(parse)
        .collect()
}

impl TrainConfig {
    /// Checks every field constraint, returning the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.group_size < 2 {
            return fail(format!("group_size must be >= 2, got {}", self.group_size));
        }
        if self.group_size > 4095 {
            return fail(format!(
                "group_size must be <= 4095 (random-stream id budget), got {}",
                self.group_size
            ));
        }
        if self.batch_queries == 0 {
            return fail("batch_queries must be >= 1".into());
        }
        if self.batch_queries > 65_535 {
            return fail(format!(
                "batch_queries must be <= 65535 (random-stream id budget), got {}",
                self.batch_queries
            ));
        }
        if self.minibatch_size == 0 {
            return fail("minibatch_size must be >= 1".into());
        }
        for (name, eps) in [("clip_low", self.clip_low), ("clip_high", self.clip_high)] {
            if !(eps > 0.0 && eps < 1.0) {
                return fail(format!("{name} must lie in (0, 1), got {eps}"));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.sample_temperature > 0.0 && self.sample_temperature.is_finite()) {
            return fail(format!(
                "sample_temperature must be positive, got {}",
                self.sample_temperature
            ));
        }
        if self.length_budget < 3 {
            return fail(format!(
                "length_budget must be >= 3 (shortest correct response), got {}",
                self.length_budget
            ));
        }
        if !(self.lpf_lmin < self.lpf_lmax && self.lpf_lmax <= self.length_budget) {
            return fail(format!(
                "length-penalty bounds must satisfy lpf_lmin < lpf_lmax <= length_budget, \
                 got {} / {} / {}",
                self.lpf_lmin, self.lpf_lmax, self.length_budget
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.alpha0 >= 0.0 && self.alpha0.is_finite()) {
            return fail(format!("alpha0 must be finite and >= 0, got {}", self.alpha0));
        }
        if self.digit_base < 2 {
            return fail(format!("digit_base must be >= 2, got {}", self.digit_base));
        }
        if self.query_len == 0 {
            return fail("query_len must be >= 1".into());
        }
        if self.position_buckets == 0 {
            return fail("position_buckets must be >= 1".into());
        }
        if self.eval_every == 0 {
            return fail("eval_every must be >= 1".into());
        }
        if self.eval_queries == 0 {
            return fail("eval_queries must be >= 1".into());
        }
        if self.eval_queries > 65_535 {
            return fail(format!(
                "eval_queries must be <= 65535 (random-stream id budget), got {}",
                self.eval_queries
            ));
        }
        if self.steps > u32::MAX as u64 {
            return fail(format!(
                "steps must be <= {} (random-stream id budget), got {}",
                u32::MAX,
                self.steps
            ));
        }
        if !(self.eval_temperature > 0.0 && self.eval_temperature.is_finite()) {
            return fail(format!(
                "eval_temperature must be positive, got {}",
                self.eval_temperature
            ));
        }
        if !(self.eval_top_p > 0.0 && self.eval_top_p <= 1.0) {
            return fail(format!(
                "eval_top_p must lie in (0, 1], got {}",
                self.eval_top_p
            ));
        }
        if self.eval_length_budget < self.length_budget {
            return fail(format!(
                "eval_length_budget must be >= length_budget, got {} < {}",
                self.eval_length_budget, self.length_budget
            ));
        }
        if self.checkpoint_every == 0 {
            return fail("checkpoint_every must be >= 1".into());
        }
        if !(self.regime_deadband >= 0.0 && self.regime_deadband.is_finite()) {
            return fail(format!(
                "regime_deadband must be finite and >= 0, got {}",
                self.regime_deadband
            ));
        }
        Ok(())
    }
}
