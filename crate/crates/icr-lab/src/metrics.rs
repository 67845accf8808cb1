//! Training diagnostics: length–accuracy correlation, regime
//! classification, shortest-correct length tracking, per-step records,
//! and accuracy–length Pareto tables.
//!
//! The central diagnostic is the Pearson correlation between response
//! length and binary correctness, computed within each rollout group and
//! averaged over the groups where it is defined. Its sign classifies the
//! training regime: negative means shorter responses are more often
//! correct (overthinking — there is removable redundancy), positive means
//! longer responses are more often correct (underthinking — compression
//! has cut into useful tokens). A small deadband around zero absorbs
//! sampling noise; the raw value is always logged alongside.
//!
//! Correlation uses the correctness flag, not the shaped reward: a length
//! penalty inside the reward would conflate the diagnostic with the
//! treatment.

use serde::{Deserialize, Serialize};

use crate::rollout::RolloutGroup;

/// Pearson correlation of two equal-length samples, or `None` when it is
/// undefined (fewer than two points, or either variable has zero
/// variance). Two-pass centered computation.
pub fn group_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    // Literal constancy check: a constant sample must be undefined even
    // when its floating-point mean rounds.
    if xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]) {
        return None;
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return None;
    }
    Some(cov / (var_x.sqrt() * var_y.sqrt()))
}

/// Length–correctness correlation of one group (flags as 0/1).
pub fn group_correlation_flags(lengths: &[usize], correct: &[bool]) -> Option<f64> {
    let xs: Vec<f64> = lengths.iter().map(|&l| l as f64).collect();
    let ys: Vec<f64> = correct.iter().map(|&c| c as u8 as f64).collect();
    group_correlation(&xs, &ys)
}

/// Mean of defined per-group correlations, plus the fraction of groups
/// where the correlation was defined. `(None, 0.0)` when no group
/// qualifies.
pub fn batch_correlation(correlations: &[Option<f64>]) -> (Option<f64>, f64) {
    if correlations.is_empty() {
        return (None, 0.0);
    }
    let defined: Vec<f64> = correlations.iter().filter_map(|&c| c).collect();
    let fraction = defined.len() as f64 / correlations.len() as f64;
    if defined.is_empty() {
        (None, 0.0)
    } else {
        (
            Some(defined.iter().sum::<f64>() / defined.len() as f64),
            fraction,
        )
    }
}

/// Training regime implied by the batch correlation sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Correlation below −deadband: shorter responses are more often
    /// correct; redundancy is removable.
    Overthinking,
    /// Correlation above +deadband: longer responses are more often
    /// correct; compression is cutting useful tokens.
    Underthinking,
    /// Inside the deadband, or undefined.
    Neutral,
}

/// Classifies the batch correlation with a `deadband`-wide neutral zone;
/// an undefined correlation is neutral.
pub fn classify_regime(batch_correlation: Option<f64>, deadband: f64) -> Regime {
    match batch_correlation {
        Some(c) if c < -deadband => Regime::Overthinking,
        Some(c) if c > deadband => Regime::Underthinking,
        _ => Regime::Neutral,
    }
}

/// Mean over groups with at least one correct rollout of the shortest
/// correct length; `None` when no group has a correct rollout. Computed
/// from correctness directly so it stays meaningful under the ablation
/// selection variants.
pub fn pi_s_mean_length(groups: &[RolloutGroup]) -> Option<f64> {
    let minima: Vec<f64> = groups
        .iter()
        .filter_map(|g| {
            g.rollouts
                .iter()
                .filter(|r| r.correct)
                .map(|r| r.len())
                .min()
                .map(|m| m as f64)
        })
        .collect();
    if minima.is_empty() {
        None
    } else {
        Some(minima.iter().sum::<f64>() / minima.len() as f64)
    }
}

/// One line of the metrics stream: everything measured about one
/// training step. Serializes to a stable flat JSON object, one per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step index (0-based).
    pub step: u64,
    /// Fraction of this step's rollouts that verified correct.
    pub train_accuracy: f64,
    /// Mean rollout length in tokens.
    pub mean_length: f64,
    /// Mean per-group length–correctness correlation (`null` when no
    /// group had a defined correlation).
    pub batch_correlation: Option<f64>,
    /// Fraction of groups with a defined correlation.
    pub valid_group_fraction: f64,
    /// Mean minimal correct length over groups with a non-empty target
    /// set (`null` when all were empty).
    pub pi_s_mean_length: Option<f64>,
    /// Objective value accumulated over the step's minibatch passes.
    pub objective_value: f64,
    /// L2 norm of the accumulated gradient over the step.
    pub grad_norm: f64,
    /// Regime classification of `batch_correlation`.
    pub regime: Regime,
    /// Held-out accuracy, on evaluation steps only.
    pub eval_accuracy: Option<f64>,
    /// Held-out mean length, on evaluation steps only.
    pub eval_mean_length: Option<f64>,
}

/// One sweep outcome: a point in accuracy–length space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub run_id: String,
    pub objective_mode: String,
    pub lambda: f64,
    pub mean_length: f64,
    pub accuracy: f64,
}

/// A Pareto point plus its dominance flag.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoRow {
    pub point: ParetoPoint,
    pub dominated: bool,
}

/// Flags dominated points and sorts rows by length.
///
/// A point is dominated when some other point has length ≤ and accuracy ≥
/// with at least one strict; exact duplicates therefore never dominate
/// each other and are both retained. Ties in length sort by accuracy
/// (descending) then run id, keeping the output deterministic.
pub fn pareto_table(points: &[ParetoPoint]) -> Vec<ParetoRow> {
    let mut rows: Vec<ParetoRow> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let dominated = points.iter().enumerate().any(|(j, q)| {
                j != i
                    && q.mean_length <= p.mean_length
                    && q.accuracy >= p.accuracy
                    && (q.mean_length < p.mean_length || q.accuracy > p.accuracy)
            });
            ParetoRow {
                point: p.clone(),
                dominated,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.point
            .mean_length
            .partial_cmp(&b.point.mean_length)
            .unwrap()
            .then(b.point.accuracy.partial_cmp(&a.point.accuracy).unwrap())
            .then(a.point.run_id.cmp(&b.point.run_id))
    });
    rows
}

/// Renders Pareto rows as CSV with a fixed header.
pub fn pareto_csv(rows: &[ParetoRow]) -> String {
    let mut out = String::from("run_id,objective_mode,lambda,mean_length,accuracy,dominated\n");
    for row in rows {
        let p = &row.point;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.run_id, p.objective_mode, p.lambda, p.mean_length, p.accuracy, row.dominated
        ));
    }
    out
}
