//! Training objectives: group-normalized advantages, the clipped
//! surrogate, the shortest-correct selection rule, and batch/minibatch
//! objective evaluation with analytic gradients.
//!
//! The full-batch objective over groups `g` with rollouts `i` is
//!
//! ```text
//! J = 1/(|B|·G) Σ_g Σ_i (1/|o_i|) Σ_t min(r_t·A_i, clip(r_t)·A_i)
//!   + Σ_g 1[S_g ≠ ∅] (α0·β / (|S_g|·G)) Σ_{i∈S_g} (1/|o_i|) Σ_t min(r_t, clip(r_t))
//! ```
//!
//! where `r_t = π_θ(token)/π_snapshot(token)` at the sampling temperature,
//! `clip(r) = clamp(r, 1−ε_low, 1+ε_high)`, `A_i` are the group-normalized
//! advantages, and `S_g` is the selected target set. The first line is the
//! policy-gradient surrogate (absent in `only-regularizer` mode); the
//! second is the compression regularizer (present in `icr`, `icr+lpf`,
//! and `only-regularizer` modes). β is 1 by default, making each group's
//! net regularizer weight `α0/|S_g|` regardless of batch size; the
//! `icr_alpha_batch_scaled` flag sets β = |B| for the literal reading in
//! which the coefficient grows with the batch.
//!
//! Minibatch evaluation restricts both sums to a subset of rollouts while
//! keeping the same absolute weights, so one pass over a partition of the
//! batch reconstructs exactly the full-batch objective and gradient.
//!
//! Branch handling: the min is decided by comparing both arms, with ties
//! (including the band interior, where both arms agree) resolved toward
//! the unclipped arm. Only the unclipped arm carries gradient; a clipped
//! token contributes its value but no gradient. Ratios whose log exceeds
//! ±20 abort the step — the policy has diverged and the update would be
//! numerically meaningless.

use thiserror::Error;

use crate::config::{ObjectiveMode, SelectionVariant};
use crate::policy::PolicyParams;
use crate::rollout::RolloutGroup;

/// Largest tolerated |log ratio| before a step aborts.
pub const MAX_ABS_LOG_RATIO: f64 = 20.0;

/// Group-normalized advantages: `(R_i − mean) / std` with the population
/// standard deviation (divide by G). A group whose rewards are all equal
/// gets exactly zero advantages — no variance floor leaks into gradients.
pub fn group_advantages(rewards: &[f64]) -> Vec<f64> {
    let n = rewards.len();
    debug_assert!(n >= 1);
    // Literal equality, not a tolerance: identical rewards must yield
    // exactly zero advantages even when their floating-point mean
    // rounds (e.g. eight copies of 0.1).
    if rewards.iter().all(|&r| r == rewards[0]) {
        return vec![0.0; n];
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let var = rewards.iter().map(|&r| (r - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    rewards.iter().map(|&r| (r - mean) / std).collect()
}

/// One clipped-surrogate term with its branch decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateTerm {
    /// Value of the min.
    pub value: f64,
    /// Whether the clipped arm is active (no gradient flows).
    pub clipped: bool,
    /// Derivative of the value with respect to the ratio.
    pub r_gradient: f64,
}

/// The advantage-weighted surrogate `min(r·A, clip(r)·A)`.
///
/// Ties go to the unclipped arm, so the band interior and exact boundary
/// hits keep their gradient `A`.
pub fn surrogate_term(ratio: f64, advantage: f64, clip_low: f64, clip_high: f64) -> SurrogateTerm {
    let clipped_ratio = ratio.clamp(1.0 - clip_low, 1.0 + clip_high);
    let unclipped = ratio * advantage;
    let clipped = clipped_ratio * advantage;
    if unclipped <= clipped {
        SurrogateTerm {
            value: unclipped,
            clipped: false,
            r_gradient: advantage,
        }
    } else {
        SurrogateTerm {
            value: clipped,
            clipped: true,
            r_gradient: 0.0,
        }
    }
}

/// Convenience wrapper returning only the surrogate value.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_low: f64, clip_high: f64) -> f64 {
    surrogate_term(ratio, advantage, clip_low, clip_high).value
}

/// The advantage-free regularizer term `min(r, clip(r))`, which caps the
/// upside at `1 + ε_high` while keeping full gradient below it.
pub fn regularizer_term(ratio: f64, clip_low: f64, clip_high: f64) -> SurrogateTerm {
    let clipped_ratio = ratio.clamp(1.0 - clip_low, 1.0 + clip_high);
    if ratio <= clipped_ratio {
        SurrogateTerm {
            value: ratio,
            clipped: false,
            r_gradient: 1.0,
        }
    } else {
        SurrogateTerm {
            value: clipped_ratio,
            clipped: true,
            r_gradient: 0.0,
        }
    }
}

/// Selects the regularizer's target indices within one group.
///
/// The default rule is the shortest correct rollouts: the argmin of
/// length over correct members, all ties included, empty when nothing is
/// correct. The ablation variants select every rollout (`all-samples`) or
/// the shortest rollouts regardless of correctness (`shortest-any`).
pub fn select_target_set(
    lengths: &[usize],
    correct: &[bool],
    variant: SelectionVariant,
) -> Vec<usize> {
    debug_assert_eq!(lengths.len(), correct.len());
    match variant {
        SelectionVariant::ShortestCorrect => {
            let min = lengths
                .iter()
                .zip(correct)
                .filter(|(_, &ok)| ok)
                .map(|(&len, _)| len)
                .min();
            match min {
                Some(min) => (0..lengths.len())
                    .filter(|&i| correct[i] && lengths[i] == min)
                    .collect(),
                None => Vec::new(),
            }
        }
        SelectionVariant::AllSamples => (0..lengths.len()).collect(),
        SelectionVariant::ShortestAny => {
            let min = *lengths.iter().min().expect("non-empty group");
            (0..lengths.len()).filter(|&i| lengths[i] == min).collect()
        }
    }
}

/// Everything the objective needs beyond the rollout groups themselves.
#[derive(Clone, Debug)]
pub struct ObjectiveSettings {
    pub mode: ObjectiveMode,
    pub clip_low: f64,
    pub clip_high: f64,
    pub alpha0: f64,
    /// Scale the regularizer by the number of groups (the literal
    /// coefficient reading); off by default.
    pub alpha_batch_scaled: bool,
    /// Sampling temperature the rollouts were drawn at; new
    /// log-probabilities are computed at the same temperature so that
    /// ratios are exactly 1 when parameters equal the snapshot.
    pub temperature: f64,
}

/// Objective value and flat gradient of one evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveEval {
    pub objective: f64,
    pub gradient: Vec<f64>,
}

/// Numerical failures that abort a training step.
#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error(
        "probability ratio overflow at group {group}, rollout {member}, token {token}: \
         log-ratio {log_ratio}"
    )]
    RatioOverflow {
        group: usize,
        member: usize,
        token: usize,
        log_ratio: f64,
    },
}

/// Evaluates the full-batch objective and gradient over every rollout.
pub fn batch_loss_and_grad(
    groups: &[RolloutGroup],
    params: &PolicyParams,
    settings: &ObjectiveSettings,
) -> Result<ObjectiveEval, ObjectiveError> {
    let members: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, group)| (0..group.group_size()).map(move |i| (g, i)))
        .collect();
    minibatch_loss_and_grad(groups, &members, params, settings)
}

/// Evaluates the objective and gradient restricted to `members` (pairs of
/// group index and rollout index), with the same absolute weights as the
/// full-batch objective: summing the results over a partition of the
/// batch reconstructs the full-batch evaluation.
pub fn minibatch_loss_and_grad(
    groups: &[RolloutGroup],
    members: &[(usize, usize)],
    params: &PolicyParams,
    settings: &ObjectiveSettings,
) -> Result<ObjectiveEval, ObjectiveError> {
    let mut objective = 0.0;
    let mut gradient = vec![0.0; params.num_params()];
    let batch_groups = groups.len().max(1);
    let beta = if settings.alpha_batch_scaled {
        batch_groups as f64
    } else {
        1.0
    };

    for &(g, i) in members {
        let group = &groups[g];
        let rollout = &group.rollouts[i];
        let group_size = group.group_size() as f64;
        let len = rollout.len() as f64;

        // Per-rollout outer weights of the two objective terms.
        let surrogate_weight = if settings.mode.has_surrogate() {
            1.0 / (batch_groups as f64 * group_size * len)
        } else {
            0.0
        };
        let in_target = group.shortest_correct.contains(&i);
        let reg_weight = if settings.mode.has_regularizer() && in_target {
            settings.alpha0 * beta
                / (group.shortest_correct.len() as f64 * group_size * len)
        } else {
            0.0
        };
        if surrogate_weight == 0.0 && reg_weight == 0.0 {
            continue;
        }

        let advantage = group.advantages[i];
        for (t, (&token, features)) in rollout
            .tokens
            .iter()
            .zip(&rollout.features)
            .enumerate()
        {
            let new_logprob =
                params.log_probs(features, settings.temperature)[token.0 as usize];
            let log_ratio = new_logprob - rollout.old_logprobs[t];
            if !log_ratio.is_finite() || log_ratio.abs() > MAX_ABS_LOG_RATIO {
                return Err(ObjectiveError::RatioOverflow {
                    group: g,
                    member: i,
                    token: t,
                    log_ratio,
                });
            }
            let ratio = log_ratio.exp();

            if surrogate_weight != 0.0 {
                let term = surrogate_term(ratio, advantage, settings.clip_low, settings.clip_high);
                objective += surrogate_weight * term.value;
                if !term.clipped && term.r_gradient != 0.0 {
                    // d/dθ (r·A) = A · r · ∇ log π(token).
                    params.accumulate_logprob_grad(
                        features,
                        token,
                        settings.temperature,
                        surrogate_weight * term.r_gradient * ratio,
                        &mut gradient,
                    );
                }
            }
            if reg_weight != 0.0 {
                let term = regularizer_term(ratio, settings.clip_low, settings.clip_high);
                objective += reg_weight * term.value;
                if !term.clipped {
                    params.accumulate_logprob_grad(
                        features,
                        token,
                        settings.temperature,
                        reg_weight * term.r_gradient * ratio,
                        &mut gradient,
                    );
                }
            }
        }
    }
    Ok(ObjectiveEval {
        objective,
        gradient,
    })
}
