//! Reward shaping: binary correctness plus optional length penalties.
//!
//! The shaped reward of rollout `i` is
//!
//! ```text
//! R_i = correct_i + λ · length_term_i
//! ```
//!
//! where the length term depends on the objective mode:
//!
//! - plain modes (`grpo`, `icr`, `only-regularizer`): no length term;
//! - fixed ramp (`+lpf`): 0 at or below ℓ_min, a linear ramp down to −1
//!   at ℓ_max, and −1 beyond — a penalty anchored to absolute budgets;
//! - group-wise (`+lpg`): min-max normalization of lengths within the
//!   rollout group, `0.5 − (len − min)/(max − min)`, so the shortest
//!   member earns +0.5 and the longest −0.5. Correct rollouts take the
//!   value as is; incorrect rollouts take `min(0, value)` so a wrong
//!   answer can never profit from brevity. Groups with all-equal lengths
//!   get a zero length term.

use crate::config::ObjectiveMode;
use crate::rollout::Rollout;

/// Binary correctness reward.
pub fn correctness_reward(correct: bool) -> f64 {
    if correct {
        1.0
    } else {
        0.0
    }
}

/// Fixed-ramp length penalty in `[−1, 0]`.
///
/// Callers must supply validated bounds (`lmin < lmax`); configuration
/// validation enforces this before training starts.
pub fn fixed_length_penalty(length: usize, lmin: usize, lmax: usize) -> f64 {
    debug_assert!(lmin < lmax, "ramp bounds must satisfy lmin < lmax");
    if length <= lmin {
        0.0
    } else if length <= lmax {
        (lmin as f64 - length as f64) / (lmax as f64 - lmin as f64)
    } else {
        -1.0
    }
}

/// Group-wise min-max length rewards in `[−0.5, +0.5]`.
///
/// Returns one length term per member. Incorrect members have positive
/// values clamped to zero; a degenerate group (all lengths equal) gets
/// zeros.
pub fn group_length_rewards(lengths: &[usize], correct: &[bool]) -> Vec<f64> {
    debug_assert_eq!(lengths.len(), correct.len());
    let min = lengths.iter().copied().min().unwrap_or(0);
    let max = lengths.iter().copied().max().unwrap_or(0);
    if max == min {
        return vec![0.0; lengths.len()];
    }
    let span = (max - min) as f64;
    lengths
        .iter()
        .zip(correct)
        .map(|(&len, &ok)| {
            let base = 0.5 - (len - min) as f64 / span;
            if ok {
                base
            } else {
                base.min(0.0)
            }
        })
        .collect()
}

/// Computes the shaped reward of every rollout in a group and stores it
/// in `shaped_reward`. The group is the shaping unit because the
/// group-wise penalty normalizes within it.
pub fn shape_group(
    rollouts: &mut [Rollout],
    mode: ObjectiveMode,
    lambda: f64,
    lmin: usize,
    lmax: usize,
) {
    let length_terms: Vec<f64> = if mode.has_fixed_length_penalty() {
        rollouts
            .iter()
            .map(|r| fixed_length_penalty(r.len(), lmin, lmax))
            .collect()
    } else if mode.has_group_length_penalty() {
        let lengths: Vec<usize> = rollouts.iter().map(Rollout::len).collect();
        let correct: Vec<bool> = rollouts.iter().map(|r| r.correct).collect();
        group_length_rewards(&lengths, &correct)
    } else {
        vec![0.0; rollouts.len()]
    };
    for (rollout, term) in rollouts.iter_mut().zip(length_terms) {
        rollout.shaped_reward = correctness_reward(rollout.correct) + lambda * term;
    }
}
