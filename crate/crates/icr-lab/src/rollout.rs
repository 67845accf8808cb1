//! Rollout and rollout-group containers shared by the sampling, reward,
//! objective, and metrics stages.

use serde::{Deserialize, Serialize};

use crate::policy::FeatureVector;
use crate::tasks::{Query, TokenId};

/// One sampled response together with everything later stages need:
/// the tokens, per-token log-probabilities under the snapshot policy that
/// generated it, the cached feature vectors of each generation context,
/// the verifier outcome, and the shaped reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    /// Generated tokens, including the answer digit and terminator.
    pub tokens: Vec<TokenId>,
    /// Log-probability of each token under the snapshot policy, at the
    /// sampling temperature. Same length as `tokens`; entries are ≤ 0.
    pub old_logprobs: Vec<f64>,
    /// Feature vector of the context each token was sampled in. Same
    /// length as `tokens`.
    pub features: Vec<FeatureVector>,
    /// Whether the budget ran out before the terminator. Truncated
    /// rollouts are always incorrect.
    pub truncated: bool,
    /// Verifier outcome.
    pub correct: bool,
    /// Total reward after length-penalty shaping (equals the correctness
    /// reward when no penalty is configured).
    pub shaped_reward: f64,
}

impl Rollout {
    /// Response length in tokens (answer digit and terminator included).
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Rollouts are never empty; this mirrors `len` for clippy's benefit.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The G rollouts drawn for one query, with the per-group quantities
/// derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub query: Query,
    pub rollouts: Vec<Rollout>,
    /// Group-normalized advantages, one per rollout: zero mean and unit
    /// population standard deviation, or all zero when the group's
    /// rewards have no variance.
    pub advantages: Vec<f64>,
    /// Indices of the regularizer's target set (the shortest correct
    /// rollouts under the default selection rule). Empty when no rollout
    /// qualifies.
    pub shortest_correct: Vec<usize>,
    /// Pearson correlation between length and correctness within the
    /// group; `None` when either variable has no variance.
    pub group_correlation: Option<f64>,
}

impl RolloutGroup {
    pub fn group_size(&self) -> usize {
        self.rollouts.len()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.rollouts.iter().map(Rollout::len).collect()
    }

    pub fn correct_flags(&self) -> Vec<bool> {
        self.rollouts.iter().map(|r| r.correct).collect()
    }
}
