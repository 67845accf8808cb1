//! A linear-softmax autoregressive policy with exact log-probabilities
//! and analytic gradients.
//!
//! The policy scores the next token as `W · φ(context)` where `φ` is a
//! sparse binary feature vector with exactly three active entries:
//!
//! ```text
//! φ = [ previous-token one-hot (vocab + BOS) |
//!       position-bucket one-hot              |
//!       running digit-sum one-hot ]
//! ```
//!
//! The running sum is the query's digit sum plus every digit emitted so
//! far, modulo the task base — the task's sufficient statistic, so a
//! correct answer policy is representable, but scratchpad digits disturb
//! the feature and make blind digit emission costly.
//!
//! Gradients of `log π(token | context)` are exact: the observed token's
//! row receives `(1 − p_token) · φ` and every other row `v` receives
//! `(−p_v) · φ`, scaled by `1/temperature` when sampling is tempered.
//!
//! Initialization biases the THINK logit upward in thinking contexts
//! (previous token BOS or THINK), which makes early rollouts long and
//! frequently truncated — the overthinking starting regime — while
//! leaving post-answer contexts uniform so that correct completions stay
//! discoverable.

use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;
use crate::rollout::Rollout;
use crate::tasks::{Query, TaskSpec, TokenId};

/// Shape of the feature space and its task-derived block structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    vocab_size: usize,
    position_buckets: usize,
    digit_base: usize,
    /// Budget used to scale position buckets; positions beyond it clamp
    /// into the last bucket.
    length_budget: usize,
}

impl FeatureLayout {
    /// Builds the layout for a task with the given position resolution.
    pub fn new(task: &TaskSpec, position_buckets: usize) -> FeatureLayout {
        assert!(position_buckets >= 1, "need at least one position bucket");
        FeatureLayout {
            vocab_size: task.vocab_size(),
            position_buckets,
            digit_base: task.digit_base(),
            length_budget: task.length_budget(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Width of the previous-token block: the vocabulary plus a
    /// beginning-of-sequence slot.
    pub fn prev_block(&self) -> usize {
        self.vocab_size + 1
    }

    /// Flat index of the BOS slot within the feature vector.
    pub fn bos_slot(&self) -> usize {
        self.vocab_size
    }

    /// Total feature dimension.
    pub fn feature_dim(&self) -> usize {
        self.prev_block() + self.position_buckets + self.digit_base
    }

    /// Encodes a generation context. `position` must equal `prefix.len()`
    /// plus any earlier tokens not included, i.e. the number of tokens
    /// generated so far; it may exceed the training budget (evaluation
    /// runs longer) and then clamps into the last bucket.
    pub fn features(&self, query: &Query, prefix: &[TokenId], position: usize) -> FeatureVector {
        let prev = match prefix.last() {
            Some(&t) => t.0 as usize,
            None => self.bos_slot(),
        };
        let bucket = ((position * self.position_buckets) / self.length_budget)
            .min(self.position_buckets - 1);
        let mut sum: usize = 0;
        for &t in query.tokens.iter().chain(prefix.iter()) {
            let v = t.0 as usize;
            if v < self.digit_base {
                sum += v;
            }
        }
        let sum_slot = sum % self.digit_base;
        FeatureVector {
            active: [
                prev,
                self.prev_block() + bucket,
                self.prev_block() + self.position_buckets + sum_slot,
            ],
            dim: self.feature_dim(),
        }
    }
}

/// A sparse binary feature vector with exactly three active entries
/// (previous token, position bucket, running sum).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    active: [usize; 3],
    dim: usize,
}

impl FeatureVector {
    /// Flat indices of the three active entries.
    pub fn active(&self) -> [usize; 3] {
        self.active
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense 0/1 expansion, for tests and finite-difference probes.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &i in &self.active {
            out[i] = 1.0;
        }
        out
    }
}

/// Policy parameters: a dense `vocab × feature_dim` weight matrix stored
/// row-major as a flat vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    layout: FeatureLayout,
    weights: Vec<f64>,
}

impl PolicyParams {
    /// Zero-initialized policy with the THINK logit biased upward by
    /// `think_bias` in thinking contexts (previous token BOS or THINK).
    pub fn init(layout: FeatureLayout, think_bias: f64, task: &TaskSpec) -> PolicyParams {
        let dim = layout.feature_dim();
        let mut weights = vec![0.0; layout.vocab_size() * dim];
        let think_row = task.think().0 as usize;
        weights[think_row * dim + layout.bos_slot()] = think_bias;
        weights[think_row * dim + task.think().0 as usize] = think_bias;
        PolicyParams { layout, weights }
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    /// Immutable view of the flat parameter vector.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mutable view of the flat parameter vector (the trainer's update
    /// path).
    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn num_params(&self) -> usize {
        self.weights.len()
    }

    /// Raw scores `W · φ` over the vocabulary.
    pub fn logits(&self, features: &FeatureVector) -> Vec<f64> {
        debug_assert_eq!(features.dim(), self.layout.feature_dim());
        let dim = self.layout.feature_dim();
        let mut out = vec![0.0; self.layout.vocab_size()];
        for (v, logit) in out.iter_mut().enumerate() {
            let row = &self.weights[v * dim..(v + 1) * dim];
            *logit = features.active().iter().map(|&c| row[c]).sum();
        }
        out
    }

    /// Log-probabilities of every token at the given temperature
    /// (log-softmax of `logits / temperature`).
    pub fn log_probs(&self, features: &FeatureVector, temperature: f64) -> Vec<f64> {
        debug_assert!(temperature > 0.0);
        let mut scores = self.logits(features);
        for s in &mut scores {
            *s /= temperature;
        }
        log_softmax_in_place(&mut scores);
        scores
    }

    /// Log-probability of one token at temperature 1.
    pub fn token_logprob(&self, features: &FeatureVector, token: TokenId) -> f64 {
        self.log_probs(features, 1.0)[token.0 as usize]
    }

    /// Dense analytic gradient of `log π(token | context)` at temperature
    /// 1 with respect to the flat parameter vector.
    pub fn grad_logprob(&self, features: &FeatureVector, token: TokenId) -> Vec<f64> {
        let mut grad = vec![0.0; self.num_params()];
        self.accumulate_logprob_grad(features, token, 1.0, 1.0, &mut grad);
        grad
    }

    /// Adds `scale · ∇ log π_τ(token | context)` into `grad`.
    ///
    /// At temperature τ the gradient of the tempered log-probability with
    /// respect to the raw weights is `(1/τ) · (δ_{v=token} − p_v) · φ` for
    /// each row `v`, where `p` is the tempered distribution.
    pub fn accumulate_logprob_grad(
        &self,
        features: &FeatureVector,
        token: TokenId,
        temperature: f64,
        scale: f64,
        grad: &mut [f64],
    ) {
        debug_assert_eq!(grad.len(), self.num_params());
        let dim = self.layout.feature_dim();
        let log_p = self.log_probs(features, temperature);
        let inv_t = scale / temperature;
        for (v, &lp) in log_p.iter().enumerate() {
            let indicator = (v == token.0 as usize) as u8 as f64;
            let coeff = inv_t * (indicator - lp.exp());
            for &c in &features.active() {
                grad[v * dim + c] += coeff;
            }
        }
    }

    /// Samples one complete rollout for `query` at the given temperature,
    /// stopping at EOS or after `budget` tokens (then marked truncated).
    /// Correctness is verified immediately; per-token log-probabilities
    /// are recorded at the sampling temperature.
    pub fn sample_rollout(
        &self,
        task: &TaskSpec,
        query: &Query,
        temperature: f64,
        budget: usize,
        stream: &mut RandomStream,
    ) -> Rollout {
        self.sample_rollout_top_p(task, query, temperature, 1.0, budget, stream)
    }

    /// Like [`PolicyParams::sample_rollout`] but restricts each draw to
    /// the smallest set of tokens whose probability mass reaches `top_p`
    /// (nucleus sampling), renormalizing within it. `top_p = 1` is exact
    /// temperature sampling.
    pub fn sample_rollout_top_p(
        &self,
        task: &TaskSpec,
        query: &Query,
        temperature: f64,
        top_p: f64,
        budget: usize,
        stream: &mut RandomStream,
    ) -> Rollout {
        debug_assert!(budget >= 1);
        debug_assert!(top_p > 0.0 && top_p <= 1.0);
        let mut tokens: Vec<TokenId> = Vec::new();
        let mut old_logprobs = Vec::new();
        let mut features = Vec::new();
        let mut truncated = false;
        loop {
            let ctx = self.layout.features(query, &tokens, tokens.len());
            let log_p = self.log_probs(&ctx, temperature);
            let (token, logprob) = if top_p < 1.0 {
                sample_top_p(&log_p, top_p, stream)
            } else {
                sample_categorical(&log_p, stream)
            };
            tokens.push(token);
            old_logprobs.push(logprob);
            features.push(ctx);
            if token == task.eos() {
                break;
            }
            if tokens.len() == budget {
                truncated = true;
                break;
            }
        }
        let correct = !truncated && task.verify(query, &tokens);
        Rollout {
            tokens,
            old_logprobs,
            features,
            truncated,
            correct,
            shaped_reward: 0.0,
        }
    }
}

/// In-place log-softmax with the usual max-subtraction for stability.
fn log_softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln() + max;
    for s in scores.iter_mut() {
        *s -= log_sum;
    }
}

/// Draws a token from exact log-probabilities by inverse CDF in token-id
/// order; returns the token and its log-probability.
fn sample_categorical(log_p: &[f64], stream: &mut RandomStream) -> (TokenId, f64) {
    let u = stream.next_f64();
    let mut cum = 0.0;
    for (v, &lp) in log_p.iter().enumerate() {
        cum += lp.exp();
        if u < cum {
            return (TokenId(v as u16), lp);
        }
    }
    // Floating-point slack: fall back to the last token.
    let v = log_p.len() - 1;
    (TokenId(v as u16), log_p[v])
}

/// Nucleus sampling: keeps the highest-probability tokens (ties broken by
/// token id) until their mass reaches `top_p`, renormalizes, and draws
/// from the kept set. Returns the token and its renormalized
/// log-probability.
fn sample_top_p(log_p: &[f64], top_p: f64, stream: &mut RandomStream) -> (TokenId, f64) {
    let mut order: Vec<usize> = (0..log_p.len()).collect();
    order.sort_by(|&a, &b| log_p[b].partial_cmp(&log_p[a]).unwrap().then(a.cmp(&b)));
    let mut kept = 0;
    let mut mass = 0.0;
    for &v in &order {
        kept += 1;
        mass += log_p[v].exp();
        if mass >= top_p {
            break;
        }
    }
    let u = stream.next_f64() * mass;
    let mut cum = 0.0;
    for &v in &order[..kept] {
        cum += log_p[v].exp();
        if u < cum {
            return (TokenId(v as u16), log_p[v] - mass.ln());
        }
    }
    let v = order[kept - 1];
    (TokenId(v as u16), log_p[v] - mass.ln())
}
