//! A desk-scale laboratory for on-policy reinforcement learning over
//! verifiable text tasks.
//!
//! The crate trains a small linear-softmax autoregressive policy on a
//! synthetic modular-sum task with group-relative policy optimization
//! (clipped surrogate over group-normalized advantages), optional
//! length-penalty reward shaping, and an implicit compression regularizer
//! that pushes probability mass toward the shortest correct rollout of
//! each group.
//!
//! Everything is deterministic: randomness flows through named
//! [`rng::RandomStream`]s addressed by `(seed, stream_id)`, so a run is a
//! pure function of its configuration and training can resume bit-exactly
//! from a checkpoint.
//!
//! Module overview:
//!
//! - [`config`]: run configuration, parsing, and validation.
//! - [`rng`]: seeded, serializable random streams.
//! - [`tasks`]: the modular-sum task, query sampling, and the response
//!   verifier, plus synthetic group distributions for analysis.
//! - [`policy`]: linear-softmax policy, feature extraction, sampling, and
//!   log-probability gradients.
//! - [`rollout`]: rollout and rollout-group containers.
//! - [`rewards`]: correctness reward and length-penalty shaping.
//! - [`objectives`]: group-normalized advantages, the clipped surrogate,
//!   shortest-correct selection, and minibatch objective evaluation.
//! - [`metrics`]: length–accuracy correlation, regime classification, and
//!   Pareto tables.
//! - [`trainer`]: the training loop, step records, sweeps, and resuming.
//! - [`checkpoint`]: versioned checkpoint container.
//! - [`verification`]: self-check oracles (finite-difference gradient
//!   checks, an independent correlation implementation, a Monte Carlo
//!   check of the shortest-correct length gap, and surrogate branch
//!   audits).
//! - [`cli`]: command-line interface.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod metrics;
pub mod objectives;
pub mod policy;
pub mod rewards;
pub mod rng;
pub mod rollout;
pub mod tasks;
pub mod trainer;
pub mod verification;
