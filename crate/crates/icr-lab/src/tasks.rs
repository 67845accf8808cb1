//! Synthetic verifiable environments.
//!
//! The training task is modular digit summation: a query is `query_len`
//! uniform digits in base `digit_base`, and a response is correct iff it
//! ends with `ANSWER d EOS` where `d` is the digit sum of the query modulo
//! the base. Before `ANSWER` the response may interleave `THINK` tokens
//! and digit tokens freely (a scratchpad), so the policy can both pad and
//! mislead itself. The full grammar is
//!
//! ```text
//! response := (THINK | digit)* ANSWER digit EOS      (length ≤ budget)
//! ```
//!
//! Responses that exhaust the length budget without emitting `EOS` are
//! truncated and always incorrect. Every query has a correct response of
//! length exactly 3 (`ANSWER d EOS`), so 3 is the minimal correct length
//! for every task instance.
//!
//! The module also provides [`GroupDistribution`], a policy-free sampler
//! of `(length, correct)` groups with a configurable correctness-vs-length
//! law, used by the verification oracles to study length–accuracy
//! correlations without training anything.

use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;

/// Index into a task vocabulary.
///
/// For a task with digit base `B`, ids `0..B` are the digits, followed by
/// `THINK`, `ANSWER`, and `EOS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenId(pub u16);

/// A sampled query: the digits to sum, plus a stable identifier assigned
/// by the caller for bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: u64,
    pub tokens: Vec<TokenId>,
}

/// The modular-sum task definition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    digit_base: usize,
    query_len: usize,
    length_budget: usize,
}

impl TaskSpec {
    /// Creates a task over digits `0..digit_base` with `query_len` digits
    /// per query and the given response length budget.
    pub fn new(digit_base: usize, query_len: usize, length_budget: usize) -> TaskSpec {
        assert!(digit_base >= 2, "digit_base must be >= 2");
        assert!(query_len >= 1, "query_len must be >= 1");
        assert!(length_budget >= 1, "length_budget must be >= 1");
        TaskSpec {
            digit_base,
            query_len,
            length_budget,
        }
    }

    /// Same task with a different response budget (evaluation passes run
    /// with a scaled-up budget).
    pub fn with_length_budget(&self, length_budget: usize) -> TaskSpec {
        TaskSpec::new(self.digit_base, self.query_len, length_budget)
    }

    pub fn digit_base(&self) -> usize {
        self.digit_base
    }

    pub fn query_len(&self) -> usize {
        self.query_len
    }

    pub fn length_budget(&self) -> usize {
        self.length_budget
    }

    /// Vocabulary size: the digits plus THINK, ANSWER, and EOS.
    pub fn vocab_size(&self) -> usize {
        self.digit_base + 3
    }

    pub fn think(&self) -> TokenId {
        TokenId(self.digit_base as u16)
    }

    pub fn answer(&self) -> TokenId {
        TokenId(self.digit_base as u16 + 1)
    }

    pub fn eos(&self) -> TokenId {
        TokenId(self.digit_base as u16 + 2)
    }

    /// The digit value of a token, if it is a digit token.
    pub fn digit_value(&self, token: TokenId) -> Option<usize> {
        let v = token.0 as usize;
        (v < self.digit_base).then_some(v)
    }

    /// The digit token with the given value.
    pub fn digit(&self, value: usize) -> TokenId {
        assert!(value < self.digit_base, "digit value out of range");
        TokenId(value as u16)
    }

    /// The unique correct answer digit for a query: digit sum mod base.
    pub fn target_digit(&self, query: &Query) -> usize {
        query
            .tokens
            .iter()
            .filter_map(|&t| self.digit_value(t))
            .sum::<usize>()
            % self.digit_base
    }

    /// Draws a query of `query_len` i.i.d. uniform digits.
    pub fn sample_query(&self, stream: &mut RandomStream, id: u64) -> Query {
        let tokens = (0..self.query_len)
            .map(|_| TokenId(stream.next_below(self.digit_base) as u16))
            .collect();
        Query { id, tokens }
    }

    /// Checks a response against the grammar and the target digit.
    ///
    /// Returns true iff the response is `(THINK | digit)* ANSWER d EOS`
    /// with `d` the target digit and total length within the budget.
    /// Malformed responses verify false; this never fails.
    pub fn verify(&self, query: &Query, response: &[TokenId]) -> bool {
        if response.is_empty() || response.len() > self.length_budget {
            return false;
        }
        let mut pos = 0;
        while pos < response.len()
            && (response[pos] == self.think() || self.digit_value(response[pos]).is_some())
        {
            pos += 1;
        }
        // Exactly three tokens must remain: ANSWER, the digit, EOS.
        if response.len() - pos != 3 || response[pos] != self.answer() {
            return false;
        }
        let digit = match self.digit_value(response[pos + 1]) {
            Some(d) => d,
            None => return false,
        };
        response[pos + 2] == self.eos() && digit == self.target_digit(query)
    }
}

/// Length law of a [`GroupDistribution`]: uniform integers on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformLengths {
    pub lo: usize,
    pub hi: usize,
}

/// Correctness-vs-length law of a [`GroupDistribution`].
///
/// `Affine` laws evaluate `intercept + slope * length / budget`, clamped
/// to `[0, 1]`; a negative slope gives the decreasing law under which
/// longer members are less often correct.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CorrectnessLaw {
    /// Length-independent probability.
    Constant(f64),
    /// Clamped affine function of `length / budget`.
    Affine {
        intercept: f64,
        slope: f64,
        budget: f64,
    },
}

impl CorrectnessLaw {
    /// The decreasing law `p(len) = 1 − len / budget`.
    pub fn decreasing(budget: usize) -> CorrectnessLaw {
        CorrectnessLaw::Affine {
            intercept: 1.0,
            slope: -1.0,
            budget: budget as f64,
        }
    }

    /// The increasing law `p(len) = len / budget`.
    pub fn increasing(budget: usize) -> CorrectnessLaw {
        CorrectnessLaw::Affine {
            intercept: 0.0,
            slope: 1.0,
            budget: budget as f64,
        }
    }

    /// Probability of correctness at the given length, in `[0, 1]`.
    pub fn probability(&self, length: usize) -> f64 {
        match *self {
            CorrectnessLaw::Constant(p) => p.clamp(0.0, 1.0),
            CorrectnessLaw::Affine {
                intercept,
                slope,
                budget,
            } => (intercept + slope * length as f64 / budget).clamp(0.0, 1.0),
        }
    }
}

/// A policy-free distribution over `(length, correct)` groups, used to
/// study length–accuracy statistics in isolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupDistribution {
    pub lengths: UniformLengths,
    pub correctness: CorrectnessLaw,
    pub group_size: usize,
}

impl GroupDistribution {
    /// Draws one group of `group_size` i.i.d. `(length, correct)` pairs:
    /// length from the length law, correctness Bernoulli in the length.
    pub fn sample_group(&self, stream: &mut RandomStream) -> Vec<(usize, bool)> {
        (0..self.group_size)
            .map(|_| {
                let length = stream.next_in_range(self.lengths.lo, self.lengths.hi);
                let correct = stream.next_f64() < self.correctness.probability(length);
                (length, correct)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_stream;

    fn task10() -> TaskSpec {
        TaskSpec::new(10, 2, 64)
    }

    fn query(task: &TaskSpec, digits: &[usize]) -> Query {
        Query {
            id: 0,
            tokens: digits.iter().map(|&d| task.digit(d)).collect(),
        }
    }

    #[test]
    fn vocabulary_layout() {
        let task = task10();
        assert_eq!(task.vocab_size(), 13);
        assert_eq!(task.think(), TokenId(10));
        assert_eq!(task.answer(), TokenId(11));
        assert_eq!(task.eos(), TokenId(12));
        assert_eq!(task.digit_value(TokenId(9)), Some(9));
        assert_eq!(task.digit_value(task.think()), None);
    }

    #[test]
    fn sampled_queries_have_the_right_shape() {
        let task = task10();
        let mut stream = seeded_stream(1, 0);
        for id in 0..100 {
            let q = task.sample_query(&mut stream, id);
            assert_eq!(q.id, id);
            assert_eq!(q.tokens.len(), 2);
            assert!(q.tokens.iter().all(|&t| task.digit_value(t).is_some()));
        }
    }

    #[test]
    fn query_digits_are_uniform_within_binomial_bounds() {
        let task = TaskSpec::new(10, 1, 64);
        let mut stream = seeded_stream(2, 0);
        let n = 100_000;
        let mut counts = [0u32; 10];
        for id in 0..n {
            let q = task.sample_query(&mut stream, id);
            counts[q.tokens[0].0 as usize] += 1;
        }
        let p = 0.1;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - n as f64 * p).abs() < 3.0 * sigma,
                "digit frequency {c} outside 3 sigma of uniform"
            );
        }
    }

    #[test]
    fn verify_accepts_the_grammar_with_the_right_digit() {
        let task = task10();
        let q = query(&task, &[3, 5]);
        let (think, answer, eos) = (task.think(), task.answer(), task.eos());
        assert!(task.verify(&q, &[think, think, answer, task.digit(8), eos]));
        assert!(!task.verify(&q, &[answer, task.digit(7), eos]));
        assert!(task.verify(&q, &[answer, task.digit(8), eos]));
    }

    #[test]
    fn verify_wraps_the_digit_sum() {
        let task = task10();
        // Independent check of the target: 9 + 9 = 18, which wraps to 8.
        let q = query(&task, &[9, 9]);
        assert_eq!(task.target_digit(&q), (9 + 9) % 10);
        assert!(task.verify(&q, &[task.answer(), task.digit(8), task.eos()]));
        assert!(!task.verify(&q, &[task.answer(), task.digit(9), task.eos()]));
    }

    #[test]
    fn verify_allows_digit_scratchpad_before_answer() {
        let task = task10();
        let q = query(&task, &[3, 5]);
        let resp = [
            task.digit(4),
            task.think(),
            task.digit(1),
            task.answer(),
            task.digit(8),
            task.eos(),
        ];
        assert!(task.verify(&q, &resp), "scratchpad digits are permitted");
    }

    #[test]
    fn verify_rejects_malformed_responses() {
        let task = task10();
        let q = query(&task, &[3, 5]);
        let (think, answer, eos) = (task.think(), task.answer(), task.eos());
        let d8 = task.digit(8);
        // No EOS (truncated), nothing after ANSWER, stray tokens after
        // EOS, doubled answers, EOS alone, empty.
        assert!(!task.verify(&q, &[answer, d8]));
        assert!(!task.verify(&q, &[answer]));
        assert!(!task.verify(&q, &[answer, d8, eos, think]));
        assert!(!task.verify(&q, &[answer, answer, d8, eos]));
        assert!(!task.verify(&q, &[answer, think, eos]));
        assert!(!task.verify(&q, &[eos]));
        assert!(!task.verify(&q, &[]));
        // ANSWER missing entirely.
        assert!(!task.verify(&q, &[think, d8, eos]));
    }

    #[test]
    fn verify_enforces_the_length_budget() {
        let task = TaskSpec::new(10, 2, 8);
        let q = query(&task, &[3, 5]);
        let mut resp = vec![task.think(); 5];
        resp.extend([task.answer(), task.digit(8), task.eos()]);
        assert_eq!(resp.len(), 8);
        assert!(task.verify(&q, &resp));
        resp.insert(0, task.think());
        assert!(!task.verify(&q, &resp), "budget overrun must verify false");
    }

    #[test]
    fn minimal_correct_length_is_three_for_every_query() {
        let task = TaskSpec::new(7, 3, 64);
        let mut stream = seeded_stream(3, 0);
        for id in 0..50 {
            let q = task.sample_query(&mut stream, id);
            let d = task.target_digit(&q);
            assert!(task.verify(&q, &[task.answer(), task.digit(d), task.eos()]));
            // Nothing shorter can verify: every correct response needs
            // ANSWER, a digit, and EOS.
            for len in 1..3 {
                let resp = vec![task.eos(); len];
                assert!(!task.verify(&q, &resp));
            }
        }
    }

    #[test]
    fn degenerate_correctness_laws_are_all_or_nothing() {
        let dist = GroupDistribution {
            lengths: UniformLengths { lo: 1, hi: 64 },
            correctness: CorrectnessLaw::Constant(1.0),
            group_size: 8,
        };
        let mut stream = seeded_stream(4, 0);
        for _ in 0..100 {
            assert!(dist.sample_group(&mut stream).iter().all(|&(_, c)| c));
        }
        let dist = GroupDistribution {
            correctness: CorrectnessLaw::Constant(0.0),
            ..dist
        };
        for _ in 0..100 {
            assert!(dist.sample_group(&mut stream).iter().all(|&(_, c)| !c));
        }
    }

    #[test]
    fn sampled_lengths_stay_in_range() {
        let dist = GroupDistribution {
            lengths: UniformLengths { lo: 5, hi: 9 },
            correctness: CorrectnessLaw::decreasing(64),
            group_size: 8,
        };
        let mut stream = seeded_stream(5, 0);
        for _ in 0..200 {
            for (len, _) in dist.sample_group(&mut stream) {
                assert!((5..=9).contains(&len));
            }
        }
    }

    #[test]
    fn decreasing_law_makes_long_members_less_often_correct() {
        let dist = GroupDistribution {
            lengths: UniformLengths { lo: 1, hi: 64 },
            correctness: CorrectnessLaw::decreasing(64),
            group_size: 8,
        };
        let mut stream = seeded_stream(6, 0);
        let (mut short_hits, mut short_n, mut long_hits, mut long_n) = (0u32, 0u32, 0u32, 0u32);
        for _ in 0..5_000 {
            for (len, correct) in dist.sample_group(&mut stream) {
                if len <= 32 {
                    short_n += 1;
                    short_hits += correct as u32;
                } else {
                    long_n += 1;
                    long_hits += correct as u32;
                }
            }
        }
        let short_rate = short_hits as f64 / short_n as f64;
        let long_rate = long_hits as f64 / long_n as f64;
        assert!(
            short_rate > long_rate + 0.2,
            "decreasing law should separate rates, got {short_rate} vs {long_rate}"
        );
    }
}
