//! Measurement records and outcome selection shared by both backends.

use crate::error::{Error, Result};
use crate::gate::{Basis, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Probabilities below this are treated as exactly zero.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub basis: Basis,
    pub outcome: Outcome,
    /// Probability of `outcome` before the measurement.
    pub probability: f64,
}

impl MeasurementRecord {
    pub fn is_deterministic(&self) -> bool {
        (self.probability - 1.0).abs() < 1e-9
    }
}

/// How a backend picks measurement outcomes.
#[derive(Clone, Debug)]
pub enum OutcomePolicy {
    Sample(ChaCha8Rng),
    /// Outcomes consumed in order; a zero-probability request is an error.
    Force(VecDeque<Outcome>),
    /// Outcomes consumed in order; falls back to the possible outcome when the
    /// requested one has zero probability, and to `+1` preference when empty.
    Prefer(VecDeque<Outcome>),
}

impl OutcomePolicy {
    pub fn sample(seed: u64) -> Self {
        OutcomePolicy::Sample(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn force(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        OutcomePolicy::Force(outcomes.into_iter().collect())
    }

    pub fn prefer(outcomes: impl IntoIterator<Item = Outcome>) -> Self {
        OutcomePolicy::Prefer(outcomes.into_iter().collect())
    }

    /// Choose an outcome given `P(+1) = p_plus`; returns it with its probability.
    pub fn choose(&mut self, qubit: usize, p_plus: f64) -> Result<(Outcome, f64)> {
        let p_plus = p_plus.clamp(0.0, 1.0);
        let prob = |o: Outcome| if o == Outcome::Plus { p_plus } else { 1.0 - p_plus };
        let outcome = match self {
            OutcomePolicy::Sample(rng) => {
                if rng.gen::<f64>() < p_plus {
                    Outcome::Plus
                } else {
                    Outcome::Minus
                }
            }
            OutcomePolicy::Force(queue) => {
                let o = queue
                    .pop_front()
                    .ok_or_else(|| Error::Schedule(format!("no forced outcome left for qubit {qubit}")))?;
                if prob(o) < PROB_EPS {
                    return Err(Error::ImpossibleOutcome { qubit, outcome: o.value() });
                }
                o
            }
            OutcomePolicy::Prefer(queue) => {
                let o = queue.pop_front().unwrap_or(Outcome::Plus);
                if prob(o) < PROB_EPS {
                    o.flip()
                } else {
                    o
                }
            }
        };
        Ok((outcome, prob(outcome)))
    }
}
