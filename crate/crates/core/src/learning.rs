//! Temporal-difference updates, proportional action selection and the
//! exploration probability.

use thiserror::Error;

use crate::infomath::Probability;

/// Smallest stored action value. Keeps proportional selection a proper
/// distribution.
pub const Q_MIN: f64 = 1e-6;

/// Which bootstrap the TD update uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TdRule {
    /// Greatest successor value.
    #[default]
    Max,
    /// Successor values weighted by their heads' match probabilities.
    Mean,
}

impl TdRule {
    pub fn name(self) -> &'static str {
        match self {
            TdRule::Max => "max",
            TdRule::Mean => "mean",
        }
    }
}

impl std::str::FromStr for TdRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(TdRule::Max),
            "mean" => Ok(TdRule::Mean),
            other => Err(format!("unknown td rule `{other}` (expected max or mean)")),
        }
    }
}

/// A successor action seen from the head: its value and the match
/// probability of its own head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Successor {
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdInputs<'a> {
    pub q: f64,
    pub reward: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub successors: &'a [Successor],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LearningError {
    #[error("action set is empty")]
    EmptyActionSet,
    #[error("action index {0} out of range")]
    BadIndex(usize),
}

fn td_step(inputs: &TdInputs<'_>, bootstrap: f64) -> f64 {
    let target = inputs.reward + inputs.gamma * bootstrap;
    (inputs.q + inputs.alpha * (target - inputs.q)).max(Q_MIN)
}

/// Bootstrap of the max rule; 0 without successors.
pub fn max_successor(successors: &[Successor]) -> f64 {
    successors
        .iter()
        .map(|s| s.q)
        .reduce(f64::max)
        .unwrap_or(0.0)
}

/// Probability-weighted mean successor value `sum(p q) / sum(p)`; 0 when
/// there are no successors or all weights are zero.
pub fn mean_successor(successors: &[Successor]) -> f64 {
    let weight: f64 = successors.iter().map(|s| s.p).sum();
    if weight > 0.0 {
        successors.iter().map(|s| s.p * s.q).sum::<f64>() / weight
    } else {
        0.0
    }
}

pub fn td_update_max(inputs: &TdInputs<'_>) -> f64 {
    td_step(inputs, max_successor(inputs.successors))
}

pub fn td_update_mean(inputs: &TdInputs<'_>) -> f64 {
    td_step(inputs, mean_successor(inputs.successors))
}

pub fn td_update(rule: TdRule, inputs: &TdInputs<'_>) -> f64 {
    match rule {
        TdRule::Max => td_update_max(inputs),
        TdRule::Mean => td_update_mean(inputs),
    }
}

/// `q_i / sum(q)`.
pub fn selection_probability(qs: &[f64], i: usize) -> Result<Probability, LearningError> {
    if qs.is_empty() {
        return Err(LearningError::EmptyActionSet);
    }
    let qi = *qs.get(i).ok_or(LearningError::BadIndex(i))?;
    let total: f64 = qs.iter().sum();
    Ok(Probability::new((qi / total).clamp(0.0, 1.0)).unwrap_or(Probability::ZERO))
}

/// Index drawn with probability proportional to its value, given a uniform
/// draw `u` in `[0, 1)`.
pub fn proportional_pick(qs: &[f64], u: f64) -> Option<usize> {
    let total: f64 = qs.iter().sum();
    if qs.is_empty() || total <= 0.0 {
        return None;
    }
    let mut threshold = u * total;
    for (i, q) in qs.iter().enumerate() {
        if threshold < *q {
            return Some(i);
        }
        threshold -= q;
    }
    Some(qs.len() - 1)
}

/// `q_const / (q_const + sum_q)`.
pub fn exploration_probability(q_const: f64, sum_q: f64) -> Probability {
    Probability::new(q_const / (q_const + sum_q)).unwrap_or(Probability::ONE)
}
