//! Self-information, intrinsic reward, and the estimators behind them.
//!
//! A concept's positive-match probability is estimated over a bounded window
//! of recent outcomes. Its intrinsic reward is the expected self-information
//! of a match, `-p log2 p`, which peaks at `p = 1/e`. Dividing by the
//! averaged execution time (in VM steps) gives the effective reward that
//! drives learning.

use std::collections::VecDeque;

use thiserror::Error;

/// Default number of recent outcomes kept per concept.
pub const DEFAULT_WINDOW: usize = 1000;
/// Default decay of the execution-time average.
pub const DEFAULT_TIMING_DECAY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum InfoError {
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("undefined for zero probability")]
    ZeroProbability,
    #[error("no outcomes recorded")]
    EmptyWindow,
    #[error("no execution time recorded")]
    NoTiming,
}

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self, InfoError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(InfoError::OutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = InfoError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn positive(p: Probability) -> Result<f64, InfoError> {
    if p.0 > 0.0 {
        Ok(p.0)
    } else {
        Err(InfoError::ZeroProbability)
    }
}

/// `-log2 p`, in bits.
pub fn self_information(p: Probability) -> Result<f64, InfoError> {
    Ok(-positive(p)?.log2())
}

/// Kullback-Leibler distance from the point mass on the positive outcome to
/// the two-outcome distribution `{p, 1 - p}`, summed term by term. Equal to
/// [`self_information`].
pub fn kl_self_information(p: Probability) -> Result<f64, InfoError> {
    let p = positive(p)?;
    let outcomes = [(1.0, p), (0.0, 1.0 - p)];
    Ok(outcomes
        .iter()
        .filter(|(delta, _)| *delta > 0.0)
        .map(|(delta, q)| delta * (delta / q).log2())
        .sum())
}

/// `-p log2 p`, extended continuously with 0 at `p = 0`.
pub fn intrinsic_reward(p: Probability) -> f64 {
    let p = p.0;
    if p == 0.0 || p == 1.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Information of two independent matches: `-log2 pa - log2 pb`.
pub fn combined_information(pa: Probability, pb: Probability) -> Result<f64, InfoError> {
    Ok(self_information(pa)? + self_information(pb)?)
}

/// Reward collected when two concepts run one after the other.
pub fn sequence_reward(pa: Probability, pb: Probability) -> f64 {
    intrinsic_reward(pa) + intrinsic_reward(pb)
}

/// Reward of a single concept doing the work of both.
pub fn merged_reward(pa: Probability, pb: Probability) -> f64 {
    intrinsic_reward(Probability(pa.0 * pb.0))
}

/// Whether the first step alone already earns more than the merged concept.
/// Always true when `pa < 1/e`.
pub fn first_step_dominates(pa: Probability, pb: Probability) -> bool {
    intrinsic_reward(pa) > merged_reward(pa, pb)
}

/// Rough threshold for preferring a split when `pa >= 1/e`: `pb < gamma`.
/// Kept as a predicate only; the engine never consults it.
pub fn split_heuristic(pb: Probability, gamma: f64) -> bool {
    pb.0 < gamma
}

/// The maximiser of `-p log2 p`: setting the derivative
/// `-(ln p + 1) / ln 2` to zero gives `p = 1/e`.
pub fn reward_argmax() -> Probability {
    Probability(std::f64::consts::E.recip())
}

/// The last `capacity` positive/negative outcomes of one concept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeWindow {
    capacity: usize,
    buffer: VecDeque<bool>,
    n_pos: usize,
}

impl Default for OutcomeWindow {
    fn default() -> Self {
        OutcomeWindow::new(DEFAULT_WINDOW)
    }
}

impl OutcomeWindow {
    /// A window holding at most `capacity` outcomes (at least one).
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        OutcomeWindow {
            capacity,
            buffer: VecDeque::with_capacity(capacity.min(1024)),
            n_pos: 0,
        }
    }

    pub fn record(&mut self, positive: bool) {
        if self.buffer.len() == self.capacity {
            if let Some(true) = self.buffer.pop_front() {
                self.n_pos -= 1;
            }
        }
        self.buffer.push_back(positive);
        if positive {
            self.n_pos += 1;
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.buffer.len() - self.n_pos
    }

    /// Oldest first.
    pub fn outcomes(&self) -> impl Iterator<Item = bool> + '_ {
        self.buffer.iter().copied()
    }

    /// `n_pos / (n_pos + n_neg)`.
    pub fn probability(&self) -> Result<Probability, InfoError> {
        if self.buffer.is_empty() {
            return Err(InfoError::EmptyWindow);
        }
        Ok(Probability(self.n_pos as f64 / self.buffer.len() as f64))
    }

    /// Rebuilds a window from stored outcomes, oldest first. Outcomes beyond
    /// `capacity` evict the oldest, as if recorded one by one.
    pub fn from_outcomes(capacity: usize, outcomes: impl IntoIterator<Item = bool>) -> Self {
        let mut w = OutcomeWindow::new(capacity);
        for o in outcomes {
            w.record(o);
        }
        w
    }
}

/// Exponentially weighted mean of execution steps, seeded with the first
/// observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    decay: f64,
    avg_steps: f64,
    count: u64,
}

impl Default for TimingStats {
    fn default() -> Self {
        TimingStats::new(DEFAULT_TIMING_DECAY)
    }
}

impl TimingStats {
    pub fn new(decay: f64) -> Self {
        TimingStats {
            decay,
            avg_steps: 0.0,
            count: 0,
        }
    }

    pub(crate) fn from_parts(decay: f64, avg_steps: f64, count: u64) -> Self {
        TimingStats {
            decay,
            avg_steps,
            count,
        }
    }

    pub fn record(&mut self, steps: u32) {
        let steps = steps as f64;
        self.avg_steps = if self.count == 0 {
            steps
        } else {
            self.decay * self.avg_steps + (1.0 - self.decay) * steps
        };
        self.count += 1;
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `None` until an execution is recorded.
    pub fn avg_steps(&self) -> Option<f64> {
        (self.count > 0).then_some(self.avg_steps)
    }
}

/// Intrinsic reward per averaged VM step.
pub fn effective_reward(reward: f64, timing: &TimingStats) -> Result<f64, InfoError> {
    match timing.avg_steps() {
        Some(avg) if avg >= 1.0 => Ok(reward / avg),
        _ => Err(InfoError::NoTiming),
    }
}
