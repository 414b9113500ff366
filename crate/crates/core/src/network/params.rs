use crate::codegen::{FamilyWeights, GenParams};
use crate::infomath::{DEFAULT_TIMING_DECAY, DEFAULT_WINDOW};
use crate::learning::TdRule;
use crate::vm::{DEFAULT_FUEL, MAX_CODELET_LEN};

use super::NetworkError;

/// Tunables of the engine. Everything here is part of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineParams {
    pub alpha: f64,
    pub gamma: f64,
    pub q_const: f64,
    pub q_init: f64,
    pub max_actions_per_tail: usize,
    pub fuel: u32,
    pub prune_threshold: f64,
    pub prune_patience: u64,
    pub td_rule: TdRule,
    /// When off, the network only changes through explicit edits and pruning.
    pub exploration: bool,
    pub window_capacity: usize,
    pub timing_decay: f64,
    /// Chance that an exploration creates a two-input head, fed by the tail
    /// and one other concept that fired this tick.
    pub multi_input_prob: f64,
    pub gen_min_len: usize,
    pub gen_max_len: usize,
    pub gen_weights: FamilyWeights,
    pub imm_min: i16,
    pub imm_max: i16,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            alpha: 0.1,
            gamma: 0.9,
            q_const: 1.0,
            q_init: 0.1,
            max_actions_per_tail: 8,
            fuel: DEFAULT_FUEL,
            prune_threshold: 0.01,
            prune_patience: 200,
            td_rule: TdRule::Max,
            exploration: true,
            window_capacity: DEFAULT_WINDOW,
            timing_decay: DEFAULT_TIMING_DECAY,
            multi_input_prob: 0.1,
            gen_min_len: 4,
            gen_max_len: 16,
            gen_weights: FamilyWeights::default(),
            imm_min: -32,
            imm_max: 32,
        }
    }
}

impl EngineParams {
    pub fn check(&self) -> Result<(), NetworkError> {
        let bad = |m: &str| Err(NetworkError::InvalidParams(m.to_string()));
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.alpha) {
            return bad("alpha must be in (0, 1)");
        }
        if !open_unit(self.gamma) {
            return bad("gamma must be in (0, 1)");
        }
        if !(self.q_const > 0.0 && self.q_const.is_finite()) {
            return bad("q_const must be positive");
        }
        if !(self.q_init > 0.0 && self.q_init.is_finite()) {
            return bad("q_init must be positive");
        }
        if self.max_actions_per_tail == 0 || self.max_actions_per_tail > u32::MAX as usize {
            return bad("max_actions_per_tail must be at least 1");
        }
        if self.fuel == 0 {
            return bad("fuel must be at least 1");
        }
        if !(self.prune_threshold >= 0.0 && self.prune_threshold.is_finite()) {
            return bad("prune_threshold must be non-negative");
        }
        if self.window_capacity == 0 || self.window_capacity > u32::MAX as usize {
            return bad("window_capacity must be at least 1");
        }
        if !open_unit(self.timing_decay) {
            return bad("timing_decay must be in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.multi_input_prob) {
            return bad("multi_input_prob must be in [0, 1]");
        }
        if self.gen_min_len == 0
            || self.gen_min_len > self.gen_max_len
            || self.gen_max_len > MAX_CODELET_LEN
        {
            return bad("need 1 <= gen_min_len <= gen_max_len <= 64");
        }
        self.gen_params(1, 1)
            .check()
            .map_err(|e| NetworkError::InvalidParams(e.to_string()))
    }

    /// Generator settings for a head of the given arity reading vectors of
    /// up to `input_len` elements.
    pub fn gen_params(&self, arity: u8, input_len: usize) -> GenParams {
        GenParams {
            min_len: self.gen_min_len,
            max_len: self.gen_max_len,
            arity,
            weights: self.gen_weights,
            index_range: input_len.clamp(1, crate::vm::MAX_VEC_LEN) as u8,
            imm_min: self.imm_min,
            imm_max: self.imm_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        EngineParams::default().check().unwrap();
    }

    #[test]
    fn out_of_range_rejected() {
        for p in [
            EngineParams {
                alpha: 0.0,
                ..Default::default()
            },
            EngineParams {
                gamma: 1.0,
                ..Default::default()
            },
            EngineParams {
                q_const: -1.0,
                ..Default::default()
            },
            EngineParams {
                fuel: 0,
                ..Default::default()
            },
            EngineParams {
                max_actions_per_tail: 0,
                ..Default::default()
            },
            EngineParams {
                gen_min_len: 10,
                gen_max_len: 5,
                ..Default::default()
            },
            EngineParams {
                imm_min: 5,
                imm_max: 4,
                ..Default::default()
            },
        ] {
            assert!(p.check().is_err(), "{p:?}");
        }
    }
}
