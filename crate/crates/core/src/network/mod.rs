//! The concept depository and the engine tick.
//!
//! Concepts are nodes: sensory roots fed by the environment, codelet nodes
//! that partition their inputs, and inert actuator leaves. Actions are edges
//! `tail -> head`; their values live at the tail. Heads always have larger
//! ids than their tails (actuators excepted), so the action graph is acyclic
//! and id order is a valid bottom-up order.

mod params;
mod snapshot;
mod tick;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codegen::CodegenError;
use crate::infomath::{OutcomeWindow, TimingStats};
use crate::learning::{proportional_pick, selection_probability};
use crate::vm::{Codelet, FeatureVector, InvalidCodelet};

pub use params::EngineParams;
pub use snapshot::{SnapshotError, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use tick::{
    Execution, Exploration, OutcomeKind, PrunedConcept, RemovalReason, RemovedAction, TickReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptId(pub u64);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConceptKind {
    Sensory { channel: u16 },
    Codelet(Codelet),
    Actuator,
}

impl ConceptKind {
    pub fn name(&self) -> &'static str {
        match self {
            ConceptKind::Sensory { .. } => "sensory",
            ConceptKind::Codelet(_) => "codelet",
            ConceptKind::Actuator => "actuator",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub id: ConceptId,
    pub kind: ConceptKind,
    /// 0 for atoms; one above the highest tail for codelet nodes.
    pub level: u32,
    pub window: OutcomeWindow,
    pub timing: TimingStats,
    pub last_output: Option<(FeatureVector, u64)>,
    pub created_at: u64,
}

impl Concept {
    pub fn codelet(&self) -> Option<&Codelet> {
        match &self.kind {
            ConceptKind::Codelet(c) => Some(c),
            _ => None,
        }
    }

    /// Window match probability, if anything was recorded.
    pub fn probability(&self) -> Option<f64> {
        self.window.probability().ok().map(|p| p.value())
    }

    fn fresh_at(&self, tick: u64) -> Option<&FeatureVector> {
        match &self.last_output {
            Some((v, t)) if *t == tick => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub tail: ConceptId,
    pub head: ConceptId,
    pub slot: u8,
    pub q: f64,
    pub created_at: u64,
    pub low_q_since: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
    #[error("slot {slot} out of range for head {head}")]
    BadSlot { head: ConceptId, slot: u8 },
    #[error("edge {tail} -> {head} not allowed: {reason}")]
    InvalidEdge {
        tail: ConceptId,
        head: ConceptId,
        reason: &'static str,
    },
    #[error(transparent)]
    InvalidCodelet(#[from] InvalidCodelet),
    #[error("frame has no vector for sensory channel {0}")]
    MissingChannel(u16),
    #[error("invalid engine parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}

/// All mutable engine state.
#[derive(Debug, Clone)]
pub struct Depository {
    params: EngineParams,
    tick: u64,
    next_id: u64,
    rng: ChaCha8Rng,
    concepts: BTreeMap<ConceptId, Concept>,
    /// Outgoing actions per tail, oldest first.
    actions: BTreeMap<ConceptId, Vec<Action>>,
    /// `(tail, slot)` of every action into a head.
    incoming: BTreeMap<ConceptId, BTreeSet<(ConceptId, u8)>>,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl PartialEq for Depository {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.tick == other.tick
            && self.next_id == other.next_id
            && self.rng == other.rng
            && self.concepts == other.concepts
            && self.actions == other.actions
    }
}

impl Depository {
    pub fn new(params: EngineParams, seed: u64) -> Result<Self, NetworkError> {
        params.check()?;
        Ok(Depository {
            params,
            tick: 0,
            next_id: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            concepts: BTreeMap::new(),
            actions: BTreeMap::new(),
            incoming: BTreeMap::new(),
            pool: None,
        })
    }

    /// A depository with one sensory atom per channel, ids `0..channels`.
    pub fn with_sensors(
        params: EngineParams,
        seed: u64,
        channels: u16,
    ) -> Result<Self, NetworkError> {
        let mut dep = Depository::new(params, seed)?;
        for channel in 0..channels {
            dep.add_concept(ConceptKind::Sensory { channel })?;
        }
        Ok(dep)
    }

    /// Runs the execution phase of each tick on `workers` threads. Results
    /// do not depend on the worker count.
    pub fn set_workers(&mut self, workers: usize) -> Result<(), NetworkError> {
        self.pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| NetworkError::InvalidParams(e.to_string()))?;
            Some(Arc::new(pool))
        } else {
            None
        };
        Ok(())
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    pub fn current_tick(&self) -> u64 {
        self.tick
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(&id)
    }

    /// In id order.
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn actions_from(&self, tail: ConceptId) -> &[Action] {
        self.actions.get(&tail).map_or(&[], Vec::as_slice)
    }

    /// By tail id, then age.
    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.actions.values().flatten()
    }

    pub fn action_count(&self) -> usize {
        self.actions.values().map(Vec::len).sum()
    }

    pub fn in_degree(&self, id: ConceptId) -> usize {
        self.incoming.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn out_degree(&self, id: ConceptId) -> usize {
        self.actions_from(id).len()
    }

    /// Tails of the actions into `head`, with their slots.
    pub fn incoming(&self, head: ConceptId) -> impl Iterator<Item = (ConceptId, u8)> + '_ {
        self.incoming.get(&head).into_iter().flatten().copied()
    }

    pub fn add_concept(&mut self, kind: ConceptKind) -> Result<ConceptId, NetworkError> {
        if let ConceptKind::Codelet(c) = &kind {
            let violations = c.program().validate();
            if !violations.is_empty() {
                return Err(InvalidCodelet(violations).into());
            }
        }
        let id = ConceptId(self.next_id);
        self.next_id += 1;
        let level = u32::from(matches!(kind, ConceptKind::Codelet(_)));
        self.concepts.insert(
            id,
            Concept {
                id,
                kind,
                level,
                window: OutcomeWindow::new(self.params.window_capacity),
                timing: TimingStats::new(self.params.timing_decay),
                last_output: None,
                created_at: self.tick,
            },
        );
        Ok(id)
    }

    /// Adds `tail -> head` with `q = q_init`. A full tail first loses its
    /// lowest-valued action (the oldest among ties), which is returned.
    pub fn add_action(
        &mut self,
        tail: ConceptId,
        head: ConceptId,
        slot: u8,
    ) -> Result<Option<Action>, NetworkError> {
        let t = self
            .concepts
            .get(&tail)
            .ok_or(NetworkError::UnknownConcept(tail))?;
        let h = self
            .concepts
            .get(&head)
            .ok_or(NetworkError::UnknownConcept(head))?;
        let invalid = |reason| Err(NetworkError::InvalidEdge { tail, head, reason });
        match (&t.kind, &h.kind) {
            (ConceptKind::Actuator, _) => return invalid("actuators have no outgoing actions"),
            (_, ConceptKind::Sensory { .. }) => {
                return invalid("sensory atoms have no incoming actions")
            }
            (_, ConceptKind::Codelet(c)) => {
                if slot >= c.arity() {
                    return Err(NetworkError::BadSlot { head, slot });
                }
                if head <= tail {
                    return invalid("head must be newer than tail");
                }
            }
            (_, ConceptKind::Actuator) => {
                if slot != 0 {
                    return Err(NetworkError::BadSlot { head, slot });
                }
            }
        }
        if self
            .actions_from(tail)
            .iter()
            .any(|a| a.head == head && a.slot == slot)
        {
            return invalid("duplicate action");
        }
        let tail_level = t.level;

        let victim = if self.out_degree(tail) >= self.params.max_actions_per_tail {
            let list = &self.actions[&tail];
            let mut idx = 0;
            for (i, a) in list.iter().enumerate() {
                let best = &list[idx];
                if a.q < best.q || (a.q == best.q && a.created_at < best.created_at) {
                    idx = i;
                }
            }
            Some(self.remove_action_at(tail, idx))
        } else {
            None
        };

        self.actions.entry(tail).or_default().push(Action {
            tail,
            head,
            slot,
            q: self.params.q_init,
            created_at: self.tick,
            low_q_since: None,
        });
        self.incoming.entry(head).or_default().insert((tail, slot));
        if let Some(h) = self.concepts.get_mut(&head) {
            if matches!(h.kind, ConceptKind::Codelet(_)) {
                h.level = h.level.max(tail_level + 1);
            }
        }
        Ok(victim)
    }

    fn remove_action_at(&mut self, tail: ConceptId, idx: usize) -> Action {
        let list = self.actions.get_mut(&tail).expect("tail has actions");
        let action = list.remove(idx);
        if list.is_empty() {
            self.actions.remove(&tail);
        }
        if let Some(set) = self.incoming.get_mut(&action.head) {
            set.remove(&(tail, action.slot));
            if set.is_empty() {
                self.incoming.remove(&action.head);
            }
        }
        action
    }

    /// Removes `tail -> head` on `slot`, if present.
    pub fn remove_action(&mut self, tail: ConceptId, head: ConceptId, slot: u8) -> Option<Action> {
        let idx = self
            .actions_from(tail)
            .iter()
            .position(|a| a.head == head && a.slot == slot)?;
        Some(self.remove_action_at(tail, idx))
    }

    /// Overrides an action value (clamped to the minimum).
    pub fn set_q(&mut self, tail: ConceptId, head: ConceptId, slot: u8, q: f64) -> bool {
        match self.action_mut(tail, head, slot) {
            Some(a) => {
                a.q = q.max(crate::learning::Q_MIN);
                true
            }
            None => false,
        }
    }

    fn action_mut(&mut self, tail: ConceptId, head: ConceptId, slot: u8) -> Option<&mut Action> {
        self.actions
            .get_mut(&tail)?
            .iter_mut()
            .find(|a| a.head == head && a.slot == slot)
    }

    /// Probability that `select_action` picks each of the tail's actions.
    pub fn selection_probabilities(&self, tail: ConceptId) -> Vec<f64> {
        let qs: Vec<f64> = self.actions_from(tail).iter().map(|a| a.q).collect();
        (0..qs.len())
            .map(|i| selection_probability(&qs, i).map_or(0.0, |p| p.value()))
            .collect()
    }

    fn select_index(&mut self, tail: ConceptId) -> Option<usize> {
        let list = self.actions.get(&tail)?;
        let qs: Vec<f64> = list.iter().map(|a| a.q).collect();
        let u = self.rng.random::<f64>();
        proportional_pick(&qs, u)
    }

    /// Samples one of the tail's actions with probability proportional to
    /// its value. Consumes one draw when the tail has actions.
    pub fn select_action(&mut self, tail: ConceptId) -> Option<&Action> {
        let idx = self.select_index(tail)?;
        self.actions_from(tail).get(idx)
    }
}

#[cfg(test)]
mod tests;
