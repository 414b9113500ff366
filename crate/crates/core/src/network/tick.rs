use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use crate::codegen;
use crate::infomath::{effective_reward, intrinsic_reward};
use crate::learning::{exploration_probability, td_update, Successor, TdInputs};
use crate::vm::{execute, ExecOutcome, FeatureVector, Outcome};

use super::{Action, ConceptId, ConceptKind, Depository, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Positive,
    Negative,
    FuelExhausted,
}

impl OutcomeKind {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::Positive => "positive",
            OutcomeKind::Negative => "negative",
            OutcomeKind::FuelExhausted => "fuel_exhausted",
        }
    }
}

/// One head execution and the update it caused.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub tail: ConceptId,
    pub head: ConceptId,
    pub outcome: OutcomeKind,
    pub steps: u32,
    /// Head window probability after recording this outcome.
    pub p: f64,
    pub reward: f64,
    pub effective_reward: f64,
    /// Value when the action was selected.
    pub q_before: f64,
    /// `None` when the action was replaced before its update landed.
    pub q_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub tail: ConceptId,
    pub head: ConceptId,
    /// Second input of a two-input head.
    pub partner: Option<ConceptId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalReason {
    /// Made room for an explored action.
    Replaced,
    /// Value stayed under the prune threshold for the patience period.
    LowValue,
    /// Its tail was deleted.
    Cascade,
}

impl RemovalReason {
    pub fn name(self) -> &'static str {
        match self {
            RemovalReason::Replaced => "replaced",
            RemovalReason::LowValue => "low_value",
            RemovalReason::Cascade => "cascade",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovedAction {
    pub tail: ConceptId,
    pub head: ConceptId,
    pub slot: u8,
    pub q: f64,
    pub reason: RemovalReason,
}

/// A codelet concept deleted for lack of incoming actions.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedConcept {
    pub id: ConceptId,
    pub level: u32,
    pub p: Option<f64>,
    pub samples: usize,
    pub avg_steps: Option<f64>,
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickReport {
    pub tick: u64,
    pub executions: Vec<Execution>,
    pub explorations: Vec<Exploration>,
    pub removed_actions: Vec<RemovedAction>,
    pub pruned: Vec<PrunedConcept>,
}

struct Job {
    tail: ConceptId,
    head: ConceptId,
    slot: u8,
    q: f64,
    inputs: Vec<FeatureVector>,
}

impl Depository {
    /// Advances the engine one step on a frame holding one vector per
    /// sensory channel.
    ///
    /// Concepts with output stamped this tick are processed in waves, lowest
    /// id first. Each fresh tail may explore (create a new head), then
    /// selects one action; the selected heads run, possibly in parallel,
    /// and their results are committed in selection order. Positive heads
    /// form the next wave. A head runs at most once per tick and only when
    /// every input slot has a same-tick output. Pruning closes the tick.
    pub fn tick(&mut self, frame: &[FeatureVector]) -> Result<TickReport, NetworkError> {
        for c in self.concepts.values() {
            if let ConceptKind::Sensory { channel } = c.kind {
                if frame.len() <= channel as usize {
                    return Err(NetworkError::MissingChannel(channel));
                }
            }
        }
        self.tick += 1;
        let now = self.tick;
        let mut report = TickReport {
            tick: now,
            ..TickReport::default()
        };

        let mut wave = Vec::new();
        for c in self.concepts.values_mut() {
            if let ConceptKind::Sensory { channel } = c.kind {
                c.last_output = Some((frame[channel as usize].clone(), now));
                wave.push(c.id);
            }
        }
        let mut fresh: BTreeSet<ConceptId> = wave.iter().copied().collect();
        let mut claimed: BTreeSet<ConceptId> = BTreeSet::new();

        while !wave.is_empty() {
            let mut jobs = Vec::new();
            for &tail in &wave {
                if !self.concepts.contains_key(&tail) {
                    continue;
                }
                self.explore(tail, now, &fresh, &mut report)?;
                let Some(idx) = self.select_index(tail) else {
                    continue;
                };
                let Action { head, slot, q, .. } = self.actions[&tail][idx];
                if claimed.contains(&head) {
                    continue;
                }
                let Some(inputs) = self.gather_inputs(head, now) else {
                    continue;
                };
                claimed.insert(head);
                jobs.push(Job {
                    tail,
                    head,
                    slot,
                    q,
                    inputs,
                });
            }

            let results = self.run_jobs(&jobs);

            let mut next = Vec::new();
            for (job, result) in jobs.iter().zip(results) {
                if self.commit(job, result, now, &mut report) {
                    next.push(job.head);
                }
            }
            next.sort_unstable();
            fresh.extend(next.iter().copied());
            wave = next;
        }

        self.prune(now, &mut report);
        Ok(report)
    }

    fn explore(
        &mut self,
        tail: ConceptId,
        now: u64,
        fresh: &BTreeSet<ConceptId>,
        report: &mut TickReport,
    ) -> Result<(), NetworkError> {
        let sum_q: f64 = self.actions_from(tail).iter().map(|a| a.q).sum();
        let u = self.rng.random::<f64>();
        if !self.params.exploration
            || u >= exploration_probability(self.params.q_const, sum_q).value()
        {
            return Ok(());
        }

        let mut partner = None;
        if self.rng.random::<f64>() < self.params.multi_input_prob {
            let candidates: Vec<ConceptId> = fresh.iter().copied().filter(|&c| c != tail).collect();
            if !candidates.is_empty() {
                partner = Some(candidates[self.rng.random_range(0..candidates.len())]);
            }
        }

        let output_len = |id: ConceptId| {
            self.concepts[&id]
                .fresh_at(now)
                .map_or(0, FeatureVector::len)
        };
        let input_len = output_len(tail).max(partner.map_or(0, output_len));
        let arity = if partner.is_some() { 2 } else { 1 };
        let gen = self.params.gen_params(arity, input_len);
        let codelet = codegen::generate(&gen, &mut self.rng)?;
        let head = self.add_concept(ConceptKind::Codelet(codelet))?;

        for (from, slot) in std::iter::once((tail, 0)).chain(partner.map(|p| (p, 1))) {
            if let Some(v) = self.add_action(from, head, slot)? {
                report.removed_actions.push(RemovedAction {
                    tail: v.tail,
                    head: v.head,
                    slot: v.slot,
                    q: v.q,
                    reason: RemovalReason::Replaced,
                });
            }
        }
        report.explorations.push(Exploration {
            tail,
            head,
            partner,
        });
        Ok(())
    }

    /// Same-tick outputs for every input slot of `head`, taking the lowest
    /// tail id per slot.
    fn gather_inputs(&self, head: ConceptId, now: u64) -> Option<Vec<FeatureVector>> {
        let arity = self.concepts.get(&head)?.codelet()?.arity();
        (0..arity)
            .map(|slot| {
                self.incoming(head)
                    .filter(|&(_, s)| s == slot)
                    .find_map(|(t, _)| self.concepts[&t].fresh_at(now))
                    .cloned()
            })
            .collect()
    }

    fn run_jobs(&self, jobs: &[Job]) -> Vec<ExecOutcome> {
        let fuel = self.params.fuel;
        let run = |job: &Job| {
            let codelet = self.concepts[&job.head]
                .codelet()
                .expect("jobs target codelets");
            execute(codelet, &job.inputs, fuel).expect("inputs match arity")
        };
        match &self.pool {
            Some(pool) if jobs.len() > 1 => pool.install(|| jobs.par_iter().map(run).collect()),
            _ => jobs.iter().map(run).collect(),
        }
    }

    /// Records one result. Returns whether the head fired.
    fn commit(
        &mut self,
        job: &Job,
        result: ExecOutcome,
        now: u64,
        report: &mut TickReport,
    ) -> bool {
        let (outcome, output) = match result.outcome {
            Outcome::Positive(v) => (OutcomeKind::Positive, Some(v)),
            Outcome::Negative => (OutcomeKind::Negative, None),
            Outcome::FuelExhausted => (OutcomeKind::FuelExhausted, None),
        };
        let fired = output.is_some();

        let head = self
            .concepts
            .get_mut(&job.head)
            .expect("claimed heads are not deleted mid-tick");
        head.window.record(fired);
        head.timing.record(result.steps_used);
        if let Some(v) = output {
            head.last_output = Some((v, now));
        }
        let p = head.window.probability().expect("just recorded");
        let reward = intrinsic_reward(p);
        let eff = effective_reward(reward, &head.timing).unwrap_or(0.0);

        let successors: Vec<Successor> = self
            .actions_from(job.head)
            .iter()
            .map(|a| Successor {
                q: a.q,
                p: self.concepts[&a.head].probability().unwrap_or(0.0),
            })
            .collect();
        let (alpha, gamma, rule) = (self.params.alpha, self.params.gamma, self.params.td_rule);

        let q_after = self.action_mut(job.tail, job.head, job.slot).map(|action| {
            let inputs = TdInputs {
                q: action.q,
                reward: eff,
                alpha,
                gamma,
                successors: &successors,
            };
            action.q = td_update(rule, &inputs);
            action.q
        });
        report.executions.push(Execution {
            tail: job.tail,
            head: job.head,
            outcome,
            steps: result.steps_used,
            p: p.value(),
            reward,
            effective_reward: eff,
            q_before: job.q,
            q_after,
        });
        fired
    }

    fn prune(&mut self, now: u64, report: &mut TickReport) {
        let threshold = self.params.prune_threshold;
        let patience = self.params.prune_patience;
        let mut expired = Vec::new();
        for list in self.actions.values_mut() {
            for a in list.iter_mut() {
                if a.q < threshold {
                    let since = *a.low_q_since.get_or_insert(now);
                    if now - since >= patience {
                        expired.push((a.tail, a.head, a.slot));
                    }
                } else {
                    a.low_q_since = None;
                }
            }
        }
        for (tail, head, slot) in expired {
            if let Some(a) = self.remove_action(tail, head, slot) {
                report
                    .removed_actions
                    .push(removed(a, RemovalReason::LowValue));
            }
        }

        loop {
            let orphans: Vec<ConceptId> = self
                .concepts
                .values()
                .filter(|c| matches!(c.kind, ConceptKind::Codelet(_)) && self.in_degree(c.id) == 0)
                .map(|c| c.id)
                .collect();
            if orphans.is_empty() {
                break;
            }
            for id in orphans {
                while let Some(a) = self.actions.get(&id).and_then(|l| l.first()).cloned() {
                    self.remove_action(a.tail, a.head, a.slot);
                    report
                        .removed_actions
                        .push(removed(a, RemovalReason::Cascade));
                }
                let c = self.concepts.remove(&id).expect("orphan exists");
                report.pruned.push(PrunedConcept {
                    id,
                    level: c.level,
                    p: c.probability(),
                    samples: c.window.len(),
                    avg_steps: c.timing.avg_steps(),
                    created_at: c.created_at,
                });
            }
        }
    }
}

fn removed(a: Action, reason: RemovalReason) -> RemovedAction {
    RemovedAction {
        tail: a.tail,
        head: a.head,
        slot: a.slot,
        q: a.q,
        reason,
    }
}
