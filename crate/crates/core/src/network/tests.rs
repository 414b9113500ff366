use super::*;
use crate::env::{PixelMode, PixelStream, PixelStreamConfig};
use crate::learning::Q_MIN;
use crate::vm::assemble;

fn codelet(text: &str) -> Codelet {
    Codelet::new(assemble(text).unwrap()).unwrap()
}

fn identity() -> Codelet {
    codelet("APPEND var1[00]\nRET\nJZ 0001\nEXIT")
}

fn always_ret() -> Codelet {
    codelet("MOV A, var1[00]\nAPPEND A\nRET\nJZ 0002\nEXIT")
}

fn bright() -> Codelet {
    codelet("MOV A, var1[00]\nCMP A, 127\nJLE 0005\nAPPEND A\nRET\nEXIT")
}

fn quiet() -> EngineParams {
    EngineParams {
        exploration: false,
        ..EngineParams::default()
    }
}

fn fv(v: &[i16]) -> FeatureVector {
    FeatureVector::try_from(v).unwrap()
}

#[test]
fn add_concepts() {
    let mut dep = Depository::new(quiet(), 0).unwrap();
    let s = dep
        .add_concept(ConceptKind::Sensory { channel: 0 })
        .unwrap();
    let c = dep.add_concept(ConceptKind::Codelet(identity())).unwrap();
    assert_ne!(s, c);
    assert_eq!(dep.in_degree(s) + dep.out_degree(s), 0);
    let bad = Codelet::from_instructions(
        1,
        vec![crate::vm::Instruction::bare(crate::vm::Opcode::Ret)],
    );
    assert!(bad.is_err());
}

#[test]
fn add_action_rules() {
    let mut dep = Depository::with_sensors(quiet(), 0, 1).unwrap();
    let s = ConceptId(0);
    let h = dep.add_concept(ConceptKind::Codelet(identity())).unwrap();
    assert_eq!(dep.add_action(s, h, 0).unwrap(), None);
    assert_eq!(dep.actions_from(s)[0].q, dep.params().q_init);
    assert_eq!(dep.concept(h).unwrap().level, 1);
    assert_eq!(
        dep.add_action(s, ConceptId(99), 0),
        Err(NetworkError::UnknownConcept(ConceptId(99)))
    );
    assert_eq!(
        dep.add_action(s, h, 1),
        Err(NetworkError::BadSlot { head: h, slot: 1 })
    );
    assert!(matches!(
        dep.add_action(h, s, 0),
        Err(NetworkError::InvalidEdge { .. })
    ));
    assert!(matches!(
        dep.add_action(s, h, 0),
        Err(NetworkError::InvalidEdge { .. })
    ));
}

#[test]
fn full_tail_replaces_lowest_then_oldest() {
    let params = EngineParams {
        max_actions_per_tail: 3,
        ..quiet()
    };
    let mut dep = Depository::with_sensors(params, 0, 1).unwrap();
    let s = ConceptId(0);
    let heads: Vec<ConceptId> = (0..5)
        .map(|_| dep.add_concept(ConceptKind::Codelet(identity())).unwrap())
        .collect();
    for &h in &heads[..3] {
        dep.add_action(s, h, 0).unwrap();
    }
    dep.set_q(s, heads[0], 0, 0.5);
    // heads[1] and heads[2] tie at q_init; the older goes.
    let victim = dep.add_action(s, heads[3], 0).unwrap().unwrap();
    assert_eq!(victim.head, heads[1]);
    dep.set_q(s, heads[2], 0, 0.9);
    dep.set_q(s, heads[3], 0, 0.05);
    let victim = dep.add_action(s, heads[4], 0).unwrap().unwrap();
    assert_eq!(victim.head, heads[3]);
    assert_eq!(dep.out_degree(s), 3);
    assert_eq!(dep.in_degree(heads[3]), 0);
}

#[test]
fn selection_frequencies() {
    let mut dep = Depository::with_sensors(quiet(), 11, 1).unwrap();
    let s = ConceptId(0);
    assert!(dep.select_action(s).is_none());
    let a = dep.add_concept(ConceptKind::Codelet(identity())).unwrap();
    dep.add_action(s, a, 0).unwrap();
    assert!((0..100).all(|_| dep.select_action(s).unwrap().head == a));
    let b = dep.add_concept(ConceptKind::Codelet(identity())).unwrap();
    dep.add_action(s, b, 0).unwrap();
    dep.set_q(s, a, 0, 1.0);
    dep.set_q(s, b, 0, 3.0);
    assert_eq!(dep.selection_probabilities(s), vec![0.25, 0.75]);
    let n = 100_000;
    let hits = (0..n)
        .filter(|_| dep.select_action(s).unwrap().head == b)
        .count();
    assert!((hits as f64 / n as f64 - 0.75).abs() <= 0.01);
}

#[test]
fn quiet_network_does_nothing() {
    let mut dep = Depository::with_sensors(quiet(), 0, 1).unwrap();
    for t in 0..10 {
        let r = dep.tick(&[fv(&[t])]).unwrap();
        assert!(r.executions.is_empty() && r.explorations.is_empty());
    }
    assert_eq!(dep.current_tick(), 10);
}

#[test]
fn missing_channel() {
    let mut dep = Depository::with_sensors(quiet(), 0, 2).unwrap();
    assert_eq!(dep.tick(&[fv(&[1])]), Err(NetworkError::MissingChannel(1)));
}

#[test]
fn identity_head_saturates() {
    let params = EngineParams {
        prune_threshold: 0.0,
        ..quiet()
    };
    let mut dep = Depository::with_sensors(params, 0, 1).unwrap();
    let s = ConceptId(0);
    let h = dep.add_concept(ConceptKind::Codelet(identity())).unwrap();
    dep.add_action(s, h, 0).unwrap();
    dep.set_q(s, h, 0, 1.0);
    let mut last = None;
    for t in 0..300 {
        let r = dep.tick(&[fv(&[t])]).unwrap();
        assert_eq!(r.executions.len(), 1);
        assert_eq!(r.executions[0].outcome, OutcomeKind::Positive);
        last = Some(r.executions[0].clone());
    }
    let c = dep.concept(h).unwrap();
    assert_eq!(c.probability(), Some(1.0));
    assert_eq!(c.last_output, Some((fv(&[299]), 300)));
    assert_eq!(last.unwrap().reward, 0.0);
}

#[test]
fn partitioning_head_beats_always_ret() {
    let mut dep = Depository::with_sensors(quiet(), 3, 1).unwrap();
    let s = ConceptId(0);
    let always = dep.add_concept(ConceptKind::Codelet(always_ret())).unwrap();
    let split = dep.add_concept(ConceptKind::Codelet(bright())).unwrap();
    dep.add_action(s, always, 0).unwrap();
    dep.add_action(s, split, 0).unwrap();
    let env = PixelStream::new(PixelStreamConfig {
        mode: PixelMode::Uniform,
        seed: 3,
    })
    .unwrap();
    for t in 1..=2000 {
        dep.tick(&[env.frame(t)]).unwrap();
    }
    let q = |h| {
        dep.actions_from(s)
            .iter()
            .find(|a| a.head == h)
            .map(|a| a.q)
    };
    assert!(q(split).unwrap() > q(always).unwrap_or(0.0));
}

fn grown(seed: u64, ticks: u64, workers: usize) -> (Depository, Vec<TickReport>) {
    let params = EngineParams {
        imm_min: 0,
        imm_max: 255,
        ..EngineParams::default()
    };
    let mut dep = Depository::with_sensors(params, seed, 1).unwrap();
    dep.set_workers(workers).unwrap();
    let env = PixelStream::new(PixelStreamConfig {
        mode: PixelMode::Uniform,
        seed,
    })
    .unwrap();
    let reports = (1..=ticks)
        .map(|t| dep.tick(&[env.frame(t)]).unwrap())
        .collect();
    (dep, reports)
}

#[test]
fn invariants_hold_while_growing() {
    let (dep, reports) = grown(5, 1500, 1);
    assert!(reports.iter().any(|r| !r.explorations.is_empty()));
    for a in dep.actions() {
        assert!(a.q >= Q_MIN);
        assert!(a.head > a.tail);
        let head = dep.concept(a.head).unwrap();
        assert!(a.slot < head.codelet().unwrap().arity());
        assert!(head.level > dep.concept(a.tail).unwrap().level);
    }
    for c in dep.concepts() {
        assert!(dep.out_degree(c.id) <= dep.params().max_actions_per_tail);
        if c.codelet().is_some() {
            assert!(dep.in_degree(c.id) > 0);
        }
        if let Some((_, t)) = c.last_output {
            assert!(t <= dep.current_tick());
        }
        let probs: f64 = dep.selection_probabilities(c.id).iter().sum();
        if dep.out_degree(c.id) > 0 {
            assert!((probs - 1.0).abs() < 1e-12);
        }
    }
    for r in &reports {
        let mut heads: Vec<_> = r.executions.iter().map(|e| e.head).collect();
        heads.sort();
        heads.dedup();
        assert_eq!(heads.len(), r.executions.len());
        assert!(r.executions.iter().all(|e| e.steps <= dep.params().fuel));
    }
}

#[test]
fn workers_do_not_change_results() {
    let (a, ra) = grown(8, 600, 1);
    let (b, rb) = grown(8, 600, 4);
    assert_eq!(ra, rb);
    assert_eq!(a.snapshot(), b.snapshot());
}

#[test]
fn snapshot_round_trip_continues_identically() {
    let env = PixelStream::new(PixelStreamConfig {
        mode: PixelMode::Uniform,
        seed: 42,
    })
    .unwrap();
    let params = EngineParams {
        imm_min: 0,
        imm_max: 255,
        ..EngineParams::default()
    };
    let mut straight = Depository::with_sensors(params, 42, 1).unwrap();
    for t in 1..=50 {
        straight.tick(&[env.frame(t)]).unwrap();
    }
    let bytes = straight.snapshot();
    let mut restored = Depository::restore(&bytes).unwrap();
    assert_eq!(restored, straight);
    assert_eq!(restored.snapshot(), bytes);
    for t in 51..=100 {
        let a = straight.tick(&[env.frame(t)]).unwrap();
        let b = restored.tick(&[env.frame(t)]).unwrap();
        assert_eq!(a, b);
    }
    assert_eq!(straight.snapshot(), restored.snapshot());
}

#[test]
fn snapshot_errors() {
    let (dep, _) = grown(1, 50, 1);
    let bytes = dep.snapshot();
    assert!(matches!(
        Depository::restore(&bytes[..bytes.len() - 3]),
        Err(SnapshotError::CorruptSnapshot(_))
    ));
    let mut wrong = bytes.clone();
    wrong[4] = 9;
    assert_eq!(
        Depository::restore(&wrong),
        Err(SnapshotError::VersionMismatch { found: 9 })
    );
    assert!(matches!(
        Depository::restore(b"nope"),
        Err(SnapshotError::CorruptSnapshot(_))
    ));
}
