//! Binary depository snapshots.
//!
//! All integers little-endian, floats as IEEE-754 bit patterns.
//!
//! ```text
//! header   magic "BSPR" | version u8 | body_len u64
//! body     tick u64 | rng seed [u8; 32] | rng stream u64 | rng word_pos u128
//!          next_id u64 | params | concept_count u32 | concept* | action_count u32 | action*
//! params   alpha f64 | gamma f64 | q_const f64 | q_init f64 | max_actions_per_tail u32
//!          fuel u32 | prune_threshold f64 | prune_patience u64 | td_rule u8 (0 max, 1 mean)
//!          exploration u8 | window_capacity u32 | timing_decay f64 | multi_input_prob f64
//!          gen_min_len u32 | gen_max_len u32 | gen_weights 6 x f64 | imm_min i16 | imm_max i16
//! concept  id u64 | kind u8 (0 sensory, 1 codelet, 2 actuator)
//!          [sensory: channel u16] [codelet: len u32, codelet binary]
//!          level u32 | created_at u64
//!          window: capacity u32 | len u32 | ceil(len / 8) bytes, oldest outcome in bit 0
//!          timing: decay f64 | avg_steps f64 | count u64
//!          last_output: present u8 [len u8 | len x i16 | tick u64]
//! action   tail u64 | head u64 | slot u8 | q f64 | created_at u64 | low_q_since: present u8 [u64]
//! ```
//!
//! Actions are stored per tail in selection order, tails ascending.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codegen::FamilyWeights;
use crate::infomath::{OutcomeWindow, TimingStats};
use crate::learning::TdRule;
use crate::vm::{Codelet, FeatureVector, Program};

use super::{Action, Concept, ConceptId, ConceptKind, Depository, EngineParams};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"BSPR";
pub const SNAPSHOT_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("snapshot version {found} not supported (expected {SNAPSHOT_VERSION})")]
    VersionMismatch { found: u8 },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
}

fn corrupt<T>(msg: impl Into<String>) -> Result<T, SnapshotError> {
    Err(SnapshotError::CorruptSnapshot(msg.into()))
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i16(&mut self, v: i16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection fits in u32"));
    }
    fn opt_u64(&mut self, v: Option<u64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.u64(x);
            }
            None => self.u8(0),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.bytes.len() - self.pos < n {
            return corrupt(format!("truncated at byte {}", self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N], SnapshotError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
    fn flag(&mut self) -> Result<bool, SnapshotError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => corrupt(format!("bad flag byte {b}")),
        }
    }
    fn u16(&mut self) -> Result<u16, SnapshotError> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn i16(&mut self) -> Result<i16, SnapshotError> {
        Ok(i16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn u128(&mut self) -> Result<u128, SnapshotError> {
        Ok(u128::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn opt_u64(&mut self) -> Result<Option<u64>, SnapshotError> {
        Ok(if self.flag()? {
            Some(self.u64()?)
        } else {
            None
        })
    }
}

fn write_params(w: &mut Writer, p: &EngineParams) {
    w.f64(p.alpha);
    w.f64(p.gamma);
    w.f64(p.q_const);
    w.f64(p.q_init);
    w.len(p.max_actions_per_tail);
    w.u32(p.fuel);
    w.f64(p.prune_threshold);
    w.u64(p.prune_patience);
    w.u8(match p.td_rule {
        TdRule::Max => 0,
        TdRule::Mean => 1,
    });
    w.u8(u8::from(p.exploration));
    w.len(p.window_capacity);
    w.f64(p.timing_decay);
    w.f64(p.multi_input_prob);
    w.len(p.gen_min_len);
    w.len(p.gen_max_len);
    for x in p.gen_weights.as_array() {
        w.f64(x);
    }
    w.i16(p.imm_min);
    w.i16(p.imm_max);
}

fn read_params(r: &mut Reader<'_>) -> Result<EngineParams, SnapshotError> {
    let alpha = r.f64()?;
    let gamma = r.f64()?;
    let q_const = r.f64()?;
    let q_init = r.f64()?;
    let max_actions_per_tail = r.u32()? as usize;
    let fuel = r.u32()?;
    let prune_threshold = r.f64()?;
    let prune_patience = r.u64()?;
    let td_rule = match r.u8()? {
        0 => TdRule::Max,
        1 => TdRule::Mean,
        b => return corrupt(format!("unknown td rule {b}")),
    };
    let exploration = r.flag()?;
    let window_capacity = r.u32()? as usize;
    let timing_decay = r.f64()?;
    let multi_input_prob = r.f64()?;
    let gen_min_len = r.u32()? as usize;
    let gen_max_len = r.u32()? as usize;
    let mut weights = [0.0; 6];
    for x in &mut weights {
        *x = r.f64()?;
    }
    let imm_min = r.i16()?;
    let imm_max = r.i16()?;
    let params = EngineParams {
        alpha,
        gamma,
        q_const,
        q_init,
        max_actions_per_tail,
        fuel,
        prune_threshold,
        prune_patience,
        td_rule,
        exploration,
        window_capacity,
        timing_decay,
        multi_input_prob,
        gen_min_len,
        gen_max_len,
        gen_weights: FamilyWeights::from_array(weights),
        imm_min,
        imm_max,
    };
    match params.check() {
        Ok(()) => Ok(params),
        Err(e) => corrupt(e.to_string()),
    }
}

fn write_concept(w: &mut Writer, c: &Concept) {
    w.u64(c.id.0);
    match &c.kind {
        ConceptKind::Sensory { channel } => {
            w.u8(0);
            w.u16(*channel);
        }
        ConceptKind::Codelet(code) => {
            w.u8(1);
            let bytes = code.to_bytes();
            w.len(bytes.len());
            w.0.extend_from_slice(&bytes);
        }
        ConceptKind::Actuator => w.u8(2),
    }
    w.u32(c.level);
    w.u64(c.created_at);

    w.len(c.window.capacity());
    w.len(c.window.len());
    let mut byte = 0u8;
    for (i, positive) in c.window.outcomes().enumerate() {
        byte |= u8::from(positive) << (i % 8);
        if i % 8 == 7 {
            w.u8(byte);
            byte = 0;
        }
    }
    if !c.window.len().is_multiple_of(8) {
        w.u8(byte);
    }

    w.f64(c.timing.decay());
    w.f64(c.timing.avg_steps().unwrap_or(0.0));
    w.u64(c.timing.count());

    match &c.last_output {
        Some((v, t)) => {
            w.u8(1);
            w.u8(v.len() as u8);
            for &x in v.as_slice() {
                w.i16(x);
            }
            w.u64(*t);
        }
        None => w.u8(0),
    }
}

fn read_concept(r: &mut Reader<'_>) -> Result<Concept, SnapshotError> {
    let id = ConceptId(r.u64()?);
    let kind = match r.u8()? {
        0 => ConceptKind::Sensory { channel: r.u16()? },
        1 => {
            let n = r.u32()? as usize;
            let program = Program::from_bytes(r.take(n)?)
                .or_else(|e| corrupt(format!("concept {id}: {e}")))?;
            let codelet =
                Codelet::new(program).or_else(|e| corrupt(format!("concept {id}: {e}")))?;
            ConceptKind::Codelet(codelet)
        }
        2 => ConceptKind::Actuator,
        b => return corrupt(format!("concept {id}: unknown kind {b}")),
    };
    let level = r.u32()?;
    let created_at = r.u64()?;

    let capacity = r.u32()? as usize;
    let len = r.u32()? as usize;
    if capacity == 0 || len > capacity {
        return corrupt(format!(
            "concept {id}: window length {len} exceeds capacity {capacity}"
        ));
    }
    let bits = r.take(len.div_ceil(8))?;
    let window =
        OutcomeWindow::from_outcomes(capacity, (0..len).map(|i| bits[i / 8] >> (i % 8) & 1 == 1));

    let decay = r.f64()?;
    let avg = r.f64()?;
    let count = r.u64()?;
    let timing = TimingStats::from_parts(decay, avg, count);

    let last_output = if r.flag()? {
        let n = r.u8()? as usize;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(r.i16()?);
        }
        let fv = FeatureVector::new(v).or_else(|e| corrupt(format!("concept {id}: {e}")))?;
        Some((fv, r.u64()?))
    } else {
        None
    };
    Ok(Concept {
        id,
        kind,
        level,
        window,
        timing,
        last_output,
        created_at,
    })
}

impl Depository {
    pub fn snapshot(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.u64(self.tick);
        w.0.extend_from_slice(&self.rng.get_seed());
        w.u64(self.rng.get_stream());
        w.u128(self.rng.get_word_pos());
        w.u64(self.next_id);
        write_params(&mut w, &self.params);
        w.len(self.concepts.len());
        for c in self.concepts.values() {
            write_concept(&mut w, c);
        }
        w.len(self.action_count());
        for a in self.actions() {
            w.u64(a.tail.0);
            w.u64(a.head.0);
            w.u8(a.slot);
            w.f64(a.q);
            w.u64(a.created_at);
            w.opt_u64(a.low_q_since);
        }

        let mut out = Vec::with_capacity(w.0.len() + 13);
        out.extend_from_slice(&SNAPSHOT_MAGIC);
        out.push(SNAPSHOT_VERSION);
        out.extend_from_slice(&(w.0.len() as u64).to_le_bytes());
        out.extend_from_slice(&w.0);
        out
    }

    /// Rebuilds a depository. Worker settings are not part of a snapshot;
    /// the result runs single-threaded.
    pub fn restore(bytes: &[u8]) -> Result<Depository, SnapshotError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4).ok() != Some(&SNAPSHOT_MAGIC[..]) {
            return corrupt("bad magic");
        }
        let version = r.u8()?;
        if version != SNAPSHOT_VERSION {
            return Err(SnapshotError::VersionMismatch { found: version });
        }
        let body_len = r.u64()?;
        if body_len != (bytes.len() - r.pos) as u64 {
            return corrupt(format!(
                "body is {} bytes, header says {body_len}",
                bytes.len() - r.pos
            ));
        }

        let tick = r.u64()?;
        let mut rng = ChaCha8Rng::from_seed(r.array()?);
        rng.set_stream(r.u64()?);
        rng.set_word_pos(r.u128()?);
        let next_id = r.u64()?;
        let params = read_params(&mut r)?;

        let mut concepts = BTreeMap::new();
        for _ in 0..r.u32()? {
            let c = read_concept(&mut r)?;
            if c.id.0 >= next_id || concepts.contains_key(&c.id) {
                return corrupt(format!("concept id {} out of order", c.id));
            }
            concepts.insert(c.id, c);
        }

        let mut dep = Depository {
            params,
            tick,
            next_id,
            rng,
            concepts,
            actions: BTreeMap::new(),
            incoming: BTreeMap::new(),
            pool: None,
        };
        for _ in 0..r.u32()? {
            let tail = ConceptId(r.u64()?);
            let head = ConceptId(r.u64()?);
            let slot = r.u8()?;
            let q = r.f64()?;
            let created_at = r.u64()?;
            let low_q_since = r.opt_u64()?;
            if !dep.concepts.contains_key(&tail) || !dep.concepts.contains_key(&head) {
                return corrupt(format!("action {tail} -> {head} has a missing endpoint"));
            }
            dep.actions.entry(tail).or_default().push(Action {
                tail,
                head,
                slot,
                q,
                created_at,
                low_q_since,
            });
            dep.incoming.entry(head).or_default().insert((tail, slot));
        }
        if r.pos != bytes.len() {
            return corrupt("trailing bytes");
        }
        Ok(dep)
    }
}
