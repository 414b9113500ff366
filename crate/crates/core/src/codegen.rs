//! Random search in program space.
//!
//! Generated codelets follow one template: a straight-line prefix that
//! starts with an input load, one conditional jump, then two branches of
//! random filler, one ending in `RET` and the other in `EXIT`. The branch
//! order is random. Every codelet produced here passes validation.

use rand::Rng;
use thiserror::Error;

use crate::vm::{
    Codelet, Family, Instruction, InvalidCodelet, Opcode, Operand, OperandKind, MAX_CODELET_LEN,
    MAX_VEC_LEN,
};

/// Shortest generated codelet: load, branch, RET, EXIT.
pub const MIN_TEMPLATE_LEN: usize = 4;
/// Extra steps a concatenated codelet may take over running its two parts
/// separately: the `CHAIN` that hands the first output to the second part.
pub const CONCAT_OVERHEAD_STEPS: u32 = 1;

const MAX_RETRIES: usize = 32;

/// Relative weights of the instruction families used as filler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyWeights {
    pub load: f64,
    pub immediate: f64,
    pub moves: f64,
    pub alu: f64,
    pub append: f64,
    pub nop: f64,
}

impl Default for FamilyWeights {
    fn default() -> Self {
        FamilyWeights {
            load: 3.0,
            immediate: 1.0,
            moves: 1.0,
            alu: 4.0,
            append: 2.0,
            nop: 0.5,
        }
    }
}

impl FamilyWeights {
    fn entries(&self) -> [(Family, f64); 6] {
        [
            (Family::Load, self.load),
            (Family::Immediate, self.immediate),
            (Family::Move, self.moves),
            (Family::Alu, self.alu),
            (Family::Append, self.append),
            (Family::Nop, self.nop),
        ]
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.entries().map(|(_, w)| w)
    }

    pub fn from_array(w: [f64; 6]) -> Self {
        FamilyWeights {
            load: w[0],
            immediate: w[1],
            moves: w[2],
            alu: w[3],
            append: w[4],
            nop: w[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub min_len: usize,
    pub max_len: usize,
    pub arity: u8,
    pub weights: FamilyWeights,
    /// Element indices are drawn from `0..index_range`.
    pub index_range: u8,
    pub imm_min: i16,
    pub imm_max: i16,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_len: 4,
            max_len: 16,
            arity: 1,
            weights: FamilyWeights::default(),
            index_range: 8,
            imm_min: -32,
            imm_max: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("second codelet must take exactly one input, it takes {0}")]
    ArityMismatch(u8),
    #[error("concatenated codelet would have {0} instructions (limit {MAX_CODELET_LEN})")]
    TooLong(usize),
    #[error(transparent)]
    Invalid(#[from] InvalidCodelet),
}

impl GenParams {
    pub fn check(&self) -> Result<(), CodegenError> {
        let bad = |m: &str| Err(CodegenError::InvalidParams(m.to_string()));
        if self.min_len == 0 || self.min_len > self.max_len || self.max_len > MAX_CODELET_LEN {
            return bad("need 1 <= min_len <= max_len <= 64");
        }
        if self.arity == 0 || self.arity > crate::vm::MAX_ARITY {
            return bad("arity out of range");
        }
        if self.index_range == 0 || self.index_range as usize > MAX_VEC_LEN {
            return bad("index_range must be in 1..=64");
        }
        if self.imm_min > self.imm_max {
            return bad("imm_min > imm_max");
        }
        let w = self.weights.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return bad("weights must be non-negative and not all zero");
        }
        Ok(())
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(items: &[T], rng: &mut R) -> T {
    items[rng.random_range(0..items.len())]
}

fn random_operand<R: Rng + ?Sized>(op: Opcode, params: &GenParams, rng: &mut R) -> Operand {
    match op.operand_kind() {
        OperandKind::None => Operand::None,
        OperandKind::Slot => Operand::Slot(rng.random_range(0..params.arity)),
        OperandKind::Elem => Operand::Elem {
            slot: rng.random_range(0..params.arity),
            index: rng.random_range(0..params.index_range),
        },
        OperandKind::Imm if matches!(op, Opcode::ShlImm | Opcode::ShrImm) => {
            Operand::Imm(rng.random_range(0..=15))
        }
        OperandKind::Imm => Operand::Imm(rng.random_range(params.imm_min..=params.imm_max)),
        // Filler never contains jumps.
        OperandKind::Target => Operand::Target(0),
    }
}

fn random_from_family<R: Rng + ?Sized>(
    family: Family,
    params: &GenParams,
    rng: &mut R,
) -> Instruction {
    let ops: Vec<Opcode> = Opcode::in_family(family).collect();
    let op = pick(&ops, rng);
    Instruction::new(op, random_operand(op, params, rng))
}

fn random_filler<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Instruction {
    let entries = params.weights.entries();
    let total: f64 = entries.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    let mut family = Family::Alu;
    for (f, w) in entries {
        if w <= 0.0 {
            continue;
        }
        family = f;
        if u < w {
            break;
        }
        u -= w;
    }
    random_from_family(family, params, rng)
}

/// `{MOV A, var1[00]; JZ 0003; RET; EXIT}`
pub fn minimal_template(arity: u8) -> Codelet {
    Codelet::from_instructions(
        arity.max(1),
        vec![
            Instruction::elem(Opcode::MovAIn, 0, 0),
            Instruction::jump(Opcode::Jz, 3),
            Instruction::bare(Opcode::Ret),
            Instruction::bare(Opcode::Exit),
        ],
    )
    .expect("minimal template is valid")
}

fn draw<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Vec<Instruction> {
    let len = rng
        .random_range(params.min_len..=params.max_len)
        .max(MIN_TEMPLATE_LEN);
    let filler = len - 3;
    let prefix = rng.random_range(1..=filler);
    let first_branch = rng.random_range(0..=filler - prefix);
    let second_branch = filler - prefix - first_branch;

    let mut code = Vec::with_capacity(len);
    code.push(random_from_family(Family::Load, params, rng));
    for _ in 1..prefix {
        code.push(random_filler(params, rng));
    }
    let jump_at = code.len();
    let conds: Vec<Opcode> = Opcode::in_family(Family::Branch)
        .filter(|op| op.is_conditional_jump())
        .collect();
    code.push(Instruction::bare(pick(&conds, rng)));

    let (fall_end, taken_end) = if rng.random::<bool>() {
        (Opcode::Ret, Opcode::Exit)
    } else {
        (Opcode::Exit, Opcode::Ret)
    };
    for _ in 0..first_branch {
        code.push(random_filler(params, rng));
    }
    code.push(Instruction::bare(fall_end));
    let target = code.len() as u16;
    code[jump_at].operand = Operand::Target(target);
    for _ in 0..second_branch {
        code.push(random_filler(params, rng));
    }
    code.push(Instruction::bare(taken_end));
    code
}

/// Draws a random valid codelet. Deterministic given `params` and the state
/// of `rng`.
pub fn generate<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<Codelet, CodegenError> {
    params.check()?;
    for _ in 0..MAX_RETRIES {
        if let Ok(c) = Codelet::from_instructions(params.arity, draw(params, rng)) {
            return Ok(c);
        }
    }
    Ok(minimal_template(params.arity))
}

/// Fuses two codelets into one that matches exactly when `first` matches and
/// `second` then matches `first`'s output. The result takes `first`'s
/// inputs.
///
/// Layout: `first` with every `RET` rewritten to a jump to a `CHAIN`, an
/// `EXIT` guard when `first` could fall off its end, the `CHAIN`, then
/// `second` with its jump targets shifted.
pub fn concatenate(first: &Codelet, second: &Codelet) -> Result<Codelet, CodegenError> {
    if second.arity() != 1 {
        return Err(CodegenError::ArityMismatch(second.arity()));
    }
    let head = first.instructions();
    let falls_through = head
        .last()
        .is_some_and(|ins| !matches!(ins.opcode, Opcode::Ret | Opcode::Exit | Opcode::Jmp));
    let chain_at = head.len() + usize::from(falls_through);
    let offset = chain_at + 1;
    let total = offset + second.len();
    if total > MAX_CODELET_LEN {
        return Err(CodegenError::TooLong(total));
    }

    let mut code = Vec::with_capacity(total);
    for ins in head {
        code.push(if ins.opcode == Opcode::Ret {
            Instruction::jump(Opcode::Jmp, chain_at as u16)
        } else {
            *ins
        });
    }
    if falls_through {
        code.push(Instruction::bare(Opcode::Exit));
    }
    code.push(Instruction::bare(Opcode::Chain));
    for ins in second.instructions() {
        let mut ins = *ins;
        if let Operand::Target(t) = ins.operand {
            ins.operand = Operand::Target(t + offset as u16);
        }
        code.push(ins);
    }
    Ok(Codelet::from_instructions(first.arity(), code)?)
}
