//! Deterministic 16-bit register machine that runs codelets.
//!
//! A codelet reads one or more input [`FeatureVector`]s and halts with `RET`
//! (positive outcome, carrying whatever it appended to its output vector) or
//! `EXIT` (negative outcome). Execution is bounded by a fuel budget counted
//! in executed instructions.

mod asm;
mod binary;
mod exec;
mod isa;
mod validate;

use std::fmt;

use thiserror::Error;

pub use asm::{assemble, disassemble, ParseError};
pub use binary::{DecodeError, BINARY_VERSION};
pub use exec::{execute, execute_program, ExecOutcome, Outcome, DEFAULT_FUEL};
pub use isa::{
    instruction_set, AluOp, Cond, Family, Form, Opcode, OpcodeInfo, OperandKind, Reg,
    INSTRUCTION_SET, ISA_SIZE,
};
pub use validate::{validate, Violation};

/// Maximum number of elements in a feature vector.
pub const MAX_VEC_LEN: usize = 64;
/// Maximum number of instructions in a codelet.
pub const MAX_CODELET_LEN: usize = 64;
/// Maximum number of input slots of a codelet.
pub const MAX_ARITY: u8 = 8;

/// The uniform data format exchanged between concepts: up to
/// [`MAX_VEC_LEN`] signed 16-bit integers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FeatureVector(Vec<i16>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("feature vector length {0} exceeds {MAX_VEC_LEN}")]
pub struct VectorTooLong(pub usize);

impl FeatureVector {
    pub fn new(elements: Vec<i16>) -> Result<Self, VectorTooLong> {
        if elements.len() > MAX_VEC_LEN {
            return Err(VectorTooLong(elements.len()));
        }
        Ok(FeatureVector(elements))
    }

    pub fn empty() -> Self {
        FeatureVector(Vec::new())
    }

    pub fn as_slice(&self) -> &[i16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<i16> {
        self.0.get(index).copied()
    }

    /// Appends `value`, returning `false` when the vector is already full.
    pub(crate) fn try_push(&mut self, value: i16) -> bool {
        if self.0.len() >= MAX_VEC_LEN {
            return false;
        }
        self.0.push(value);
        true
    }

    pub fn into_inner(self) -> Vec<i16> {
        self.0
    }
}

impl TryFrom<Vec<i16>> for FeatureVector {
    type Error = VectorTooLong;

    fn try_from(elements: Vec<i16>) -> Result<Self, Self::Error> {
        FeatureVector::new(elements)
    }
}

impl TryFrom<&[i16]> for FeatureVector {
    type Error = VectorTooLong;

    fn try_from(elements: &[i16]) -> Result<Self, Self::Error> {
        FeatureVector::new(elements.to_vec())
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

/// Instruction operand. Which variant is legal is fixed by the opcode's
/// [`OperandKind`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    None,
    /// Zero-based input slot.
    Slot(u8),
    /// Zero-based input slot and element index.
    Elem {
        slot: u8,
        index: u8,
    },
    Imm(i16),
    /// Zero-based instruction index.
    Target(u16),
}

impl Operand {
    pub fn kind(&self) -> OperandKind {
        match self {
            Operand::None => OperandKind::None,
            Operand::Slot(_) => OperandKind::Slot,
            Operand::Elem { .. } => OperandKind::Elem,
            Operand::Imm(_) => OperandKind::Imm,
            Operand::Target(_) => OperandKind::Target,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub operand: Operand,
}

impl Instruction {
    pub const fn new(opcode: Opcode, operand: Operand) -> Self {
        Instruction { opcode, operand }
    }

    pub const fn bare(opcode: Opcode) -> Self {
        Instruction {
            opcode,
            operand: Operand::None,
        }
    }

    pub const fn elem(opcode: Opcode, slot: u8, index: u8) -> Self {
        Instruction {
            opcode,
            operand: Operand::Elem { slot, index },
        }
    }

    pub const fn imm(opcode: Opcode, value: i16) -> Self {
        Instruction {
            opcode,
            operand: Operand::Imm(value),
        }
    }

    pub const fn slot(opcode: Opcode, slot: u8) -> Self {
        Instruction {
            opcode,
            operand: Operand::Slot(slot),
        }
    }

    pub const fn jump(opcode: Opcode, target: u16) -> Self {
        Instruction {
            opcode,
            operand: Operand::Target(target),
        }
    }

    pub fn target(&self) -> Option<usize> {
        match self.operand {
            Operand::Target(t) => Some(t as usize),
            _ => None,
        }
    }
}

/// An instruction listing that has not been validated. Produced by the
/// assembler and the binary decoder; turned into a [`Codelet`] by
/// [`Codelet::new`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub arity: u8,
    pub instructions: Vec<Instruction>,
}

impl Program {
    pub fn new(arity: u8, instructions: Vec<Instruction>) -> Self {
        Program {
            arity,
            instructions,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        binary::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Program, DecodeError> {
        binary::decode(bytes)
    }
}

/// A program that passed [`validate`]. Only validated codelets can be
/// executed or placed in a concept.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Codelet(Program);

/// Raised when a program fails validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid codelet: {}", format_violations(.0))]
pub struct InvalidCodelet(pub Vec<Violation>);

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Codelet {
    pub fn new(program: Program) -> Result<Codelet, InvalidCodelet> {
        let violations = validate(&program);
        if violations.is_empty() {
            Ok(Codelet(program))
        } else {
            Err(InvalidCodelet(violations))
        }
    }

    pub fn from_instructions(
        arity: u8,
        instructions: Vec<Instruction>,
    ) -> Result<Codelet, InvalidCodelet> {
        Codelet::new(Program::new(arity, instructions))
    }

    pub fn arity(&self) -> u8 {
        self.0.arity
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.0.instructions
    }

    pub fn len(&self) -> usize {
        self.0.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.instructions.is_empty()
    }

    pub fn program(&self) -> &Program {
        &self.0
    }

    pub fn into_program(self) -> Program {
        self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        binary::encode(&self.0)
    }

    pub fn disassemble(&self) -> String {
        disassemble(&self.0)
    }
}

impl TryFrom<Program> for Codelet {
    type Error = InvalidCodelet;

    fn try_from(program: Program) -> Result<Self, Self::Error> {
        Codelet::new(program)
    }
}

/// Errors raised by [`execute`] and [`execute_program`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("codelet expects {expected} inputs, got {actual}")]
    ArityMismatch { expected: u8, actual: usize },
    #[error(transparent)]
    InvalidCodelet(#[from] InvalidCodelet),
}
