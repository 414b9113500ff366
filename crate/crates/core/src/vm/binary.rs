//! Binary codelet format (little-endian):
//!
//! ```text
//! u8   version (= BINARY_VERSION)
//! u8   arity
//! u16  instruction count
//! per instruction, 5 bytes:
//!   u8   opcode (index into the instruction set table)
//!   u16  word0   slot | immediate (two's complement) | jump target | 0
//!   u16  word1   element index for element operands, else 0
//! ```

use thiserror::Error;

use super::isa::{Opcode, OperandKind};
use super::{Instruction, Operand, Program};

pub const BINARY_VERSION: u8 = 1;
const HEADER_LEN: usize = 4;
const INSTRUCTION_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unsupported codelet format version {0}")]
    Version(u8),
    #[error("codelet data truncated")]
    Truncated,
    #[error("{0} trailing bytes after codelet")]
    Trailing(usize),
    #[error("unknown opcode byte {byte} at instruction {at}")]
    UnknownOpcode { at: usize, byte: u8 },
    #[error("malformed operand words at instruction {at}")]
    BadOperand { at: usize },
}

pub(crate) fn encode(program: &Program) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + INSTRUCTION_LEN * program.instructions.len());
    out.push(BINARY_VERSION);
    out.push(program.arity);
    out.extend_from_slice(&(program.instructions.len() as u16).to_le_bytes());
    for ins in &program.instructions {
        let (w0, w1): (u16, u16) = match ins.operand {
            Operand::None => (0, 0),
            Operand::Slot(s) => (s as u16, 0),
            Operand::Elem { slot, index } => (slot as u16, index as u16),
            Operand::Imm(v) => (v as u16, 0),
            Operand::Target(t) => (t, 0),
        };
        out.push(ins.opcode.byte());
        out.extend_from_slice(&w0.to_le_bytes());
        out.extend_from_slice(&w1.to_le_bytes());
    }
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Program, DecodeError> {
    if bytes.is_empty() {
        return Err(DecodeError::Truncated);
    }
    if bytes[0] != BINARY_VERSION {
        return Err(DecodeError::Version(bytes[0]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated);
    }
    let arity = bytes[1];
    let count = u16::from_le_bytes([bytes[2], bytes[3]]) as usize;
    let body = &bytes[HEADER_LEN..];
    let needed = count * INSTRUCTION_LEN;
    if body.len() < needed {
        return Err(DecodeError::Truncated);
    }
    if body.len() > needed {
        return Err(DecodeError::Trailing(body.len() - needed));
    }

    let instructions = body
        .chunks_exact(INSTRUCTION_LEN)
        .enumerate()
        .map(|(at, chunk)| {
            let opcode = Opcode::from_byte(chunk[0])
                .ok_or(DecodeError::UnknownOpcode { at, byte: chunk[0] })?;
            let w0 = u16::from_le_bytes([chunk[1], chunk[2]]);
            let w1 = u16::from_le_bytes([chunk[3], chunk[4]]);
            let bad = DecodeError::BadOperand { at };
            let operand = match opcode.operand_kind() {
                OperandKind::None if w0 == 0 && w1 == 0 => Operand::None,
                OperandKind::Slot if w1 == 0 => Operand::Slot(u8::try_from(w0).map_err(|_| bad)?),
                OperandKind::Elem => Operand::Elem {
                    slot: u8::try_from(w0).map_err(|_| bad.clone())?,
                    index: u8::try_from(w1).map_err(|_| bad)?,
                },
                OperandKind::Imm if w1 == 0 => Operand::Imm(w0 as i16),
                OperandKind::Target if w1 == 0 => Operand::Target(w0),
                _ => return Err(bad),
            };
            Ok(Instruction::new(opcode, operand))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Program::new(arity, instructions))
}
