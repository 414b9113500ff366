use std::fmt;

use super::isa::Opcode;
use super::{Instruction, Operand, Program, MAX_ARITY, MAX_CODELET_LEN, MAX_VEC_LEN};

/// A reason a program is not a valid codelet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    MissingRet,
    MissingExit,
    /// No conditional jump has one successor leading to `RET` and the other
    /// leading to `EXIT`.
    NoSeparatingBranch,
    BadJumpTarget {
        at: usize,
        target: usize,
    },
    BadOperands {
        at: usize,
    },
    BadLength(usize),
    BadArity(u8),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRet => f.write_str("MissingRet"),
            Violation::MissingExit => f.write_str("MissingExit"),
            Violation::NoSeparatingBranch => f.write_str("NoSeparatingBranch"),
            Violation::BadJumpTarget { at, target } => {
                write!(f, "BadJumpTarget at {at:04} (target {target:04})")
            }
            Violation::BadOperands { at } => write!(f, "BadOperands at {at:04}"),
            Violation::BadLength(n) => {
                write!(f, "BadLength {n} (expected 1..={MAX_CODELET_LEN})")
            }
            Violation::BadArity(n) => write!(f, "BadArity {n} (expected 1..={MAX_ARITY})"),
        }
    }
}

/// Checks every codelet invariant and returns all violations found; an
/// empty list means the program is a valid codelet.
///
/// Branch separation is a static property of the listing: some conditional
/// jump must have one successor from which a `RET` is reachable and the
/// other from which an `EXIT` is reachable, where the paths may not pass
/// back through that jump. The jump itself does not have to be reachable
/// from the entry point.
pub fn validate(program: &Program) -> Vec<Violation> {
    let code = &program.instructions;
    let mut violations = Vec::new();

    if program.arity == 0 || program.arity > MAX_ARITY {
        violations.push(Violation::BadArity(program.arity));
    }
    if code.is_empty() || code.len() > MAX_CODELET_LEN {
        violations.push(Violation::BadLength(code.len()));
    }

    let mut targets_ok = true;
    for (at, ins) in code.iter().enumerate() {
        if !operands_ok(ins, program.arity) {
            violations.push(Violation::BadOperands { at });
        }
        if let Operand::Target(t) = ins.operand {
            if t as usize >= code.len() {
                violations.push(Violation::BadJumpTarget {
                    at,
                    target: t as usize,
                });
                targets_ok = false;
            }
        }
    }

    let has_ret = code.iter().any(|i| i.opcode == Opcode::Ret);
    let has_exit = code.iter().any(|i| i.opcode == Opcode::Exit);
    if !has_ret {
        violations.push(Violation::MissingRet);
    }
    if !has_exit {
        violations.push(Violation::MissingExit);
    }
    if has_ret && has_exit && targets_ok && !has_separating_branch(code) {
        violations.push(Violation::NoSeparatingBranch);
    }
    violations
}

fn operands_ok(ins: &Instruction, arity: u8) -> bool {
    if ins.operand.kind() != ins.opcode.operand_kind() {
        return false;
    }
    match ins.operand {
        Operand::Slot(slot) => slot < arity,
        Operand::Elem { slot, index } => slot < arity && (index as usize) < MAX_VEC_LEN,
        _ => true,
    }
}

fn successors(code: &[Instruction], at: usize) -> impl Iterator<Item = usize> {
    let ins = &code[at];
    let next = (at + 1 < code.len()).then_some(at + 1);
    let (a, b) = match ins.opcode {
        Opcode::Ret | Opcode::Exit => (None, None),
        Opcode::Jmp => (ins.target(), None),
        op if op.is_conditional_jump() => (next, ins.target()),
        _ => (next, None),
    };
    a.into_iter().chain(b)
}

/// Terminal opcodes reachable from `start` without entering `blocked`.
fn reaches(code: &[Instruction], start: usize, blocked: usize) -> (bool, bool) {
    let mut seen = vec![false; code.len()];
    let mut stack = vec![start];
    let (mut ret, mut exit) = (false, false);
    while let Some(at) = stack.pop() {
        if at == blocked || seen[at] {
            continue;
        }
        seen[at] = true;
        match code[at].opcode {
            Opcode::Ret => ret = true,
            Opcode::Exit => exit = true,
            _ => stack.extend(successors(code, at)),
        }
    }
    (ret, exit)
}

fn has_separating_branch(code: &[Instruction]) -> bool {
    code.iter().enumerate().any(|(at, ins)| {
        if !ins.opcode.is_conditional_jump() {
            return false;
        }
        let taken = ins.target().map(|t| reaches(code, t, at));
        let fall = (at + 1 < code.len()).then(|| reaches(code, at + 1, at));
        match (fall, taken) {
            (Some((fr, fe)), Some((tr, te))) => (fr && te) || (fe && tr),
            _ => false,
        }
    })
}
