use super::isa::Opcode;
use super::{Codelet, FeatureVector, Operand, Program, VmError};

/// Default fuel budget per execution, in executed instructions.
pub const DEFAULT_FUEL: u32 = 512;

/// How an execution ended.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// `RET`: the input lies on the matching side of the partition.
    Positive(FeatureVector),
    /// `EXIT`, falling off the end, or overflowing the output vector.
    Negative,
    /// The fuel budget ran out before a terminal instruction.
    FuelExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExecOutcome {
    pub outcome: Outcome,
    pub steps_used: u32,
}

impl ExecOutcome {
    pub fn is_positive(&self) -> bool {
        matches!(self.outcome, Outcome::Positive(_))
    }

    pub fn output(&self) -> Option<&FeatureVector> {
        match &self.outcome {
            Outcome::Positive(v) => Some(v),
            _ => None,
        }
    }
}

struct Machine<'a> {
    a: i16,
    b: i16,
    zero: bool,
    negative: bool,
    inputs: &'a [FeatureVector],
    /// Sole input slot after a `CHAIN`.
    chained: Option<FeatureVector>,
    output: FeatureVector,
}

impl Machine<'_> {
    fn set_flags(&mut self, value: i16) {
        self.zero = value == 0;
        self.negative = value < 0;
    }

    fn slot(&self, slot: u8) -> Option<&FeatureVector> {
        match &self.chained {
            Some(v) if slot == 0 => Some(v),
            Some(_) => None,
            None => self.inputs.get(slot as usize),
        }
    }

    /// Out-of-range reads yield 0.
    fn read(&self, slot: u8, index: i32) -> i16 {
        if index < 0 {
            return 0;
        }
        self.slot(slot)
            .and_then(|v| v.get(index as usize))
            .unwrap_or(0)
    }

    fn operand_value(&self, operand: Operand) -> i16 {
        match operand {
            Operand::Imm(v) => v,
            Operand::Elem { slot, index } => self.read(slot, index as i32),
            _ => self.b,
        }
    }
}

/// Runs a validated codelet on `inputs` with a budget of `fuel` steps.
///
/// The result is a pure function of the arguments.
pub fn execute(
    codelet: &Codelet,
    inputs: &[FeatureVector],
    fuel: u32,
) -> Result<ExecOutcome, VmError> {
    if inputs.len() != codelet.arity() as usize {
        return Err(VmError::ArityMismatch {
            expected: codelet.arity(),
            actual: inputs.len(),
        });
    }
    Ok(run(codelet.instructions(), inputs, fuel))
}

/// Validates `program` and runs it.
pub fn execute_program(
    program: &Program,
    inputs: &[FeatureVector],
    fuel: u32,
) -> Result<ExecOutcome, VmError> {
    let codelet = Codelet::new(program.clone())?;
    execute(&codelet, inputs, fuel)
}

fn run(code: &[crate::vm::Instruction], inputs: &[FeatureVector], fuel: u32) -> ExecOutcome {
    use Opcode::*;

    let mut m = Machine {
        a: 0,
        b: 0,
        zero: false,
        negative: false,
        inputs,
        chained: None,
        output: FeatureVector::empty(),
    };
    let mut pc = 0usize;
    let mut steps = 0u32;

    let done = |outcome, steps_used| ExecOutcome {
        outcome,
        steps_used,
    };

    loop {
        let Some(ins) = code.get(pc) else {
            return done(Outcome::Negative, steps);
        };
        if steps >= fuel {
            return done(Outcome::FuelExhausted, steps);
        }
        steps += 1;
        pc += 1;

        match ins.opcode {
            MovAIn | MovAImm => {
                m.a = m.operand_value(ins.operand);
                m.set_flags(m.a);
            }
            MovBIn | MovBImm => {
                m.b = m.operand_value(ins.operand);
                m.set_flags(m.b);
            }
            MovAIdx => {
                if let Operand::Slot(slot) = ins.operand {
                    m.a = m.read(slot, m.b as i32);
                }
                m.set_flags(m.a);
            }
            LenA => {
                if let Operand::Slot(slot) = ins.operand {
                    m.a = m.slot(slot).map_or(0, |v| v.len() as i16);
                }
                m.set_flags(m.a);
            }
            MovAB => {
                m.a = m.b;
                m.set_flags(m.a);
            }
            MovBA => {
                m.b = m.a;
                m.set_flags(m.b);
            }
            Swap => {
                std::mem::swap(&mut m.a, &mut m.b);
                m.set_flags(m.a);
            }
            NegA => {
                m.a = m.a.wrapping_neg();
                m.set_flags(m.a);
            }
            AbsA => {
                m.a = m.a.wrapping_abs();
                m.set_flags(m.a);
            }
            NotA => {
                m.a = !m.a;
                m.set_flags(m.a);
            }
            IncA => {
                m.a = m.a.wrapping_add(1);
                m.set_flags(m.a);
            }
            DecA => {
                m.a = m.a.wrapping_sub(1);
                m.set_flags(m.a);
            }
            IncB => {
                m.b = m.b.wrapping_add(1);
                m.set_flags(m.b);
            }
            DecB => {
                m.b = m.b.wrapping_sub(1);
                m.set_flags(m.b);
            }
            ShlImm => {
                let n = m.operand_value(ins.operand) as u32 & 15;
                m.a = m.a.wrapping_shl(n);
                m.set_flags(m.a);
            }
            ShrImm => {
                let n = m.operand_value(ins.operand) as u32 & 15;
                m.a = m.a.wrapping_shr(n);
                m.set_flags(m.a);
            }
            AppendA | AppendB | AppendIn => {
                let value = match ins.opcode {
                    AppendA => m.a,
                    AppendB => m.b,
                    _ => m.operand_value(ins.operand),
                };
                if !m.output.try_push(value) {
                    return done(Outcome::Negative, steps);
                }
                m.set_flags(value);
            }
            Nop => {}
            Jmp => {
                if let Operand::Target(t) = ins.operand {
                    pc = t as usize;
                }
            }
            Ret => {
                return done(Outcome::Positive(std::mem::take(&mut m.output)), steps);
            }
            Exit => return done(Outcome::Negative, steps),
            Chain => {
                m.chained = Some(std::mem::take(&mut m.output));
                m.a = 0;
                m.b = 0;
                m.zero = false;
                m.negative = false;
            }
            op => {
                if let Some(cond) = op.condition() {
                    if cond.holds(m.zero, m.negative) {
                        if let Operand::Target(t) = ins.operand {
                            pc = t as usize;
                        }
                    }
                } else if let Some(alu) = op.alu_op() {
                    let rhs = m.operand_value(ins.operand);
                    if op == CmpB || op == CmpImm || op == CmpIn {
                        m.zero = m.a == rhs;
                        m.negative = m.a < rhs;
                    } else {
                        m.a = alu.apply(m.a, rhs);
                        m.set_flags(m.a);
                    }
                }
            }
        }
    }
}
