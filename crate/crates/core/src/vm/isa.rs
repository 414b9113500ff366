//! The fixed instruction set.
//!
//! Two 16-bit registers `A` and `B`, two flags `Z` (zero) and `N` (negative),
//! a read-only set of input slots (`var1`, `var2`, ...) and an append-only
//! output vector. Every addressing-mode variant is its own opcode; the table
//! holds exactly [`ISA_SIZE`] entries and the numeric opcode value is the
//! table index, which is also the byte used by the binary codelet format.
//!
//! | family    | opcodes |
//! |-----------|---------|
//! | load      | `MOV A, varS[i]`, `MOV B, varS[i]`, `MOV A, varS[B]`, `LEN A, varS` |
//! | immediate | `MOV A, k`, `MOV B, k` |
//! | move      | `MOV A, B`, `MOV B, A`, `SWAP` |
//! | alu       | `ADD SUB MUL DIV MOD MIN MAX AND OR XOR CMP` against `B`, `k`, `varS[i]`; `NEG ABS NOT INC DEC A`; `INC DEC B`; `SHL SHR A, k` |
//! | append    | `APPEND A`, `APPEND B`, `APPEND varS[i]` |
//! | nop       | `NOP` |
//! | branch    | `JZ JNZ JLT JGT JLE JGE JMP` |
//! | terminal  | `RET` (positive), `EXIT` (negative) |
//! | pipeline  | `CHAIN` |
//!
//! `CHAIN` restarts execution state with the current output as the sole
//! input slot; it exists so two codelets can be fused into one program.

use std::fmt;

/// Number of opcodes in the instruction set.
pub const ISA_SIZE: usize = 65;

/// A register name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reg {
    A,
    B,
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reg::A => f.write_str("A"),
            Reg::B => f.write_str("B"),
        }
    }
}

/// Operand kind carried by an instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperandKind {
    None,
    /// Input slot number.
    Slot,
    /// Input slot number plus element index.
    Elem,
    /// Signed 16-bit immediate.
    Imm,
    /// Instruction index inside the codelet.
    Target,
}

/// Textual shape of an instruction's operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    /// `SWAP`
    Bare,
    /// `NEG A`
    Reg(Reg),
    /// `MOV A, B`
    RegReg(Reg, Reg),
    /// `ADD A, var1[03]`
    RegElem(Reg),
    /// `MOV A, var1[B]`
    RegIndexed(Reg),
    /// `ADD A, -5`
    RegImm(Reg),
    /// `LEN A, var1`
    RegSlot(Reg),
    /// `APPEND var1[03]`
    Elem,
    /// `JZ 0005`
    Target,
}

impl Form {
    pub fn operand_kind(self) -> OperandKind {
        match self {
            Form::Bare | Form::Reg(_) | Form::RegReg(..) => OperandKind::None,
            Form::RegElem(_) | Form::Elem => OperandKind::Elem,
            Form::RegIndexed(_) | Form::RegSlot(_) => OperandKind::Slot,
            Form::RegImm(_) => OperandKind::Imm,
            Form::Target => OperandKind::Target,
        }
    }
}

/// Grouping used by the program generator's weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Load,
    Immediate,
    Move,
    Alu,
    Append,
    Nop,
    Branch,
    Terminal,
    Pipeline,
}

/// Arithmetic/logic operation shared by the three binary addressing modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AluOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Min,
    Max,
    And,
    Or,
    Xor,
    Cmp,
}

impl AluOp {
    /// Applies the operation with 16-bit two's-complement wrapping.
    /// Division and remainder by zero yield 0. `Cmp` returns `a` unchanged.
    pub fn apply(self, a: i16, b: i16) -> i16 {
        match self {
            AluOp::Add => a.wrapping_add(b),
            AluOp::Sub => a.wrapping_sub(b),
            AluOp::Mul => a.wrapping_mul(b),
            AluOp::Div if b == 0 => 0,
            AluOp::Div => a.wrapping_div(b),
            AluOp::Mod if b == 0 => 0,
            AluOp::Mod => a.wrapping_rem(b),
            AluOp::Min => a.min(b),
            AluOp::Max => a.max(b),
            AluOp::And => a & b,
            AluOp::Or => a | b,
            AluOp::Xor => a ^ b,
            AluOp::Cmp => a,
        }
    }
}

/// Branch condition over the `Z`/`N` flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    Zero,
    NotZero,
    Less,
    Greater,
    LessEq,
    GreaterEq,
}

impl Cond {
    pub fn holds(self, zero: bool, negative: bool) -> bool {
        match self {
            Cond::Zero => zero,
            Cond::NotZero => !zero,
            Cond::Less => negative,
            Cond::Greater => !negative && !zero,
            Cond::LessEq => negative || zero,
            Cond::GreaterEq => !negative,
        }
    }
}

macro_rules! opcodes {
    ($($name:ident = $mn:literal, $form:expr, $fam:ident;)*) => {
        /// Every opcode of the virtual machine, in table order.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum Opcode {
            $($name,)*
        }

        /// The instruction set table, indexed by opcode byte.
        pub static INSTRUCTION_SET: [OpcodeInfo; ISA_SIZE] = [
            $(OpcodeInfo { opcode: Opcode::$name, mnemonic: $mn, form: $form, family: Family::$fam },)*
        ];
    };
}

use Form::{Bare, Elem, RegElem, RegImm, RegIndexed, RegReg, RegSlot, Target};
use Reg::{A, B};

opcodes! {
    MovAIn = "MOV", RegElem(A), Load;
    MovBIn = "MOV", RegElem(B), Load;
    MovAIdx = "MOV", RegIndexed(A), Load;
    LenA = "LEN", RegSlot(A), Load;
    MovAImm = "MOV", RegImm(A), Immediate;
    MovBImm = "MOV", RegImm(B), Immediate;
    MovAB = "MOV", RegReg(A, B), Move;
    MovBA = "MOV", RegReg(B, A), Move;
    Swap = "SWAP", Bare, Move;
    AddB = "ADD", RegReg(A, B), Alu;
    AddImm = "ADD", RegImm(A), Alu;
    AddIn = "ADD", RegElem(A), Alu;
    SubB = "SUB", RegReg(A, B), Alu;
    SubImm = "SUB", RegImm(A), Alu;
    SubIn = "SUB", RegElem(A), Alu;
    MulB = "MUL", RegReg(A, B), Alu;
    MulImm = "MUL", RegImm(A), Alu;
    MulIn = "MUL", RegElem(A), Alu;
    DivB = "DIV", RegReg(A, B), Alu;
    DivImm = "DIV", RegImm(A), Alu;
    DivIn = "DIV", RegElem(A), Alu;
    ModB = "MOD", RegReg(A, B), Alu;
    ModImm = "MOD", RegImm(A), Alu;
    ModIn = "MOD", RegElem(A), Alu;
    MinB = "MIN", RegReg(A, B), Alu;
    MinImm = "MIN", RegImm(A), Alu;
    MinIn = "MIN", RegElem(A), Alu;
    MaxB = "MAX", RegReg(A, B), Alu;
    MaxImm = "MAX", RegImm(A), Alu;
    MaxIn = "MAX", RegElem(A), Alu;
    AndB = "AND", RegReg(A, B), Alu;
    AndImm = "AND", RegImm(A), Alu;
    AndIn = "AND", RegElem(A), Alu;
    OrB = "OR", RegReg(A, B), Alu;
    OrImm = "OR", RegImm(A), Alu;
    OrIn = "OR", RegElem(A), Alu;
    XorB = "XOR", RegReg(A, B), Alu;
    XorImm = "XOR", RegImm(A), Alu;
    XorIn = "XOR", RegElem(A), Alu;
    CmpB = "CMP", RegReg(A, B), Alu;
    CmpImm = "CMP", RegImm(A), Alu;
    CmpIn = "CMP", RegElem(A), Alu;
    NegA = "NEG", Form::Reg(A), Alu;
    AbsA = "ABS", Form::Reg(A), Alu;
    NotA = "NOT", Form::Reg(A), Alu;
    IncA = "INC", Form::Reg(A), Alu;
    DecA = "DEC", Form::Reg(A), Alu;
    IncB = "INC", Form::Reg(B), Alu;
    DecB = "DEC", Form::Reg(B), Alu;
    ShlImm = "SHL", RegImm(A), Alu;
    ShrImm = "SHR", RegImm(A), Alu;
    AppendA = "APPEND", Form::Reg(A), Append;
    AppendB = "APPEND", Form::Reg(B), Append;
    AppendIn = "APPEND", Elem, Append;
    Nop = "NOP", Bare, Nop;
    Jz = "JZ", Target, Branch;
    Jnz = "JNZ", Target, Branch;
    Jlt = "JLT", Target, Branch;
    Jgt = "JGT", Target, Branch;
    Jle = "JLE", Target, Branch;
    Jge = "JGE", Target, Branch;
    Jmp = "JMP", Target, Branch;
    Ret = "RET", Bare, Terminal;
    Exit = "EXIT", Bare, Terminal;
    Chain = "CHAIN", Bare, Pipeline;
}

/// One row of the instruction set table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpcodeInfo {
    pub opcode: Opcode,
    pub mnemonic: &'static str,
    pub form: Form,
    pub family: Family,
}

/// Returns the complete instruction set table.
pub fn instruction_set() -> &'static [OpcodeInfo; ISA_SIZE] {
    &INSTRUCTION_SET
}

impl Opcode {
    pub fn from_byte(byte: u8) -> Option<Opcode> {
        INSTRUCTION_SET.get(byte as usize).map(|info| info.opcode)
    }

    pub fn byte(self) -> u8 {
        self as u8
    }

    pub fn info(self) -> &'static OpcodeInfo {
        &INSTRUCTION_SET[self as usize]
    }

    pub fn mnemonic(self) -> &'static str {
        self.info().mnemonic
    }

    pub fn form(self) -> Form {
        self.info().form
    }

    pub fn family(self) -> Family {
        self.info().family
    }

    pub fn operand_kind(self) -> OperandKind {
        self.form().operand_kind()
    }

    /// Condition tested by a conditional jump, `None` for anything else
    /// (including the unconditional `JMP`).
    pub fn condition(self) -> Option<Cond> {
        match self {
            Opcode::Jz => Some(Cond::Zero),
            Opcode::Jnz => Some(Cond::NotZero),
            Opcode::Jlt => Some(Cond::Less),
            Opcode::Jgt => Some(Cond::Greater),
            Opcode::Jle => Some(Cond::LessEq),
            Opcode::Jge => Some(Cond::GreaterEq),
            _ => None,
        }
    }

    pub fn is_conditional_jump(self) -> bool {
        self.condition().is_some()
    }

    /// Binary ALU operation and the register-operand it reads, if any.
    pub fn alu_op(self) -> Option<AluOp> {
        use Opcode::*;
        Some(match self {
            AddB | AddImm | AddIn => AluOp::Add,
            SubB | SubImm | SubIn => AluOp::Sub,
            MulB | MulImm | MulIn => AluOp::Mul,
            DivB | DivImm | DivIn => AluOp::Div,
            ModB | ModImm | ModIn => AluOp::Mod,
            MinB | MinImm | MinIn => AluOp::Min,
            MaxB | MaxImm | MaxIn => AluOp::Max,
            AndB | AndImm | AndIn => AluOp::And,
            OrB | OrImm | OrIn => AluOp::Or,
            XorB | XorImm | XorIn => AluOp::Xor,
            CmpB | CmpImm | CmpIn => AluOp::Cmp,
            _ => return None,
        })
    }

    /// Opcodes belonging to `family`, in table order.
    pub fn in_family(family: Family) -> impl Iterator<Item = Opcode> {
        INSTRUCTION_SET
            .iter()
            .filter(move |info| info.family == family)
            .map(|info| info.opcode)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn table_has_65_entries_in_byte_order() {
        assert_eq!(instruction_set().len(), 65);
        for (i, info) in instruction_set().iter().enumerate() {
            assert_eq!(info.opcode as usize, i);
            assert_eq!(Opcode::from_byte(i as u8), Some(info.opcode));
        }
        assert_eq!(Opcode::from_byte(65), None);
    }

    #[test]
    fn required_mnemonics_present() {
        let names: HashSet<_> = instruction_set().iter().map(|i| i.mnemonic).collect();
        for m in ["MOV", "ADD", "APPEND", "JZ", "RET", "EXIT"] {
            assert!(names.contains(m), "missing {m}");
        }
    }

    #[test]
    fn mnemonic_and_form_identify_opcode() {
        let mut seen = HashSet::new();
        for info in instruction_set() {
            assert!(seen.insert((info.mnemonic, info.form)), "{:?}", info.opcode);
        }
    }

    #[test]
    fn six_conditional_jumps() {
        let n = instruction_set()
            .iter()
            .filter(|i| i.opcode.is_conditional_jump())
            .count();
        assert_eq!(n, 6);
    }

    #[test]
    fn division_by_zero_yields_zero() {
        assert_eq!(AluOp::Div.apply(7, 0), 0);
        assert_eq!(AluOp::Mod.apply(7, 0), 0);
        assert_eq!(AluOp::Div.apply(i16::MIN, -1), i16::MIN);
        assert_eq!(AluOp::Add.apply(32767, 1), -32768);
    }
}
