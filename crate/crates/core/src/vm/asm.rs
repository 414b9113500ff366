//! Text form of codelets, in the style of a machine-code listing:
//!
//! ```text
//! .arity 2
//! 0000 MOV A, var1[00]
//! 0001 ADD A, var2[00]
//! 0002 APPEND A
//! 0003 JZ 0001
//! 0004 RET
//! 0005 EXIT
//! ```
//!
//! One instruction per line as `MNEMONIC operand{, operand}`. The leading
//! address is optional but must match the instruction index when present.
//! Comments start with `;`. Input slots are written `var1`, `var2`, ...;
//! elements as `var1[03]`, or `var1[B]` for B-indexed loads. Immediates and
//! jump targets are decimal integers. `.arity N` sets the input count; when
//! absent it is inferred from the highest slot referenced.

use std::fmt::Write as _;

use thiserror::Error;

use super::isa::{Form, Reg, INSTRUCTION_SET};
use super::{Instruction, Operand, Program, MAX_ARITY};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// One-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Reg(Reg),
    Elem { slot: u8, index: u8 },
    Indexed(u8),
    Slot(u8),
    Int(i64),
}

fn parse_slot(name: &str) -> Option<u8> {
    let digits = name.strip_prefix("var")?;
    let n: u16 = digits.parse().ok()?;
    (1..=256).contains(&n).then(|| (n - 1) as u8)
}

fn parse_token(text: &str) -> Result<Token, String> {
    let upper = text.to_ascii_uppercase();
    match upper.as_str() {
        "A" => return Ok(Token::Reg(Reg::A)),
        "B" => return Ok(Token::Reg(Reg::B)),
        _ => {}
    }
    let lower = text.to_ascii_lowercase();
    if lower.starts_with("var") {
        if let Some((name, rest)) = lower.split_once('[') {
            let slot = parse_slot(name).ok_or_else(|| format!("bad slot `{text}`"))?;
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| format!("missing `]` in `{text}`"))?;
            if inner == "b" {
                return Ok(Token::Indexed(slot));
            }
            let index: u8 = inner
                .parse()
                .map_err(|_| format!("bad element index in `{text}`"))?;
            return Ok(Token::Elem { slot, index });
        }
        return parse_slot(&lower)
            .map(Token::Slot)
            .ok_or_else(|| format!("bad slot `{text}`"));
    }
    text.parse::<i64>()
        .map(Token::Int)
        .map_err(|_| format!("unrecognised operand `{text}`"))
}

fn match_form(form: Form, tokens: &[Token]) -> Option<Operand> {
    use Token as T;
    Some(match (form, tokens) {
        (Form::Bare, []) => Operand::None,
        (Form::Reg(r), [T::Reg(x)]) if r == *x => Operand::None,
        (Form::RegReg(r1, r2), [T::Reg(x), T::Reg(y)]) if r1 == *x && r2 == *y => Operand::None,
        (Form::RegElem(r), [T::Reg(x), T::Elem { slot, index }]) if r == *x => Operand::Elem {
            slot: *slot,
            index: *index,
        },
        (Form::RegIndexed(r), [T::Reg(x), T::Indexed(slot)]) if r == *x => Operand::Slot(*slot),
        (Form::RegImm(r), [T::Reg(x), T::Int(v)]) if r == *x => {
            Operand::Imm(i16::try_from(*v).ok()?)
        }
        (Form::RegSlot(r), [T::Reg(x), T::Slot(slot)]) if r == *x => Operand::Slot(*slot),
        (Form::Elem, [T::Elem { slot, index }]) => Operand::Elem {
            slot: *slot,
            index: *index,
        },
        (Form::Target, [T::Int(v)]) => Operand::Target(u16::try_from(*v).ok()?),
        _ => return None,
    })
}

fn parse_instruction(text: &str) -> Result<Instruction, String> {
    let (mnemonic, rest) = match text.find(|c: char| c.is_whitespace() || c == ',') {
        Some(i) => (&text[..i], text[i..].trim()),
        None => (text, ""),
    };
    let mnemonic = mnemonic.to_ascii_uppercase();
    // Tolerate `APPEND, A`.
    let rest = rest.strip_prefix(',').unwrap_or(rest).trim();
    let tokens = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',')
            .map(|t| parse_token(t.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut known = false;
    for info in INSTRUCTION_SET.iter().filter(|i| i.mnemonic == mnemonic) {
        known = true;
        if let Some(operand) = match_form(info.form, &tokens) {
            return Ok(Instruction::new(info.opcode, operand));
        }
    }
    if known {
        Err(format!("bad operands for {mnemonic}: `{rest}`"))
    } else {
        Err(format!("unknown mnemonic `{mnemonic}`"))
    }
}

/// Parses assembly text into an unvalidated [`Program`].
pub fn assemble(text: &str) -> Result<Program, ParseError> {
    let mut arity: Option<u8> = None;
    let mut instructions = Vec::new();
    let mut max_slot: Option<u8> = None;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| ParseError { line, message };
        let content = raw.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix(".arity") {
            if !instructions.is_empty() || arity.is_some() {
                return Err(err("`.arity` must come once, before any instruction".into()));
            }
            let value: u8 = rest
                .trim()
                .parse()
                .map_err(|_| err(format!("bad arity `{}`", rest.trim())))?;
            arity = Some(value);
            continue;
        }
        let mut body = content;
        let first = content.split_whitespace().next().unwrap_or("");
        if first.chars().all(|c| c.is_ascii_digit()) {
            let addr: usize = first
                .parse()
                .map_err(|_| err(format!("bad address `{first}`")))?;
            if addr != instructions.len() {
                return Err(err(format!(
                    "address {addr:04} does not match instruction index {:04}",
                    instructions.len()
                )));
            }
            body = content[first.len()..].trim();
        }
        let ins = parse_instruction(body).map_err(err)?;
        if let Operand::Slot(s) | Operand::Elem { slot: s, .. } = ins.operand {
            max_slot = Some(max_slot.map_or(s, |m| m.max(s)));
        }
        instructions.push(ins);
    }

    let arity = arity.unwrap_or_else(|| max_slot.map_or(1, |s| s.saturating_add(1)).min(MAX_ARITY));
    Ok(Program::new(arity, instructions))
}

fn write_operands(out: &mut String, form: Form, operand: Operand) {
    let elem = |slot: u8, index: u8| format!("var{}[{:02}]", slot as u16 + 1, index);
    let text = match (form, operand) {
        (Form::Bare, _) => String::new(),
        (Form::Reg(r), _) => format!("{r}"),
        (Form::RegReg(a, b), _) => format!("{a}, {b}"),
        (Form::RegElem(r), Operand::Elem { slot, index }) => format!("{r}, {}", elem(slot, index)),
        (Form::RegIndexed(r), Operand::Slot(s)) => format!("{r}, var{}[B]", s as u16 + 1),
        (Form::RegImm(r), Operand::Imm(v)) => format!("{r}, {v}"),
        (Form::RegSlot(r), Operand::Slot(s)) => format!("{r}, var{}", s as u16 + 1),
        (Form::Elem, Operand::Elem { slot, index }) => elem(slot, index),
        (Form::Target, Operand::Target(t)) => format!("{t:04}"),
        (_, other) => format!("<{other:?}>"),
    };
    if !text.is_empty() {
        out.push(' ');
        out.push_str(&text);
    }
}

/// Renders one instruction without its address.
pub(crate) fn instruction_text(ins: &Instruction) -> String {
    let mut out = ins.opcode.mnemonic().to_string();
    write_operands(&mut out, ins.opcode.form(), ins.operand);
    out
}

/// Renders a program as canonical assembly text.
pub fn disassemble(program: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".arity {}", program.arity);
    for (i, ins) in program.instructions.iter().enumerate() {
        let _ = writeln!(out, "{i:04} {}", instruction_text(ins));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vm::Opcode::*;

    #[test]
    fn listing_parses() {
        let p = assemble(
            "0000 MOV A, var1[00]\n0001 ADD A, var2[00] ; sum\n0002 APPEND, A\n0003 JZ 0001\n0004 RET",
        )
        .unwrap();
        assert_eq!(p.arity, 2);
        assert_eq!(
            p.instructions,
            vec![
                Instruction::elem(MovAIn, 0, 0),
                Instruction::elem(AddIn, 1, 0),
                Instruction::bare(AppendA),
                Instruction::jump(Jz, 1),
                Instruction::bare(Ret),
            ]
        );
    }

    #[test]
    fn append_ret_listing() {
        let p = assemble("APPEND A\nRET").unwrap();
        assert_eq!(p.instructions.len(), 2);
        assert_eq!(p.arity, 1);
    }

    #[test]
    fn malformed_mnemonic_reports_its_line() {
        let err = assemble("MOV A, var1[00]\n\nFROB A\nRET").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("FROB"));
    }

    #[test]
    fn bad_operands_and_addresses() {
        assert_eq!(assemble("MOV A, 99999").unwrap_err().line, 1);
        assert_eq!(assemble("NOP\n0005 RET").unwrap_err().line, 2);
        assert_eq!(assemble("RET A").unwrap_err().line, 1);
        assert_eq!(assemble("MOV A, var0[01]").unwrap_err().line, 1);
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = ".arity 2\n0000 MOV A, var2[B]\n0001 LEN A, var1\n0002 SHL A, 3\n0003 CMP A, -7\n0004 JGE 0006\n0005 EXIT\n0006 APPEND var2[13]\n0007 RET\n";
        let p = assemble(text).unwrap();
        assert_eq!(disassemble(&p), text);
    }
}
