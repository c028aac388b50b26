//! Recursive-descent parser for the QASM subset.
//!
//! Each statement is parsed independently; after an error the parser skips
//! to the next `;` so one run reports every broken statement.

use super::lexer::{tokenize, Tok, Token};
use super::{ErrorKind, ParseError};
use crate::circuit::{Circuit, GateKind, GateOp};

type Pos = (usize, usize);

/// Largest accepted register; far beyond what can be simulated, but keeps
/// broadcast expansion bounded.
pub(crate) const MAX_REGISTER_SIZE: u64 = 1024;

fn gate_kind(name: &str) -> Option<GateKind> {
    match name {
        // Built-in OpenQASM 2 spellings.
        "U" => Some(GateKind::U3),
        "CX" => Some(GateKind::CNOT),
        "unitary" => None,
        other => GateKind::from_name(other),
    }
}

struct Register {
    name: String,
    size: u64,
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    errors: Vec<ParseError>,
    qreg: Option<Register>,
    cregs: Vec<Register>,
    gates: Vec<GateOp>,
}

/// Aborts the current statement.
struct Bail;

type PResult<T> = Result<T, Bail>;

enum Arg {
    Whole,
    Index(usize),
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&mut self, kind: ErrorKind, pos: Pos, msg: impl Into<String>) -> PResult<T> {
        self.errors.push(ParseError::new(kind, pos, msg));
        Err(Bail)
    }

    fn unexpected<T>(&mut self, wanted: &str) -> PResult<T> {
        let msg = format!("expected {wanted}, found {}", self.peek().describe());
        let pos = self.pos();
        self.error(ErrorKind::Syntax, pos, msg)
    }

    fn expect_sym(&mut self, c: char) -> PResult<Pos> {
        if *self.peek() == Tok::Sym(c) {
            Ok(self.bump().pos)
        } else {
            self.unexpected(&format!("`{c}`"))
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().pos)),
            _ => self.unexpected(what),
        }
    }

    fn int(&mut self, what: &str) -> PResult<(u64, Pos)> {
        match *self.peek() {
            Tok::Int(v) => Ok((v, self.bump().pos)),
            _ => self.unexpected(what),
        }
    }

    /// Skips past the next `;` (or to the end).
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Sym(';') => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Semantic checks run after the closing `;`; nothing to skip then.
    fn just_finished_statement(&self, start: usize) -> bool {
        self.at > start && self.tokens[self.at - 1].tok == Tok::Sym(';')
    }

    fn skip_block(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.bump().tok {
                Tok::Eof => return,
                Tok::Sym('{') => depth += 1,
                Tok::Sym('}') => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return;
                    }
                }
                _ => {}
            }
        }
    }

    fn program(&mut self) {
        while *self.peek() != Tok::Eof {
            let start = self.at;
            if self.statement().is_err() && !self.just_finished_statement(start) {
                self.recover();
            }
            if self.at == start {
                // Never stall on a token no rule consumes.
                self.bump();
            }
        }
        if self.qreg.is_none() && self.errors.is_empty() {
            let pos = self.pos();
            self.errors
                .push(ParseError::new(ErrorKind::Semantic, pos, "no qreg declaration"));
        }
    }

    fn statement(&mut self) -> PResult<()> {
        let pos = self.pos();
        let word = match self.peek().clone() {
            Tok::Ident(w) => w,
            Tok::Sym(';') => {
                self.bump();
                return Ok(());
            }
            _ => return self.unexpected("a statement"),
        };
        match word.as_str() {
            "OPENQASM" => {
                self.bump();
                match *self.peek() {
                    Tok::Real(v) if (2.0..3.0).contains(&v) => {
                        self.bump();
                    }
                    Tok::Real(_) | Tok::Int(_) => {
                        let p = self.pos();
                        return self.error(ErrorKind::Semantic, p, "only OpenQASM 2 is supported");
                    }
                    _ => return self.unexpected("a version number"),
                }
                self.expect_sym(';')?;
            }
            "include" => {
                self.bump();
                match self.peek() {
                    Tok::Str(_) => {
                        self.bump();
                    }
                    _ => return self.unexpected("a file name"),
                }
                self.expect_sym(';')?;
            }
            "qreg" | "creg" => {
                self.bump();
                let (name, _) = self.ident("a register name")?;
                self.expect_sym('[')?;
                let (size, size_pos) = self.int("a register size")?;
                self.expect_sym(']')?;
                self.expect_sym(';')?;
                if word == "creg" {
                    if self.cregs.iter().any(|r| r.name == name) {
                        return self.error(ErrorKind::Semantic, pos, format!("classical register {name} declared twice"));
                    }
                    self.cregs.push(Register { name, size });
                } else if self.qreg.is_some() {
                    return self.error(
                        ErrorKind::Semantic,
                        pos,
                        "multiple qreg declarations; exactly one quantum register is supported",
                    );
                } else if size == 0 || size > MAX_REGISTER_SIZE {
                    return self.error(
                        ErrorKind::Semantic,
                        size_pos,
                        format!("register size must be between 1 and {MAX_REGISTER_SIZE}"),
                    );
                } else {
                    self.qreg = Some(Register { name, size });
                }
            }
            "measure" => {
                self.bump();
                let source = self.argument()?;
                if *self.peek() != Tok::Arrow {
                    return self.unexpected("`->`");
                }
                self.bump();
                let (name, p) = self.ident("a classical register")?;
                let Some(size) = self.cregs.iter().find(|r| r.name == name).map(|r| r.size) else {
                    return self.error(ErrorKind::Semantic, p, format!("unknown classical register {name}"));
                };
                let index = if self.eat_sym('[') {
                    let (index, ipos) = self.int("an index")?;
                    self.expect_sym(']')?;
                    if index >= size {
                        return self.error(
                            ErrorKind::Semantic,
                            ipos,
                            format!("bit index {index} out of range for register {name}[{size}]"),
                        );
                    }
                    Some(index)
                } else {
                    None
                };
                self.expect_sym(';')?;
                let qubits = self.qreg.as_ref().map_or(0, |r| r.size);
                match (source, index) {
                    (Arg::Whole, None) if qubits != size => {
                        return self.error(
                            ErrorKind::Semantic,
                            pos,
                            format!("measure maps {qubits} qubit(s) onto {size} bit(s)"),
                        )
                    }
                    (Arg::Whole, Some(_)) | (Arg::Index(_), None) => {
                        return self.error(ErrorKind::Semantic, pos, "measure mixes a whole register with a single bit")
                    }
                    _ => {}
                }
            }
            "barrier" => {
                self.bump();
                self.argument()?;
                while self.eat_sym(',') {
                    self.argument()?;
                }
                self.expect_sym(';')?;
            }
            "gate" | "opaque" => {
                self.bump();
                self.errors.push(ParseError::new(
                    ErrorKind::Semantic,
                    pos,
                    format!("`{word}` declarations are not supported"),
                ));
                if word == "gate" {
                    self.skip_block();
                    return Ok(());
                }
                return Err(Bail);
            }
            "if" | "reset" => {
                self.bump();
                return self.error(ErrorKind::Semantic, pos, format!("`{word}` is not supported"));
            }
            _ => self.gate_statement()?,
        }
        Ok(())
    }

    fn argument(&mut self) -> PResult<Arg> {
        let (name, pos) = self.ident("a qubit argument")?;
        let (size, reg) = match &self.qreg {
            Some(r) => (r.size, r.name.clone()),
            None => return self.error(ErrorKind::Semantic, pos, "qubit used before any qreg declaration"),
        };
        if name != reg {
            return self.error(ErrorKind::Semantic, pos, format!("unknown quantum register {name}"));
        }
        if !self.eat_sym('[') {
            return Ok(Arg::Whole);
        }
        let (index, ipos) = self.int("a qubit index")?;
        self.expect_sym(']')?;
        if index >= size {
            return self.error(
                ErrorKind::Semantic,
                ipos,
                format!("qubit index {index} out of range for register {reg}[{size}]"),
            );
        }
        Ok(Arg::Index(index as usize))
    }

    fn gate_statement(&mut self) -> PResult<()> {
        let (name, pos) = self.ident("a gate name")?;
        let Some(kind) = gate_kind(&name) else {
            return self.error(ErrorKind::Semantic, pos, format!("unknown gate {name}"));
        };
        let mut params = Vec::new();
        if self.eat_sym('(') {
            if !self.eat_sym(')') {
                loop {
                    let p = self.pos();
                    let v = self.expr()?;
                    if !v.is_finite() {
                        return self.error(ErrorKind::Semantic, p, "angle is not finite");
                    }
                    params.push(v);
                    if self.eat_sym(')') {
                        break;
                    }
                    self.expect_sym(',')?;
                }
            }
        }
        if params.len() != kind.param_count() {
            return self.error(
                ErrorKind::Semantic,
                pos,
                format!("gate {name} takes {} parameter(s), got {}", kind.param_count(), params.len()),
            );
        }
        let mut args = vec![self.argument()?];
        while self.eat_sym(',') {
            args.push(self.argument()?);
        }
        self.expect_sym(';')?;
        let arity = kind.arity().unwrap_or(args.len());
        if args.len() != arity {
            return self.error(
                ErrorKind::Semantic,
                pos,
                format!("gate {name} acts on {arity} qubit(s), got {}", args.len()),
            );
        }
        let size = self.qreg.as_ref().map_or(0, |r| r.size as usize);
        let rounds = if args.iter().any(|a| matches!(a, Arg::Whole)) {
            size
        } else {
            1
        };
        for i in 0..rounds {
            let targets: Vec<usize> = args
                .iter()
                .map(|a| match a {
                    Arg::Whole => i,
                    Arg::Index(q) => *q,
                })
                .collect();
            let mut sorted = targets.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return self.error(ErrorKind::Semantic, pos, format!("gate {name} repeats a qubit"));
            }
            self.gates.push(GateOp::with_params(kind, params.clone(), targets));
        }
        Ok(())
    }

    fn expr(&mut self) -> PResult<f64> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym('+') {
                v += self.term()?;
            } else if self.eat_sym('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> PResult<f64> {
        let mut v = self.unary()?;
        loop {
            if self.eat_sym('*') {
                v *= self.unary()?;
            } else if self.eat_sym('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> PResult<f64> {
        if self.eat_sym('-') {
            Ok(-self.unary()?)
        } else if self.eat_sym('+') {
            self.unary()
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> PResult<f64> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v as f64)
            }
            Tok::Real(v) => {
                self.bump();
                Ok(v)
            }
            Tok::Ident(s) if s == "pi" => {
                self.bump();
                Ok(std::f64::consts::PI)
            }
            Tok::Ident(s) => {
                self.bump();
                self.error(ErrorKind::Semantic, pos, format!("unknown identifier {s}"))
            }
            Tok::Sym('(') => {
                self.bump();
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            _ => self.unexpected("an expression"),
        }
    }
}

pub(crate) fn parse_qasm(text: &str) -> Result<Circuit, Vec<ParseError>> {
    let (tokens, lex_errors) = tokenize(text);
    let mut p = Parser {
        tokens,
        at: 0,
        errors: lex_errors,
        qreg: None,
        cregs: Vec::new(),
        gates: Vec::new(),
    };
    p.program();
    if !p.errors.is_empty() {
        let mut errors = p.errors;
        errors.sort_by_key(|e| (e.line, e.column));
        return Err(errors);
    }
    let reg = p.qreg.expect("checked in program()");
    Ok(Circuit {
        num_qubits: reg.size as usize,
        gates: p.gates,
        name: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ok(s: &str) -> Circuit {
        parse_qasm(s).unwrap_or_else(|e| panic!("{e:?}"))
    }

    fn err(s: &str) -> Vec<ParseError> {
        parse_qasm(s).unwrap_err()
    }

    #[test]
    fn bell() {
        let c = ok("qreg q[2]; h q[0]; cx q[0],q[1];");
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.gates, vec![GateOp::h(0), GateOp::cnot(0, 1)]);
    }

    #[test]
    fn angle_expressions() {
        let c = ok("qreg q[1]; rz(pi/2) q[0]; rx(-pi + 2*0.5) q[0]; u3(1, -(pi), 2/4) q[0];");
        assert_eq!(c.gates[0].params, vec![PI / 2.0]);
        assert_eq!(c.gates[1].params, vec![-PI + 1.0]);
        assert_eq!(c.gates[2].params, vec![1.0, -PI, 0.5]);
    }

    #[test]
    fn unknown_gate() {
        let e = err("qreg q[1]; foo q[0];");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, ErrorKind::Semantic);
        assert_eq!(e[0].message, "unknown gate foo");
        assert_eq!((e[0].line, e[0].column), (1, 12));
    }

    #[test]
    fn measure_and_barrier_are_ignored() {
        let with = ok("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\nh q[0];\nbarrier q;\ncx q[0],q[1];\nmeasure q -> c;\nmeasure q[0] -> c[0];");
        let without = ok("qreg q[2]; h q[0]; cx q[0],q[1];");
        assert_eq!(with.gates, without.gates);
    }

    #[test]
    fn broadcast() {
        let c = ok("qreg q[3]; h q;");
        assert_eq!(c.gates, vec![GateOp::h(0), GateOp::h(1), GateOp::h(2)]);
        assert_eq!(err("qreg q[3]; cx q[0], q;")[0].message, "gate cx repeats a qubit");
    }

    #[test]
    fn errors_are_collected_per_statement() {
        let e = err("qreg q[2];\nh q[5];\nrz(1/) q[0];\nqreg r[1];\n");
        let kinds: Vec<_> = e.iter().map(|e| (e.line, e.kind)).collect();
        assert_eq!(
            kinds,
            vec![(2, ErrorKind::Semantic), (3, ErrorKind::Syntax), (4, ErrorKind::Semantic)]
        );
    }

    #[test]
    fn missing_register() {
        let e = err("h q[0];");
        assert_eq!(e[0].kind, ErrorKind::Semantic);
        assert_eq!(err("")[0].message, "no qreg declaration");
    }

    #[test]
    fn division_by_zero_is_not_finite() {
        assert_eq!(err("qreg q[1]; rz(1/0) q[0];")[0].message, "angle is not finite");
    }
}
