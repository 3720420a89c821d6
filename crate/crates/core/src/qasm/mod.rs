//! OpenQASM 2.0 frontend for the gate subset used by the benchmark corpus.
//!
//! Registers are flattened into one index space in declaration order.
//! `include "qelib1.inc"` is accepted as importing the built-in gates, and
//! custom `gate` definitions are inlined at the call site. A definition may
//! only call built-in gates; nested custom gates are rejected.

mod lexer;

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use lexer::{tokenize, Tok, Token};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unsupported: {message}")]
    Unsupported { line: usize, message: String },
    #[error("line {line}: index {index} out of range for register `{register}` of size {size}")]
    IndexOutOfRange {
        line: usize,
        register: String,
        index: usize,
        size: usize,
    },
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl QasmError {
    fn syntax(line: usize, message: impl Into<String>) -> Self {
        QasmError::Syntax {
            line,
            message: message.into(),
        }
    }

    fn unsupported(line: usize, message: impl Into<String>) -> Self {
        QasmError::Unsupported {
            line,
            message: message.into(),
        }
    }

    fn semantic(line: usize, message: impl Into<String>) -> Self {
        QasmError::Semantic {
            line,
            message: message.into(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            QasmError::Syntax { line, .. }
            | QasmError::Unsupported { line, .. }
            | QasmError::IndexOutOfRange { line, .. }
            | QasmError::Semantic { line, .. } => Some(*line),
            QasmError::Io { .. } => None,
        }
    }
}

/// Parses OpenQASM 2.0 source into a circuit, gates in program order and
/// not yet rewritten to the basis set.
pub fn parse_qasm(source: &str) -> Result<Circuit, QasmError> {
    parse_qasm_named(source, "circuit")
}

pub fn parse_qasm_named(source: &str, name: &str) -> Result<Circuit, QasmError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        qregs: Vec::new(),
        cregs: Vec::new(),
        defs: HashMap::new(),
        gates: Vec::new(),
        num_qubits: 0,
        num_clbits: 0,
    };
    parser.program()?;
    Ok(Circuit {
        name: name.to_string(),
        num_qubits: parser.num_qubits,
        num_clbits: parser.num_clbits,
        gates: parser.gates,
    })
}

/// Reads and parses a file; the circuit takes the file stem as its name.
pub fn parse_qasm_file(path: &Path) -> Result<Circuit, QasmError> {
    let source = std::fs::read_to_string(path).map_err(|e| QasmError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "circuit".into());
    parse_qasm_named(&source, &name)
}

#[derive(Debug, Clone)]
enum Expr {
    Num(f64),
    Param(String),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

impl Expr {
    fn eval(&self, env: &HashMap<String, f64>, line: usize) -> Result<f64, QasmError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Param(p) => *env
                .get(p)
                .ok_or_else(|| QasmError::semantic(line, format!("unknown parameter `{p}`")))?,
            Expr::Neg(e) => -e.eval(env, line)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env, line)?, b.eval(env, line)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(env, line)?;
                match f.as_str() {
                    "sin" => v.sin(),
                    "cos" => v.cos(),
                    "tan" => v.tan(),
                    "exp" => v.exp(),
                    "ln" => v.ln(),
                    _ => v.sqrt(),
                }
            }
        })
    }
}

#[derive(Debug, Clone)]
enum Arg {
    Whole(String),
    Indexed(String, usize),
}

#[derive(Debug, Clone)]
struct BodyCall {
    name: String,
    params: Vec<Expr>,
    args: Vec<String>,
    line: usize,
}

#[derive(Debug, Clone)]
struct GateDef {
    params: Vec<String>,
    args: Vec<String>,
    body: Vec<BodyCall>,
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qregs: Vec<Register>,
    cregs: Vec<Register>,
    defs: HashMap<String, GateDef>,
    gates: Vec<Gate>,
    num_qubits: usize,
    num_clbits: usize,
}

const BUILTINS: &[&str] = &[
    "rx", "rz", "h", "x", "z", "s", "t", "sdg", "tdg", "cx", "cz", "ccx", "swap", "u1", "u2",
    "u3", "U", "CX",
];

fn builtin_kind(name: &str, params: &[f64], line: usize) -> Result<(GateKind, usize), QasmError> {
    let expect = |n: usize| -> Result<(), QasmError> {
        if params.len() == n {
            Ok(())
        } else {
            Err(QasmError::semantic(
                line,
                format!("gate `{name}` takes {n} parameter(s), got {}", params.len()),
            ))
        }
    };
    use GateKind::*;
    let (kind, arity) = match name {
        "h" => (H, 1),
        "x" => (X, 1),
        "z" => (Z, 1),
        "s" => (S, 1),
        "sdg" => (Sdg, 1),
        "t" => (T, 1),
        "tdg" => (Tdg, 1),
        "cx" | "CX" => (Cx, 2),
        "cz" => (Cz, 2),
        "swap" => (Swap, 2),
        "ccx" => (Ccx, 3),
        "rx" => {
            expect(1)?;
            (Rx { angle: params[0] }, 1)
        }
        "rz" => {
            expect(1)?;
            (Rz { angle: params[0] }, 1)
        }
        "u1" => {
            expect(1)?;
            (U1 { lambda: params[0] }, 1)
        }
        "u2" => {
            expect(2)?;
            (
                U2 {
                    phi: params[0],
                    lambda: params[1],
                },
                1,
            )
        }
        "u3" | "U" => {
            expect(3)?;
            (
                U3 {
                    theta: params[0],
                    phi: params[1],
                    lambda: params[2],
                },
                1,
            )
        }
        other => return Err(QasmError::unsupported(line, format!("gate `{other}`"))),
    };
    if kind.params().is_empty() {
        expect(0)?;
    }
    if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
        return Err(QasmError::semantic(line, format!("non-finite angle {bad}")));
    }
    Ok((kind, arity))
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Result<Token, QasmError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| QasmError::syntax(self.line(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<(), QasmError> {
        let t = self.next()?;
        if t.tok == want {
            Ok(())
        } else {
            Err(QasmError::syntax(
                t.line,
                format!("expected {want:?}, found {:?}", t.tok),
            ))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, usize), QasmError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line)),
            other => Err(QasmError::syntax(
                t.line,
                format!("expected identifier, found {other:?}"),
            )),
        }
    }

    fn integer(&mut self) -> Result<usize, QasmError> {
        let t = self.next()?;
        match t.tok {
            Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            other => Err(QasmError::syntax(
                t.line,
                format!("expected non-negative integer, found {other:?}"),
            )),
        }
    }

    fn program(&mut self) -> Result<(), QasmError> {
        if self.peek() == Some(&Tok::Ident("OPENQASM".into())) {
            let line = self.line();
            self.pos += 1;
            let t = self.next()?;
            match t.tok {
                Tok::Number(v) if (2.0..3.0).contains(&v) => {}
                other => {
                    return Err(QasmError::unsupported(
                        line,
                        format!("OpenQASM version {other:?}"),
                    ))
                }
            }
            self.expect(Tok::Semi)?;
        }
        while self.pos < self.tokens.len() {
            self.statement()?;
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let (word, line) = self.ident()?;
        match word.as_str() {
            "include" => {
                let t = self.next()?;
                match t.tok {
                    Tok::Str(ref s) if s == "qelib1.inc" => {}
                    other => {
                        return Err(QasmError::unsupported(line, format!("include {other:?}")))
                    }
                }
                self.expect(Tok::Semi)
            }
            "qreg" | "creg" => {
                let (name, _) = self.ident()?;
                self.expect(Tok::LBracket)?;
                let size = self.integer()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Semi)?;
                if size == 0 {
                    return Err(QasmError::semantic(line, format!("register `{name}` has size 0")));
                }
                if self.qregs.iter().chain(&self.cregs).any(|r| r.name == name) {
                    return Err(QasmError::semantic(line, format!("register `{name}` redeclared")));
                }
                if word == "qreg" {
                    self.qregs.push(Register {
                        name,
                        offset: self.num_qubits,
                        size,
                    });
                    self.num_qubits += size;
                } else {
                    self.cregs.push(Register {
                        name,
                        offset: self.num_clbits,
                        size,
                    });
                    self.num_clbits += size;
                }
                Ok(())
            }
            "gate" => self.gate_def(line),
            "measure" => {
                let src = self.arg()?;
                self.expect(Tok::Arrow)?;
                let dst = self.arg()?;
                self.expect(Tok::Semi)?;
                let qs = self.resolve(&src, true, line)?;
                let cs = self.resolve(&dst, false, line)?;
                if qs.len() != cs.len() {
                    return Err(QasmError::semantic(line, "measure register sizes differ"));
                }
                for (q, c) in qs.into_iter().zip(cs) {
                    self.gates
                        .push(Gate::new(GateKind::Measure { clbit: c }, vec![q]).at_line(line));
                }
                Ok(())
            }
            "barrier" => {
                let args = self.arg_list()?;
                self.expect(Tok::Semi)?;
                let mut qubits = Vec::new();
                for a in &args {
                    for q in self.resolve(a, true, line)? {
                        if !qubits.contains(&q) {
                            qubits.push(q);
                        }
                    }
                }
                self.gates
                    .push(Gate::new(GateKind::Barrier, qubits).at_line(line));
                Ok(())
            }
            "opaque" | "reset" | "if" => Err(QasmError::unsupported(
                line,
                format!("`{word}` statements"),
            )),
            _ => self.gate_call(word, line),
        }
    }

    fn gate_def(&mut self, line: usize) -> Result<(), QasmError> {
        let (name, _) = self.ident()?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                params.push(self.ident()?.0);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        let mut args = vec![self.ident()?.0];
        while self.eat(&Tok::Comma) {
            args.push(self.ident()?.0);
        }
        self.expect(Tok::LBrace)?;
        let mut body = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let (callee, cline) = self.ident()?;
            if callee != "barrier" && !BUILTINS.contains(&callee.as_str()) {
                return Err(if self.defs.contains_key(&callee) {
                    QasmError::unsupported(
                        cline,
                        format!("gate `{name}` calls custom gate `{callee}`; only one level of definitions is inlined"),
                    )
                } else {
                    QasmError::unsupported(cline, format!("gate `{callee}`"))
                });
            }
            let call_params = self.param_exprs()?;
            let mut call_args = vec![self.ident()?.0];
            while self.eat(&Tok::Comma) {
                call_args.push(self.ident()?.0);
            }
            self.expect(Tok::Semi)?;
            if let Some(bad) = call_args.iter().find(|a| !args.contains(a)) {
                return Err(QasmError::semantic(
                    cline,
                    format!("unknown argument `{bad}` in gate `{name}`"),
                ));
            }
            body.push(BodyCall {
                name: callee,
                params: call_params,
                args: call_args,
                line: cline,
            });
        }
        if BUILTINS.contains(&name.as_str()) {
            // Redefinitions of built-ins (as qelib1.inc copies do) keep the
            // built-in semantics.
            return Ok(());
        }
        if self.defs.contains_key(&name) {
            return Err(QasmError::semantic(line, format!("gate `{name}` redefined")));
        }
        self.defs.insert(name, GateDef { params, args, body });
        Ok(())
    }

    fn param_exprs(&mut self) -> Result<Vec<Expr>, QasmError> {
        let mut out = Vec::new();
        if self.eat(&Tok::LParen) {
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            loop {
                out.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        Ok(out)
    }

    fn gate_call(&mut self, name: String, line: usize) -> Result<(), QasmError> {
        let exprs = self.param_exprs()?;
        let args = self.arg_list()?;
        self.expect(Tok::Semi)?;
        let empty = HashMap::new();
        let params = exprs
            .iter()
            .map(|e| e.eval(&empty, line))
            .collect::<Result<Vec<_>, _>>()?;

        let resolved = args
            .iter()
            .map(|a| self.resolve(a, true, line))
            .collect::<Result<Vec<_>, _>>()?;
        let width = resolved.iter().map(Vec::len).max().unwrap_or(0);
        if resolved.iter().any(|r| r.len() != 1 && r.len() != width) {
            return Err(QasmError::semantic(line, "register sizes differ in broadcast"));
        }

        if let Some(def) = self.defs.get(&name).cloned() {
            if def.params.len() != params.len() || def.args.len() != args.len() {
                return Err(QasmError::semantic(
                    line,
                    format!("wrong number of parameters or arguments for gate `{name}`"),
                ));
            }
            let env: HashMap<String, f64> =
                def.params.iter().cloned().zip(params.iter().copied()).collect();
            for k in 0..width {
                let actual: HashMap<&str, usize> = def
                    .args
                    .iter()
                    .zip(&resolved)
                    .map(|(formal, r)| (formal.as_str(), if r.len() == 1 { r[0] } else { r[k] }))
                    .collect();
                check_distinct(&actual.values().copied().collect::<Vec<_>>(), line)?;
                for call in &def.body {
                    let qubits: Vec<usize> = call.args.iter().map(|a| actual[a.as_str()]).collect();
                    if call.name == "barrier" {
                        self.gates.push(Gate::new(GateKind::Barrier, qubits).at_line(line));
                        continue;
                    }
                    let values = call
                        .params
                        .iter()
                        .map(|e| e.eval(&env, call.line))
                        .collect::<Result<Vec<_>, _>>()?;
                    let (kind, arity) = builtin_kind(&call.name, &values, call.line)?;
                    if qubits.len() != arity {
                        return Err(QasmError::semantic(
                            call.line,
                            format!("gate `{}` takes {arity} qubit(s)", call.name),
                        ));
                    }
                    check_distinct(&qubits, line)?;
                    self.gates.push(Gate::new(kind, qubits).at_line(line));
                }
            }
            return Ok(());
        }

        let (kind, arity) = builtin_kind(&name, &params, line)?;
        if args.len() != arity {
            return Err(QasmError::semantic(
                line,
                format!("gate `{name}` takes {arity} qubit(s), got {}", args.len()),
            ));
        }
        for k in 0..width {
            let qubits: Vec<usize> = resolved
                .iter()
                .map(|r| if r.len() == 1 { r[0] } else { r[k] })
                .collect();
            check_distinct(&qubits, line)?;
            self.gates.push(Gate::new(kind, qubits).at_line(line));
        }
        Ok(())
    }

    fn arg(&mut self) -> Result<Arg, QasmError> {
        let (name, _) = self.ident()?;
        if self.eat(&Tok::LBracket) {
            let idx = self.integer()?;
            self.expect(Tok::RBracket)?;
            Ok(Arg::Indexed(name, idx))
        } else {
            Ok(Arg::Whole(name))
        }
    }

    fn arg_list(&mut self) -> Result<Vec<Arg>, QasmError> {
        let mut args = vec![self.arg()?];
        while self.eat(&Tok::Comma) {
            args.push(self.arg()?);
        }
        Ok(args)
    }

    fn resolve(&self, arg: &Arg, quantum: bool, line: usize) -> Result<Vec<usize>, QasmError> {
        let regs = if quantum { &self.qregs } else { &self.cregs };
        let name = match arg {
            Arg::Whole(n) | Arg::Indexed(n, _) => n,
        };
        let reg = regs.iter().find(|r| &r.name == name).ok_or_else(|| {
            QasmError::semantic(
                line,
                format!(
                    "undeclared {} register `{name}`",
                    if quantum { "quantum" } else { "classical" }
                ),
            )
        })?;
        match arg {
            Arg::Whole(_) => Ok((reg.offset..reg.offset + reg.size).collect()),
            Arg::Indexed(_, idx) if *idx < reg.size => Ok(vec![reg.offset + idx]),
            Arg::Indexed(_, idx) => Err(QasmError::IndexOutOfRange {
                line,
                register: name.clone(),
                index: *idx,
                size: reg.size,
            }),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr, QasmError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => '+',
                Some(Tok::Minus) => '-',
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, QasmError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => '*',
                Some(Tok::Slash) => '/',
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, QasmError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            return Ok(Expr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, QasmError> {
        let t = self.next()?;
        match t.tok {
            Tok::Number(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(id) if id == "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            Tok::Ident(id)
                if matches!(id.as_str(), "sin" | "cos" | "tan" | "exp" | "ln" | "sqrt") =>
            {
                self.expect(Tok::LParen)?;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Call(id, Box::new(e)))
            }
            Tok::Ident(id) => Ok(Expr::Param(id)),
            other => Err(QasmError::syntax(
                t.line,
                format!("unexpected {other:?} in expression"),
            )),
        }
    }
}

fn check_distinct(qubits: &[usize], line: usize) -> Result<(), QasmError> {
    for (i, q) in qubits.iter().enumerate() {
        if qubits[..i].contains(q) {
            return Err(QasmError::semantic(line, format!("qubit {q} used twice in one gate")));
        }
    }
    Ok(())
}
