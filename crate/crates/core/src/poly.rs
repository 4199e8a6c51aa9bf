//! Sparse multivariate polynomials over complex doubles, shared variable-slot
//! systems, and the problem-file grammar.
//!
//! Polynomials are kept in a canonical merged form: terms sorted in descending
//! graded-lexicographic order, no duplicate exponent vectors, no exact-zero
//! coefficients. Canonical form makes equality and round-trip tests
//! deterministic.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_complex::Complex64;

use crate::linalg::Mat;

/// One monomial term: exponent vector plus complex coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coeff: Complex64,
}

/// Sparse multivariate polynomial over `Complex64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    terms: Vec<Term>,
}

fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&e| e as u64).sum();
    let db: u64 = b.iter().map(|&e| e as u64).sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial { num_vars, terms: Vec::new() }
    }

    pub fn constant(num_vars: usize, c: Complex64) -> Self {
        Self::from_terms(num_vars, vec![(vec![0; num_vars], c)])
    }

    /// The monomial `x_slot`.
    pub fn variable(num_vars: usize, slot: usize) -> Self {
        assert!(slot < num_vars);
        let mut e = vec![0u32; num_vars];
        e[slot] = 1;
        Self::from_terms(num_vars, vec![(e, Complex64::new(1.0, 0.0))])
    }

    /// Builds a polynomial from raw terms, merging duplicates and dropping
    /// zero coefficients.
    pub fn from_terms(num_vars: usize, terms: Vec<(Vec<u32>, Complex64)>) -> Self {
        let mut ts: Vec<Term> = terms
            .into_iter()
            .map(|(exps, coeff)| {
                assert_eq!(exps.len(), num_vars, "exponent vector length mismatch");
                Term { exps, coeff }
            })
            .collect();
        ts.sort_by(|x, y| grlex(&y.exps, &x.exps));
        let mut merged: Vec<Term> = Vec::with_capacity(ts.len());
        for t in ts {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
        Polynomial { num_vars, terms: merged }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; zero polynomial reports 0.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, other.num_vars);
        let mut terms: Vec<(Vec<u32>, Complex64)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        for t in self.terms.iter().chain(other.terms.iter()) {
            terms.push((t.exps.clone(), t.coeff));
        }
        Polynomial::from_terms(self.num_vars, terms)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Polynomial {
        Polynomial::from_terms(
            self.num_vars,
            self.terms.iter().map(|t| (t.exps.clone(), t.coeff * c)).collect(),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, other.num_vars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps: Vec<u32> = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push((exps, a.coeff * b.coeff));
            }
        }
        Polynomial::from_terms(self.num_vars, terms)
    }

    /// Evaluates at a point. Per-term power products with variable powers
    /// memoized for the call; no Horner factoring.
    pub fn evaluate(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), self.num_vars, "evaluation point dimension mismatch");
        let mut max_exp = vec![0u32; self.num_vars];
        for t in &self.terms {
            for (m, &e) in max_exp.iter_mut().zip(&t.exps) {
                if e > *m {
                    *m = e;
                }
            }
        }
        // powers[v][e] = point[v]^e
        let powers: Vec<Vec<Complex64>> = (0..self.num_vars)
            .map(|v| {
                let mut ps = Vec::with_capacity(max_exp[v] as usize + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                ps.push(acc);
                for _ in 0..max_exp[v] {
                    acc *= point[v];
                    ps.push(acc);
                }
                ps
            })
            .collect();
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut prod = t.coeff;
            for (v, &e) in t.exps.iter().enumerate() {
                if e > 0 {
                    prod *= powers[v][e as usize];
                }
            }
            sum += prod;
        }
        sum
    }

    /// Formal partial derivative with respect to one slot.
    pub fn differentiate(&self, slot: usize) -> Polynomial {
        assert!(slot < self.num_vars, "derivative slot out of bounds");
        let mut terms = Vec::new();
        for t in &self.terms {
            let e = t.exps[slot];
            if e == 0 {
                continue;
            }
            let mut exps = t.exps.clone();
            exps[slot] = e - 1;
            terms.push((exps, t.coeff * Complex64::new(e as f64, 0.0)));
        }
        Polynomial::from_terms(self.num_vars, terms)
    }

    /// Lifts the polynomial into a larger slot space; `slot_map[i]` is the new
    /// index of old slot `i`.
    pub fn lift(&self, new_num_vars: usize, slot_map: &[usize]) -> Polynomial {
        assert_eq!(slot_map.len(), self.num_vars);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut exps = vec![0u32; new_num_vars];
                for (i, &e) in t.exps.iter().enumerate() {
                    exps[slot_map[i]] += e;
                }
                (exps, t.coeff)
            })
            .collect();
        Polynomial::from_terms(new_num_vars, terms)
    }

    /// Substitutes numeric values for a subset of slots. `keep[i] = Some(j)`
    /// maps old slot `i` to new slot `j`; `keep[i] = None` means slot `i` is
    /// bound to `values[i]`.
    pub fn bind(&self, keep: &[Option<usize>], values: &[Complex64], new_num_vars: usize) -> Polynomial {
        assert_eq!(keep.len(), self.num_vars);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut exps = vec![0u32; new_num_vars];
                let mut coeff = t.coeff;
                for (i, &e) in t.exps.iter().enumerate() {
                    match keep[i] {
                        Some(j) => exps[j] += e,
                        None => coeff *= values[i].powu(e),
                    }
                }
                (exps, coeff)
            })
            .collect();
        Polynomial::from_terms(new_num_vars, terms)
    }

    /// Renders the polynomial using the given variable names; inverse of the
    /// expression grammar.
    pub fn to_source(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.num_vars);
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            let mono: Vec<String> = t
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| if e == 1 { names[v].clone() } else { format!("{}^{}", names[v], e) })
                .collect();
            let c = t.coeff;
            let (sign, mag) = if c.im == 0.0 && c.re < 0.0 {
                ("-", Complex64::new(-c.re, 0.0))
            } else {
                ("+", c)
            };
            if k == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            let coeff_str = if mag.im == 0.0 {
                format!("{}", mag.re)
            } else if mag.re == 0.0 {
                format!("{}*i", mag.im)
            } else {
                format!("({}+{}*i)", mag.re, mag.im)
            };
            if mono.is_empty() {
                out.push_str(&coeff_str);
            } else if mag == Complex64::new(1.0, 0.0) {
                out.push_str(&mono.join("*"));
            } else {
                out.push_str(&coeff_str);
                out.push('*');
                out.push_str(&mono.join("*"));
            }
        }
        out
    }
}

/// Errors from system construction.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemError {
    VarCountMismatch,
    SlotPartition(String),
}

impl fmt::Display for SystemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemError::VarCountMismatch => write!(f, "member polynomials disagree on num_vars"),
            SystemError::SlotPartition(m) => write!(f, "bad unknown/parameter partition: {m}"),
        }
    }
}

/// A list of polynomials over one shared slot space, with slots partitioned
/// into unknowns and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    polys: Vec<Polynomial>,
    var_names: Vec<String>,
    unknowns: Vec<usize>,
    params: Vec<usize>,
}

impl PolySystem {
    pub fn new(
        polys: Vec<Polynomial>,
        var_names: Vec<String>,
        unknowns: Vec<usize>,
        params: Vec<usize>,
    ) -> Result<Self, SystemError> {
        let nv = var_names.len();
        if polys.iter().any(|p| p.num_vars() != nv) {
            return Err(SystemError::VarCountMismatch);
        }
        let mut seen = vec![false; nv];
        for &s in unknowns.iter().chain(params.iter()) {
            if s >= nv || seen[s] {
                return Err(SystemError::SlotPartition("slot repeated or out of range".into()));
            }
            seen[s] = true;
        }
        // every slot used with positive exponent must be covered
        for p in &polys {
            for t in p.terms() {
                for (i, &e) in t.exps.iter().enumerate() {
                    if e > 0 && !seen[i] {
                        return Err(SystemError::SlotPartition(format!(
                            "slot {} used but neither unknown nor parameter",
                            i
                        )));
                    }
                }
            }
        }
        Ok(PolySystem { polys, var_names, unknowns, params })
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    pub fn params(&self) -> &[usize] {
        &self.params
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn n_polys(&self) -> usize {
        self.polys.len()
    }

    pub fn is_square(&self) -> bool {
        self.polys.len() == self.unknowns.len()
    }

    /// Scatters unknown values and parameter values into a full slot vector.
    pub fn assemble(&self, z: &[Complex64], u: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(z.len(), self.unknowns.len());
        assert_eq!(u.len(), self.params.len());
        let mut full = vec![Complex64::new(0.0, 0.0); self.num_vars()];
        for (zi, &s) in z.iter().zip(&self.unknowns) {
            full[s] = *zi;
        }
        for (ui, &s) in u.iter().zip(&self.params) {
            full[s] = *ui;
        }
        full
    }

    /// Evaluates every polynomial at a full slot point.
    pub fn eval_full(&self, point: &[Complex64]) -> Vec<Complex64> {
        self.polys.iter().map(|p| p.evaluate(point)).collect()
    }

    pub fn eval(&self, z: &[Complex64], u: &[Complex64]) -> Vec<Complex64> {
        self.eval_full(&self.assemble(z, u))
    }

    /// Jacobian with rows = polynomials and columns = the given slots,
    /// evaluated at a full slot point.
    pub fn jacobian_rows_eqs(&self, point: &[Complex64], slots: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.polys.len(), slots.len());
        for (r, p) in self.polys.iter().enumerate() {
            for (c, &s) in slots.iter().enumerate() {
                m[(r, c)] = p.differentiate(s).evaluate(point);
            }
        }
        m
    }

    /// Jacobian in gradient orientation: rows = unknown slots, columns =
    /// polynomials (the transpose of the usual row-per-equation layout).
    pub fn jacobian_eval(&self, point: &[Complex64]) -> Mat {
        assert_eq!(point.len(), self.num_vars(), "jacobian point dimension mismatch");
        let mut m = Mat::zeros(self.unknowns.len(), self.polys.len());
        for (c, p) in self.polys.iter().enumerate() {
            for (r, &s) in self.unknowns.iter().enumerate() {
                m[(r, c)] = p.differentiate(s).evaluate(point);
            }
        }
        m
    }

    /// Binds all parameter slots to fixed values, producing a system over the
    /// unknown slots only (unknown order preserved).
    pub fn specialize(&self, param_values: &[Complex64]) -> PolySystem {
        assert_eq!(param_values.len(), self.params.len());
        let nv = self.num_vars();
        let mut keep: Vec<Option<usize>> = vec![None; nv];
        let mut values = vec![Complex64::new(0.0, 0.0); nv];
        for (j, &s) in self.unknowns.iter().enumerate() {
            keep[s] = Some(j);
        }
        for (v, &s) in param_values.iter().zip(&self.params) {
            values[s] = *v;
        }
        let n = self.unknowns.len();
        let polys = self.polys.iter().map(|p| p.bind(&keep, &values, n)).collect();
        let names = self.unknowns.iter().map(|&s| self.var_names[s].clone()).collect();
        PolySystem::new(polys, names, (0..n).collect(), Vec::new()).expect("specialized system is well formed")
    }
}

/// Declared objective in a problem file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveKind {
    Euclidean,
    Likelihood,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::Euclidean => write!(f, "euclidean"),
            ObjectiveKind::Likelihood => write!(f, "likelihood"),
        }
    }
}

/// Parsed problem file: model system plus declared objective and optional
/// expected codimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub system: PolySystem,
    pub objective: Option<ObjectiveKind>,
    pub codim: Option<usize>,
}

impl Problem {
    /// Renders the problem back to problem-file source. Parsing the output
    /// reproduces the problem exactly (round-trip stability).
    pub fn to_source(&self) -> String {
        let sys = &self.system;
        let mut out = String::new();
        let vars: Vec<&str> = sys.unknowns().iter().map(|&s| sys.var_names()[s].as_str()).collect();
        out.push_str("vars:");
        for v in &vars {
            out.push(' ');
            out.push_str(v);
        }
        out.push('\n');
        if !sys.params().is_empty() {
            out.push_str("params:");
            for &s in sys.params() {
                out.push(' ');
                out.push_str(&sys.var_names()[s]);
            }
            out.push('\n');
        }
        if let Some(obj) = self.objective {
            out.push_str(&format!("objective: {obj}\n"));
        }
        if let Some(k) = self.codim {
            out.push_str(&format!("codim: {k}\n"));
        }
        out.push_str("model:\n");
        for p in sys.polys() {
            out.push_str(&p.to_source(sys.var_names()));
            out.push('\n');
        }
        out
    }
}

/// Parse error with 1-based line/column position.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex_line(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '#' => break,
            '+' => {
                toks.push((Tok::Plus, col));
                i += 1;
            }
            '-' | '−' => {
                toks.push((Tok::Minus, col));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, col));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, col));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, col));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, col));
                i += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // scientific exponent
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| ParseError {
                    line: line_no,
                    col: start + 1,
                    msg: format!("bad numeric literal `{s}`"),
                })?;
                toks.push((Tok::Number(v), start + 1));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), start + 1));
            }
            _ => {
                return Err(ParseError {
                    line: line_no,
                    col,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    names: &'a [String],
}

impl<'a> ExprParser<'a> {
    fn err(&self, msg: String) -> ParseError {
        let col = self.toks.get(self.pos).map(|t| t.1).unwrap_or_else(|| {
            self.toks.last().map(|t| t.1 + 1).unwrap_or(1)
        });
        ParseError { line: self.line, col, msg }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut negate = false;
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            negate = true;
        } else if matches!(self.peek(), Some(Tok::Plus)) {
            self.bump();
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.scale(Complex64::new(-1.0, 0.0));
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.add(&t);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.sub(&t);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let f = self.factor()?;
                    acc = acc.mul(&f);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let f = self.factor()?;
                    if f.total_degree() != 0 {
                        return Err(self.err("division is only supported by constants".into()));
                    }
                    let c = f.evaluate(&vec![Complex64::new(0.0, 0.0); self.names.len()]);
                    if c == Complex64::new(0.0, 0.0) {
                        return Err(self.err("division by zero".into()));
                    }
                    acc = acc.scale(Complex64::new(1.0, 0.0) / c);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            match self.bump() {
                Some(Tok::Number(v)) if v >= 0.0 && v == libm::floor(v) => {
                    let e = v as u32;
                    let mut acc = Polynomial::constant(self.names.len(), Complex64::new(1.0, 0.0));
                    for _ in 0..e {
                        acc = acc.mul(&base);
                    }
                    Ok(acc)
                }
                _ => {
                    self.pos -= 1;
                    Err(self.err("exponent must be a non-negative integer".into()))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let nv = self.names.len();
        match self.bump() {
            Some(Tok::Number(v)) => Ok(Polynomial::constant(nv, Complex64::new(v, 0.0))),
            Some(Tok::Ident(id)) => {
                if let Some(slot) = self.names.iter().position(|n| *n == id) {
                    Ok(Polynomial::variable(nv, slot))
                } else if id == "i" {
                    Ok(Polynomial::constant(nv, Complex64::new(0.0, 1.0)))
                } else {
                    self.pos -= 1;
                    Err(self.err(format!("undeclared identifier `{id}`")))
                }
            }
            Some(Tok::Minus) => {
                let f = self.factor()?;
                Ok(f.scale(Complex64::new(-1.0, 0.0)))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => {
                        if self.pos > 0 {
                            self.pos -= 1;
                        }
                        Err(self.err("expected `)`".into()))
                    }
                }
            }
            _ => {
                if self.pos > 0 {
                    self.pos -= 1;
                }
                Err(self.err("expected a number, identifier or `(`".into()))
            }
        }
    }
}

fn parse_expr(toks: &[(Tok, usize)], line: usize, names: &[String]) -> Result<Polynomial, ParseError> {
    let mut p = ExprParser { toks, pos: 0, line, names };
    let expr = p.expr()?;
    if p.pos != toks.len() {
        return Err(p.err("trailing tokens after expression".into()));
    }
    Ok(expr)
}

fn ident_list(rest: &str, line_no: usize, offset: usize) -> Result<Vec<String>, ParseError> {
    let toks = lex_line(rest, line_no)?;
    let mut out = Vec::new();
    for (t, col) in toks {
        match t {
            Tok::Ident(id) => out.push(id),
            _ => {
                return Err(ParseError {
                    line: line_no,
                    col: col + offset,
                    msg: "expected identifier".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Parses a full problem file (grammar: `vars:`, `params:`, `objective:`,
/// optional `codim:`, then `model:` followed by one expression per line;
/// `#` starts a comment).
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    let mut vars: Vec<String> = Vec::new();
    let mut params: Vec<String> = Vec::new();
    let mut objective: Option<ObjectiveKind> = None;
    let mut codim: Option<usize> = None;
    let mut model_lines: Vec<(usize, String)> = Vec::new();
    let mut in_model = false;
    let mut seen_vars = false;
    let mut seen_params = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        if in_model {
            model_lines.push((line_no, line.to_string()));
            continue;
        }
        let (key, rest) = match line.find(':') {
            Some(p) => (line[..p].trim(), &line[p + 1..]),
            None => {
                return Err(ParseError {
                    line: line_no,
                    col: 1,
                    msg: "expected a `key:` line before the model block".into(),
                })
            }
        };
        match key {
            "vars" => {
                if seen_vars {
                    return Err(ParseError { line: line_no, col: 1, msg: "duplicate `vars:` declaration".into() });
                }
                seen_vars = true;
                vars = ident_list(rest, line_no, line.find(':').unwrap() + 1)?;
                if vars.is_empty() {
                    return Err(ParseError { line: line_no, col: 1, msg: "`vars:` needs at least one identifier".into() });
                }
            }
            "params" => {
                if seen_params {
                    return Err(ParseError { line: line_no, col: 1, msg: "duplicate `params:` declaration".into() });
                }
                seen_params = true;
                params = ident_list(rest, line_no, line.find(':').unwrap() + 1)?;
            }
            "objective" => {
                if objective.is_some() {
                    return Err(ParseError { line: line_no, col: 1, msg: "duplicate `objective:` declaration".into() });
                }
                objective = Some(match rest.trim() {
                    "euclidean" => ObjectiveKind::Euclidean,
                    "likelihood" => ObjectiveKind::Likelihood,
                    other => {
                        return Err(ParseError {
                            line: line_no,
                            col: 1,
                            msg: format!("unknown objective `{other}` (expected euclidean|likelihood)"),
                        })
                    }
                });
            }
            "codim" => {
                codim = Some(rest.trim().parse().map_err(|_| ParseError {
                    line: line_no,
                    col: 1,
                    msg: "codim must be a positive integer".into(),
                })?);
            }
            "model" => {
                in_model = true;
                if !rest.trim().is_empty() {
                    model_lines.push((line_no, rest.to_string()));
                }
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    col: 1,
                    msg: format!("unknown section `{other}`"),
                })
            }
        }
    }

    if vars.is_empty() {
        return Err(ParseError { line: 1, col: 1, msg: "missing `vars:` declaration".into() });
    }
    if model_lines.is_empty() {
        return Err(ParseError { line: 1, col: 1, msg: "missing `model:` block".into() });
    }
    let mut names = vars.clone();
    for p in &params {
        if names.contains(p) {
            return Err(ParseError { line: 1, col: 1, msg: format!("duplicate declaration of `{p}`") });
        }
        names.push(p.clone());
    }
    {
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(ParseError { line: 1, col: 1, msg: "duplicate declaration".into() });
        }
    }

    let mut polys = Vec::new();
    for (line_no, src) in &model_lines {
        let toks = lex_line(src, *line_no)?;
        if toks.is_empty() {
            continue;
        }
        polys.push(parse_expr(&toks, *line_no, &names)?);
    }
    if polys.is_empty() {
        return Err(ParseError { line: 1, col: 1, msg: "empty `model:` block".into() });
    }
    let nv = vars.len();
    let system = PolySystem::new(
        polys,
        names,
        (0..nv).collect(),
        (nv..nv + params.len()).collect(),
    )
    .map_err(|e| ParseError { line: 1, col: 1, msg: e.to_string() })?;
    Ok(Problem { system, objective, codim })
}

/// Parses a problem file and returns only the model system.
pub fn parse_system(text: &str) -> Result<PolySystem, ParseError> {
    parse_problem(text).map(|p| p.system)
}
