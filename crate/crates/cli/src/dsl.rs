//! Model files.
//!
//! ```text
//! model    := stmt+
//! stmt     := "dilation" "[" INT ("," INT)* "]" ";"
//!           | "field" NAME "=" vexpr ";"
//!           | "operator" NAME "=" oexpr ";"
//!           | "kernel" NAME ";"
//! vexpr    := "0" | ["-"] vterm (("+" | "-") vterm)*
//! vterm    := (factor "*")* "d" INT
//! factor   := INT ["/" INT] ["^" exp] | "x" INT ["^" exp]
//! oexpr    := ["-"] oterm (("+" | "-") oterm)*
//! oterm    := oatom ["^" exp] ("*" oatom ["^" exp])*
//! oatom    := INT | NAME | "(" oexpr ")"
//! exp      := INT | "(" integer arithmetic ")"
//! ```
//!
//! `#` starts a comment. Variables are `x1..xn` and derivatives `d1..dn`,
//! where `n` is the length of the dilation. Operators are non-commutative
//! polynomials in the field names with integer coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rockland::exactpoly::{format_rational, Polynomial, Rational};
use rockland::fields::{certify_homogeneity, DilationFamily, HomogeneousSystem, MultiIndex, OperatorSpec, PolyVectorField};

const MAX_EXPONENT: i64 = 256;
const MAX_DEPTH: usize = 64;
const MAX_WORDS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}\n{excerpt}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// The offending source line followed by a caret line.
    pub excerpt: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub field: PolyVectorField,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorDecl {
    pub name: String,
    /// Words over field declaration indices.
    pub terms: BTreeMap<Vec<usize>, Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub dilation: Vec<u32>,
    pub fields: Vec<FieldDecl>,
    pub operator: Option<OperatorDecl>,
    pub kernel: Option<String>,
}

/// Kernel shapes a model may select.
pub const KERNELS: &[&str] = &["heisenberg_gauge"];

/// A parsed model with the core objects it describes. Fields in `system`
/// are sorted by degree; `perm` maps declaration index to system index.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: ModelSpec,
    pub system: HomogeneousSystem,
    pub perm: Vec<usize>,
    pub operator: Option<OperatorSpec>,
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.dilation.len()
    }

    /// The operator as an [`OperatorSpec`] over the fields of `system`.
    fn operator_spec(&self, system: &HomogeneousSystem, perm: &[usize]) -> Option<rockland::Result<OperatorSpec>> {
        self.operator.as_ref().map(|op| {
            OperatorSpec::new(
                op.terms
                    .iter()
                    .map(|(w, c)| (c.clone(), MultiIndex(w.iter().map(|i| perm[*i]).collect()))),
                system.degrees(),
            )
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Source<'a> {
    lines: Vec<&'a str>,
}

impl Source<'_> {
    fn error(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        let text = self.lines.get(line.saturating_sub(1)).copied().unwrap_or("");
        let caret = " ".repeat(col.saturating_sub(1)) + "^";
        ParseError {
            line,
            col,
            message: message.into(),
            excerpt: format!("{text}\n{caret}"),
        }
    }
}

fn lex(src: &Source, text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c == '#' {
            while chars.peek().is_some_and(|c| *c != '\n') {
                chars.next();
            }
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                s.push(d);
                chars.next();
                col += 1;
            }
            out.push(Token {
                tok: Tok::Int(s),
                line: l0,
                col: c0,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_alphanumeric() || **d == '_') {
                s.push(d);
                chars.next();
                col += 1;
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: l0,
                col: c0,
            });
        } else if "[],;=+-*/^()".contains(c) {
            chars.next();
            col += 1;
            out.push(Token {
                tok: Tok::Sym(c),
                line: l0,
                col: c0,
            });
        } else {
            return Err(src.error(l0, c0, format!("unexpected character {c:?}")));
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

type NcPoly = BTreeMap<Vec<usize>, Rational>;

struct Parser<'a> {
    src: &'a Source<'a>,
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, t: &Token, msg: impl Into<String>) -> ParseError {
        self.src.error(t.line, t.col, msg)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<Token, ParseError> {
        let t = self.next();
        if t.tok == Tok::Sym(c) {
            Ok(t)
        } else {
            Err(self.err_at(&t, format!("expected `{c}`, found {}", Self::describe(&t.tok))))
        }
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(self.err_at(&t, format!("expected {what}, found {}", Self::describe(other)))),
        }
    }

    fn integer(&mut self) -> Result<(Rational, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(s) => Ok((s.parse::<Rational>().map_err(|_| self.err_at(&t, "malformed integer"))?, t.clone())),
            other => Err(self.err_at(&t, format!("expected an integer, found {}", Self::describe(other)))),
        }
    }

    fn enter(&mut self, t: &Token) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err_at(t, "expression nested too deeply"));
        }
        Ok(())
    }

    /// Exponent after `^`: an integer or a parenthesised integer expression.
    fn exponent(&mut self) -> Result<u32, ParseError> {
        let start = self.peek().clone();
        let v = if self.is_sym('(') {
            self.next();
            let v = self.int_expr()?;
            self.expect_sym(')')?;
            v
        } else {
            self.integer()?.0
        };
        if !v.is_integer() {
            return Err(self.err_at(&start, format!("non-integer exponent {}", format_rational(&v))));
        }
        if v.is_negative() {
            return Err(self.err_at(&start, "negative exponent"));
        }
        match v.to_i64() {
            Some(e) if e <= MAX_EXPONENT => Ok(e as u32),
            _ => Err(self.err_at(&start, format!("exponent larger than {MAX_EXPONENT}"))),
        }
    }

    fn int_expr(&mut self) -> Result<Rational, ParseError> {
        let t = self.peek().clone();
        self.enter(&t)?;
        let mut neg = false;
        if self.is_sym('-') {
            self.next();
            neg = true;
        }
        let mut acc = self.int_term()?;
        if neg {
            acc = -acc;
        }
        loop {
            if self.is_sym('+') {
                self.next();
                acc += self.int_term()?;
            } else if self.is_sym('-') {
                self.next();
                acc -= self.int_term()?;
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn int_term(&mut self) -> Result<Rational, ParseError> {
        let mut acc = self.int_atom()?;
        loop {
            if self.is_sym('*') {
                self.next();
                acc *= self.int_atom()?;
            } else if self.is_sym('/') {
                let t = self.next();
                let d = self.int_atom()?;
                if d.is_zero() {
                    return Err(self.err_at(&t, "division by zero"));
                }
                acc /= d;
            } else {
                break;
            }
            if acc.numer().bits() > 256 {
                let t = self.peek().clone();
                return Err(self.err_at(&t, "integer expression too large"));
            }
        }
        Ok(acc)
    }

    fn int_atom(&mut self) -> Result<Rational, ParseError> {
        if self.is_sym('(') {
            self.next();
            let v = self.int_expr()?;
            self.expect_sym(')')?;
            Ok(v)
        } else {
            Ok(self.integer()?.0)
        }
    }

    fn index_suffix(&self, t: &Token, s: &str, prefix: char, n: usize) -> Result<Option<usize>, ParseError> {
        let Some(rest) = s.strip_prefix(prefix) else {
            return Ok(None);
        };
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(None);
        }
        match rest.parse::<usize>() {
            Ok(k) if k >= 1 && k <= n => Ok(Some(k - 1)),
            _ => Err(self.err_at(t, format!("dimension mismatch: `{s}` in a model of dimension {n}"))),
        }
    }

    fn vexpr(&mut self, n: usize) -> Result<PolyVectorField, ParseError> {
        let mut coeffs = vec![Polynomial::zero(n); n];
        if let Tok::Int(s) = &self.peek().tok {
            if s.chars().all(|c| c == '0') && self.toks.get(self.pos + 1).is_some_and(|t| t.tok == Tok::Sym(';')) {
                self.next();
                return Ok(PolyVectorField::zero(n));
            }
        }
        let mut sign = Rational::one();
        if self.is_sym('-') {
            self.next();
            sign = -sign;
        }
        loop {
            let (i, p) = self.vterm(n)?;
            coeffs[i] = &coeffs[i] + &p.scale(&sign);
            if self.is_sym('+') {
                self.next();
                sign = Rational::one();
            } else if self.is_sym('-') {
                self.next();
                sign = -Rational::one();
            } else {
                break;
            }
        }
        PolyVectorField::new(coeffs).map_err(|e| {
            let t = self.peek().clone();
            self.err_at(&t, e.to_string())
        })
    }

    fn vterm(&mut self, n: usize) -> Result<(usize, Polynomial), ParseError> {
        let mut coeff = Polynomial::one(n);
        loop {
            let t = self.next();
            match &t.tok {
                Tok::Int(_) => {
                    self.pos -= 1;
                    let (mut c, _) = self.integer()?;
                    if self.is_sym('/') {
                        let slash = self.next();
                        let (d, _) = self.integer()?;
                        if d.is_zero() {
                            return Err(self.err_at(&slash, "division by zero"));
                        }
                        c /= d;
                    }
                    if self.is_sym('^') {
                        self.next();
                        let e = self.exponent()?;
                        c = num_traits::pow(c, e as usize);
                    }
                    coeff = coeff.scale(&c);
                }
                Tok::Ident(s) => {
                    if let Some(k) = self.index_suffix(&t, s, 'd', n)? {
                        if self.is_sym('^') {
                            let t = self.peek().clone();
                            return Err(self.err_at(&t, "derivatives cannot be raised to a power"));
                        }
                        return Ok((k, coeff));
                    }
                    if let Some(k) = self.index_suffix(&t, s, 'x', n)? {
                        let mut v = Polynomial::var(n, k);
                        if self.is_sym('^') {
                            self.next();
                            let e = self.exponent()?;
                            v = v.pow(e);
                        }
                        coeff = &coeff * &v;
                    } else {
                        return Err(self.err_at(&t, format!("unknown symbol `{s}` in a field expression (use x1..x{n} and d1..d{n})")));
                    }
                }
                other => {
                    return Err(self.err_at(&t, format!("expected a coefficient, variable or derivative, found {}", Self::describe(other))));
                }
            }
            let t = self.next();
            if t.tok != Tok::Sym('*') {
                return Err(self.err_at(&t, "each term must end with a derivative `dK`"));
            }
        }
    }

    fn oexpr(&mut self, names: &BTreeMap<String, usize>) -> Result<NcPoly, ParseError> {
        let t = self.peek().clone();
        self.enter(&t)?;
        let mut acc = NcPoly::new();
        let mut sign = Rational::one();
        if self.is_sym('-') {
            self.next();
            sign = -sign;
        }
        loop {
            let term = self.oterm(names)?;
            for (w, c) in term {
                add_word(&mut acc, w, c * &sign);
            }
            if self.is_sym('+') {
                self.next();
                sign = Rational::one();
            } else if self.is_sym('-') {
                self.next();
                sign = -Rational::one();
            } else {
                break;
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn oterm(&mut self, names: &BTreeMap<String, usize>) -> Result<NcPoly, ParseError> {
        let mut acc = self.opower(names)?;
        while self.is_sym('*') {
            let t = self.next();
            let rhs = self.opower(names)?;
            acc = nc_mul(&acc, &rhs).ok_or_else(|| self.err_at(&t, "operator expansion too large"))?;
        }
        Ok(acc)
    }

    fn opower(&mut self, names: &BTreeMap<String, usize>) -> Result<NcPoly, ParseError> {
        let base = self.oatom(names)?;
        if self.is_sym('^') {
            let t = self.next();
            let e = self.exponent()?;
            let mut acc: NcPoly = [(Vec::new(), Rational::one())].into_iter().collect();
            for _ in 0..e {
                acc = nc_mul(&acc, &base).ok_or_else(|| self.err_at(&t, "operator expansion too large"))?;
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn oatom(&mut self, names: &BTreeMap<String, usize>) -> Result<NcPoly, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(s) => {
                let c: Rational = s.parse().map_err(|_| self.err_at(&t, "malformed integer"))?;
                if self.is_sym('/') {
                    let t = self.peek().clone();
                    return Err(self.err_at(&t, "operator coefficients must be integers"));
                }
                Ok([(Vec::new(), c)].into_iter().filter(|(_, c)| !c.is_zero()).collect())
            }
            Tok::Ident(s) => match names.get(s) {
                Some(i) => Ok([(vec![*i], Rational::one())].into_iter().collect()),
                None => Err(self.err_at(&t, format!("undefined name `{s}`"))),
            },
            Tok::Sym('(') => {
                let v = self.oexpr(names)?;
                self.expect_sym(')')?;
                Ok(v)
            }
            other => Err(self.err_at(&t, format!("expected a field name, integer or `(`, found {}", Self::describe(other)))),
        }
    }
}

fn add_word(acc: &mut NcPoly, w: Vec<usize>, c: Rational) {
    let e = acc.entry(w.clone()).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        acc.remove(&w);
    }
}

fn nc_mul(a: &NcPoly, b: &NcPoly) -> Option<NcPoly> {
    if a.len().saturating_mul(b.len()) > MAX_WORDS {
        return None;
    }
    let mut out = NcPoly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > MAX_EXPONENT as usize {
                return None;
            }
            let w: Vec<usize> = wa.iter().chain(wb).copied().collect();
            add_word(&mut out, w, ca * cb);
        }
    }
    Some(out)
}

/// Parse and validate a model: names resolve, fields are homogeneous for
/// the dilation, and the operator is homogeneous.
pub fn parse_model(text: &str) -> Result<ModelSpec, ParseError> {
    parse_full(text).map(|m| m.spec)
}

/// [`parse_model`] together with the core system and operator.
pub fn load_model(text: &str) -> Result<Model, ParseError> {
    parse_full(text)
}

fn parse_full(text: &str) -> Result<Model, ParseError> {
    let src = Source {
        lines: text.lines().collect(),
    };
    let toks = lex(&src, text)?;
    let mut p = Parser {
        src: &src,
        toks,
        pos: 0,
        depth: 0,
    };
    let mut dilation: Option<(Vec<u32>, Token)> = None;
    let mut fields: Vec<(FieldDecl, Token)> = Vec::new();
    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    let mut operator: Option<(OperatorDecl, Token)> = None;
    let mut kernel: Option<String> = None;
    loop {
        let t = p.next();
        let kw = match &t.tok {
            Tok::Eof => break,
            Tok::Ident(s) => s.clone(),
            other => return Err(p.err_at(&t, format!("expected a statement, found {}", Parser::describe(other)))),
        };
        match kw.as_str() {
            "dilation" => {
                if dilation.is_some() {
                    return Err(p.err_at(&t, "dilation declared twice"));
                }
                p.expect_sym('[')?;
                let mut sigma = Vec::new();
                loop {
                    let (v, vt) = p.integer()?;
                    match v.to_u32() {
                        Some(s) if s >= 1 => sigma.push(s),
                        _ => return Err(p.err_at(&vt, "dilation exponents must be positive integers")),
                    }
                    if sigma.len() > 64 {
                        return Err(p.err_at(&vt, "too many variables"));
                    }
                    if p.is_sym(',') {
                        p.next();
                    } else {
                        break;
                    }
                }
                p.expect_sym(']')?;
                p.expect_sym(';')?;
                DilationFamily::new(sigma.clone()).map_err(|e| p.err_at(&t, e.to_string()))?;
                dilation = Some((sigma, t));
            }
            "field" => {
                let Some((sigma, _)) = &dilation else {
                    return Err(p.err_at(&t, "a field needs the dilation to be declared first"));
                };
                let n = sigma.len();
                let (name, nt) = p.ident("a field name")?;
                if names.contains_key(&name) {
                    return Err(p.err_at(&nt, format!("field `{name}` declared twice")));
                }
                if is_reserved(&name) {
                    return Err(p.err_at(&nt, format!("`{name}` is reserved")));
                }
                p.expect_sym('=')?;
                let field = p.vexpr(n)?;
                p.expect_sym(';')?;
                names.insert(name.clone(), fields.len());
                fields.push((FieldDecl { name, field }, nt));
            }
            "operator" => {
                if operator.is_some() {
                    return Err(p.err_at(&t, "only one operator may be declared"));
                }
                let (name, nt) = p.ident("an operator name")?;
                if names.contains_key(&name) || is_reserved(&name) {
                    return Err(p.err_at(&nt, format!("operator name `{name}` clashes with a field or keyword")));
                }
                p.expect_sym('=')?;
                let terms = p.oexpr(&names)?;
                p.expect_sym(';')?;
                operator = Some((OperatorDecl { name, terms }, nt));
            }
            "kernel" => {
                if kernel.is_some() {
                    return Err(p.err_at(&t, "kernel declared twice"));
                }
                let (name, nt) = p.ident("a kernel name")?;
                if !KERNELS.contains(&name.as_str()) {
                    return Err(p.err_at(&nt, format!("unknown kernel `{name}` (available: {})", KERNELS.join(", "))));
                }
                p.expect_sym(';')?;
                kernel = Some(name);
            }
            other => return Err(p.err_at(&t, format!("unknown statement `{other}`"))),
        }
    }
    let Some((sigma, dt)) = dilation else {
        let t = p.peek().clone();
        return Err(p.err_at(&t, "missing dilation statement"));
    };
    if fields.is_empty() {
        return Err(p.err_at(&dt, "the model declares no fields"));
    }
    let delta = DilationFamily::new(sigma.clone()).map_err(|e| p.err_at(&dt, e.to_string()))?;
    for (f, t) in &fields {
        if certify_homogeneity(&f.field, &delta).is_none() {
            return Err(p.err_at(t, format!("field `{}` is not homogeneous for dilation {sigma:?}", f.name)));
        }
    }
    let (system, perm) = HomogeneousSystem::new(
        delta,
        fields.iter().map(|(f, _)| f.field.clone()).collect(),
        fields.iter().map(|(f, _)| f.name.clone()).collect(),
    )
    .map_err(|e| p.err_at(&dt, e.to_string()))?;
    let spec = ModelSpec {
        dilation: sigma,
        fields: fields.into_iter().map(|(f, _)| f).collect(),
        operator: operator.as_ref().map(|(o, _)| o.clone()),
        kernel,
    };
    let op = match spec.operator_spec(&system, &perm) {
        None => None,
        Some(Ok(op)) if !op.is_zero() => Some(op),
        Some(Ok(_)) => {
            let t = &operator.as_ref().expect("operator present").1;
            return Err(p.err_at(t, "operator is zero"));
        }
        Some(Err(e)) => {
            let t = &operator.as_ref().expect("operator present").1;
            return Err(p.err_at(t, e.to_string()));
        }
    };
    Ok(Model {
        spec,
        system,
        perm,
        operator: op,
    })
}

fn is_reserved(name: &str) -> bool {
    let index_like = |p: char| name.strip_prefix(p).is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()));
    ["dilation", "field", "operator", "kernel"].contains(&name) || index_like('x') || index_like('d')
}

fn render_monomial_coeff(c: &Rational, exps: &[u32]) -> String {
    let mut parts = Vec::new();
    let a = c.abs();
    if !a.is_one() {
        parts.push(format_rational(&a));
    }
    for (i, e) in exps.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(format!("x{}", i + 1)),
            e => parts.push(format!("x{}^{e}", i + 1)),
        }
    }
    parts.join("*")
}

fn push_signed(out: &mut String, negative: bool, body: &str) {
    if out.is_empty() {
        if negative {
            out.push('-');
        }
    } else {
        out.push_str(if negative { " - " } else { " + " });
    }
    out.push_str(body);
}

pub fn render_field(f: &PolyVectorField) -> String {
    let mut out = String::new();
    for (i, c) in f.coeffs().iter().enumerate() {
        for (m, coef) in c.terms() {
            let head = render_monomial_coeff(coef, &m.0);
            let body = if head.is_empty() {
                format!("d{}", i + 1)
            } else {
                format!("{head}*d{}", i + 1)
            };
            push_signed(&mut out, coef.is_negative(), &body);
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

pub fn render_word(word: &[usize], names: &[String]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut k = 0;
    while k < word.len() {
        let mut run = 1;
        while k + run < word.len() && word[k + run] == word[k] {
            run += 1;
        }
        let name = &names[word[k]];
        parts.push(if run == 1 { name.clone() } else { format!("{name}^{run}") });
        k += run;
    }
    parts.join("*")
}

pub fn render_operator(terms: &BTreeMap<Vec<usize>, Rational>, names: &[String]) -> String {
    let mut out = String::new();
    for (w, c) in terms {
        let a = c.abs();
        let body = match (w.is_empty(), a.is_one()) {
            (true, _) => format_rational(&a),
            (false, true) => render_word(w, names),
            (false, false) => format!("{}*{}", format_rational(&a), render_word(w, names)),
        };
        push_signed(&mut out, c.is_negative(), &body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for ModelSpec {
    /// Canonical model text; parsing it gives back an identical model.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sigma: Vec<String> = self.dilation.iter().map(|s| s.to_string()).collect();
        writeln!(f, "dilation [{}];", sigma.join(", "))?;
        for d in &self.fields {
            writeln!(f, "field {} = {};", d.name, render_field(&d.field))?;
        }
        if let Some(op) = &self.operator {
            let names: Vec<String> = self.fields.iter().map(|d| d.name.clone()).collect();
            writeln!(f, "operator {} = {};", op.name, render_operator(&op.terms, &names))?;
        }
        if let Some(k) = &self.kernel {
            writeln!(f, "kernel {k};")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rockland::exactpoly::int;

    const GRUSHIN: &str = "dilation [1,2]; field X1 = d1; field X2 = x1*d2; operator L = X1^2 + X2^2;";

    #[test]
    fn grushin() {
        let m = load_model(GRUSHIN).unwrap();
        assert_eq!(m.spec.dilation, vec![1, 2]);
        assert_eq!(m.spec.fields.len(), 2);
        assert_eq!(m.system.degrees(), &[1, 1]);
        let op = m.operator.unwrap();
        assert_eq!(op.degree(), 2);
        assert_eq!(op.num_terms(), 2);
        let text = m.spec.to_string();
        assert_eq!(
            text,
            "dilation [1, 2];\nfield X1 = d1;\nfield X2 = x1*d2;\noperator L = X1^2 + X2^2;\n"
        );
        assert_eq!(parse_model(&text).unwrap(), m.spec);
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_model("dilation [1,2];\nfield X = x1^(1/2)*d2;").unwrap_err();
        assert_eq!((e.line, e.col), (2, 14));
        assert!(e.message.contains("non-integer exponent"), "{e}");
        assert!(e.excerpt.ends_with("\n             ^"), "{:?}", e.excerpt);

        let e = parse_model("dilation [1,2]; field X1 = d1; operator L = X3^2;").unwrap_err();
        assert!(e.message.contains("undefined name `X3`"));
        assert_eq!((e.line, e.col), (1, 45));

        let e = parse_model("dilation [1,2]; field X1 = x3*d1;").unwrap_err();
        assert!(e.message.contains("dimension mismatch"));

        let e = parse_model("dilation [1,2]; field X1 = x1*d1;").unwrap_err();
        assert!(e.message.contains("not homogeneous"));

        let e = parse_model("dilation [1,2]; field X1 = d1; field X2 = x1*d2; operator L = X1^2 + X2;").unwrap_err();
        assert!(e.message.contains("not homogeneous"), "{e}");
    }

    #[test]
    fn operator_algebra() {
        let m = parse_model("dilation [1,2]; field A = d1; field B = x1*d2; operator L = (A + B)^2 - A*B - 2*B*A + B*A;").unwrap();
        let op = m.operator.unwrap();
        let expect: BTreeMap<Vec<usize>, Rational> = [(vec![0, 0], int(1)), (vec![1, 1], int(1))].into_iter().collect();
        assert_eq!(op.terms, expect);
    }

    #[test]
    fn field_terms_merge_and_sign() {
        let m = parse_model("dilation [1,1,2]; field Y = -d1 + 3/2*x1*d3 - x2*d3 + 2^2*x1*d3;").unwrap();
        let text = m.to_string();
        assert!(text.contains("field Y = -d1 - x2*d3 + 11/2*x1*d3;"), "{text}");
        assert_eq!(parse_model(&text).unwrap(), m);
    }
}
