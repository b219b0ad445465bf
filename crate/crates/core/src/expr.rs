//! Polynomial mappings with exact rational coefficients.
//!
//! Covers parsing of the text grammar and the `f<k> = ...` file format,
//! canonical rendering, the algebra needed downstream (face restriction,
//! sum of squares, homotheties) and double precision evaluation with
//! Jacobians for the randomized checks.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::geometry::{Face, NewtonPolyhedron};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("component {component} has a constant term, the mapping must vanish at the origin")]
    ConstantTerm { component: usize },
    #[error("component {component} is the zero polynomial")]
    ZeroComponent { component: usize },
    #[error("variable {name} exceeds the declared dimension n = {n}")]
    VariableOutOfRange { name: String, n: usize },
    #[error("homothety factor {index} must be positive")]
    NonPositiveScale { index: usize },
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the face is not a proper face of the supplied Newton polyhedron")]
    UnknownFace,
    #[error("line {line}: {message}")]
    File { line: usize, message: String },
    #[error("empty input")]
    Empty,
}

/// How variables are spelled in text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarConvention {
    /// `x1, x2, ..., xn`
    Indexed,
    /// `x, y, z, w` for `n <= 4`
    Named,
}

const NAMED: [char; 4] = ['x', 'y', 'z', 'w'];

impl VarConvention {
    /// Indexed if any `x<digit>` occurs, named otherwise.
    pub fn detect(text: &str) -> Self {
        let b = text.as_bytes();
        let indexed = b
            .windows(2)
            .any(|w| w[0] == b'x' && w[1].is_ascii_digit());
        if indexed {
            Self::Indexed
        } else {
            Self::Named
        }
    }

    /// Named only when every variable has a letter.
    pub fn for_dimension(self, n: usize) -> Self {
        if n > NAMED.len() {
            Self::Indexed
        } else {
            self
        }
    }

    fn var_name(self, i: usize) -> String {
        match self {
            Self::Named if i < NAMED.len() => NAMED[i].to_string(),
            _ => format!("x{}", i + 1),
        }
    }
}

/// One term `c * x^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coefficient: BigRational,
}

/// Sparse polynomial in a fixed number of variables. Zero coefficients are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

fn degree(e: &[u32]) -> u32 {
    e.iter().sum()
}

/// Increasing total degree, then decreasing lexicographic exponent.
fn canonical_cmp(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    degree(a).cmp(&degree(b)).then_with(|| b.cmp(a))
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn monomial(exponents: Vec<u32>, c: BigRational) -> Self {
        let nvars = exponents.len();
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exponents, c);
        }
        p
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, BigRational::one())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &[u32]) -> Option<&BigRational> {
        self.terms.get(e)
    }

    pub fn constant_term(&self) -> BigRational {
        self.terms
            .get(&vec![0; self.nvars])
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Terms in canonical (rendering) order.
    pub fn monomials(&self) -> Vec<Monomial> {
        let mut out: Vec<Monomial> = self
            .terms
            .iter()
            .map(|(e, c)| Monomial {
                exponents: e.clone(),
                coefficient: c.clone(),
            })
            .collect();
        out.sort_by(|a, b| canonical_cmp(&a.exponents, &b.exponents));
        out
    }

    pub fn support(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.terms.keys()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        debug_assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, BigRational::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Keeps the terms whose exponent satisfies `keep`.
    pub fn filter_terms(&self, mut keep: impl FnMut(&[u32]) -> bool) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, z: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (zi, &k) in z.iter().zip(e) {
                t *= num_traits::pow(zi.clone(), k as usize);
            }
            acc += t;
        }
        acc
    }

    pub fn render(&self, conv: VarConvention) -> String {
        let conv = conv.for_dimension(self.nvars);
        if self.is_zero() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, m) in self.monomials().iter().enumerate() {
            let neg = m.coefficient.is_negative();
            let abs = m.coefficient.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let vars: Vec<String> = m
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    let name = conv.var_name(j);
                    if k == 1 {
                        name
                    } else {
                        format!("{name}^{k}")
                    }
                })
                .collect();
            if vars.is_empty() {
                s.push_str(&abs.to_string());
            } else if abs.is_one() {
                s.push_str(&vars.join("*"));
            } else {
                s.push_str(&abs.to_string());
                s.push('*');
                s.push_str(&vars.join("*"));
            }
        }
        s
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(VarConvention::Indexed))
    }
}

/// `f = (f_1, ..., f_l)` with `f(0) = 0` and every component nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolynomialMap {
    n: usize,
    components: Vec<Polynomial>,
}

impl PolynomialMap {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, ExprError> {
        let Some(first) = components.first() else {
            return Err(ExprError::Empty);
        };
        let n = first.nvars();
        if n == 0 {
            return Err(ExprError::Empty);
        }
        for (i, c) in components.iter().enumerate() {
            if c.nvars() != n {
                return Err(ExprError::DimensionMismatch {
                    expected: n,
                    got: c.nvars(),
                });
            }
            if c.is_zero() {
                return Err(ExprError::ZeroComponent { component: i + 1 });
            }
            if !c.constant_term().is_zero() {
                return Err(ExprError::ConstantTerm { component: i + 1 });
            }
        }
        Ok(Self { n, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    /// Union of the supports of all components, de-duplicated and sorted.
    pub fn support(&self) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = self
            .components
            .iter()
            .flat_map(|c| c.support().cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn render(&self, conv: VarConvention) -> String {
        self.components
            .iter()
            .map(|c| c.render(conv))
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// `F = sum_i f_i^2` as a single-component mapping.
    pub fn sum_of_squares(&self) -> PolynomialMap {
        let mut acc = Polynomial::zero(self.n);
        for c in &self.components {
            acc = acc.add(&c.mul(c));
        }
        PolynomialMap {
            n: self.n,
            components: vec![acc],
        }
    }

    /// `f o T_b` with `T_b(x) = (b_1 x_1, ..., b_n x_n)`; `c_m` becomes `c_m b^m`.
    pub fn apply_homothety(&self, b: &[BigRational]) -> Result<PolynomialMap, ExprError> {
        if b.len() != self.n {
            return Err(ExprError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        if let Some(i) = b.iter().position(|x| !x.is_positive()) {
            return Err(ExprError::NonPositiveScale { index: i + 1 });
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                let mut out = Polynomial::zero(self.n);
                for (e, coef) in c.terms() {
                    let mut v = coef.clone();
                    for (bi, &k) in b.iter().zip(e) {
                        v *= num_traits::pow(bi.clone(), k as usize);
                    }
                    out.add_term(e.clone(), v);
                }
                out
            })
            .collect();
        Ok(PolynomialMap {
            n: self.n,
            components,
        })
    }

    /// Values and Jacobian `[d f_i / d x_j]` at `z` in double precision.
    pub fn eval_jacobian(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), ExprError> {
        if z.len() != self.n {
            return Err(ExprError::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(NumericSystem::new(&self.components).eval_jacobian(z))
    }
}

impl fmt::Display for PolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(VarConvention::Indexed))
    }
}

/// `f_{i,tau}`: the monomials of each component whose exponent lies on `tau`.
/// Components may come back identically zero.
pub fn face_restriction(
    f: &PolynomialMap,
    tau: &Face,
    gamma: &NewtonPolyhedron,
) -> Result<Vec<Polynomial>, ExprError> {
    if gamma.n() != f.n() {
        return Err(ExprError::DimensionMismatch {
            expected: gamma.n(),
            got: f.n(),
        });
    }
    if !gamma.contains_face(tau) {
        return Err(ExprError::UnknownFace);
    }
    Ok(f.components()
        .iter()
        .map(|c| {
            c.filter_terms(|e| {
                let m: Vec<i64> = e.iter().map(|&k| k as i64).collect();
                gamma.point_on_face(&m, tau)
            })
        })
        .collect())
}

/// Components compiled to `f64` for repeated evaluation.
#[derive(Clone, Debug)]
pub struct NumericSystem {
    nvars: usize,
    rows: Vec<Vec<(f64, Vec<u32>)>>,
}

impl NumericSystem {
    pub fn new(components: &[Polynomial]) -> Self {
        let nvars = components.first().map_or(0, Polynomial::nvars);
        let rows = components
            .iter()
            .map(|c| {
                c.terms()
                    .map(|(e, v)| (v.to_f64().unwrap_or(f64::NAN), e.clone()))
                    .collect()
            })
            .collect();
        Self { nvars, rows }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(c, e)| c * e.iter().zip(z).map(|(&k, x)| x.powi(k as i32)).product::<f64>())
                    .sum()
            })
            .collect()
    }

    pub fn eval_jacobian(&self, z: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let values = self.eval(z);
        let jac = self
            .rows
            .iter()
            .map(|row| {
                (0..self.nvars)
                    .map(|j| {
                        row.iter()
                            .filter(|(_, e)| e[j] > 0)
                            .map(|(c, e)| {
                                let mut t = c * e[j] as f64;
                                for (i, (&k, x)) in e.iter().zip(z).enumerate() {
                                    let k = if i == j { k - 1 } else { k };
                                    t *= x.powi(k as i32);
                                }
                                t
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        (values, jac)
    }

    /// Entrywise sums of absolute term contributions to the Jacobian, a scale
    /// against which cancellation in the true Jacobian is judged.
    pub fn jacobian_magnitude(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                (0..self.nvars)
                    .map(|j| {
                        row.iter()
                            .filter(|(_, e)| e[j] > 0)
                            .map(|(c, e)| {
                                let mut t = (c * e[j] as f64).abs();
                                for (i, (&k, x)) in e.iter().zip(z).enumerate() {
                                    let k = if i == j { k - 1 } else { k };
                                    t *= x.abs().powi(k as i32);
                                }
                                t
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Var(usize, String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str, conv: VarConvention) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: BigInt = text[start..i].parse().expect("digits");
                out.push((start, Tok::Num(v)));
                continue;
            }
            'a'..='z' | 'A'..='Z' => {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word = &text[start..i];
                let idx = match conv {
                    VarConvention::Indexed => word
                        .strip_prefix('x')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&k| k >= 1 && !word[1..].starts_with('0'))
                        .map(|k| k - 1),
                    VarConvention::Named => {
                        let mut ch = word.chars();
                        match (ch.next(), ch.next()) {
                            (Some(c), None) => NAMED.iter().position(|&v| v == c),
                            _ => None,
                        }
                    }
                };
                let Some(idx) = idx else {
                    return Err(ExprError::Syntax {
                        position: start,
                        message: format!("unknown variable `{word}`"),
                    });
                };
                out.push((start, Tok::Var(idx, word.to_string())));
                continue;
            }
            _ => {
                return Err(ExprError::Syntax {
                    position: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Polynomial, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let d = self.unary()?;
                    let constant = d.terms().all(|(e, _)| e.iter().all(|&k| k == 0));
                    if !constant || d.is_zero() {
                        return Err(ExprError::Syntax {
                            position: at,
                            message: "division is only allowed by a nonzero constant".into(),
                        });
                    }
                    acc = acc.scale(&d.constant_term().recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ExprError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        match self.peek().cloned() {
            Some(Tok::Num(k)) => {
                self.pos += 1;
                let Some(k) = k.to_u32().filter(|&k| k <= 1024) else {
                    return self.err("exponent too large");
                };
                Ok(base.pow(k))
            }
            _ => self.err("expected a nonnegative integer exponent"),
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(self.nvars, BigRational::from_integer(v)))
            }
            Some(Tok::Var(i, _)) => {
                self.pos += 1;
                Ok(Polynomial::variable(self.nvars, i))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => self.err("expected a number, a variable or `(`"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses `;`-separated polynomials. `n` is the highest variable index used
/// unless `dimension` overrides it.
pub fn parse_map_with_dimension(
    text: &str,
    conv: VarConvention,
    dimension: Option<usize>,
) -> Result<PolynomialMap, ExprError> {
    let mut pieces = Vec::new();
    let mut offset = 0;
    for piece in text.split(';') {
        let toks = tokenize(piece, conv).map_err(|e| shift(e, offset))?;
        if toks.is_empty() {
            return Err(ExprError::Syntax {
                position: offset,
                message: "empty component".into(),
            });
        }
        pieces.push((offset, piece.len(), toks));
        offset += piece.len() + 1;
    }
    let used = pieces
        .iter()
        .flat_map(|(_, _, toks)| toks.iter())
        .filter_map(|(_, t)| match t {
            Tok::Var(i, name) => Some((*i, name.clone())),
            _ => None,
        })
        .max_by_key(|(i, _)| *i);
    let inferred = used.as_ref().map_or(1, |(i, _)| i + 1);
    let n = match dimension {
        Some(n) => {
            if let Some((i, name)) = used {
                if i >= n {
                    return Err(ExprError::VariableOutOfRange { name, n });
                }
            }
            n
        }
        None => inferred,
    };
    let mut components = Vec::new();
    for (offset, len, toks) in &pieces {
        let mut p = Parser {
            toks,
            pos: 0,
            end: *len,
            nvars: n,
        };
        let poly = p.expr().map_err(|e| shift(e, *offset))?;
        if p.pos != toks.len() {
            return Err(shift(p.err::<()>("unexpected token").unwrap_err(), *offset));
        }
        components.push(poly);
    }
    PolynomialMap::new(components)
}

fn shift(e: ExprError, by: usize) -> ExprError {
    match e {
        ExprError::Syntax { position, message } => ExprError::Syntax {
            position: position + by,
            message,
        },
        other => other,
    }
}

pub fn parse_map(text: &str, conv: VarConvention) -> Result<PolynomialMap, ExprError> {
    parse_map_with_dimension(text, conv, None)
}

/// Parses the file format: optional `n = <int>`, then `f<k> = <expr>` lines
/// for `k = 1..l`; `#` starts a comment. Returns the detected convention too.
pub fn parse_map_file(text: &str) -> Result<(PolynomialMap, VarConvention), ExprError> {
    let mut n = None;
    let mut comps: BTreeMap<usize, (usize, String)> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let Some((lhs, rhs)) = line.split_once('=') else {
            return Err(ExprError::File {
                line: lineno,
                message: "expected `name = value`".into(),
            });
        };
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if lhs == "n" {
            let v = rhs.parse::<usize>().ok().filter(|&v| v >= 1);
            n = Some(v.ok_or_else(|| ExprError::File {
                line: lineno,
                message: format!("invalid dimension `{rhs}`"),
            })?);
        } else if let Some(k) = lhs
            .strip_prefix('f')
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
        {
            if comps.insert(k, (lineno, rhs.to_string())).is_some() {
                return Err(ExprError::File {
                    line: lineno,
                    message: format!("component f{k} defined twice"),
                });
            }
        } else {
            return Err(ExprError::File {
                line: lineno,
                message: format!("unknown key `{lhs}`"),
            });
        }
    }
    if comps.is_empty() {
        return Err(ExprError::Empty);
    }
    for (expected, (&k, (line, _))) in (1..).zip(&comps) {
        if k != expected {
            return Err(ExprError::File {
                line: *line,
                message: format!("components must be numbered f1..fl without gaps, found f{k}"),
            });
        }
    }
    if comps.values().any(|(_, e)| e.contains(';')) {
        let (line, _) = comps.values().find(|(_, e)| e.contains(';')).unwrap();
        return Err(ExprError::File {
            line: *line,
            message: "one component per line".into(),
        });
    }
    let joined = comps
        .values()
        .map(|(_, e)| e.as_str())
        .collect::<Vec<_>>()
        .join(";");
    let conv = VarConvention::detect(&joined);
    let map = parse_map_with_dimension(&joined, conv, n)?;
    Ok((map, conv))
}
