//! Exact sparse multivariate polynomial arithmetic over the rationals.
//!
//! Terms are kept in a `BTreeMap` ordered by graded lexicographic monomial
//! order, so iteration, serialization, and reports are deterministic. No zero
//! coefficient is ever stored; the zero polynomial has an empty term map and
//! its degree is the `None` sentinel.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational scalar used by the whole symbolic layer.
pub type Rat = BigRational;

/// Rational from an integer pair; panics on zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    assert!(den != 0, "zero denominator");
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Exponent vector of a single monomial. Length equals the ambient variable
/// count of the polynomial holding it.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn constant(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

// Graded lexicographic order: total degree first, then lexicographic on the
// exponent vector.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rat>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, value: Rat) -> Self {
        let mut p = Polynomial::zero(nvars);
        if !value.is_zero() {
            p.terms.insert(Monomial::constant(nvars), value);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Polynomial::constant(nvars, Rat::one())
    }

    /// The monomial `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index out of range");
        let mut p = Polynomial::zero(nvars);
        p.terms.insert(Monomial::var(nvars, index), Rat::one());
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Rat)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (exps, coeff) in terms {
            if exps.len() != nvars {
                return Err(Error::VarCountMismatch {
                    left: exps.len(),
                    right: nvars,
                });
            }
            p.add_term(Monomial(exps), coeff);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; `None` is the sentinel for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total_degree()).max()
    }

    /// Lowest total degree among stored terms; `None` for zero.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total_degree()).min()
    }

    /// Terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.nvars != other.nvars {
            return Err(Error::VarCountMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.checked_add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, factor: &Rat) -> Polynomial {
        if factor.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * factor))
                .collect(),
        }
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.nvars != other.nvars {
            return Err(Error::VarCountMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut out = Polynomial::one(self.nvars);
        for _ in 0..exp {
            out = out.checked_mul(self).expect("same ring");
        }
        out
    }

    /// Formal partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Result<Polynomial> {
        if var >= self.nvars {
            return Err(Error::VarIndexOutOfRange {
                index: var,
                nvars: self.nvars,
            });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] = e - 1;
            out.add_term(Monomial(exps), c * rat_int(e as i64));
        }
        Ok(out)
    }

    /// Iterated partial derivative `∂^alpha` over the variable block starting
    /// at `offset`; `alpha` is a multiindex relative to the block.
    pub fn partial_multi(&self, offset: usize, alpha: &[u32]) -> Result<Polynomial> {
        let mut out = self.clone();
        for (i, &e) in alpha.iter().enumerate() {
            for _ in 0..e {
                out = out.partial(offset + i)?;
            }
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[Rat]) -> Result<Rat> {
        if point.len() != self.nvars {
            return Err(Error::PointLengthMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    term *= &point[i];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Floating evaluation: terms are accumulated in graded-lex order, each
    /// term computed as coefficient times a plain product of integer powers.
    /// Rounding therefore follows IEEE-754 for that fixed summation order.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.nvars {
            return Err(Error::PointLengthMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = c.to_f64().unwrap_or(f64::NAN);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    term *= point[i].powi(e as i32);
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Full composition: variable `i` is replaced by `subs[i]`. All
    /// substituted polynomials must share one variable count, which becomes
    /// the variable count of the result.
    pub fn substitute(&self, subs: &[Polynomial]) -> Result<Polynomial> {
        if subs.len() != self.nvars {
            return Err(Error::PointLengthMismatch {
                expected: self.nvars,
                got: subs.len(),
            });
        }
        let out_nvars = match subs.first() {
            Some(p) => p.nvars,
            None => return Ok(Polynomial::constant(0, self.coeff(&Monomial(vec![])))),
        };
        for s in subs {
            if s.nvars != out_nvars {
                return Err(Error::VarCountMismatch {
                    left: s.nvars,
                    right: out_nvars,
                });
            }
        }
        // Memoized powers of each substituted polynomial.
        let mut powers: Vec<Vec<Polynomial>> = subs
            .iter()
            .map(|_| vec![Polynomial::one(out_nvars)])
            .collect();
        let mut out = Polynomial::zero(out_nvars);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(out_nvars, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().checked_mul(&subs[i])?;
                    powers[i].push(next);
                }
                term = term.checked_mul(&powers[i][e as usize])?;
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// Substitute rational values for selected variables, keeping the
    /// ambient variable count.
    pub fn substitute_values(&self, assigns: &[(usize, Rat)]) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut exps = m.0.clone();
            for (var, value) in assigns {
                if *var >= self.nvars {
                    return Err(Error::VarIndexOutOfRange {
                        index: *var,
                        nvars: self.nvars,
                    });
                }
                let e = exps[*var];
                if e > 0 {
                    for _ in 0..e {
                        coeff *= value;
                    }
                    exps[*var] = 0;
                }
            }
            out.add_term(Monomial(exps), coeff);
        }
        Ok(out)
    }

    /// Reinterpret in a ring with `new_nvars` variables, sending old variable
    /// `i` to `var_map[i]`.
    pub fn remap(&self, new_nvars: usize, var_map: &[usize]) -> Result<Polynomial> {
        if var_map.len() != self.nvars {
            return Err(Error::PointLengthMismatch {
                expected: self.nvars,
                got: var_map.len(),
            });
        }
        let mut out = Polynomial::zero(new_nvars);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; new_nvars];
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    let target = var_map[i];
                    if target >= new_nvars {
                        return Err(Error::VarIndexOutOfRange {
                            index: target,
                            nvars: new_nvars,
                        });
                    }
                    exps[target] += e;
                }
            }
            out.add_term(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    /// Drop trailing variables; fails if any stored term uses them.
    pub fn truncate_vars(&self, new_nvars: usize) -> Result<Polynomial> {
        let mut out = Polynomial::zero(new_nvars);
        for (m, c) in &self.terms {
            if m.0[new_nvars..].iter().any(|&e| e > 0) {
                return Err(Error::Validation(
                    "cannot truncate variables still in use".into(),
                ));
            }
            out.add_term(Monomial(m.0[..new_nvars].to_vec()), c.clone());
        }
        Ok(out)
    }

    /// Substitute the block of variables `[block_start, block_start+d)` by
    /// its image under the square rational matrix `t` (`x ↦ T·x`); other
    /// variables are untouched. Ordinary partials of the result realize the
    /// directional derivatives `(T*∂)^α` of the original polynomial.
    pub fn compose_linear(
        &self,
        t: &crate::matrix::RatMat,
        block_start: usize,
    ) -> Result<Polynomial> {
        let d = t.nrows();
        if t.ncols() != d {
            return Err(Error::NonSquareMatrix {
                rows: t.nrows(),
                cols: t.ncols(),
            });
        }
        if block_start + d > self.nvars {
            return Err(Error::DimensionMismatch(format!(
                "block [{}, {}) exceeds {} variables",
                block_start,
                block_start + d,
                self.nvars
            )));
        }
        let subs: Vec<Polynomial> = (0..self.nvars)
            .map(|i| {
                if i >= block_start && i < block_start + d {
                    let row = i - block_start;
                    let mut p = Polynomial::zero(self.nvars);
                    for col in 0..d {
                        let c = t.get(row, col);
                        if !c.is_zero() {
                            p.add_term(Monomial::var(self.nvars, block_start + col), c.clone());
                        }
                    }
                    p
                } else {
                    Polynomial::var(self.nvars, i)
                }
            })
            .collect();
        self.substitute(&subs)
    }

    /// Homogeneous part of the given total degree.
    pub fn homogeneous_part(&self, degree: u32) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total_degree() == degree)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Leading term in graded lexicographic order.
    fn leading_term(&self) -> Option<(&Monomial, &Rat)> {
        self.terms.iter().next_back()
    }

    /// Exact division: returns `Some(q)` with `self = q * divisor` when the
    /// divisor divides exactly, `None` otherwise. Used by the fraction-free
    /// Bareiss elimination, where divisibility is guaranteed.
    pub fn exact_div(&self, divisor: &Polynomial) -> Option<Polynomial> {
        assert_eq!(self.nvars, divisor.nvars, "same ring required");
        let (dm, dc) = divisor.leading_term()?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero(self.nvars);
        while let Some((rm, rc)) = rem.leading_term() {
            if !dm.divides(rm) {
                return None;
            }
            let qm = rm.div(dm);
            let qc = rc / dc;
            let mut step = Polynomial::zero(self.nvars);
            step.terms.insert(qm, qc);
            rem = rem
                .checked_sub(&step.checked_mul(divisor).unwrap())
                .unwrap();
            quot = quot.checked_add(&step).unwrap();
        }
        Some(quot)
    }

    /// Render using the given variable names.
    pub fn to_string_with(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 1 {
                    factors.push(names[i].clone());
                } else if e > 1 {
                    factors.push(format!("{}^{}", names[i], e));
                }
            }
            let coeff_str = if factors.is_empty() {
                format!("{}", c)
            } else if c.is_one() {
                String::new()
            } else if (-c.clone()).is_one() {
                "-".into()
            } else {
                format!("{}*", c)
            };
            parts.push(format!("{}{}", coeff_str, factors.join("*")));
        }
        let mut out = String::new();
        for (i, part) in parts.iter().enumerate() {
            if i == 0 {
                out.push_str(part);
            } else if let Some(stripped) = part.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(part);
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..self.nvars).map(|i| format!("x{}", i)).collect();
        write!(f, "{}", self.to_string_with(&names))
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("variable count mismatch")
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("variable count mismatch")
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("variable count mismatch")
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::neg(self)
    }
}

/// Ordered list of polynomials sharing one variable count.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyVector {
    components: Vec<Polynomial>,
}

impl PolyVector {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Validation("PolyVector must be nonempty".into()))?;
        let nvars = first.nvars();
        for c in &components {
            if c.nvars() != nvars {
                return Err(Error::VarCountMismatch {
                    left: c.nvars(),
                    right: nvars,
                });
            }
        }
        Ok(PolyVector { components })
    }

    pub fn nvars(&self) -> usize {
        self.components[0].nvars()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn map<F>(&self, f: F) -> Result<PolyVector>
    where
        F: Fn(&Polynomial) -> Result<Polynomial>,
    {
        let comps: Result<Vec<_>> = self.components.iter().map(f).collect();
        PolyVector::new(comps?)
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|p| p.eval_f64(point)).collect()
    }

    pub fn eval(&self, point: &[Rat]) -> Result<Vec<Rat>> {
        self.components.iter().map(|p| p.eval(point)).collect()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.components.iter().filter_map(|p| p.degree()).max()
    }
}

// --- JSON form -------------------------------------------------------------
//
// Canonical: {"nvars": 2, "terms": [{"exponents": [2, 0], "coeff": "1"},
//                                   {"exponents": [0, 1], "coeff": "-1/2"}]}
// Also accepted on input: {"vars": ["x", "y"], "expr": "x^2 - 1/2 y"}.

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponents: Vec<u32>,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    nvars: usize,
    terms: Vec<TermRepr>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolyInput {
    Sparse(PolyRepr),
    Expr { vars: Vec<String>, expr: String },
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRepr {
                    exponents: m.0.clone(),
                    coeff: c.to_string(),
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match PolyInput::deserialize(deserializer)? {
            PolyInput::Sparse(repr) => {
                let mut terms = Vec::with_capacity(repr.terms.len());
                for t in repr.terms {
                    let coeff = parse_rational(&t.coeff)
                        .map_err(|e| D::Error::custom(format!("bad coefficient: {e}")))?;
                    terms.push((t.exponents, coeff));
                }
                Polynomial::from_terms(repr.nvars, terms).map_err(D::Error::custom)
            }
            PolyInput::Expr { vars, expr } => {
                let names: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
                parse_expression(&expr, &names).map_err(D::Error::custom)
            }
        }
    }
}

impl Serialize for PolyVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.components.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolyVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let comps = Vec::<Polynomial>::deserialize(deserializer)?;
        PolyVector::new(comps).map_err(D::Error::custom)
    }
}

/// Parse "num/den" or "num" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {num:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {den:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rat::new(n, d))
}

// --- expression parser -------------------------------------------------------

/// Parse a human-readable expression (`+`, `-`, `*` or `·`, `^`, parentheses,
/// integer and `a/b` literals, named variables) into a polynomial over the
/// given variable list.
pub fn parse_expression(src: &str, vars: &[&str]) -> Result<Polynomial> {
    let mut parser = ExprParser {
        tokens: tokenize(src, vars)?,
        pos: 0,
        nvars: vars.len(),
    };
    let p = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse(format!(
            "unexpected trailing input at token {}",
            parser.pos
        )));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str, vars: &[&str]) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' | '−' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' | '·' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut text: String = chars[start..i].iter().collect();
                // rational literal a/b, only when immediately followed by digits
                if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    let dstart = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    text.push('/');
                    text.push_str(&chars[dstart..i].iter().collect::<String>());
                }
                out.push(Tok::Num(parse_rational(&text)?));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                let idx = vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))?;
                out.push(Tok::Var(idx));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct ExprParser {
    tokens: Vec<Tok>,
    pos: usize,
    nvars: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Plus => {
                    self.next();
                    acc = acc.checked_add(&self.term()?)?;
                }
                Tok::Minus => {
                    self.next();
                    acc = acc.checked_sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    acc = acc.checked_mul(&self.factor()?)?;
                }
                // implicit multiplication: 2x, x y, 3(x+1)
                Some(Tok::Var(_)) | Some(Tok::Num(_)) | Some(Tok::LParen) => {
                    acc = acc.checked_mul(&self.factor()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial> {
        let base = match self.next() {
            Some(Tok::Num(r)) => Polynomial::constant(self.nvars, r),
            Some(Tok::Var(i)) => Polynomial::var(self.nvars, i),
            Some(Tok::Minus) => {
                let inner = self.factor()?;
                return Ok(inner.neg());
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => inner,
                    _ => return Err(Error::Parse("missing closing parenthesis".into())),
                }
            }
            other => return Err(Error::Parse(format!("unexpected token {other:?}"))),
        };
        if let Some(Tok::Caret) = self.peek() {
            self.next();
            match self.next() {
                Some(Tok::Num(r)) if r.is_integer() && !r.is_negative() => {
                    let e = r
                        .to_integer()
                        .to_u32()
                        .ok_or_else(|| Error::Parse("exponent too large".into()))?;
                    return Ok(base.pow(e));
                }
                other => {
                    return Err(Error::Parse(format!(
                        "exponent must be a nonnegative integer, got {other:?}"
                    )))
                }
            }
        }
        Ok(base)
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Random sparse polynomial with small integer coefficients.
    pub fn random_poly(
        rng: &mut ChaCha8Rng,
        nvars: usize,
        max_deg: u32,
        nterms: usize,
    ) -> Polynomial {
        let mut p = Polynomial::zero(nvars);
        for _ in 0..nterms {
            let mut exps = vec![0u32; nvars];
            let deg = rng.gen_range(0..=max_deg);
            for _ in 0..deg {
                let v = rng.gen_range(0..nvars);
                exps[v] += 1;
            }
            let c = rat_int(rng.gen_range(-5i64..=5));
            p = p
                .checked_add(&Polynomial::from_terms(nvars, vec![(exps, c)]).unwrap())
                .unwrap();
        }
        p
    }

    /// Random nonzero polynomial.
    pub fn random_nonzero_poly(
        rng: &mut ChaCha8Rng,
        nvars: usize,
        max_deg: u32,
        nterms: usize,
    ) -> Polynomial {
        loop {
            let p = random_poly(rng, nvars, max_deg, nterms);
            if !p.is_zero() {
                return p;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xy() -> (Polynomial, Polynomial) {
        (Polynomial::var(2, 0), Polynomial::var(2, 1))
    }

    #[test]
    fn add_cancellation() {
        let (x, y) = xy();
        let sum = &(&x + &y) + &(&x - &y);
        assert_eq!(sum, x.scale(&rat_int(2)));
    }

    #[test]
    fn add_identity_and_inverse() {
        let (x, _) = xy();
        let x2 = x.pow(2);
        assert_eq!(x2.checked_add(&Polynomial::zero(2)).unwrap(), x2);
        assert!(x2.checked_add(&x2.neg()).unwrap().is_zero());
    }

    #[test]
    fn mul_difference_of_squares() {
        let (x, y) = xy();
        let prod = &(&x + &y) * &(&x - &y);
        let expect = &x.pow(2) - &y.pow(2);
        assert_eq!(prod, expect);
    }

    #[test]
    fn mul_identity() {
        let (x, y) = xy();
        let p = &(&x + &y) * &x;
        assert_eq!(p.checked_mul(&Polynomial::one(2)).unwrap(), p);
    }

    #[test]
    fn var_count_mismatch_rejected() {
        let p = Polynomial::var(2, 0);
        let q = Polynomial::var(3, 0);
        assert!(p.checked_add(&q).is_err());
        assert!(p.checked_mul(&q).is_err());
    }

    /// Independent convolution oracle for multiplication.
    fn mul_oracle(p: &Polynomial, q: &Polynomial) -> Polynomial {
        let mut acc = Polynomial::zero(p.nvars());
        for (mp, cp) in p.terms() {
            for (mq, cq) in q.terms() {
                let exps: Vec<u32> = mp.0.iter().zip(&mq.0).map(|(a, b)| a + b).collect();
                acc = acc
                    .checked_add(&Polynomial::from_terms(p.nvars(), vec![(exps, cp * cq)]).unwrap())
                    .unwrap();
            }
        }
        acc
    }

    #[test]
    fn degree_adds_on_products() {
        let mut rng = testutil::rng(17);
        let mut checked = 0;
        while checked < 50 {
            let p = testutil::random_nonzero_poly(&mut rng, 3, 3, 4);
            let q = testutil::random_nonzero_poly(&mut rng, 3, 3, 4);
            let prod = p.checked_mul(&q).unwrap();
            assert_eq!(prod, mul_oracle(&p, &q));
            // over a field there are no zero divisors, so degrees add
            assert_eq!(
                prod.degree(),
                Some(p.degree().unwrap() + q.degree().unwrap())
            );
            checked += 1;
        }
    }

    #[test]
    fn partial_basics() {
        let (x, y) = xy();
        let p = &x.pow(2) * &y; // x^2 y
        let dx = p.partial(0).unwrap();
        assert_eq!(dx, (&x * &y).scale(&rat_int(2)));
        let q = x.pow(2);
        assert!(q.partial(1).unwrap().is_zero());
        assert!(q.partial(5).is_err());
    }

    #[test]
    fn mixed_partials_commute() {
        let mut rng = testutil::rng(23);
        for _ in 0..50 {
            let p = testutil::random_poly(&mut rng, 3, 4, 6);
            let dxy = p.partial(0).unwrap().partial(1).unwrap();
            let dyx = p.partial(1).unwrap().partial(0).unwrap();
            assert_eq!(dxy, dyx);
        }
    }

    #[test]
    fn eval_exact() {
        let (x, y) = xy();
        let p = &x.pow(2) + &y;
        assert_eq!(p.eval(&[rat_int(2), rat_int(3)]).unwrap(), rat_int(7));
        assert_eq!(
            Polynomial::zero(2)
                .eval(&[rat_int(9), rat_int(-4)])
                .unwrap(),
            Rat::zero()
        );
        assert!(p.eval(&[rat_int(1)]).is_err());
    }

    #[test]
    fn eval_f64_matches_rational() {
        let mut rng = testutil::rng(31);
        for _ in 0..100 {
            let p = testutil::random_poly(&mut rng, 3, 4, 6);
            let pt_rat: Vec<Rat> = (0..3)
                .map(|_| rat(rand::Rng::gen_range(&mut rng, -100i64..=100), 100))
                .collect();
            let pt_f64: Vec<f64> = pt_rat.iter().map(|r| r.to_f64().unwrap()).collect();
            let exact = p.eval(&pt_rat).unwrap().to_f64().unwrap();
            let approx = p.eval_f64(&pt_f64).unwrap();
            let scale = exact.abs().max(1.0);
            assert!(
                (exact - approx).abs() <= 1e-12 * scale,
                "exact {exact} vs float {approx}"
            );
        }
    }

    #[test]
    fn degree_sentinel() {
        assert_eq!(Polynomial::zero(3).degree(), None);
        assert_eq!(Polynomial::one(3).degree(), Some(0));
    }

    #[test]
    fn remap_and_truncate() {
        let (x, y) = xy();
        let p = &x + &y.pow(2);
        let q = p.remap(4, &[2, 3]).unwrap();
        assert_eq!(q, (&Polynomial::var(4, 2) + &Polynomial::var(4, 3).pow(2)));
        let r = Polynomial::var(4, 0).truncate_vars(2).unwrap();
        assert_eq!(r, Polynomial::var(2, 0));
        assert!(Polynomial::var(4, 3).truncate_vars(2).is_err());
    }

    #[test]
    fn parser_roundtrip() {
        let p = parse_expression("x^2 - 2*x*y + y^2 + 1/2", &["x", "y"]).unwrap();
        let (x, y) = xy();
        let expect = &(&x - &y).pow(2) + &Polynomial::constant(2, rat(1, 2));
        assert_eq!(p, expect);
        let q = parse_expression("(t1 - t2)^3", &["t1", "t2"]).unwrap();
        assert_eq!(q.degree(), Some(3));
        assert!(parse_expression("z + 1", &["x"]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let p = parse_expression("3x^2y - 1/3", &["x", "y"]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn compose_linear_basics() {
        let (x, y) = xy();
        let p = &x.pow(2) + &(&x * &y);
        let id = crate::matrix::RatMat::identity(2);
        assert_eq!(p.compose_linear(&id, 0).unwrap(), p);
        let swap = crate::matrix::RatMat::from_i64(&[&[0, 1], &[1, 0]]);
        assert_eq!(
            Polynomial::var(2, 0).compose_linear(&swap, 0).unwrap(),
            Polynomial::var(2, 1)
        );
    }

    #[test]
    fn compose_linear_chains_multiply() {
        // substitution x ↦ Sx then x ↦ Tx composes to x ↦ (S·T)x
        let mut rng = testutil::rng(53);
        for _ in 0..20 {
            let p = testutil::random_poly(&mut rng, 3, 3, 5);
            let rand_mat = |rng: &mut rand_chacha::ChaCha8Rng| {
                crate::matrix::RatMat::new(
                    (0..3)
                        .map(|_| {
                            (0..3)
                                .map(|_| rat_int(rand::Rng::gen_range(rng, -3i64..=3)))
                                .collect()
                        })
                        .collect(),
                )
                .unwrap()
            };
            let s = rand_mat(&mut rng);
            let t = rand_mat(&mut rng);
            let chained = p
                .compose_linear(&s, 0)
                .unwrap()
                .compose_linear(&t, 0)
                .unwrap();
            let product = p.compose_linear(&s.mul(&t).unwrap(), 0).unwrap();
            assert_eq!(chained, product);
        }
    }

    /// Chain-rule oracle: `(T*∂)^α p` expanded as an explicit linear
    /// combination of plain partials, evaluated at a point; the composition
    /// route must produce the same value at the preimage point.
    #[test]
    fn compose_linear_realizes_directional_derivatives() {
        let mut rng = testutil::rng(67);
        for _ in 0..20 {
            let p = testutil::random_poly(&mut rng, 2, 3, 5);
            let t = loop {
                let cand = crate::matrix::RatMat::new(
                    (0..2)
                        .map(|_| {
                            (0..2)
                                .map(|_| rat_int(rand::Rng::gen_range(&mut rng, -3i64..=3)))
                                .collect()
                        })
                        .collect(),
                )
                .unwrap();
                if !num_traits::Zero::is_zero(&cand.det().unwrap()) {
                    break cand;
                }
            };
            let alpha: Vec<u32> = {
                let total = rand::Rng::gen_range(&mut rng, 1u32..=3);
                let first = rand::Rng::gen_range(&mut rng, 0..=total);
                vec![first, total - first]
            };
            let point: Vec<Rat> = (0..2)
                .map(|_| rat(rand::Rng::gen_range(&mut rng, -4i64..=4), 2))
                .collect();
            // composition route: ∂^α (p∘T) at y = T^{-1}·point
            let composed = p.compose_linear(&t, 0).unwrap();
            let deriv = composed.partial_multi(0, &alpha).unwrap();
            let y = t.inverse().unwrap().mul_vec(&point).unwrap();
            let via_compose = deriv.eval(&y).unwrap();
            // oracle: (T*∂)^α = Π_i (Σ_l T[l][i] ∂_l)^{α_i} expanded
            let mut expansion: std::collections::BTreeMap<Vec<u32>, Rat> =
                std::collections::BTreeMap::new();
            expansion.insert(vec![0, 0], Rat::from_integer(1.into()));
            for (i, &mult) in alpha.iter().enumerate() {
                for _ in 0..mult {
                    let mut next: std::collections::BTreeMap<Vec<u32>, Rat> =
                        std::collections::BTreeMap::new();
                    for (beta, w) in &expansion {
                        for l in 0..2 {
                            let c = t.get(l, i);
                            if num_traits::Zero::is_zero(c) {
                                continue;
                            }
                            let mut nb = beta.clone();
                            nb[l] += 1;
                            let entry = next
                                .entry(nb)
                                .or_insert_with(|| Rat::from_integer(0.into()));
                            *entry += w * c;
                        }
                    }
                    expansion = next;
                }
            }
            let mut via_oracle = Rat::from_integer(0.into());
            for (beta, w) in &expansion {
                let d = p.partial_multi(0, beta).unwrap();
                via_oracle += w * d.eval(&point).unwrap();
            }
            assert_eq!(via_compose, via_oracle);
        }
    }

    #[test]
    fn json_expression_form() {
        let p: Polynomial =
            serde_json::from_str(r#"{"vars": ["x", "y"], "expr": "(x - y)^2"}"#).unwrap();
        let (x, y) = xy();
        assert_eq!(p, (&x - &y).pow(2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(seed in 0u64..10_000) {
            let mut rng = testutil::rng(seed);
            let a = testutil::random_poly(&mut rng, 2, 3, 4);
            let b = testutil::random_poly(&mut rng, 2, 3, 4);
            let c = testutil::random_poly(&mut rng, 2, 3, 4);
            // associativity
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            // commutativity
            prop_assert_eq!(&a * &b, &b * &a);
            // distributivity
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn derivative_is_linear_and_leibniz(seed in 0u64..10_000) {
            let mut rng = testutil::rng(seed.wrapping_add(77));
            let a = testutil::random_poly(&mut rng, 2, 3, 4);
            let b = testutil::random_poly(&mut rng, 2, 3, 4);
            let sum_rule = (&a + &b).partial(0).unwrap();
            prop_assert_eq!(sum_rule, &a.partial(0).unwrap() + &b.partial(0).unwrap());
            let prod_rule = (&a * &b).partial(0).unwrap();
            let leibniz = &(&a.partial(0).unwrap() * &b) + &(&a * &b.partial(0).unwrap());
            prop_assert_eq!(prod_rule, leibniz);
        }
    }
}
