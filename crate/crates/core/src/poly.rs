//! Exact sparse multivariate polynomials over the rationals.
//!
//! Every polynomial lives over a [`VarSet`]: a formal grading variable
//! `alpha`, `N` base coordinates, their `N` conjugate momenta and a list of
//! named parameters. Parameters and `alpha` are ordinary commuting symbols;
//! the canonical bracket only differentiates with respect to the base and
//! momentum slots.
//!
//! Slot layout of an exponent vector:
//!
//! ```text
//! [ alpha | base_1 .. base_N | mom_1 .. mom_N | param_1 .. param_P ]
//! ```

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// A single symbol of a [`VarSet`]. Indices are zero based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Alpha,
    Base(usize),
    Momentum(usize),
    Param(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarSet {
    dim: usize,
    params: Vec<String>,
}

fn is_reserved_name(name: &str) -> bool {
    if name == "alpha" {
        return true;
    }
    ["y", "pi", "x", "xt"].iter().any(|prefix| {
        name.strip_prefix(prefix)
            .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
    })
}

impl VarSet {
    pub fn new(dim: usize, params: Vec<String>) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::InvalidVarSet("dimension must be at least 1".into()));
        }
        for (k, name) in params.iter().enumerate() {
            let valid = name
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidVarSet(format!(
                    "invalid parameter name `{name}`"
                )));
            }
            if is_reserved_name(name) {
                return Err(Error::InvalidVarSet(format!(
                    "parameter name `{name}` collides with a coordinate name"
                )));
            }
            if params[..k].contains(name) {
                return Err(Error::InvalidVarSet(format!(
                    "duplicate parameter `{name}`"
                )));
            }
        }
        Ok(Arc::new(VarSet { dim, params }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn num_slots(&self) -> usize {
        1 + 2 * self.dim + self.params.len()
    }

    pub fn slot(&self, var: Var) -> Result<usize> {
        let slot = match var {
            Var::Alpha => Some(0),
            Var::Base(i) if i < self.dim => Some(1 + i),
            Var::Momentum(i) if i < self.dim => Some(1 + self.dim + i),
            Var::Param(p) if p < self.params.len() => Some(1 + 2 * self.dim + p),
            _ => None,
        };
        slot.ok_or_else(|| Error::UnknownVariable(format!("{var:?}")))
    }

    pub fn var_at(&self, slot: usize) -> Var {
        if slot == 0 {
            Var::Alpha
        } else if slot <= self.dim {
            Var::Base(slot - 1)
        } else if slot <= 2 * self.dim {
            Var::Momentum(slot - 1 - self.dim)
        } else {
            Var::Param(slot - 1 - 2 * self.dim)
        }
    }

    fn base_slot(&self, i: usize) -> usize {
        assert!(i < self.dim, "base index {i} out of range");
        1 + i
    }

    fn momentum_slot(&self, i: usize) -> usize {
        assert!(i < self.dim, "momentum index {i} out of range");
        1 + self.dim + i
    }
}

/// How base and momentum slots are printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Naming {
    pub base: &'static str,
    pub momentum: &'static str,
}

impl Naming {
    /// Darboux coordinates: `y1`, `pi1`.
    pub const DARBOUX: Naming = Naming {
        base: "y",
        momentum: "pi",
    };
    /// Original and doubled coordinates: `x1`, `xt1`.
    pub const ORIGINAL: Naming = Naming {
        base: "x",
        momentum: "xt",
    };
}

impl Default for Naming {
    fn default() -> Self {
        Naming::DARBOUX
    }
}

/// Exponent vector over every slot of a [`VarSet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(SmallVec<[u16; 16]>);

impl Monomial {
    pub fn one(slots: usize) -> Self {
        Monomial(SmallVec::from_elem(0, slots))
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    pub fn exponent(&self, slot: usize) -> u16 {
        self.0[slot]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn alpha_degree(&self) -> u32 {
        self.0[0] as u32
    }

    pub fn set_exponent(&mut self, slot: usize, e: u16) {
        self.0[slot] = e;
    }

    fn product(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.checked_add(*b).expect("exponent overflow"))
                .collect(),
        )
    }

    /// Graded lexicographic comparison, larger monomials first.
    fn canonical_cmp(&self, other: &Monomial) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

/// A polynomial with exact rational coefficients. No zero coefficients are
/// ever stored.
#[derive(Clone)]
pub struct Poly {
    vars: Arc<VarSet>,
    terms: FxHashMap<Monomial, Rational>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        same_vars(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl Eq for Poly {}

fn same_vars(a: &Arc<VarSet>, b: &Arc<VarSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn accumulate(terms: &mut FxHashMap<Monomial, Rational>, mono: Monomial, coeff: Rational) {
    if coeff.is_zero() {
        return;
    }
    match terms.entry(mono) {
        std::collections::hash_map::Entry::Occupied(mut e) => {
            *e.get_mut() += coeff;
            if e.get().is_zero() {
                e.remove();
            }
        }
        std::collections::hash_map::Entry::Vacant(e) => {
            e.insert(coeff);
        }
    }
}

impl Poly {
    pub fn zero(vars: &Arc<VarSet>) -> Self {
        Poly {
            vars: vars.clone(),
            terms: FxHashMap::default(),
        }
    }

    pub fn constant(vars: &Arc<VarSet>, c: Rational) -> Self {
        let mut p = Poly::zero(vars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(vars.num_slots()), c);
        }
        p
    }

    pub fn one(vars: &Arc<VarSet>) -> Self {
        Poly::constant(vars, Rational::one())
    }

    pub fn var(vars: &Arc<VarSet>, var: Var) -> Result<Self> {
        let slot = vars.slot(var)?;
        Ok(Poly::slot_power(vars, slot, 1))
    }

    fn slot_power(vars: &Arc<VarSet>, slot: usize, exp: u16) -> Self {
        let mut mono = Monomial::one(vars.num_slots());
        mono.0[slot] = exp;
        let mut p = Poly::zero(vars);
        p.terms.insert(mono, Rational::one());
        p
    }

    pub fn alpha(vars: &Arc<VarSet>) -> Self {
        Poly::slot_power(vars, 0, 1)
    }

    pub fn alpha_pow(vars: &Arc<VarSet>, k: u16) -> Self {
        Poly::slot_power(vars, 0, k)
    }

    /// Base coordinate `i` (zero based).
    pub fn base(vars: &Arc<VarSet>, i: usize) -> Self {
        Poly::slot_power(vars, vars.base_slot(i), 1)
    }

    /// Momentum `i` (zero based).
    pub fn momentum(vars: &Arc<VarSet>, i: usize) -> Self {
        Poly::slot_power(vars, vars.momentum_slot(i), 1)
    }

    pub fn param(vars: &Arc<VarSet>, name: &str) -> Result<Self> {
        let idx = vars
            .param_index(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Poly::var(vars, Var::Param(idx))
    }

    pub fn from_terms<I>(vars: &Arc<VarSet>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<(Var, u16)>, Rational)>,
    {
        let mut p = Poly::zero(vars);
        for (powers, coeff) in terms {
            let mut mono = Monomial::one(vars.num_slots());
            for (var, e) in powers {
                let slot = vars.slot(var)?;
                mono.0[slot] += e;
            }
            accumulate(&mut p.terms, mono, coeff);
        }
        Ok(p)
    }

    /// Builds a polynomial from raw monomials, which must have one exponent
    /// per slot of `vars`.
    pub fn from_monomials<I>(vars: &Arc<VarSet>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Poly::zero(vars);
        for (mono, coeff) in terms {
            assert_eq!(mono.0.len(), vars.num_slots(), "monomial slot count");
            accumulate(&mut p.terms, mono, coeff);
        }
        p
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Terms in canonical (graded lexicographic, descending) order.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &Rational)> {
        let mut out: Vec<_> = self.terms.iter().collect();
        out.sort_by(|a, b| a.0.canonical_cmp(b.0));
        out
    }

    pub fn coefficient(&self, mono: &Monomial) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_else(Rational::zero)
    }

    /// The constant term.
    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one(self.vars.num_slots()))
    }

    fn check(&self, other: &Poly) -> Result<()> {
        if same_vars(&self.vars, &other.vars) {
            Ok(())
        } else {
            Err(Error::VarSetMismatch)
        }
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            accumulate(&mut out.terms, m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Poly) -> Result<Poly> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            accumulate(&mut out.terms, m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly> {
        self.mul_truncated(other, None)
    }

    /// Product with every monomial of `alpha` degree `>= bound` discarded.
    pub fn mul_truncated(&self, other: &Poly, bound: Option<u32>) -> Result<Poly> {
        self.check(other)?;
        let mut out = Poly::zero(&self.vars);
        for (ma, ca) in &self.terms {
            let da = ma.alpha_degree();
            if bound.is_some_and(|b| da >= b) {
                continue;
            }
            for (mb, cb) in &other.terms {
                if bound.is_some_and(|b| da + mb.alpha_degree() >= b) {
                    continue;
                }
                accumulate(&mut out.terms, ma.product(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.vars);
        }
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Poly {
        self.pow_truncated(exp, None)
    }

    pub fn pow_truncated(&self, exp: u32, bound: Option<u32>) -> Poly {
        let mut acc = Poly::one(&self.vars).truncate_opt(bound);
        for _ in 0..exp {
            acc = acc.mul_truncated(self, bound).expect("same variable set");
        }
        acc
    }

    /// Formal partial derivative.
    pub fn derivative(&self, var: Var) -> Result<Poly> {
        let slot = self.vars.slot(var)?;
        Ok(self.derivative_slot(slot))
    }

    fn derivative_slot(&self, slot: usize) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[slot];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[slot] = e - 1;
            out.terms
                .insert(dm, c * Rational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Derivative with respect to base coordinate `i`.
    pub fn d_base(&self, i: usize) -> Poly {
        self.derivative_slot(self.vars.base_slot(i))
    }

    /// Derivative with respect to momentum `i`.
    pub fn d_momentum(&self, i: usize) -> Poly {
        self.derivative_slot(self.vars.momentum_slot(i))
    }

    /// The canonical Poisson bracket `sum_k df/dy^k dg/dpi_k - df/dpi_k dg/dy^k`.
    pub fn canonical_bracket(&self, other: &Poly) -> Result<Poly> {
        self.bracket_truncated(other, None)
    }

    /// Canonical bracket with `alpha` degrees `>= bound` discarded.
    pub fn bracket_truncated(&self, other: &Poly, bound: Option<u32>) -> Result<Poly> {
        self.check(other)?;
        let mut out = Poly::zero(&self.vars);
        for k in 0..self.vars.dim {
            let fy = self.d_base(k);
            let gp = other.d_momentum(k);
            if !fy.is_zero() && !gp.is_zero() {
                out += &fy.mul_truncated(&gp, bound)?;
            }
            let fp = self.d_momentum(k);
            let gy = other.d_base(k);
            if !fp.is_zero() && !gy.is_zero() {
                out -= &fp.mul_truncated(&gy, bound)?;
            }
        }
        Ok(out)
    }

    /// Drops every monomial whose `alpha` exponent is `>= k`.
    pub fn truncate(&self, k: u32) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.alpha_degree() < k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    fn truncate_opt(self, bound: Option<u32>) -> Poly {
        match bound {
            Some(k) => self.truncate(k),
            None => self,
        }
    }

    /// Coefficient of `alpha^k`, returned as an `alpha`-free polynomial.
    pub fn alpha_coefficient(&self, k: u32) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for (m, c) in &self.terms {
            if m.alpha_degree() == k {
                let mut stripped = m.clone();
                stripped.0[0] = 0;
                out.terms.insert(stripped, c.clone());
            }
        }
        out
    }

    /// Multiplies by `alpha^k`.
    pub fn shift_alpha(&self, k: u16) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut shifted = m.clone();
                    shifted.0[0] += k;
                    (shifted, c.clone())
                })
                .collect(),
        }
    }

    /// Lowest `alpha` exponent present, `None` for the zero polynomial.
    pub fn min_alpha_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::alpha_degree).min()
    }

    pub fn max_alpha_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::alpha_degree).max()
    }

    fn slot_range_degree(m: &Monomial, range: std::ops::Range<usize>) -> u32 {
        m.0[range].iter().map(|&e| e as u32).sum()
    }

    fn momentum_range(&self) -> std::ops::Range<usize> {
        1 + self.vars.dim..1 + 2 * self.vars.dim
    }

    fn base_range(&self) -> std::ops::Range<usize> {
        1..1 + self.vars.dim
    }

    /// The common momentum degree of all terms, if the polynomial is
    /// homogeneous in the momenta. The zero polynomial is homogeneous of
    /// every degree and reports `Some(0)`.
    pub fn momentum_degree(&self) -> Option<u32> {
        let range = self.momentum_range();
        let mut degrees = self
            .terms
            .keys()
            .map(|m| Self::slot_range_degree(m, range.clone()));
        let first = match degrees.next() {
            Some(d) => d,
            None => return Some(0),
        };
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn depends_on_momenta(&self) -> bool {
        let range = self.momentum_range();
        self.terms
            .keys()
            .any(|m| Self::slot_range_degree(m, range.clone()) > 0)
    }

    pub fn depends_on_base(&self) -> bool {
        let range = self.base_range();
        self.terms
            .keys()
            .any(|m| Self::slot_range_degree(m, range.clone()) > 0)
    }

    pub fn depends_on_alpha(&self) -> bool {
        self.terms.keys().any(|m| m.0[0] > 0)
    }

    /// Simultaneous substitution followed by expansion.
    pub fn substitute(&self, assignment: &[(Var, Poly)]) -> Result<Poly> {
        let mut sub = Substitution::new(&self.vars, None);
        for (var, image) in assignment {
            sub.set(*var, image.clone())?;
        }
        Ok(sub.apply(self))
    }

    /// Canonical rendering with Darboux names (`y1`, `pi1`).
    pub fn render(&self) -> String {
        self.render_with(Naming::DARBOUX)
    }

    pub fn render_with(&self, naming: Naming) -> String {
        let terms = self.sorted_terms();
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (mono, coeff)) in terms.into_iter().enumerate() {
            let negative = coeff.is_negative();
            if idx == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let magnitude = coeff.abs();
            let factors = self.render_factors(mono, naming);
            let coeff_str = if magnitude.denom().is_one() {
                magnitude.numer().to_string()
            } else {
                format!("{}/{}", magnitude.numer(), magnitude.denom())
            };
            match (magnitude.is_one(), factors.is_empty()) {
                (_, true) => out.push_str(&coeff_str),
                (true, false) => out.push_str(&factors.join("*")),
                (false, false) => {
                    out.push_str(&coeff_str);
                    out.push('*');
                    out.push_str(&factors.join("*"));
                }
            }
        }
        out
    }

    /// Factor order inside a term: parameters, alpha, base, momenta.
    fn render_factors(&self, mono: &Monomial, naming: Naming) -> Vec<String> {
        let n = self.vars.dim;
        let power = |name: String, e: u16| {
            if e == 1 {
                name
            } else {
                format!("{name}^{e}")
            }
        };
        let mut out = Vec::new();
        for (p, name) in self.vars.params.iter().enumerate() {
            let e = mono.0[1 + 2 * n + p];
            if e > 0 {
                out.push(power(name.clone(), e));
            }
        }
        if mono.0[0] > 0 {
            out.push(power("alpha".into(), mono.0[0]));
        }
        for i in 0..n {
            let e = mono.0[1 + i];
            if e > 0 {
                out.push(power(format!("{}{}", naming.base, i + 1), e));
            }
        }
        for i in 0..n {
            let e = mono.0[1 + n + i];
            if e > 0 {
                out.push(power(format!("{}{}", naming.momentum, i + 1), e));
            }
        }
        out
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({})", self.render())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// Operator impls panic on mismatched variable sets; use the `try_*` methods
// where that can legitimately happen.

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        self.check(rhs).expect("variable set mismatch");
        for (m, c) in &rhs.terms {
            accumulate(&mut self.terms, m.clone(), c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        self.check(rhs).expect("variable set mismatch");
        for (m, c) in &rhs.terms {
            accumulate(&mut self.terms, m.clone(), -c.clone());
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.try_add(rhs).expect("variable set mismatch")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.try_sub(rhs).expect("variable set mismatch")
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.try_mul(rhs).expect("variable set mismatch")
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += &rhs;
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: Poly) -> Poly {
        self -= &rhs;
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

/// A reusable simultaneous substitution. Powers of the images are cached, so
/// applying the same substitution to many polynomials is cheap.
#[derive(Clone)]
pub struct Substitution {
    vars: Arc<VarSet>,
    images: Vec<Option<Poly>>,
    bound: Option<u32>,
    powers: HashMap<(usize, u16), Poly>,
}

impl Substitution {
    /// `bound` truncates every intermediate product at that `alpha` degree.
    pub fn new(vars: &Arc<VarSet>, bound: Option<u32>) -> Self {
        Substitution {
            vars: vars.clone(),
            images: vec![None; vars.num_slots()],
            bound,
            powers: HashMap::new(),
        }
    }

    pub fn set(&mut self, var: Var, image: Poly) -> Result<()> {
        let slot = self.vars.slot(var)?;
        if !same_vars(&self.vars, &image.vars) {
            return Err(Error::VarSetMismatch);
        }
        self.images[slot] = Some(image);
        self.powers.retain(|(s, _), _| *s != slot);
        Ok(())
    }

    fn power(&mut self, slot: usize, e: u16) -> Poly {
        if let Some(p) = self.powers.get(&(slot, e)) {
            return p.clone();
        }
        let image = self.images[slot].clone().expect("substituted slot");
        let p = if e == 1 {
            image.truncate_opt(self.bound)
        } else {
            let half = self.power(slot, e / 2);
            let sq = half.mul_truncated(&half, self.bound).expect("same vars");
            if e % 2 == 1 {
                sq.mul_truncated(&image, self.bound).expect("same vars")
            } else {
                sq
            }
        };
        self.powers.insert((slot, e), p.clone());
        p
    }

    pub fn apply(&mut self, f: &Poly) -> Poly {
        assert!(same_vars(&self.vars, &f.vars), "variable set mismatch");
        let slots = self.vars.num_slots();
        let mut out = Poly::zero(&self.vars);
        for (mono, coeff) in &f.terms {
            let mut kept = Monomial::one(slots);
            let mut factors = Vec::new();
            for (slot, &e) in mono.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if self.images[slot].is_some() {
                    factors.push((slot, e));
                } else {
                    kept.0[slot] = e;
                }
            }
            if self.bound.is_some_and(|b| kept.alpha_degree() >= b) {
                continue;
            }
            let mut term = Poly::zero(&self.vars);
            term.terms.insert(kept, coeff.clone());
            for (slot, e) in factors {
                let p = self.power(slot, e);
                term = term.mul_truncated(&p, self.bound).expect("same vars");
                if term.is_zero() {
                    break;
                }
            }
            out += &term;
        }
        out
    }
}
