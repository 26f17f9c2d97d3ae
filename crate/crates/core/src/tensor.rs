//! Coefficient tensors with a symmetric tail.
//!
//! A [`SymTensor`] carries `lead_arity` leading indices (optionally totally
//! antisymmetric) followed by `tail_arity` indices that are always symmetric.
//! Only one representative per symmetry class is stored: the tail is kept
//! sorted ascending and, for antisymmetric leads, the lead tuple is strictly
//! increasing with the permutation sign applied on access.
//!
//! A homogeneous momentum polynomial `sum T^{L;j1..jn} pi_j1 .. pi_jn` stores
//! the monomial with multiplicities `(m_1, .., m_N)` with coefficient
//! `T * n!/(m_1! .. m_N!)`; [`extract_tensor`] divides that count back out.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{int, rat, Monomial, Naming, Poly, Rational, Var, VarSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeadSymmetry {
    None,
    Antisymmetric,
}

type Key = (Vec<usize>, Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    vars: Arc<VarSet>,
    lead_arity: usize,
    tail_arity: usize,
    symmetry: LeadSymmetry,
    entries: BTreeMap<Key, Poly>,
}

/// One stored component, as emitted in reports. Indices are one based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub lead: Vec<usize>,
    pub tail: Vec<usize>,
    pub poly: String,
}

/// All non-decreasing tuples of length `len` over `0..dim`, in lexicographic order.
pub fn sorted_tuples(dim: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(dim: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(dim, len, i, cur, out);
            cur.pop();
        }
    }
    rec(dim, len, 0, &mut cur, &mut out);
    out
}

fn increasing_tuples(dim: usize, len: usize) -> Vec<Vec<usize>> {
    sorted_tuples(dim, len)
        .into_iter()
        .filter(|t| t.windows(2).all(|w| w[0] < w[1]))
        .collect()
}

fn all_tuples(dim: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..dim).map(move |i| {
                    let mut n = t.clone();
                    n.push(i);
                    n
                })
            })
            .collect();
    }
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `n!/(m_1! .. m_N!)` for the multiplicities of a sorted tail.
pub fn multinomial_count(tail: &[usize]) -> BigInt {
    let mut count = factorial(tail.len());
    let mut run = 1;
    for w in 0..tail.len() {
        if w + 1 < tail.len() && tail[w + 1] == tail[w] {
            run += 1;
        } else {
            count /= factorial(run);
            run = 1;
        }
    }
    count
}

/// Sorts `lead` in place and returns the permutation sign, or `None` when an
/// index repeats.
fn sort_with_sign(lead: &mut [usize]) -> Option<i32> {
    let mut sign = 1;
    for i in 1..lead.len() {
        let mut j = i;
        while j > 0 && lead[j - 1] > lead[j] {
            lead.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if lead.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl SymTensor {
    pub fn zeros(
        vars: &Arc<VarSet>,
        lead_arity: usize,
        tail_arity: usize,
        symmetry: LeadSymmetry,
    ) -> Self {
        SymTensor {
            vars: vars.clone(),
            lead_arity,
            tail_arity,
            symmetry,
            entries: BTreeMap::new(),
        }
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.dim()
    }

    pub fn lead_arity(&self) -> usize {
        self.lead_arity
    }

    pub fn tail_arity(&self) -> usize {
        self.tail_arity
    }

    pub fn symmetry(&self) -> LeadSymmetry {
        self.symmetry
    }

    fn canonical(&self, lead: &[usize], tail: &[usize]) -> Option<(i32, Key)> {
        assert_eq!(lead.len(), self.lead_arity, "lead arity mismatch");
        assert_eq!(tail.len(), self.tail_arity, "tail arity mismatch");
        let dim = self.dim();
        assert!(
            lead.iter().chain(tail).all(|&i| i < dim),
            "tensor index out of range"
        );
        let mut lead = lead.to_vec();
        let sign = match self.symmetry {
            LeadSymmetry::None => 1,
            LeadSymmetry::Antisymmetric => sort_with_sign(&mut lead)?,
        };
        let mut tail = tail.to_vec();
        tail.sort_unstable();
        Some((sign, (lead, tail)))
    }

    /// Component with arbitrary index order; symmetry signs are applied.
    pub fn get(&self, lead: &[usize], tail: &[usize]) -> Poly {
        match self.canonical(lead, tail) {
            None => Poly::zero(&self.vars),
            Some((sign, key)) => match self.entries.get(&key) {
                None => Poly::zero(&self.vars),
                Some(p) if sign > 0 => p.clone(),
                Some(p) => -p,
            },
        }
    }

    /// Component indexed by a combined index list `lead ++ tail`.
    pub fn get_flat(&self, indices: &[usize]) -> Poly {
        let (lead, tail) = indices.split_at(self.lead_arity);
        self.get(lead, tail)
    }

    /// Sets the component so that `get(lead, tail) == value`. Setting a
    /// nonzero value on a repeated antisymmetric lead is an error.
    pub fn set(&mut self, lead: &[usize], tail: &[usize], value: Poly) -> Result<()> {
        if value.depends_on_momenta() || value.depends_on_alpha() {
            return Err(Error::Degree(
                "tensor entries must not depend on momenta or alpha".into(),
            ));
        }
        match self.canonical(lead, tail) {
            None if value.is_zero() => Ok(()),
            None => Err(Error::Precondition(
                "nonzero entry on a repeated antisymmetric index".into(),
            )),
            Some((sign, key)) => {
                let value = if sign > 0 { value } else { -value };
                if value.is_zero() {
                    self.entries.remove(&key);
                } else {
                    self.entries.insert(key, value);
                }
                Ok(())
            }
        }
    }

    fn add_canonical(&mut self, key: Key, value: Poly) {
        if value.is_zero() {
            return;
        }
        let merged = match self.entries.remove(&key) {
            Some(old) => &old + &value,
            None => value,
        };
        if !merged.is_zero() {
            self.entries.insert(key, merged);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stored (canonical, nonzero) components in lexicographic index order.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], &[usize], &Poly)> {
        self.entries
            .iter()
            .map(|((l, t), p)| (l.as_slice(), t.as_slice(), p))
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn num_terms(&self) -> usize {
        self.entries.values().map(Poly::num_terms).sum()
    }

    /// Canonical lead tuples: all tuples, or strictly increasing ones.
    pub fn lead_tuples(&self) -> Vec<Vec<usize>> {
        match self.symmetry {
            LeadSymmetry::None => all_tuples(self.dim(), self.lead_arity),
            LeadSymmetry::Antisymmetric => increasing_tuples(self.dim(), self.lead_arity),
        }
    }

    pub fn tail_tuples(&self) -> Vec<Vec<usize>> {
        sorted_tuples(self.dim(), self.tail_arity)
    }

    pub fn scale(&self, c: &Rational) -> SymTensor {
        let mut out = SymTensor::zeros(&self.vars, self.lead_arity, self.tail_arity, self.symmetry);
        if c.is_zero() {
            return out;
        }
        for (k, p) in &self.entries {
            out.entries.insert(k.clone(), p.scale(c));
        }
        out
    }

    fn check_shape(&self, other: &SymTensor) -> Result<()> {
        if self.lead_arity != other.lead_arity
            || self.tail_arity != other.tail_arity
            || self.symmetry != other.symmetry
            || self.vars != other.vars
        {
            return Err(Error::Precondition("tensor shapes differ".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &SymTensor) -> Result<SymTensor> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (k, p) in &other.entries {
            out.add_canonical(k.clone(), p.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &SymTensor) -> Result<SymTensor> {
        self.try_add(&other.scale(&-Rational::one()))
    }

    /// Contracts the tail with momenta and multiplies by `alpha^n` for one
    /// lead tuple (any order; signs applied).
    pub fn assemble_lead(&self, lead: &[usize]) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for tail in self.tail_tuples() {
            let coeff = self.get(lead, &tail);
            if coeff.is_zero() {
                continue;
            }
            let count = Rational::from_integer(multinomial_count(&tail));
            out += &(&coeff * &momentum_monomial(&self.vars, &tail)).scale(&count);
        }
        out.shift_alpha(self.tail_arity as u16)
    }

    /// `alpha^n T^{L;j1..jn} pi_j1 .. pi_jn` for every canonical lead tuple.
    pub fn assemble(&self) -> BTreeMap<Vec<usize>, Poly> {
        let mut out: BTreeMap<Vec<usize>, Poly> = self
            .lead_tuples()
            .into_iter()
            .map(|l| (l, Poly::zero(&self.vars)))
            .collect();
        for ((lead, tail), coeff) in &self.entries {
            let count = Rational::from_integer(multinomial_count(tail));
            let term = (coeff * &momentum_monomial(&self.vars, tail)).scale(&count);
            *out.get_mut(lead).expect("canonical lead") += &term;
        }
        for p in out.values_mut() {
            *p = p.shift_alpha(self.tail_arity as u16);
        }
        out
    }

    /// Components as report entries (one-based indices, canonical strings).
    pub fn to_entries(&self) -> Vec<TensorEntry> {
        self.to_entries_with(Naming::DARBOUX)
    }

    pub fn to_entries_with(&self, naming: Naming) -> Vec<TensorEntry> {
        self.entries
            .iter()
            .map(|((lead, tail), p)| TensorEntry {
                lead: lead.iter().map(|i| i + 1).collect(),
                tail: tail.iter().map(|i| i + 1).collect(),
                poly: p.render_with(naming),
            })
            .collect()
    }
}

fn momentum_monomial(vars: &Arc<VarSet>, tail: &[usize]) -> Poly {
    let mut p = Poly::one(vars);
    for &j in tail {
        p = &p * &Poly::momentum(vars, j);
    }
    p
}

/// Reads off the tail-symmetric tensor of a family of polynomials that are
/// homogeneous of momentum degree `n` and free of `alpha`.
///
/// `components` maps canonical lead tuples to polynomials. The coefficient of
/// the momentum monomial with multiplicities `m` is divided by the multinomial
/// count `n!/(m_1! .. m_N!)`.
pub fn extract_tensor<I>(
    vars: &Arc<VarSet>,
    components: I,
    lead_arity: usize,
    symmetry: LeadSymmetry,
    n: usize,
) -> Result<SymTensor>
where
    I: IntoIterator<Item = (Vec<usize>, Poly)>,
{
    let dim = vars.dim();
    let mom_slot = |j: usize| vars.slot(Var::Momentum(j)).expect("momentum slot");
    let mut out = SymTensor::zeros(vars, lead_arity, n, symmetry);
    for (lead, poly) in components {
        if poly.depends_on_alpha() {
            return Err(Error::Degree(format!(
                "component {lead:?} still depends on alpha"
            )));
        }
        let mut per_tail: BTreeMap<Vec<usize>, Vec<(Monomial, Rational)>> = BTreeMap::new();
        for (mono, coeff) in poly.terms() {
            let mut tail = Vec::new();
            let mut stripped = mono.clone();
            for j in 0..dim {
                let e = mono.exponent(mom_slot(j));
                tail.extend(std::iter::repeat_n(j, e as usize));
            }
            if tail.len() != n {
                return Err(Error::Degree(format!(
                    "component {lead:?} has a term of momentum degree {} (expected {n})",
                    tail.len()
                )));
            }
            strip_momenta(&mut stripped, vars);
            let count = Rational::from_integer(multinomial_count(&tail));
            per_tail
                .entry(tail)
                .or_default()
                .push((stripped, coeff / count));
        }
        for (tail, terms) in per_tail {
            let value = Poly::from_monomials(vars, terms);
            let (sign, key) = out.canonical(&lead, &tail).ok_or_else(|| {
                Error::Precondition(format!("repeated antisymmetric lead {lead:?}"))
            })?;
            let value = if sign > 0 { value } else { -value };
            out.add_canonical(key, value);
        }
    }
    Ok(out)
}

fn strip_momenta(mono: &mut Monomial, vars: &Arc<VarSet>) {
    for j in 0..vars.dim() {
        let slot = vars.slot(Var::Momentum(j)).expect("momentum slot");
        mono.set_exponent(slot, 0);
    }
}

/// Sign attached to a normalization constant fixed by back-substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalizationSign {
    Negative,
    Positive,
}

impl NormalizationSign {
    pub fn as_i8(self) -> i8 {
        match self {
            NormalizationSign::Negative => -1,
            NormalizationSign::Positive => 1,
        }
    }
}

/// `Gamma^{i j_1..j_{n+1}}` from `G^{ij j_1..j_n}` with the normalization
/// fixed by back-substitution; see [`solve_gamma`].
pub fn gamma_from_g(g: &SymTensor) -> Result<SymTensor> {
    solve_gamma(g).map(|(gamma, _)| gamma)
}

/// Solves `(n+1) (Gamma^{j;i L} - Gamma^{i;j L}) = G^{ij;L}` for a
/// tail-symmetric `Gamma` with vanishing totally symmetric part.
///
/// The candidate is `c * sum_k G^{i j_k; J\j_k}` with `|c| = 1/((n+1)(n+2))`;
/// the sign of `c` is whichever satisfies the equation exactly.
pub fn solve_gamma(g: &SymTensor) -> Result<(SymTensor, NormalizationSign)> {
    if g.lead_arity != 2 || g.symmetry != LeadSymmetry::Antisymmetric {
        return Err(Error::Precondition(
            "G must have an antisymmetric lead pair".into(),
        ));
    }
    let n = g.tail_arity;
    let defect = cyclicity_defect_g(g);
    if !defect.is_zero() {
        return Err(Error::consistency_with(
            n + 1,
            "cyclicity of G does not hold",
            defect,
        ));
    }
    let vars = g.vars.clone();
    let mut raw = SymTensor::zeros(&vars, 1, n + 1, LeadSymmetry::None);
    for i in 0..g.dim() {
        for tail in sorted_tuples(g.dim(), n + 1) {
            let mut sum = Poly::zero(&vars);
            for k in 0..tail.len() {
                let mut rest = tail.clone();
                let jk = rest.remove(k);
                sum += &g.get(&[i, jk], &rest);
            }
            raw.add_canonical((vec![i], tail), sum);
        }
    }
    let magnitude = rat(1, ((n + 1) * (n + 2)) as i64);
    for sign in [NormalizationSign::Negative, NormalizationSign::Positive] {
        let c = &magnitude * int(sign.as_i8() as i64);
        let gamma = raw.scale(&c);
        if gamma_residual(&gamma, g).is_zero() {
            return Ok((gamma, sign));
        }
    }
    Err(Error::consistency_with(
        n + 1,
        "no normalization of the symmetrized G solves the Gamma equation",
        gamma_residual(&raw.scale(&-magnitude), g),
    ))
}

/// `(n+1)(Gamma^{j;iL} - Gamma^{i;jL}) - G^{ij;L}`, zero when `gamma` solves
/// the equation for `g`.
pub fn gamma_residual(gamma: &SymTensor, g: &SymTensor) -> SymTensor {
    let n = g.tail_arity;
    let vars = g.vars.clone();
    let factor = int((n + 1) as i64);
    let mut out = SymTensor::zeros(&vars, 2, n, LeadSymmetry::Antisymmetric);
    for lead in increasing_tuples(g.dim(), 2) {
        let (i, j) = (lead[0], lead[1]);
        for tail in sorted_tuples(g.dim(), n) {
            let mut with_i = tail.clone();
            with_i.push(i);
            let mut with_j = tail.clone();
            with_j.push(j);
            let lhs = (&gamma.get(&[j], &with_i) - &gamma.get(&[i], &with_j)).scale(&factor);
            let r = &lhs - &g.get(&[i, j], &tail);
            out.add_canonical((lead.clone(), tail), r);
        }
    }
    out
}

/// `G^{ij j1 L} + G^{j1 i j L} + G^{j j1 i L}` as a totally antisymmetric
/// rank-3 lead over the remaining tail `L`. Vanishes identically exactly when
/// the cyclicity relation holds.
pub fn cyclicity_defect_g(g: &SymTensor) -> SymTensor {
    let vars = g.vars.clone();
    let n = g.tail_arity;
    if n == 0 {
        return SymTensor::zeros(&vars, 3, 0, LeadSymmetry::Antisymmetric);
    }
    let mut out = SymTensor::zeros(&vars, 3, n - 1, LeadSymmetry::Antisymmetric);
    for lead in increasing_tuples(g.dim(), 3) {
        let (i, j, j1) = (lead[0], lead[1], lead[2]);
        for rest in sorted_tuples(g.dim(), n - 1) {
            let with = |k: usize| {
                let mut t = rest.clone();
                t.push(k);
                t
            };
            let mut d = g.get(&[i, j], &with(j1));
            d += &g.get(&[j1, i], &with(j));
            d += &g.get(&[j, j1], &with(i));
            out.add_canonical((lead.clone(), rest), d);
        }
    }
    out
}

/// `F^{ijk;lL} - F^{lij;kL} + F^{kli;jL} - F^{jkl;iL}` for a lead-antisymmetric
/// triple `F`; totally antisymmetric in `ijkl`.
pub fn four_term_defect_f(f: &SymTensor) -> SymTensor {
    let vars = f.vars.clone();
    let m = f.tail_arity;
    if m == 0 {
        return SymTensor::zeros(&vars, 4, 0, LeadSymmetry::Antisymmetric);
    }
    let mut out = SymTensor::zeros(&vars, 4, m - 1, LeadSymmetry::Antisymmetric);
    for lead in increasing_tuples(f.dim(), 4) {
        let (i, j, k, l) = (lead[0], lead[1], lead[2], lead[3]);
        for rest in sorted_tuples(f.dim(), m - 1) {
            let with = |x: usize| {
                let mut t = rest.clone();
                t.push(x);
                t
            };
            let mut d = f.get(&[i, j, k], &with(l));
            d -= &f.get(&[l, i, j], &with(k));
            d += &f.get(&[k, l, i], &with(j));
            d -= &f.get(&[j, k, l], &with(i));
            out.add_canonical((lead.clone(), rest), d);
        }
    }
    out
}

/// Averages `t` over every permutation of all its indices. The result has
/// no lead and a fully symmetric tail.
pub fn total_symmetrization(t: &SymTensor) -> SymTensor {
    partial_symmetrization(t, 0)
}

/// Keeps the first `keep` lead indices in place and averages over every
/// permutation of the remaining lead and tail indices.
pub fn partial_symmetrization(t: &SymTensor, keep: usize) -> SymTensor {
    assert!(keep <= t.lead_arity);
    let vars = t.vars.clone();
    let dim = t.dim();
    let moved = t.lead_arity - keep;
    let size = moved + t.tail_arity;
    let mut out = SymTensor::zeros(&vars, keep, size, LeadSymmetry::None);
    let selections = ordered_selections(size, moved);
    let norm = Rational::new(BigInt::one(), BigInt::from(selections.len()));
    for kept in all_tuples(dim, keep) {
        for multiset in sorted_tuples(dim, size) {
            let mut acc = Poly::zero(&vars);
            for sel in &selections {
                let mut lead = kept.clone();
                lead.extend(sel.iter().map(|&p| multiset[p]));
                let tail: Vec<usize> = (0..size)
                    .filter(|p| !sel.contains(p))
                    .map(|p| multiset[p])
                    .collect();
                acc += &t.get(&lead, &tail);
            }
            out.add_canonical((kept.clone(), multiset), acc.scale(&norm));
        }
    }
    out
}

/// Ordered selections of `k` distinct positions out of `0..n`.
fn ordered_selections(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|s: Vec<usize>| {
                (0..n)
                    .filter(|p| !s.contains(p))
                    .map(|p| {
                        let mut t = s.clone();
                        t.push(p);
                        t
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Totally antisymmetric rank-3 tensor with polynomial entries, such as a
/// jacobiator.
#[derive(Debug, Clone, PartialEq)]
pub struct Trivector(SymTensor);

impl Trivector {
    pub fn zeros(vars: &Arc<VarSet>) -> Self {
        Trivector(SymTensor::zeros(vars, 3, 0, LeadSymmetry::Antisymmetric))
    }

    pub fn from_tensor(t: SymTensor) -> Result<Self> {
        if t.lead_arity != 3 || t.tail_arity != 0 || t.symmetry != LeadSymmetry::Antisymmetric {
            return Err(Error::Precondition(
                "a trivector is an antisymmetric rank-3 lead with no tail".into(),
            ));
        }
        Ok(Trivector(t))
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Poly {
        self.0.get(&[i, j, k], &[])
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: Poly) -> Result<()> {
        self.0.set(&[i, j, k], &[], value)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn tensor(&self) -> &SymTensor {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}
