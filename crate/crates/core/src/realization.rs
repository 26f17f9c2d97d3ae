//! Order-by-order symplectic realization of a (quasi-)Poisson bivector.
//!
//! Conventions: Darboux coordinates `(y, pi)` live in the base and momentum
//! slots of the [`VarSet`]. The generalized Bopp shift is
//! `x^i = y^i + sum_m alpha^m Gamma^{i;j1..jm}(y) pi_j1 .. pi_jm` and the
//! extended bracket table is written in the doubled coordinates `(x, xt)` with
//! `xt = pi`, reusing the base slots for `x` and the momentum slots for `xt`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{int, rat, Poly, Substitution, Var, VarSet};
use crate::tensor::{
    cyclicity_defect_g, extract_tensor, four_term_defect_f, partial_symmetrization, solve_gamma,
    sorted_tuples, total_symmetrization, LeadSymmetry, NormalizationSign, SymTensor, Trivector,
};

/// Antisymmetric matrix `Theta^{ij}(x)` of polynomials in the base variables
/// and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Bivector {
    vars: Arc<VarSet>,
    matrix: Vec<Vec<Poly>>,
}

impl Bivector {
    pub fn new(vars: &Arc<VarSet>, matrix: Vec<Vec<Poly>>) -> Result<Self> {
        let n = vars.dim();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidBivector(format!("expected a {n}x{n} matrix")));
        }
        for (i, row) in matrix.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if p.vars() != vars {
                    return Err(Error::VarSetMismatch);
                }
                if p.depends_on_momenta() || p.depends_on_alpha() {
                    return Err(Error::InvalidBivector(format!(
                        "entry ({}, {}) must depend on base variables and parameters only",
                        i + 1,
                        j + 1
                    )));
                }
                if *p != -&matrix[j][i] {
                    return Err(Error::InvalidBivector(format!(
                        "entries ({}, {}) and ({}, {}) are not antisymmetric",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Bivector {
            vars: vars.clone(),
            matrix,
        })
    }

    /// Builds the matrix from `(i, j, Theta^{ij})` triples (zero based); the
    /// transposed entry is filled with the negation.
    pub fn from_entries<I>(vars: &Arc<VarSet>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Poly)>,
    {
        let n = vars.dim();
        let mut matrix = vec![vec![Poly::zero(vars); n]; n];
        let mut seen = vec![vec![false; n]; n];
        for (i, j, p) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidBivector(format!(
                    "index ({}, {}) out of range for dimension {n}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::InvalidBivector(format!(
                    "diagonal entry ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            if seen[i][j] {
                return Err(Error::InvalidBivector(format!(
                    "pair ({}, {}) given twice",
                    i.min(j) + 1,
                    i.max(j) + 1
                )));
            }
            seen[i][j] = true;
            seen[j][i] = true;
            matrix[j][i] = -&p;
            matrix[i][j] = p;
        }
        Bivector::new(vars, matrix)
    }

    pub fn zero(vars: &Arc<VarSet>) -> Self {
        let n = vars.dim();
        Bivector {
            vars: vars.clone(),
            matrix: vec![vec![Poly::zero(vars); n]; n],
        }
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.matrix[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Poly>] {
        &self.matrix
    }

    /// As a lead-antisymmetric tensor with empty tail.
    pub fn to_tensor(&self) -> SymTensor {
        let mut t = SymTensor::zeros(&self.vars, 2, 0, LeadSymmetry::Antisymmetric);
        for i in 0..self.dim() {
            for j in i + 1..self.dim() {
                t.set(&[i, j], &[], self.matrix[i][j].clone())
                    .expect("valid bivector entry");
            }
        }
        t
    }

    pub fn jacobiator(&self) -> Trivector {
        jacobiator(self)
    }

    pub fn is_poisson(&self) -> bool {
        self.jacobiator().is_zero()
    }
}

/// `Pi^{ijk} = (1/3)(Theta^{il} d_l Theta^{jk} + Theta^{kl} d_l Theta^{ij} + Theta^{jl} d_l Theta^{ki})`.
pub fn jacobiator(theta: &Bivector) -> Trivector {
    let n = theta.dim();
    let vars = theta.vars();
    let flow = |a: usize, b: usize, c: usize| {
        let mut acc = Poly::zero(vars);
        for l in 0..n {
            let t = theta.get(a, l);
            if !t.is_zero() {
                acc += &(t * &theta.get(b, c).d_base(l));
            }
        }
        acc
    };
    let third = rat(1, 3);
    let mut out = Trivector::zeros(vars);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = (&(&flow(i, j, k) + &flow(k, i, j)) + &flow(j, k, i)).scale(&third);
                out.set(i, j, k, v)
                    .expect("jacobiator entries are momentum free");
            }
        }
    }
    out
}

fn require_base_only(f: &Poly, what: &str) -> Result<()> {
    if f.depends_on_momenta() {
        return Err(Error::Precondition(format!(
            "{what} must not depend on momenta"
        )));
    }
    Ok(())
}

/// `{f, g}_Q = alpha Theta^{ij} d_i f d_j g` for functions of the base variables.
pub fn quasi_bracket(f: &Poly, g: &Poly, theta: &Bivector) -> Result<Poly> {
    require_base_only(f, "first argument")?;
    require_base_only(g, "second argument")?;
    if f.vars() != theta.vars() || g.vars() != theta.vars() {
        return Err(Error::VarSetMismatch);
    }
    let n = theta.dim();
    let df: Vec<Poly> = (0..n).map(|i| f.d_base(i)).collect();
    let dg: Vec<Poly> = (0..n).map(|i| g.d_base(i)).collect();
    let mut acc = Poly::zero(theta.vars());
    for i in 0..n {
        if df[i].is_zero() {
            continue;
        }
        for j in 0..n {
            let t = theta.get(i, j);
            if t.is_zero() || dg[j].is_zero() {
                continue;
            }
            acc += &(&(t * &df[i]) * &dg[j]);
        }
    }
    Ok(acc.shift_alpha(1))
}

/// `(1/3)({f,{g,h}} + {h,{f,g}} + {g,{h,f}})` with the quasi bracket.
pub fn three_bracket(f: &Poly, g: &Poly, h: &Poly, theta: &Bivector) -> Result<Poly> {
    let b = |p: &Poly, q: &Poly| quasi_bracket(p, q, theta);
    let sum = &(&b(f, &b(g, h)?)? + &b(h, &b(f, g)?)?) + &b(g, &b(h, f)?)?;
    Ok(sum.scale(&rat(1, 3)))
}

/// The ten-term combination of `Pi d Theta` and `Theta d Pi` that vanishes
/// for every bivector, as a table over all index quadruples.
pub fn fundamental_identity_defect(theta: &Bivector) -> SymTensor {
    let n = theta.dim();
    let vars = theta.vars().clone();
    let pi = jacobiator(theta);
    let dtheta: Vec<Vec<Vec<Poly>>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| (0..n).map(|m| theta.get(a, b).d_base(m)).collect())
                .collect()
        })
        .collect();
    let dpi = |a: usize, b: usize, c: usize, m: usize| pi.get(a, b, c).d_base(m);
    // Pi^{abm} d_m Theta^{cd}
    let pdt = |a: usize, b: usize, c: usize, d: usize| {
        let mut acc = Poly::zero(&vars);
        for (m, dt) in dtheta[c][d].iter().enumerate() {
            if !dt.is_zero() {
                acc += &(&pi.get(a, b, m) * dt);
            }
        }
        acc
    };
    // Theta^{am} d_m Pi^{bcd}
    let tdp = |a: usize, b: usize, c: usize, d: usize| {
        let mut acc = Poly::zero(&vars);
        for m in 0..n {
            let t = theta.get(a, m);
            if !t.is_zero() {
                acc += &(t * &dpi(b, c, d, m));
            }
        }
        acc
    };
    let values: Vec<(Vec<usize>, Poly)> = all_quads(n)
        .into_par_iter()
        .map(|q| {
            let (i, j, k, l) = (q[0], q[1], q[2], q[3]);
            let mut d = pdt(i, j, k, l);
            d -= &pdt(j, k, l, i);
            d += &pdt(k, l, i, j);
            d -= &pdt(l, i, j, k);
            d -= &pdt(i, k, j, l);
            d += &pdt(j, l, k, i);
            d += &tdp(l, i, j, k);
            d -= &tdp(i, j, k, l);
            d += &tdp(j, k, l, i);
            d -= &tdp(k, l, i, j);
            (q, d)
        })
        .collect();
    let mut out = SymTensor::zeros(&vars, 4, 0, LeadSymmetry::None);
    for (q, d) in values {
        out.set(&q, &[], d).expect("momentum free");
    }
    out
}

fn all_quads(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out.push(vec![i, j, k, l]);
                }
            }
        }
    }
    out
}

/// Per-order record of the realization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderDiagnostics {
    pub order: usize,
    pub g_terms: usize,
    pub gamma_terms: usize,
    /// Sign of the normalization `-+1/(n(n+1))` that solved the Gamma equation.
    pub gamma_normalization: i8,
    pub cyclicity_defect_zero: bool,
    /// Whether the totally symmetric part of Gamma vanishes (reported, not enforced).
    pub gamma_symmetric_part_zero: bool,
    pub f_terms: Option<usize>,
    pub theta_terms: Option<usize>,
    /// Sign of the normalization `-+1/(n(n+2))` that solved the correction equation.
    pub theta_normalization: Option<i8>,
    pub four_term_defect_zero: Option<bool>,
    /// Whether symmetrizing the correction over its second lead index and
    /// tail gives zero (reported, not enforced).
    pub theta_partial_symmetric_part_zero: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub poisson_input: bool,
    pub fundamental_identity_zero: bool,
    pub contract_holds: bool,
    pub orders: Vec<OrderDiagnostics>,
}

/// Result of [`realize`]: Gamma^{(1..n)}, the corrections Theta^{(1..n-1)},
/// and the intermediate G and F tensors.
#[derive(Debug, Clone)]
pub struct Realization {
    bivector: Bivector,
    order: usize,
    gamma: Vec<SymTensor>,
    theta_corr: Vec<SymTensor>,
    g: Vec<SymTensor>,
    f: Vec<SymTensor>,
    jacobiator: Trivector,
    diagnostics: Diagnostics,
}

impl Realization {
    pub fn bivector(&self) -> &Bivector {
        &self.bivector
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        self.bivector.vars()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `Gamma^{(k)}` for `1 <= k <= order`.
    pub fn gamma(&self, k: usize) -> Result<&SymTensor> {
        if k == 0 || k > self.order {
            return Err(Error::Range {
                requested: k,
                available: self.order,
            });
        }
        Ok(&self.gamma[k - 1])
    }

    pub fn gammas(&self) -> &[SymTensor] {
        &self.gamma
    }

    /// `Theta^{(k)}` for `1 <= k < order`.
    pub fn theta_correction(&self, k: usize) -> Result<&SymTensor> {
        if k == 0 || k >= self.order {
            return Err(Error::Range {
                requested: k,
                available: self.order.saturating_sub(1),
            });
        }
        Ok(&self.theta_corr[k - 1])
    }

    pub fn theta_corrections(&self) -> &[SymTensor] {
        &self.theta_corr
    }

    /// G tensors with tails `0..order`; entry `n` determined `Gamma^{(n+1)}`.
    pub fn g_tensors(&self) -> &[SymTensor] {
        &self.g
    }

    /// F tensors of orders `1..order`; entry `k-1` determined `Theta^{(k)}`.
    pub fn f_tensors(&self) -> &[SymTensor] {
        &self.f
    }

    pub fn jacobiator(&self) -> &Trivector {
        &self.jacobiator
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    fn engine(&self) -> Engine {
        Engine {
            vars: self.vars().clone(),
            theta: self.bivector.clone(),
            gamma: self.gamma.clone(),
            theta_corr: self.theta_corr.clone(),
        }
    }
}

/// Which intermediate tensor a [`Fault`] perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultTarget {
    /// The G tensor with the given tail arity.
    G(usize),
    /// The F tensor of the given order.
    F(usize),
}

/// A single-entry perturbation applied during [`realize_with`], for testing
/// that the consistency checks catch corrupted intermediates.
#[derive(Debug, Clone)]
pub struct Fault {
    pub target: FaultTarget,
    pub lead: Vec<usize>,
    pub tail: Vec<usize>,
    pub delta: Poly,
}

#[derive(Debug, Clone, Default)]
pub struct RealizeOptions {
    pub fault: Option<Fault>,
}

type PairMap = BTreeMap<(usize, usize), Poly>;

struct Grad {
    dy: Vec<Poly>,
    dp: Vec<Poly>,
}

impl Grad {
    fn of(p: &Poly) -> Grad {
        let n = p.vars().dim();
        Grad {
            dy: (0..n).map(|k| p.d_base(k)).collect(),
            dp: (0..n).map(|k| p.d_momentum(k)).collect(),
        }
    }

    fn bracket(&self, other: &Grad, vars: &Arc<VarSet>, bound: u32) -> Poly {
        let mut out = Poly::zero(vars);
        for k in 0..self.dy.len() {
            if !self.dy[k].is_zero() && !other.dp[k].is_zero() {
                out += &self.dy[k]
                    .mul_truncated(&other.dp[k], Some(bound))
                    .expect("same variables");
            }
            if !self.dp[k].is_zero() && !other.dy[k].is_zero() {
                out -= &self.dp[k]
                    .mul_truncated(&other.dy[k], Some(bound))
                    .expect("same variables");
            }
        }
        out
    }
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn pair_get(m: &PairMap, i: usize, j: usize) -> Poly {
    if i < j {
        m[&(i, j)].clone()
    } else if i > j {
        -&m[&(j, i)]
    } else {
        Poly::zero(m.values().next().expect("nonempty").vars())
    }
}

struct Engine {
    vars: Arc<VarSet>,
    theta: Bivector,
    gamma: Vec<SymTensor>,
    theta_corr: Vec<SymTensor>,
}

impl Engine {
    fn dim(&self) -> usize {
        self.vars.dim()
    }

    /// `x_k^i = y^i + sum_{m<=k} alpha^m Gamma^{(m)} pi^m`.
    fn bopp(&self, k: usize) -> Vec<Poly> {
        let mut x: Vec<Poly> = (0..self.dim()).map(|i| Poly::base(&self.vars, i)).collect();
        for gamma in &self.gamma[..k] {
            for (lead, p) in gamma.assemble() {
                x[lead[0]] += &p;
            }
        }
        x
    }

    /// `Theta^{(s)}` assembled as `alpha^s Theta^{ij;J} pi^J`; `s = 0` is the bivector.
    fn theta_assembled(&self, s: usize) -> PairMap {
        if s == 0 {
            pairs(self.dim())
                .into_iter()
                .map(|(i, j)| ((i, j), self.theta.get(i, j).clone()))
                .collect()
        } else {
            self.theta_corr[s - 1]
                .assemble()
                .into_iter()
                .map(|(lead, p)| ((lead[0], lead[1]), p))
                .collect()
        }
    }

    /// `sum_{s<=upto} Theta^{(s)}(x)(alpha pi)^s` with alpha degrees `>= bound` dropped.
    fn omega_tilde(&self, x: &[Poly], upto: usize, bound: u32) -> PairMap {
        let mut subst = Substitution::new(&self.vars, Some(bound));
        for (i, xi) in x.iter().enumerate() {
            subst.set(Var::Base(i), xi.clone()).expect("same variables");
        }
        let assembled: Vec<PairMap> = (0..=upto).map(|s| self.theta_assembled(s)).collect();
        pairs(self.dim())
            .into_par_iter()
            .map_init(
                || subst.clone(),
                |sub, (i, j)| {
                    let mut acc = Poly::zero(&self.vars);
                    for a in &assembled {
                        let p = &a[&(i, j)];
                        if !p.is_zero() {
                            acc += &sub.apply(p);
                        }
                    }
                    ((i, j), acc)
                },
            )
            .collect()
    }

    /// `{x^i, x^j}` for `i < j`, alpha degrees `>= bound` dropped.
    fn x_brackets(&self, x: &[Poly], bound: u32) -> PairMap {
        let grads: Vec<Grad> = x.par_iter().map(Grad::of).collect();
        pairs(self.dim())
            .into_par_iter()
            .map(|(i, j)| ((i, j), grads[i].bracket(&grads[j], &self.vars, bound)))
            .collect()
    }

    /// `G_{k+1} = alpha omega_k - {x_k, x_k}` read off at `alpha^{k+1}`.
    fn g_tensor(&self, k: usize, x: &[Poly], omega_k: &PairMap) -> Result<SymTensor> {
        let bound = (k + 2) as u32;
        let brackets = self.x_brackets(x, bound);
        let mut components = Vec::new();
        for (i, j) in pairs(self.dim()) {
            let g = &omega_k[&(i, j)].shift_alpha(1).truncate(bound) - &brackets[&(i, j)];
            for low in 0..=k as u32 {
                if !g.alpha_coefficient(low).is_zero() {
                    return Err(Error::consistency(
                        k + 1,
                        format!("G^({},{}) has a residual term at alpha^{low}", i + 1, j + 1),
                    ));
                }
            }
            components.push((vec![i, j], g.alpha_coefficient(k as u32 + 1)));
        }
        extract_tensor(&self.vars, components, 2, LeadSymmetry::Antisymmetric, k)
    }

    /// F_k read off at `alpha^k` from the cyclic bracket of `x_k` with `w`,
    /// where `w = omega_tilde_{k-1}(x_k, pi)`.
    fn f_tensor(&self, k: usize, x: &[Poly], w: &PairMap) -> Result<SymTensor> {
        let bound = (k + 1) as u32;
        let n = self.dim();
        let x_grads: Vec<Grad> = x.par_iter().map(Grad::of).collect();
        let w_grads: BTreeMap<(usize, usize), Grad> =
            w.par_iter().map(|(&key, p)| (key, Grad::of(p))).collect();
        let bracket = |c: usize, a: usize, b: usize| {
            if a < b {
                x_grads[c].bracket(&w_grads[&(a, b)], &self.vars, bound)
            } else {
                -&x_grads[c].bracket(&w_grads[&(b, a)], &self.vars, bound)
            }
        };
        let triples: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |l| (i, j, l))))
            .collect();
        let sums: Vec<((usize, usize, usize), Poly)> = triples
            .into_par_iter()
            .map(|(i, j, l)| {
                let s = &(&bracket(l, i, j) + &bracket(j, l, i)) + &bracket(i, j, l);
                ((i, j, l), s)
            })
            .collect();
        let mut components = Vec::new();
        for ((i, j, l), s) in sums {
            for low in 0..k as u32 {
                if !s.alpha_coefficient(low).is_zero() {
                    return Err(Error::consistency(
                        k,
                        format!(
                            "F^({},{},{}) has a residual term at alpha^{low}",
                            i + 1,
                            j + 1,
                            l + 1
                        ),
                    ));
                }
            }
            components.push((vec![i, j, l], s.alpha_coefficient(k as u32)));
        }
        extract_tensor(
            &self.vars,
            components,
            3,
            LeadSymmetry::Antisymmetric,
            k - 1,
        )
    }

    fn omega_from(&self, k: usize, w: &PairMap) -> PairMap {
        if k == 0 {
            return w.clone();
        }
        let mut omega = w.clone();
        for (lead, p) in self.theta_corr[k - 1].assemble() {
            *omega.get_mut(&(lead[0], lead[1])).expect("pair") += &p;
        }
        omega
    }

    /// `omega_k` and, for `k >= 1`, the `omega_tilde_{k-1}(x_k, pi)` it extends.
    fn omega(&self, k: usize, x: &[Poly]) -> (PairMap, PairMap) {
        if k == 0 {
            let w = self.theta_assembled(0);
            return (w.clone(), w);
        }
        let w = self.omega_tilde(x, k - 1, (k + 1) as u32);
        (self.omega_from(k, &w), w)
    }
}

fn apply_fault(t: &mut SymTensor, fault: &Option<Fault>, target: FaultTarget) -> Result<()> {
    if let Some(f) = fault {
        if f.target == target {
            let v = &t.get(&f.lead, &f.tail) + &f.delta;
            t.set(&f.lead, &f.tail, v)?;
        }
    }
    Ok(())
}

/// Solves `n (Theta^{ij;kL} + Theta^{ki;jL} + Theta^{jk;iL}) + F^{ijk;L} = 0`
/// for a lead-antisymmetric, tail-symmetric correction of tail arity `n`.
///
/// The candidate is `c * sum_p F^{ij l_p; L\l_p}` with `|c| = 1/(n(n+2))`; the
/// sign is fixed by exact back-substitution.
pub fn solve_theta_correction(f: &SymTensor, n: usize) -> Result<(SymTensor, NormalizationSign)> {
    if f.lead_arity() != 3 || f.symmetry() != LeadSymmetry::Antisymmetric || n == 0 {
        return Err(Error::Precondition(
            "F must have an antisymmetric lead triple and order >= 1".into(),
        ));
    }
    if f.tail_arity() + 1 != n {
        return Err(Error::Precondition(format!(
            "F of tail arity {} does not belong to order {n}",
            f.tail_arity()
        )));
    }
    let defect = four_term_defect_f(f);
    if !defect.is_zero() {
        return Err(Error::consistency_with(
            n,
            "four-term relation of F does not hold",
            defect,
        ));
    }
    let vars = f.vars().clone();
    let dim = vars.dim();
    let mut raw = SymTensor::zeros(&vars, 2, n, LeadSymmetry::Antisymmetric);
    for (i, j) in pairs(dim) {
        for tail in sorted_tuples(dim, n) {
            let mut sum = Poly::zero(&vars);
            for p in 0..n {
                let mut rest = tail.clone();
                let lp = rest.remove(p);
                sum += &f.get(&[i, j, lp], &rest);
            }
            raw.set(&[i, j], &tail, sum)?;
        }
    }
    let magnitude = rat(1, (n * (n + 2)) as i64);
    for sign in [NormalizationSign::Negative, NormalizationSign::Positive] {
        let theta = raw.scale(&(&magnitude * int(sign.as_i8() as i64)));
        if theta_residual(&theta, f).is_zero() {
            return Ok((theta, sign));
        }
    }
    Err(Error::consistency_with(
        n,
        "no normalization of the symmetrized F solves the correction equation",
        theta_residual(&raw.scale(&-magnitude), f),
    ))
}

/// `n (Theta^{ij;kL} + Theta^{ki;jL} + Theta^{jk;iL}) + F^{ijk;L}`.
pub fn theta_residual(theta: &SymTensor, f: &SymTensor) -> SymTensor {
    let vars = f.vars().clone();
    let dim = vars.dim();
    let n = theta.tail_arity();
    let factor = int(n as i64);
    let mut out = SymTensor::zeros(&vars, 3, f.tail_arity(), LeadSymmetry::Antisymmetric);
    for i in 0..dim {
        for j in i + 1..dim {
            for k in j + 1..dim {
                for rest in sorted_tuples(dim, f.tail_arity()) {
                    let with = |x: usize| {
                        let mut t = rest.clone();
                        t.push(x);
                        t
                    };
                    let cyc = &(&theta.get(&[i, j], &with(k)) + &theta.get(&[k, i], &with(j)))
                        + &theta.get(&[j, k], &with(i));
                    let r = &cyc.scale(&factor) + &f.get(&[i, j, k], &rest);
                    out.set(&[i, j, k], &rest, r).expect("momentum free");
                }
            }
        }
    }
    out
}

/// Runs the recurrence to the given order.
pub fn realize(theta: &Bivector, order: usize) -> Result<Realization> {
    realize_with(theta, order, &RealizeOptions::default())
}

pub fn realize_with(
    theta: &Bivector,
    order: usize,
    options: &RealizeOptions,
) -> Result<Realization> {
    if order == 0 {
        return Err(Error::Precondition(
            "realization order must be at least 1".into(),
        ));
    }
    let vars = theta.vars().clone();
    let jac = jacobiator(theta);
    let mut engine = Engine {
        vars: vars.clone(),
        theta: theta.clone(),
        gamma: Vec::new(),
        theta_corr: Vec::new(),
    };
    let mut g_tensors = Vec::new();
    let mut f_tensors = Vec::new();
    let mut orders = Vec::new();

    let x0 = engine.bopp(0);
    let (mut omega_prev, _) = engine.omega(0, &x0);
    let mut g = engine.g_tensor(0, &x0, &omega_prev)?;
    apply_fault(&mut g, &options.fault, FaultTarget::G(0))?;
    let (gamma, sign) = solve_gamma(&g)?;
    orders.push(order_record(1, &g, &gamma, sign));
    g_tensors.push(g);
    engine.gamma.push(gamma);

    for k in 1..order {
        let x = engine.bopp(k);
        let w = engine.omega_tilde(&x, k - 1, (k + 1) as u32);
        let mut f = engine.f_tensor(k, &x, &w)?;
        apply_fault(&mut f, &options.fault, FaultTarget::F(k))?;
        let (theta_k, theta_sign) = solve_theta_correction(&f, k)?;
        let record = orders.last_mut().expect("order record");
        record.f_terms = Some(f.num_terms());
        record.theta_terms = Some(theta_k.num_terms());
        record.theta_normalization = Some(theta_sign.as_i8());
        record.four_term_defect_zero = Some(true);
        record.theta_partial_symmetric_part_zero =
            Some(partial_symmetrization(&theta_k, 1).is_zero());
        f_tensors.push(f);
        engine.theta_corr.push(theta_k);

        let omega_k = engine.omega_from(k, &w);
        let mut g = engine.g_tensor(k, &x, &omega_k)?;
        apply_fault(&mut g, &options.fault, FaultTarget::G(k))?;
        let (gamma, sign) = solve_gamma(&g)?;
        orders.push(order_record(k + 1, &g, &gamma, sign));
        g_tensors.push(g);
        engine.gamma.push(gamma);
        omega_prev = omega_k;
    }

    let x_n = engine.bopp(order);
    if let Some((i, j)) = contract_violation(&engine, &x_n, &omega_prev, order) {
        return Err(Error::consistency(
            order,
            format!(
                "{{x^{}, x^{}}} differs from alpha omega below alpha^{}",
                i + 1,
                j + 1,
                order + 1
            ),
        ));
    }

    let diagnostics = Diagnostics {
        poisson_input: jac.is_zero(),
        fundamental_identity_zero: fundamental_identity_defect(theta).is_zero(),
        contract_holds: true,
        orders,
    };
    Ok(Realization {
        bivector: theta.clone(),
        order,
        gamma: engine.gamma,
        theta_corr: engine.theta_corr,
        g: g_tensors,
        f: f_tensors,
        jacobiator: jac,
        diagnostics,
    })
}

fn order_record(
    order: usize,
    g: &SymTensor,
    gamma: &SymTensor,
    sign: NormalizationSign,
) -> OrderDiagnostics {
    OrderDiagnostics {
        order,
        g_terms: g.num_terms(),
        gamma_terms: gamma.num_terms(),
        gamma_normalization: sign.as_i8(),
        cyclicity_defect_zero: cyclicity_defect_g(g).is_zero(),
        gamma_symmetric_part_zero: total_symmetrization(gamma).is_zero(),
        f_terms: None,
        theta_terms: None,
        theta_normalization: None,
        four_term_defect_zero: None,
        theta_partial_symmetric_part_zero: None,
    }
}

/// First pair for which `{x_n^i, x_n^j} - alpha omega_{n-1}^{ij}` is nonzero
/// below `alpha^{n+1}`.
fn contract_violation(
    engine: &Engine,
    x_n: &[Poly],
    omega_prev: &PairMap,
    n: usize,
) -> Option<(usize, usize)> {
    let bound = (n + 1) as u32;
    let brackets = engine.x_brackets(x_n, bound);
    pairs(engine.dim()).into_iter().find(|&(i, j)| {
        let rhs = omega_prev[&(i, j)].shift_alpha(1).truncate(bound);
        brackets[&(i, j)] != rhs
    })
}

/// Checks `{x_n^i, x_n^j} = alpha omega_{n-1}^{ij} mod alpha^{n+1}` for the
/// realization's own order.
pub fn verify_contract(real: &Realization) -> bool {
    let engine = real.engine();
    let n = real.order;
    let x_n = engine.bopp(n);
    let omega_prev = if n == 1 {
        engine.theta_assembled(0)
    } else {
        engine.omega(n - 1, &engine.bopp(n - 1)).0
    };
    contract_violation(&engine, &x_n, &omega_prev, n).is_none()
}

/// `x_k^i` for `k <= order`.
pub fn bopp_apply(real: &Realization, k: usize) -> Result<Vec<Poly>> {
    if k > real.order {
        return Err(Error::Range {
            requested: k,
            available: real.order,
        });
    }
    Ok(real.engine().bopp(k))
}

fn full_matrix(m: &PairMap, vars: &Arc<VarSet>) -> Vec<Vec<Poly>> {
    let n = vars.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Poly::zero(vars)
                    } else {
                        pair_get(m, i, j)
                    }
                })
                .collect()
        })
        .collect()
}

/// `omega_n^{ij}` in Darboux coordinates, truncated below `alpha^{n+1}`.
/// Needs `n < order`.
pub fn omega_n(real: &Realization, n: usize) -> Result<Vec<Vec<Poly>>> {
    if n >= real.order {
        return Err(Error::Range {
            requested: n,
            available: real.order - 1,
        });
    }
    let engine = real.engine();
    let x = engine.bopp(n);
    Ok(full_matrix(&engine.omega(n, &x).0, real.vars()))
}

/// Recomputes the G tensor of tail arity `n` (the one that determines
/// `Gamma^{(n+1)}`). Needs `n < order`.
pub fn compute_g(real: &Realization, n: usize) -> Result<SymTensor> {
    if n >= real.order {
        return Err(Error::Range {
            requested: n,
            available: real.order - 1,
        });
    }
    let engine = real.engine();
    let x = engine.bopp(n);
    let (omega, _) = engine.omega(n, &x);
    engine.g_tensor(n, &x, &omega)
}

/// Recomputes F_n for `1 <= n <= order`.
pub fn compute_f(real: &Realization, n: usize) -> Result<SymTensor> {
    if n == 0 || n > real.order {
        return Err(Error::Range {
            requested: n,
            available: real.order,
        });
    }
    let engine = real.engine();
    let x = engine.bopp(n);
    let w = engine.omega_tilde(&x, n - 1, (n + 1) as u32);
    engine.f_tensor(n, &x, &w)
}

/// `y^i(x, xt)` inverting the Bopp shift modulo `alpha^{n+1}`. Base slots hold
/// `x`, momentum slots hold `xt`.
pub fn invert_bopp(real: &Realization) -> Vec<Poly> {
    let engine = real.engine();
    let n = real.order;
    let vars = real.vars();
    let bound = (n + 1) as u32;
    let shifts: Vec<Poly> = {
        let x = engine.bopp(n);
        x.iter()
            .enumerate()
            .map(|(i, xi)| xi - &Poly::base(vars, i))
            .collect()
    };
    let identity: Vec<Poly> = (0..vars.dim()).map(|i| Poly::base(vars, i)).collect();
    let mut y = identity.clone();
    for _ in 0..n {
        let mut subst = Substitution::new(vars, Some(bound));
        for (i, yi) in y.iter().enumerate() {
            subst.set(Var::Base(i), yi.clone()).expect("same variables");
        }
        y = identity
            .iter()
            .zip(&shifts)
            .map(|(xi, s)| (xi - &subst.apply(s)).truncate(bound))
            .collect();
    }
    y
}

/// Brackets of the doubled coordinates, written in `(x, xt)` and truncated
/// below `alpha^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedBrackets {
    /// `{x^i, x^j}`, equal to `alpha omega^{ij}(x, xt)`.
    pub x_x: Vec<Vec<Poly>>,
    /// `{x^i, xt_j}`.
    pub x_xt: Vec<Vec<Poly>>,
    /// `{xt_i, xt_j}`, identically zero for `xt = pi`.
    pub xt_xt: Vec<Vec<Poly>>,
}

pub fn extended_brackets(real: &Realization) -> ExtendedBrackets {
    let engine = real.engine();
    let n = real.order;
    let vars = real.vars().clone();
    let dim = vars.dim();
    let bound = (n + 1) as u32;
    let x = engine.bopp(n);
    let y = invert_bopp(real);
    let mut subst = Substitution::new(&vars, Some(bound));
    for (i, yi) in y.iter().enumerate() {
        subst.set(Var::Base(i), yi.clone()).expect("same variables");
    }
    let brackets = engine.x_brackets(&x, bound);
    let x_x: Vec<Vec<Poly>> = (0..dim)
        .into_par_iter()
        .map_init(
            || subst.clone(),
            |sub, i| {
                (0..dim)
                    .map(|j| match i.cmp(&j) {
                        std::cmp::Ordering::Equal => Poly::zero(&vars),
                        std::cmp::Ordering::Less => sub.apply(&brackets[&(i, j)]),
                        std::cmp::Ordering::Greater => -&sub.apply(&brackets[&(j, i)]),
                    })
                    .collect()
            },
        )
        .collect();
    let x_xt: Vec<Vec<Poly>> = (0..dim)
        .into_par_iter()
        .map_init(
            || subst.clone(),
            |sub, i| (0..dim).map(|j| sub.apply(&x[i].d_base(j))).collect(),
        )
        .collect();
    ExtendedBrackets {
        x_x,
        x_xt,
        xt_xt: vec![vec![Poly::zero(&vars); dim]; dim],
    }
}

/// `alpha sum_{m<n} Theta^{(m)}(x)(alpha xt)^m`, the value `{x^i, x^j}` must take.
pub fn expected_x_x(real: &Realization) -> Vec<Vec<Poly>> {
    let engine = real.engine();
    let mut acc: PairMap = engine.theta_assembled(0);
    for s in 1..real.order {
        for (key, p) in engine.theta_assembled(s) {
            *acc.get_mut(&key).expect("pair") += &p;
        }
    }
    let vars = real.vars();
    let shifted: PairMap = acc
        .into_iter()
        .map(|(k, p)| (k, p.shift_alpha(1)))
        .collect();
    full_matrix(&shifted, vars)
}
