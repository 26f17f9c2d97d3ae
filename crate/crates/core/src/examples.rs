//! Built-in bivectors (constant R-flux, su(2), octonions, M-theory R-flux)
//! and truncated closed-form oracles for their realizations.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::octonion::OctonionStructure;
use crate::poly::{int, rat, Poly, Rational, VarSet};
use crate::realization::{Bivector, ExtendedBrackets};

/// Default highest Taylor order produced by [`series_oracle`].
pub const DEFAULT_ORACLE_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleSpec {
    pub name: &'static str,
    pub dimension: usize,
    pub params: Vec<&'static str>,
    pub description: &'static str,
}

pub fn catalog() -> Vec<ExampleSpec> {
    vec![
        ExampleSpec {
            name: "r-flux",
            dimension: 6,
            params: vec!["r"],
            description:
                "constant R-flux phase space, Theta^{ij} = r eps^{ijk} p_k, Theta^{i,j+3} = delta",
        },
        ExampleSpec {
            name: "su2",
            dimension: 3,
            params: vec![],
            description: "su(2) Lie-Poisson structure, Theta^{ij} = 2 eps_{ijk} x_k",
        },
        ExampleSpec {
            name: "octonion",
            dimension: 7,
            params: vec![],
            description: "imaginary octonion commutators, Theta_{AB} = 2 eta_{ABC} x_C",
        },
        ExampleSpec {
            name: "mtheory",
            dimension: 7,
            params: vec![],
            description: "M-theory R-flux algebra at lambda = 1, r = 4, q = 2",
        },
    ]
}

/// Builds a catalog entry by name with default instantiations.
pub fn build_example(name: &str) -> Result<Bivector> {
    match name {
        "r-flux" => Ok(build_r_flux()),
        "su2" => Ok(build_su2()),
        "octonion" => Ok(build_octonion(&OctonionStructure::new())),
        "mtheory" => {
            Ok(build_mtheory(&int(1), &int(4), &int(2), &OctonionStructure::new())?.bivector)
        }
        other => Err(Error::Precondition(format!(
            "unknown example '{other}' (expected one of: r-flux, su2, octonion, mtheory)"
        ))),
    }
}

/// Levi-Civita symbol on three zero-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> i8 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Coordinates `(x1, x2, x3, p1, p2, p3)`, parameter `r`.
pub fn build_r_flux() -> Bivector {
    let vars = VarSet::new(6, vec!["r".into()]).expect("valid variables");
    let r = Poly::param(&vars, "r").expect("declared");
    let mut entries = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let k = 3 - i - j;
            let e = levi_civita(i, j, k) as i64;
            entries.push((i, j, (&r * &Poly::base(&vars, k + 3)).scale(&int(e))));
        }
        entries.push((i, i + 3, Poly::one(&vars)));
    }
    Bivector::from_entries(&vars, entries).expect("valid R-flux bivector")
}

pub fn build_su2() -> Bivector {
    let vars = VarSet::new(3, vec![]).expect("valid variables");
    let entries = [(0, 1, 2), (1, 2, 0), (0, 2, 1)]
        .into_iter()
        .map(|(i, j, k)| {
            (
                i,
                j,
                Poly::base(&vars, k).scale(&int(2 * levi_civita(i, j, k) as i64)),
            )
        });
    Bivector::from_entries(&vars, entries).expect("valid su(2) bivector")
}

pub fn build_octonion(structure: &OctonionStructure) -> Bivector {
    let vars = VarSet::new(7, vec![]).expect("valid variables");
    bivector_from_structure_constants(&vars, |a, b, c| int(2 * structure.eta3(a, b, c) as i64))
}

fn bivector_from_structure_constants<F>(vars: &Arc<VarSet>, c: F) -> Bivector
where
    F: Fn(usize, usize, usize) -> Rational,
{
    let n = vars.dim();
    let mut entries = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut p = Poly::zero(vars);
            for k in 0..n {
                let v = c(a, b, k);
                if !v.is_zero() {
                    p += &Poly::base(vars, k).scale(&v);
                }
            }
            entries.push((a, b, p));
        }
    }
    Bivector::from_entries(vars, entries).expect("structure constants give a valid bivector")
}

/// The M-theory background at a rational point `q^2 = lambda r`.
#[derive(Debug, Clone)]
pub struct MTheory {
    pub bivector: Bivector,
    /// `Lambda^{AB}`, mapping `xi` to `x = (x1..x3, x4, p1..p3)`.
    pub transform: Vec<Vec<Rational>>,
    pub inverse: Vec<Vec<Rational>>,
    /// `lambda^{ABC}`, flattened with stride 7.
    pub lambda3: Vec<Rational>,
    /// `lambda^{ABCD}`, flattened with stride 7.
    pub lambda4: Vec<Rational>,
}

impl MTheory {
    pub fn lambda3(&self, a: usize, b: usize, c: usize) -> &Rational {
        &self.lambda3[(a * 7 + b) * 7 + c]
    }

    pub fn lambda4(&self, a: usize, b: usize, c: usize, d: usize) -> &Rational {
        &self.lambda4[((a * 7 + b) * 7 + c) * 7 + d]
    }
}

pub fn build_mtheory(
    lambda: &Rational,
    r: &Rational,
    q: &Rational,
    structure: &OctonionStructure,
) -> Result<MTheory> {
    if lambda.is_zero() || r.is_zero() || q.is_zero() {
        return Err(Error::Singular(
            "the transformation matrix is degenerate when a parameter vanishes".into(),
        ));
    }
    if q * q != lambda * r {
        return Err(Error::Precondition(format!(
            "q^2 = {} must equal lambda r = {}",
            q * q,
            lambda * r
        )));
    }
    let half = rat(1, 2);
    let mut t = vec![vec![Rational::zero(); 7]; 7];
    for i in 0..3 {
        t[i][i + 3] = q * &half;
        t[4 + i][i] = -(lambda * &half);
    }
    t[3][6] = lambda * q * &half;
    let inv = invert_matrix(&t)?;

    let n = 7;
    let mut lambda3 = vec![Rational::zero(); n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc = Rational::zero();
                for a1 in (0..n).filter(|&a1| !t[a][a1].is_zero()) {
                    for b1 in (0..n).filter(|&b1| !t[b][b1].is_zero()) {
                        for c1 in 0..n {
                            let e = structure.eta3(a1, b1, c1);
                            if e != 0 && !inv[c1][c].is_zero() {
                                acc += &t[a][a1] * &t[b][b1] * &inv[c1][c] * int(e as i64);
                            }
                        }
                    }
                }
                lambda3[(a * n + b) * n + c] = acc;
            }
        }
    }
    let mut lambda4 = vec![Rational::zero(); n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut acc = Rational::zero();
                    for a1 in (0..n).filter(|&a1| !t[a][a1].is_zero()) {
                        for b1 in (0..n).filter(|&b1| !t[b][b1].is_zero()) {
                            for c1 in (0..n).filter(|&c1| !t[c][c1].is_zero()) {
                                for d1 in 0..n {
                                    let e = structure.eta4(a1, b1, c1, d1);
                                    if e != 0 && !inv[d1][d].is_zero() {
                                        acc += &t[a][a1]
                                            * &t[b][b1]
                                            * &t[c][c1]
                                            * &inv[d1][d]
                                            * int(e as i64);
                                    }
                                }
                            }
                        }
                    }
                    lambda4[((a * n + b) * n + c) * n + d] = acc;
                }
            }
        }
    }
    let vars = VarSet::new(7, vec![]).expect("valid variables");
    let bivector =
        bivector_from_structure_constants(&vars, |a, b, c| &lambda3[(a * n + b) * n + c] * int(2));
    Ok(MTheory {
        bivector,
        transform: t,
        inverse: inv,
        lambda3,
        lambda4,
    })
}

fn invert_matrix(m: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| {
                if i == j {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Singular("matrix is not invertible".into()))?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let sub = &f * &a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesName {
    Chi,
    Phi,
    Psi,
}

impl SeriesName {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesName::Chi => "chi",
            SeriesName::Phi => "phi",
            SeriesName::Psi => "psi",
        }
    }
}

/// Taylor coefficients `c_0..c_K` in `t` of
/// `chi = -(sqrt(t) cot sqrt(t) - 1)/t`, `phi = 2 sin(2 sqrt t)/sqrt t`,
/// `psi = 4 sin^2(sqrt t)/t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOracle {
    pub name: SeriesName,
    pub coefficients: Vec<Rational>,
}

pub fn series_oracle(name: SeriesName, k: usize) -> Result<SeriesOracle> {
    series_oracle_with_cap(name, k, DEFAULT_ORACLE_CAP)
}

pub fn series_oracle_with_cap(name: SeriesName, k: usize, cap: usize) -> Result<SeriesOracle> {
    if k > cap {
        return Err(Error::Range {
            requested: k,
            available: cap,
        });
    }
    let coefficients = match name {
        SeriesName::Chi => {
            let b = bernoulli_numbers(2 * k + 2);
            (0..=k)
                .map(|j| {
                    let m = j + 1;
                    -(&b[2 * m] * pow_rat(-4, m) / factorial(2 * m))
                })
                .collect()
        }
        SeriesName::Phi => (0..=k)
            .map(|j| int(2) * pow_rat(-1, j) * pow_rat(2, 2 * j + 1) / factorial(2 * j + 1))
            .collect(),
        SeriesName::Psi => (0..=k)
            .map(|j| {
                let m = j + 1;
                int(2) * pow_rat(-1, m + 1) * pow_rat(4, m) / factorial(2 * m)
            })
            .collect(),
    };
    Ok(SeriesOracle { name, coefficients })
}

/// Coefficients of `2 t chi' + 3 chi - 1 - t chi^2` through `t^K`.
pub fn chi_ode_residual(chi: &SeriesOracle) -> Vec<Rational> {
    let c = &chi.coefficients;
    let k = c.len();
    (0..k)
        .map(|m| {
            let mut v = &c[m] * int(2 * m as i64 + 3);
            if m == 0 {
                v -= int(1);
            } else {
                for a in 0..m {
                    v -= &c[a] * &c[m - 1 - a];
                }
            }
            v
        })
        .collect()
}

fn pow_rat(base: i64, e: usize) -> Rational {
    Rational::from_integer(BigInt::from(base).pow(e as u32))
}

fn factorial(n: usize) -> Rational {
    Rational::from_integer((1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k)))
}

/// `B_0..B_n` with `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rational::one());
            continue;
        }
        let mut acc = Rational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += Rational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / int(m as i64 + 1));
    }
    b
}

/// Antisymmetric algebras for which closed-form realizations are known.
#[derive(Debug, Clone, Copy)]
pub enum ClosedFormAlgebra<'a> {
    Octonion(&'a OctonionStructure),
    Su2,
}

impl ClosedFormAlgebra<'_> {
    fn dim(&self) -> usize {
        match self {
            ClosedFormAlgebra::Octonion(_) => 7,
            ClosedFormAlgebra::Su2 => 3,
        }
    }

    fn eta3(&self, a: usize, b: usize, c: usize) -> i64 {
        match self {
            ClosedFormAlgebra::Octonion(s) => s.eta3(a, b, c) as i64,
            ClosedFormAlgebra::Su2 => levi_civita(a, b, c) as i64,
        }
    }

    fn eta4(&self, a: usize, b: usize, c: usize, d: usize) -> i64 {
        match self {
            ClosedFormAlgebra::Octonion(s) => s.eta4(a, b, c, d) as i64,
            ClosedFormAlgebra::Su2 => 0,
        }
    }

    pub fn vars(&self) -> Arc<VarSet> {
        VarSet::new(self.dim(), vec![]).expect("valid variables")
    }

    pub fn bivector(&self) -> Bivector {
        match self {
            ClosedFormAlgebra::Octonion(s) => build_octonion(s),
            ClosedFormAlgebra::Su2 => build_su2(),
        }
    }
}

fn check_cap(k: usize) -> Result<()> {
    if k > DEFAULT_ORACLE_CAP {
        return Err(Error::Range {
            requested: k,
            available: DEFAULT_ORACLE_CAP,
        });
    }
    Ok(())
}

fn momentum_square(vars: &Arc<VarSet>) -> Poly {
    let mut s = Poly::zero(vars);
    for i in 0..vars.dim() {
        let p = Poly::momentum(vars, i);
        s += &(&p * &p);
    }
    s
}

/// Sum over `j` of `coeffs[j] alpha^{offset + 2j} (pi^2)^j * body`, keeping alpha
/// degrees `<= k`.
fn series_in_pi_square(
    vars: &Arc<VarSet>,
    coeffs: &[Rational],
    offset: usize,
    body: &Poly,
    k: usize,
) -> Poly {
    let p2 = momentum_square(vars);
    let mut out = Poly::zero(vars);
    let mut power = Poly::one(vars);
    for (j, c) in coeffs.iter().enumerate() {
        let degree = offset + 2 * j;
        if degree > k {
            break;
        }
        out += &(&power * body).scale(c).shift_alpha(degree as u16);
        power = &power * &p2;
    }
    out
}

/// Generalized Bopp shift `x_A(y, pi)` of the closed form, keeping alpha
/// degrees `<= k` (each `pi` carries one alpha).
pub fn closed_form_bopp(algebra: ClosedFormAlgebra, k: usize) -> Result<Vec<Poly>> {
    check_cap(k)?;
    let vars = algebra.vars();
    let n = algebra.dim();
    let chi = series_oracle(SeriesName::Chi, k / 2)?;
    let y = |i| Poly::base(&vars, i);
    let p = |i| Poly::momentum(&vars, i);
    let p2 = momentum_square(&vars);
    let mut y_dot_p = Poly::zero(&vars);
    for i in 0..n {
        y_dot_p += &(&y(i) * &p(i));
    }
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let mut x = y(a);
        if k >= 1 {
            let mut lin = Poly::zero(&vars);
            for b in 0..n {
                for c in 0..n {
                    let e = algebra.eta3(a, b, c);
                    if e != 0 {
                        lin += &(&p(b) * &y(c)).scale(&int(e));
                    }
                }
            }
            x -= &lin.shift_alpha(1);
        }
        let body = &(&y(a) * &p2) - &(&p(a) * &y_dot_p);
        x -= &series_in_pi_square(&vars, &chi.coefficients, 2, &body, k);
        out.push(x);
    }
    Ok(out)
}

/// Extended brackets of the closed form in `(xi, xt)`, including the overall
/// alpha of `{xi, xi}`, keeping alpha degrees `<= k`.
pub fn closed_form_extended(algebra: ClosedFormAlgebra, k: usize) -> Result<ExtendedBrackets> {
    check_cap(k)?;
    let vars = algebra.vars();
    let n = algebra.dim();
    let half = k / 2;
    let phi = series_oracle(SeriesName::Phi, half)?;
    let psi = series_oracle(SeriesName::Psi, half)?;
    let chi = series_oracle(SeriesName::Chi, half)?;
    let x = |i| Poly::base(&vars, i);
    let xt = |i| Poly::momentum(&vars, i);
    let xt2 = momentum_square(&vars);

    let mut x_x = vec![vec![Poly::zero(&vars); n]; n];
    let mut x_xt = vec![vec![Poly::zero(&vars); n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut lead = Poly::zero(&vars);
            let mut phi_body = Poly::zero(&vars);
            let mut psi_body = Poly::zero(&vars);
            let mut lin = Poly::zero(&vars);
            for c in 0..n {
                let e3 = algebra.eta3(a, b, c);
                if e3 != 0 {
                    lead += &x(c).scale(&int(2 * e3));
                    lin += &xt(c).scale(&int(e3));
                }
                for d in 0..n {
                    let e4 = algebra.eta4(a, b, c, d);
                    if e4 == 0 {
                        continue;
                    }
                    phi_body += &(&xt(c) * &x(d)).scale(&int(e4));
                    for e in 0..n {
                        for f in 0..n {
                            let e3 = algebra.eta3(d, e, f);
                            if e3 != 0 {
                                psi_body += &(&(&xt(c) * &xt(e)) * &x(f)).scale(&int(e4 * e3));
                            }
                        }
                    }
                }
            }
            let mut omega = lead;
            omega +=
                &series_in_pi_square(&vars, &phi.coefficients, 1, &phi_body, k.saturating_sub(1));
            omega +=
                &series_in_pi_square(&vars, &psi.coefficients, 2, &psi_body, k.saturating_sub(1));
            x_x[a][b] = if k >= 1 {
                omega.shift_alpha(1).truncate(k as u32 + 1)
            } else {
                Poly::zero(&vars)
            };

            let delta = if a == b {
                Poly::one(&vars)
            } else {
                Poly::zero(&vars)
            };
            let mut v = delta.clone();
            if k >= 1 {
                v += &lin.shift_alpha(1);
            }
            let body = &(&delta * &xt2) - &(&xt(a) * &xt(b));
            v -= &series_in_pi_square(&vars, &chi.coefficients, 2, &body, k);
            x_xt[a][b] = v;
        }
    }
    Ok(ExtendedBrackets {
        x_x,
        x_xt,
        xt_xt: vec![vec![Poly::zero(&vars); n]; n],
    })
}
