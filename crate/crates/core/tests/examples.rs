use std::sync::Arc;

use num_traits::Zero;
use symreal_core::error::Error;
use symreal_core::examples::{
    build_example, build_mtheory, build_octonion, build_r_flux, build_su2, catalog,
    closed_form_bopp, closed_form_extended, levi_civita, ClosedFormAlgebra,
};
use symreal_core::octonion::OctonionStructure;
use symreal_core::poly::{int, rat, Monomial, Poly, Rational, Var, VarSet};
use symreal_core::realization::{
    bopp_apply, extended_brackets, fundamental_identity_defect, omega_n, realize, Bivector,
};

fn delta(a: usize, b: usize) -> i64 {
    (a == b) as i64
}

fn eps(i: usize, j: usize, k: usize) -> i64 {
    levi_civita(i, j, k) as i64
}

/// Linear form `sum_c coeffs[c] y_c`.
fn linear(v: &Arc<VarSet>, coeffs: &[(usize, i64)]) -> Poly {
    let mut p = Poly::zero(v);
    for &(c, k) in coeffs {
        p += &Poly::base(v, c).scale(&int(k));
    }
    p
}

#[test]
fn every_example_builds_and_satisfies_the_fundamental_identity() {
    for spec in catalog() {
        let t = build_example(&spec.name).unwrap();
        assert_eq!(t.dim(), spec.dimension, "{}", spec.name);
        assert!(fundamental_identity_defect(&t).is_zero(), "{}", spec.name);
    }
    assert!(matches!(build_example("nope"), Err(Error::Precondition(_))));
}

#[test]
fn r_flux_jacobiator_is_constant_on_the_coordinate_block() {
    let t = build_r_flux();
    let v = t.vars().clone();
    let r = Poly::param(&v, "r").unwrap();
    let pi = t.jacobiator();
    for i in 0..6 {
        for j in 0..6 {
            for k in 0..6 {
                let expected = if i < 3 && j < 3 && k < 3 {
                    r.scale(&int(eps(i, j, k)))
                } else {
                    Poly::zero(&v)
                };
                assert_eq!(pi.get(i, j, k), expected, "({i}, {j}, {k})");
            }
        }
    }
}

#[test]
fn r_flux_realization_terminates() {
    let r = realize(&build_r_flux(), 3).unwrap();
    assert!(!r.gamma(1).unwrap().is_zero());
    for k in 2..=3 {
        assert!(r.gamma(k).unwrap().is_zero(), "Gamma^({k})");
    }
    assert!(r.theta_correction(2).unwrap().is_zero());
}

/// Rewrites a bracket on `(x, xt)` as a polynomial in twelve plain coordinates
/// at `alpha = 1`.
fn flatten(p: &Poly, target: &Arc<VarSet>) -> Poly {
    let source = p.vars();
    let n = source.dim();
    let terms = p.terms().map(|(m, c)| {
        let mut out = Monomial::one(target.num_slots());
        for i in 0..n {
            out.set_exponent(1 + i, m.exponent(1 + i));
            out.set_exponent(1 + n + i, m.exponent(1 + n + i));
        }
        for (s, _) in source.params().iter().enumerate() {
            out.set_exponent(1 + 4 * n + s, m.exponent(1 + 2 * n + s));
        }
        (out, c.clone())
    });
    Poly::from_monomials(target, terms)
}

fn doubled_bivector(x_x: &[Vec<Poly>], x_xt: &[Vec<Poly>], target: &Arc<VarSet>) -> Bivector {
    let n = x_x.len();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            entries.push((i, j, flatten(&x_x[i][j], target)));
        }
        for j in 0..n {
            entries.push((i, n + j, flatten(&x_xt[i][j], target)));
        }
    }
    Bivector::from_entries(target, entries).unwrap()
}

#[test]
fn r_flux_doubled_phase_space_is_poisson() {
    let r = realize(&build_r_flux(), 3).unwrap();
    let ext = extended_brackets(&r);
    let v = r.vars().clone();
    let target = VarSet::new(12, vec!["r".into()]).unwrap();
    for row in ext.x_x.iter().chain(&ext.x_xt) {
        for p in row {
            assert!(p.max_alpha_degree().unwrap_or(0) <= 2);
        }
    }
    assert!(doubled_bivector(&ext.x_x, &ext.x_xt, &target).is_poisson());

    // Reversing the sign of the first-order part of {x, xt} breaks Jacobi.
    let flipped: Vec<Vec<Poly>> = ext
        .x_xt
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, p)| {
                    let id = Poly::constant(&v, int(delta(i, j)));
                    &id.scale(&int(2)) - p
                })
                .collect()
        })
        .collect();
    assert!(!doubled_bivector(&ext.x_x, &flipped, &target).is_poisson());
}

fn mtheory_at(lambda: Rational, q: Rational) -> Bivector {
    build_mtheory(&lambda, &int(4), &q, &OctonionStructure::new())
        .unwrap()
        .bivector
}

/// Fits `c(l) = a0 + a1 l + a2 l^2` through three samples and returns `a0`,
/// after checking the fit reproduces a fourth sample.
fn constant_term(samples: &[(Rational, Rational); 4]) -> Rational {
    let [(l0, c0), (l1, c1), (l2, c2), (l3, c3)] = samples.clone();
    let lagrange = |l: &Rational| {
        let w0 = (l - &l1) * (l - &l2) / ((&l0 - &l1) * (&l0 - &l2));
        let w1 = (l - &l0) * (l - &l2) / ((&l1 - &l0) * (&l1 - &l2));
        let w2 = (l - &l0) * (l - &l1) / ((&l2 - &l0) * (&l2 - &l1));
        &w0 * &c0 + &w1 * &c1 + &w2 * &c2
    };
    assert_eq!(lagrange(&l3), c3, "coefficient is not quadratic in lambda");
    lagrange(&Rational::zero())
}

#[test]
fn mtheory_contracts_to_r_flux() {
    let points = [
        (int(1), int(2)),
        (rat(1, 4), int(1)),
        (rat(1, 9), rat(2, 3)),
        (int(4), int(4)),
    ];
    let samples: Vec<Bivector> = points
        .iter()
        .map(|(l, q)| mtheory_at(l.clone(), q.clone()))
        .collect();
    let flux = build_r_flux();
    let fv = flux.vars().clone();
    let r_at_4 = |p: &Poly| {
        p.substitute(&[(Var::Param(0), Poly::constant(&fv, int(4)))])
            .unwrap()
    };
    // M-theory slots: x^1..x^3, x^4, p_1..p_3. R-flux slots: x^1..x^3, p_1..p_3.
    let to_flux = |a: usize| match a {
        0..=2 => Some(a),
        3 => None,
        _ => Some(a - 1),
    };
    let mv = samples[0].vars().clone();
    for a in 0..7 {
        for b in 0..7 {
            // Coefficient of each coordinate, then the lambda -> 0 limit with x^4 = 1.
            let mut limit = Poly::zero(&fv);
            for c in 0..7 {
                let mono = Poly::base(&mv, c);
                let m = mono.terms().next().unwrap().0.clone();
                let coeff = |k: usize| samples[k].get(a, b).coefficient(&m);
                let s = [0, 1, 2, 3].map(|k| (points[k].0.clone(), coeff(k)));
                let a0 = constant_term(&s);
                if a0.is_zero() {
                    continue;
                }
                limit += &match to_flux(c) {
                    Some(fc) => Poly::base(&fv, fc).scale(&a0),
                    None => Poly::constant(&fv, a0),
                };
            }
            match (to_flux(a), to_flux(b)) {
                (Some(fa), Some(fb)) => {
                    assert_eq!(limit, r_at_4(flux.get(fa, fb)), "({}, {})", a + 1, b + 1)
                }
                _ => assert!(limit.is_zero(), "x^4 is central: ({}, {})", a + 1, b + 1),
            }
        }
    }
}

#[test]
fn mtheory_rejects_bad_parameters() {
    let s = OctonionStructure::new();
    assert!(matches!(
        build_mtheory(&int(1), &int(4), &int(3), &s),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        build_mtheory(&int(0), &int(4), &int(0), &s),
        Err(Error::Singular(_))
    ));
}

// Octonion slots: xi_i = i - 1, sigma^i = i + 2, sigma^4 = 6.
const SIGMA4: usize = 6;

fn xi(i: usize) -> usize {
    i
}

fn sigma(i: usize) -> usize {
    i + 3
}

#[test]
fn octonion_component_brackets() {
    let t = build_octonion(&OctonionStructure::new());
    let v = t.vars().clone();
    for i in 0..3 {
        assert_eq!(t.get(SIGMA4, xi(i)), &linear(&v, &[(sigma(i), 2)]));
        assert_eq!(t.get(SIGMA4, sigma(i)), &linear(&v, &[(xi(i), -2)]));
        for j in 0..3 {
            let (e, k) = if i != j {
                (eps(i, j, 3 - i - j), 3 - i - j)
            } else {
                (0, 0)
            };
            assert_eq!(t.get(xi(i), xi(j)), &linear(&v, &[(xi(k), 2 * e)]));
            assert_eq!(t.get(sigma(i), sigma(j)), &linear(&v, &[(xi(k), -2 * e)]));
            // Mixed bracket with the sign of the epsilon term that antisymmetry forces.
            assert_eq!(
                t.get(sigma(i), xi(j)),
                &linear(&v, &[(SIGMA4, -2 * delta(i, j)), (sigma(k), -2 * e)]),
                "{{sigma^{}, xi_{}}}",
                i + 1,
                j + 1
            );
        }
    }
}

#[test]
fn octonion_three_brackets() {
    let t = build_octonion(&OctonionStructure::new());
    let v = t.vars().clone();
    let pi = t.jacobiator();
    for i in 0..3 {
        for j in 0..3 {
            let (e, k0) = if i != j {
                (eps(i, j, 3 - i - j), 3 - i - j)
            } else {
                (0, 0)
            };
            assert_eq!(
                pi.get(xi(i), xi(j), SIGMA4),
                linear(&v, &[(sigma(k0), 4 * e)])
            );
            assert_eq!(
                pi.get(sigma(i), sigma(j), SIGMA4),
                linear(&v, &[(sigma(k0), -4 * e)])
            );
            let mut xss = Vec::new();
            for k in 0..3 {
                let ijk = eps(i, j, k);
                assert_eq!(
                    pi.get(xi(i), xi(j), sigma(k)),
                    linear(
                        &v,
                        &[
                            (SIGMA4, -4 * ijk),
                            (sigma(i), -4 * delta(j, k)),
                            (sigma(j), 4 * delta(i, k))
                        ]
                    )
                );
                assert_eq!(
                    pi.get(xi(i), sigma(j), sigma(k)),
                    linear(&v, &[(xi(k), 4 * delta(i, j)), (xi(j), -4 * delta(i, k))])
                );
                assert_eq!(
                    pi.get(sigma(i), sigma(j), sigma(k)),
                    linear(&v, &[(SIGMA4, 4 * ijk)])
                );
                xss.push((xi(k), 4 * ijk));
            }
            assert_eq!(pi.get(xi(i), sigma(j), SIGMA4), linear(&v, &xss));
        }
    }
}

/// The first correction to the octonion bivector is `-Pi`, which is the
/// `4 eta_{ABCD} pi_C y_D` term. The same term is all that survives at first
/// order in `{xi_A, xi_B} - 2 eta_{ABC} xi_C` on the realized coordinates.
#[test]
fn octonion_first_correction_is_the_rank_four_term() {
    let s = OctonionStructure::new();
    let t = build_octonion(&s);
    let v = t.vars().clone();
    let r = realize(&t, 2).unwrap();
    let correction = r.theta_correction(1).unwrap();
    let omega = omega_n(&r, 1).unwrap();
    let x = bopp_apply(&r, 1).unwrap();
    let pi = t.jacobiator();
    for a in 0..7 {
        for b in 0..7 {
            let mut minus_pi = Poly::zero(&v);
            let mut eta_term = Poly::zero(&v);
            let mut lie = Poly::zero(&v);
            for c in 0..7 {
                minus_pi -= &(&pi.get(a, b, c) * &Poly::momentum(&v, c));
                lie += &x[c].scale(&int(2 * s.eta3(a, b, c) as i64));
                for d in 0..7 {
                    let e = s.eta4(a, b, c, d) as i64;
                    if e != 0 {
                        eta_term +=
                            &(&Poly::momentum(&v, c) * &Poly::base(&v, d)).scale(&int(4 * e));
                    }
                }
            }
            let first = if a < b {
                correction.assemble_lead(&[a, b]).alpha_coefficient(1)
            } else if a > b {
                -&correction.assemble_lead(&[b, a]).alpha_coefficient(1)
            } else {
                Poly::zero(&v)
            };
            assert_eq!(first, minus_pi, "({}, {})", a + 1, b + 1);
            assert_eq!(first, eta_term, "({}, {})", a + 1, b + 1);
            assert_eq!((&omega[a][b] - &lie).alpha_coefficient(1), eta_term);
        }
    }
}

#[test]
fn su2_matches_its_closed_form() {
    let t = build_su2();
    assert!(t.is_poisson());
    let r = realize(&t, 4).unwrap();
    assert_eq!(
        bopp_apply(&r, 4).unwrap(),
        closed_form_bopp(ClosedFormAlgebra::Su2, 4).unwrap()
    );
    let ext = extended_brackets(&r);
    let closed = closed_form_extended(ClosedFormAlgebra::Su2, 4).unwrap();
    assert_eq!(ext.x_xt, closed.x_xt);
    assert_eq!(ext.x_x, closed.x_x);
    assert!(r.theta_corrections().iter().all(|c| c.is_zero()));
}

#[test]
fn closed_forms_respect_the_oracle_cap() {
    assert!(matches!(
        closed_form_bopp(ClosedFormAlgebra::Su2, 7),
        Err(Error::Range { .. })
    ));
}
