use proptest::prelude::*;
use symreal_core::error::Error;
use symreal_core::poly::{Poly, Substitution, Var};
use symreal_core::realization::{
    bopp_apply, compute_f, compute_g, expected_x_x, extended_brackets, invert_bopp, jacobiator,
    omega_n, quasi_bracket, realize, three_bracket, verify_contract, Bivector,
};
use symreal_core::tensor::{partial_symmetrization, total_symmetrization};
use symreal_core::testing::{random_base_poly, random_poisson, random_quasi_poisson};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bivector(seed: u64, dim: usize) -> Bivector {
    random_quasi_poisson(seed, dim, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `{x_n^i, x_n^j} = alpha omega_{n-1}^{ij}` with the brackets taken by the
    /// plain canonical bracket rather than the engine's gradient cache.
    #[test]
    fn contract_holds(seed in 0u64..10_000, dim in 3usize..=4, order in 1usize..=3) {
        let t = bivector(seed, dim);
        let r = realize(&t, order).unwrap();
        prop_assert!(verify_contract(&r));
        let x = bopp_apply(&r, order).unwrap();
        let omega = omega_n(&r, order - 1).unwrap();
        let bound = order as u32 + 1;
        for i in 0..dim {
            for j in 0..dim {
                let lhs = x[i].canonical_bracket(&x[j]).unwrap().truncate(bound);
                prop_assert_eq!(lhs, omega[i][j].shift_alpha(1).truncate(bound));
            }
        }
    }

    #[test]
    fn lower_orders_are_stable(seed in 0u64..10_000, dim in 3usize..=4) {
        let t = bivector(seed, dim);
        let r2 = realize(&t, 2).unwrap();
        let r3 = realize(&t, 3).unwrap();
        prop_assert_eq!(r2.gammas(), &r3.gammas()[..2]);
        prop_assert_eq!(r2.theta_corrections(), &r3.theta_corrections()[..1]);
    }

    #[test]
    fn poisson_inputs_need_no_corrections(seed in 0u64..10_000, dim in 3usize..=4) {
        let t = random_poisson(seed, dim);
        let r = realize(&t, 3).unwrap();
        prop_assert!(r.diagnostics().poisson_input);
        prop_assert!(r.theta_corrections().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn inversion_round_trips(seed in 0u64..10_000, order in 1usize..=3) {
        let t = bivector(seed, 3);
        let r = realize(&t, order).unwrap();
        let v = t.vars().clone();
        let bound = order as u32 + 1;
        let y = invert_bopp(&r);
        let x = bopp_apply(&r, order).unwrap();
        let mut sub = Substitution::new(&v, Some(bound));
        for (i, yi) in y.iter().enumerate() {
            sub.set(Var::Base(i), yi.clone()).unwrap();
        }
        for (i, xi) in x.iter().enumerate() {
            prop_assert_eq!(sub.apply(xi).truncate(bound), Poly::base(&v, i));
        }
    }

    #[test]
    fn extended_brackets_follow_the_corrected_bivector(seed in 0u64..10_000, order in 1usize..=3) {
        let t = bivector(seed, 3);
        let r = realize(&t, order).unwrap();
        let v = t.vars().clone();
        let bound = order as u32 + 1;
        let ext = extended_brackets(&r);
        let expected = expected_x_x(&r);
        let x = bopp_apply(&r, order).unwrap();
        let mut sub = Substitution::new(&v, Some(bound));
        for (i, yi) in invert_bopp(&r).into_iter().enumerate() {
            sub.set(Var::Base(i), yi).unwrap();
        }
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(&ext.x_x[i][j], &expected[i][j].truncate(bound));
                let x_pi = x[i].canonical_bracket(&Poly::momentum(&v, j)).unwrap();
                prop_assert_eq!(&ext.x_xt[i][j], &sub.apply(&x_pi).truncate(bound));
                prop_assert!(ext.xt_xt[i][j].is_zero());
            }
        }
    }

    #[test]
    fn three_bracket_is_the_jacobiator(seed in 0u64..10_000) {
        let t = bivector(seed, 3);
        let v = t.vars().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_base_poly(&mut rng, &v, 2, 2);
        let g = random_base_poly(&mut rng, &v, 2, 2);
        let h = random_base_poly(&mut rng, &v, 2, 2);
        prop_assert_eq!(quasi_bracket(&f, &g, &t).unwrap(), -&quasi_bracket(&g, &f, &t).unwrap());
        let pi = jacobiator(&t);
        let mut expected = Poly::zero(&v);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let d = &(&f.d_base(i) * &g.d_base(j)) * &h.d_base(k);
                    expected += &(&pi.get(i, j, k) * &d);
                }
            }
        }
        prop_assert_eq!(three_bracket(&f, &g, &h, &t).unwrap(), expected.shift_alpha(2));
    }

    #[test]
    fn realization_is_deterministic(seed in 0u64..10_000) {
        let t = bivector(seed, 4);
        let a = realize(&t, 3).unwrap();
        let b = realize(&t, 3).unwrap();
        for (ga, gb) in a.gammas().iter().zip(b.gammas()) {
            prop_assert_eq!(ga.to_entries(), gb.to_entries());
        }
        prop_assert_eq!(a.diagnostics(), b.diagnostics());
    }
}

/// For Poisson input the G tensor at tail n is the alpha^n part of
/// `Theta(x_n) - sum_{m=1..n} {A_{n+1-m}, A_m}`, with `A_m = Gamma^{(m)} pi^m`.
#[test]
fn g_tensor_matches_bracket_expansion() {
    for seed in 0..4 {
        let t = random_poisson(seed, 3);
        let v = t.vars().clone();
        let r = realize(&t, 3).unwrap();
        let assembled: Vec<_> = r.gammas().iter().map(|g| g.assemble()).collect();
        let a = |m: usize, i: usize| {
            assembled[m - 1]
                .get(&vec![i])
                .cloned()
                .unwrap_or_else(|| Poly::zero(&v))
                .alpha_coefficient(m as u32)
        };
        for n in 2..=2 {
            let x = bopp_apply(&r, n).unwrap();
            let g = r.g_tensors()[n].assemble();
            for i in 0..3 {
                for j in i + 1..3 {
                    let assignment: Vec<_> = (0..3).map(|k| (Var::Base(k), x[k].clone())).collect();
                    let mut expected = t
                        .get(i, j)
                        .substitute(&assignment)
                        .unwrap()
                        .alpha_coefficient(n as u32);
                    for m in 1..=n {
                        expected -= &a(n + 1 - m, i).canonical_bracket(&a(m, j)).unwrap();
                    }
                    let got = g
                        .get(&vec![i, j])
                        .cloned()
                        .unwrap_or_else(|| Poly::zero(&v))
                        .alpha_coefficient(n as u32);
                    assert_eq!(got, expected, "seed {seed}, ({}, {})", i + 1, j + 1);
                }
            }
        }
    }
}

#[test]
fn young_diagnostics_hold_for_random_inputs() {
    for seed in 0..6 {
        let r = realize(&bivector(seed, 4), 3).unwrap();
        assert!(r.gammas().iter().all(|g| total_symmetrization(g).is_zero()));
        assert!(r
            .theta_corrections()
            .iter()
            .all(|c| partial_symmetrization(c, 1).is_zero()));
        let d = r.diagnostics();
        assert!(d.contract_holds && d.fundamental_identity_zero);
        assert!(d.orders.iter().all(|o| o.gamma_normalization == -1));
        assert!(d
            .orders
            .iter()
            .filter_map(|o| o.theta_normalization)
            .all(|s| s == -1));
    }
}

#[test]
fn recomputed_intermediates_agree() {
    let t = bivector(11, 4);
    let r = realize(&t, 3).unwrap();
    for n in 0..3 {
        assert_eq!(compute_g(&r, n).unwrap(), r.g_tensors()[n]);
    }
    for n in 1..3 {
        assert_eq!(compute_f(&r, n).unwrap(), r.f_tensors()[n - 1]);
    }
    assert!(compute_f(&r, 3).is_ok());
    assert!(matches!(compute_g(&r, 3), Err(Error::Range { .. })));
    assert!(matches!(compute_f(&r, 0), Err(Error::Range { .. })));
    assert!(matches!(omega_n(&r, 3), Err(Error::Range { .. })));
    assert!(matches!(r.theta_correction(3), Err(Error::Range { .. })));
}

#[test]
fn momentum_arguments_are_rejected() {
    let t = bivector(1, 3);
    let v = t.vars().clone();
    let err = quasi_bracket(&Poly::momentum(&v, 0), &Poly::base(&v, 1), &t);
    assert!(matches!(err, Err(Error::Precondition(_))));
}
