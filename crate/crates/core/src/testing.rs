//! Seeded random bivectors for tests and benchmarks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::{rat, Monomial, Poly, Rational, VarSet};
use crate::realization::Bivector;

fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    let num = loop {
        let n: i64 = rng.gen_range(-3..=3);
        if n != 0 {
            break n;
        }
    };
    rat(num, rng.gen_range(1..=2))
}

/// A random polynomial in the base variables with `terms` monomials of total
/// degree at most `max_degree`.
pub fn random_base_poly(
    rng: &mut ChaCha8Rng,
    vars: &Arc<VarSet>,
    terms: usize,
    max_degree: u32,
) -> Poly {
    let dim = vars.dim();
    let mut out = Poly::zero(vars);
    for _ in 0..terms {
        let degree = rng.gen_range(0..=max_degree);
        let mut mono = Monomial::one(vars.num_slots());
        for _ in 0..degree {
            let i = rng.gen_range(0..dim);
            let slot = 1 + i;
            mono.set_exponent(slot, mono.exponent(slot) + 1);
        }
        out += &Poly::from_monomials(vars, [(mono, small_rational(rng))]);
    }
    out
}

/// A bivector with each upper-triangular entry independently zero or a sparse
/// random polynomial of degree at most `max_degree`. Generically fails Jacobi.
pub fn random_quasi_poisson(seed: u64, dim: usize, max_degree: u32) -> Bivector {
    let vars = VarSet::new(dim, vec![]).expect("valid dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            if rng.gen_bool(0.75) {
                let terms = rng.gen_range(1..=2);
                entries.push((i, j, random_base_poly(&mut rng, &vars, terms, max_degree)));
            }
        }
    }
    Bivector::from_entries(&vars, entries).expect("random entries are valid")
}

/// A Poisson bivector of Nambu form `Theta^{ij} = f eps^{ijk} d_k C` on the
/// first three coordinates, with `f` linear and `C` quadratic; remaining
/// coordinates enter only as spectators. Needs `dim >= 3`.
pub fn random_poisson(seed: u64, dim: usize) -> Bivector {
    assert!(dim >= 3, "Nambu form needs at least three coordinates");
    let vars = VarSet::new(dim, vec![]).expect("valid dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_base_poly(&mut rng, &vars, 2, 1);
    let c = random_base_poly(&mut rng, &vars, 3, 2);
    let entries = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
        .into_iter()
        .map(|(i, j, k)| (i, j, &f * &c.d_base(k)));
    Bivector::from_entries(&vars, entries).expect("Nambu entries are valid")
}
