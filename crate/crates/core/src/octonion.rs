//! Imaginary octonion structure constants and the octonion product.
//!
//! Indices are zero based throughout (`0..7` stands for `e_1..e_7`); reports
//! and counterexamples are converted to one-based labels.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::poly::{int, Rational};

/// One-based seed triples with `eta_{ABC} = +1`.
pub const ETA3_SEEDS: [[usize; 3]; 7] = [
    [1, 2, 3],
    [4, 3, 5],
    [4, 7, 1],
    [5, 1, 6],
    [5, 7, 2],
    [6, 2, 4],
    [6, 7, 3],
];

/// One-based seed quadruples with `eta_{ABDE} = +1`, oriented so that
/// `eta_{ABC} eta_{DEC} = d_AD d_BE - d_AE d_BD + eta_{ABDE}` holds.
pub const ETA4_SEEDS: [[usize; 4]; 7] = [
    [1, 2, 6, 7],
    [1, 3, 6, 4],
    [1, 4, 2, 5],
    [1, 5, 3, 7],
    [3, 2, 7, 4],
    [3, 2, 5, 6],
    [4, 5, 7, 6],
];

/// Sign of the permutation sorting `idx`, or 0 when an index repeats.
pub fn permutation_sign(idx: &[usize]) -> i8 {
    let mut v = idx.to_vec();
    let mut sign = 1i8;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OctonionStructure {
    eta3: Vec<i8>,
    eta4: Vec<i8>,
}

fn idx3(a: usize, b: usize, c: usize) -> usize {
    (a * 7 + b) * 7 + c
}

fn idx4(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 7 + b) * 7 + c) * 7 + d
}

fn delta(a: usize, b: usize) -> i32 {
    (a == b) as i32
}

impl Default for OctonionStructure {
    fn default() -> Self {
        Self::new()
    }
}

impl OctonionStructure {
    pub fn new() -> Self {
        Self::from_seeds(&ETA3_SEEDS, &ETA4_SEEDS)
    }

    /// Closes one-based seed tuples under permutations with the permutation sign.
    pub fn from_seeds(seeds3: &[[usize; 3]], seeds4: &[[usize; 4]]) -> Self {
        let mut eta3 = vec![0i8; 7 * 7 * 7];
        for s in seeds3 {
            let s = s.map(|i| i - 1);
            for a in 0..7 {
                for b in 0..7 {
                    for c in 0..7 {
                        let t = [a, b, c];
                        if is_permutation_of(&t, &s) {
                            eta3[idx3(a, b, c)] = permutation_sign(&relative_order(&t, &s));
                        }
                    }
                }
            }
        }
        let mut eta4 = vec![0i8; 7 * 7 * 7 * 7];
        for s in seeds4 {
            let s = s.map(|i| i - 1);
            for a in 0..7 {
                for b in 0..7 {
                    for c in 0..7 {
                        for d in 0..7 {
                            let t = [a, b, c, d];
                            if is_permutation_of(&t, &s) {
                                eta4[idx4(a, b, c, d)] = permutation_sign(&relative_order(&t, &s));
                            }
                        }
                    }
                }
            }
        }
        OctonionStructure { eta3, eta4 }
    }

    pub fn eta3(&self, a: usize, b: usize, c: usize) -> i8 {
        self.eta3[idx3(a, b, c)]
    }

    pub fn eta4(&self, a: usize, b: usize, c: usize, d: usize) -> i8 {
        self.eta4[idx4(a, b, c, d)]
    }

    /// Overwrites a single raw table entry without restoring antisymmetry.
    /// Only useful for exercising the consistency sweeps.
    pub fn set_eta3_entry(&mut self, a: usize, b: usize, c: usize, value: i8) {
        self.eta3[idx3(a, b, c)] = value;
    }

    pub fn set_eta4_entry(&mut self, a: usize, b: usize, c: usize, d: usize, value: i8) {
        self.eta4[idx4(a, b, c, d)] = value;
    }

    pub fn multiply(&self, x: &Octonion, y: &Octonion) -> Octonion {
        let mut re = &x.re * &y.re;
        let mut im: [Rational; 7] = std::array::from_fn(|a| &x.re * &y.im[a] + &x.im[a] * &y.re);
        for a in 0..7 {
            if x.im[a].is_zero() {
                continue;
            }
            for b in 0..7 {
                if y.im[b].is_zero() {
                    continue;
                }
                let p = &x.im[a] * &y.im[b];
                if a == b {
                    re -= &p;
                }
                for (c, slot) in im.iter_mut().enumerate() {
                    match self.eta3(a, b, c) {
                        0 => {}
                        s => *slot += &p * int(s as i64),
                    }
                }
            }
        }
        Octonion { re, im }
    }

    pub fn commutator(&self, x: &Octonion, y: &Octonion) -> Octonion {
        self.multiply(x, y).sub(&self.multiply(y, x))
    }

    /// `(1/3)([X,[Y,Z]] + [Z,[X,Y]] + [Y,[Z,X]])`.
    pub fn jacobiator(&self, x: &Octonion, y: &Octonion, z: &Octonion) -> Octonion {
        let c = |p: &Octonion, q: &Octonion| self.commutator(p, q);
        c(x, &c(y, z))
            .add(&c(z, &c(x, y)))
            .add(&c(y, &c(z, x)))
            .scale(&Rational::new(1.into(), 3.into()))
    }

    /// `(XY)Z - X(YZ)`.
    pub fn associator(&self, x: &Octonion, y: &Octonion, z: &Octonion) -> Octonion {
        self.multiply(&self.multiply(x, y), z)
            .sub(&self.multiply(x, &self.multiply(y, z)))
    }

    /// Exhaustive sweeps of the table identities.
    pub fn verify_contractions(&self) -> ContractionReport {
        ContractionReport {
            antisymmetry: self.check_antisymmetry(),
            eta3_eta3: self.check_eta3_contraction(),
            duality: self.check_duality(1),
            eta3_eta4: self.check_mixed_contraction(),
        }
    }

    fn check_antisymmetry(&self) -> CheckOutcome {
        let mut out = CheckOutcome::new("antisymmetry");
        for a in 0..7 {
            for b in 0..7 {
                for c in 0..7 {
                    let v = self.eta3(a, b, c);
                    let ok = [
                        -self.eta3(b, a, c),
                        -self.eta3(a, c, b),
                        -self.eta3(c, b, a),
                    ]
                    .iter()
                    .all(|&w| w == v);
                    if !out.record(ok, &[a, b, c]) {
                        return out;
                    }
                    for d in 0..7 {
                        let v = self.eta4(a, b, c, d);
                        let ok = [
                            -self.eta4(b, a, c, d),
                            -self.eta4(a, c, b, d),
                            -self.eta4(a, b, d, c),
                        ]
                        .iter()
                        .all(|&w| w == v);
                        if !out.record(ok, &[a, b, c, d]) {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    fn check_eta3_contraction(&self) -> CheckOutcome {
        let mut out = CheckOutcome::new("eta3 eta3 contraction");
        for a in 0..7 {
            for b in 0..7 {
                for d in 0..7 {
                    for e in 0..7 {
                        let lhs: i32 = (0..7)
                            .map(|c| self.eta3(a, b, c) as i32 * self.eta3(d, e, c) as i32)
                            .sum();
                        let rhs = delta(a, d) * delta(b, e) - delta(a, e) * delta(b, d)
                            + self.eta4(a, b, d, e) as i32;
                        if !out.record(lhs == rhs, &[a, b, d, e]) {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    /// `eta_{ABDE} = orientation/6 * eps_{ABDEFGH} eta_{FGH}` with
    /// `eps_{1234567} = +1`.
    pub fn check_duality(&self, orientation: i8) -> CheckOutcome {
        let mut out = CheckOutcome::new("duality");
        for a in 0..7 {
            for b in 0..7 {
                for d in 0..7 {
                    for e in 0..7 {
                        let mut six_times = 0i32;
                        for f in 0..7 {
                            for g in 0..7 {
                                for h in 0..7 {
                                    let eta = self.eta3(f, g, h);
                                    if eta != 0 {
                                        six_times += permutation_sign(&[a, b, d, e, f, g, h])
                                            as i32
                                            * eta as i32;
                                    }
                                }
                            }
                        }
                        let ok = six_times * orientation as i32 == 6 * self.eta4(a, b, d, e) as i32;
                        if !out.record(ok, &[a, b, d, e]) {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    fn check_mixed_contraction(&self) -> CheckOutcome {
        let mut out = CheckOutcome::new("eta3 eta4 contraction");
        for b in 0..7 {
            for c in 0..7 {
                for d in 0..7 {
                    for e in 0..7 {
                        for f in 0..7 {
                            let lhs: i32 = (0..7)
                                .map(|a| self.eta3(a, e, f) as i32 * self.eta4(a, b, c, d) as i32)
                                .sum();
                            let t = |x: usize, y: usize, z: usize| self.eta3(x, y, z) as i32;
                            let rhs = delta(e, b) * t(f, c, d) - delta(f, b) * t(e, c, d)
                                + delta(e, c) * t(b, f, d)
                                - delta(f, c) * t(b, e, d)
                                + delta(e, d) * t(b, c, f)
                                - delta(f, d) * t(b, c, e);
                            if !out.record(lhs == rhs, &[b, c, d, e, f]) {
                                return out;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Checks `[e_A, e_B, e_C] = -4 eta_{ABCD} e_D` for every `A < B < C`.
    pub fn verify_jacobiator_table(&self) -> CheckOutcome {
        let mut out = CheckOutcome::new("jacobiator table");
        for a in 0..7 {
            for b in a + 1..7 {
                for c in b + 1..7 {
                    let j =
                        self.jacobiator(&Octonion::unit(a), &Octonion::unit(b), &Octonion::unit(c));
                    let expected = Octonion {
                        re: Rational::zero(),
                        im: std::array::from_fn(|d| int(-4 * self.eta4(a, b, c, d) as i64)),
                    };
                    if !out.record(j == expected, &[a, b, c]) {
                        return out;
                    }
                }
            }
        }
        out
    }
}

fn is_permutation_of(t: &[usize], s: &[usize]) -> bool {
    let mut a = t.to_vec();
    let mut b = s.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b && permutation_sign(&b) != 0
}

/// Positions of the entries of `t` within `s`.
fn relative_order(t: &[usize], s: &[usize]) -> Vec<usize> {
    t.iter()
        .map(|x| s.iter().position(|y| y == x).expect("permutation"))
        .collect()
}

/// Outcome of one exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub checked: usize,
    /// First failing index tuple, one based.
    pub counterexample: Option<Vec<usize>>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        CheckOutcome {
            name,
            checked: 0,
            counterexample: None,
        }
    }

    /// Returns `false` once a failure has been recorded.
    fn record(&mut self, ok: bool, idx: &[usize]) -> bool {
        self.checked += 1;
        if !ok {
            self.counterexample = Some(idx.iter().map(|i| i + 1).collect());
        }
        ok
    }

    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractionReport {
    pub antisymmetry: CheckOutcome,
    pub eta3_eta3: CheckOutcome,
    pub duality: CheckOutcome,
    pub eta3_eta4: CheckOutcome,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.outcomes().iter().all(|o| o.passed())
    }

    pub fn outcomes(&self) -> [&CheckOutcome; 4] {
        [
            &self.antisymmetry,
            &self.eta3_eta3,
            &self.duality,
            &self.eta3_eta4,
        ]
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.outcomes().into_iter().find(|o| !o.passed())
    }
}

/// `re + im_A e_A` with exact rational components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Octonion {
    pub re: Rational,
    pub im: [Rational; 7],
}

impl Octonion {
    pub fn zero() -> Self {
        Octonion {
            re: Rational::zero(),
            im: std::array::from_fn(|_| Rational::zero()),
        }
    }

    pub fn one() -> Self {
        Octonion {
            re: Rational::one(),
            ..Self::zero()
        }
    }

    /// Imaginary unit `e_{a+1}`.
    pub fn unit(a: usize) -> Self {
        let mut o = Self::zero();
        o.im[a] = Rational::one();
        o
    }

    pub fn new(re: Rational, im: [Rational; 7]) -> Self {
        Octonion { re, im }
    }

    pub fn add(&self, o: &Octonion) -> Octonion {
        Octonion {
            re: &self.re + &o.re,
            im: std::array::from_fn(|a| &self.im[a] + &o.im[a]),
        }
    }

    pub fn sub(&self, o: &Octonion) -> Octonion {
        Octonion {
            re: &self.re - &o.re,
            im: std::array::from_fn(|a| &self.im[a] - &o.im[a]),
        }
    }

    pub fn scale(&self, c: &Rational) -> Octonion {
        Octonion {
            re: &self.re * c,
            im: std::array::from_fn(|a| &self.im[a] * c),
        }
    }
}
