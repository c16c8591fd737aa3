//! Independent oracles shared by the integration tests.  Nothing here calls
//! into the algorithms under test except to build inputs.

#![allow(dead_code)]

use hwq_core::{BaseManifold, FactorKind, ManifoldState, Presentation, Word};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::Rng;

/// `C(n, 2) + eps_n` with the parity defect computed from the binomial.
pub fn free_beta2(n: i64) -> i64 {
    let c = n * (n - 1) / 2;
    c + (c % 2)
}

/// Second Betti number of the minimal realizer of `Z^n`.
pub fn h_oracle(n: i64) -> i64 {
    match n {
        3 => 6,
        5 => 14,
        _ => free_beta2(n),
    }
}

/// Determinant by cofactor expansion.
pub fn det(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut total = BigInt::zero();
    for j in 0..n {
        if m[0][j] == 0 {
            continue;
        }
        let minor: Vec<Vec<i64>> =
            m[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| *x).collect()).collect();
        let term = BigInt::from(m[0][j]) * det(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// gcd of all `k x k` minors; zero when every minor vanishes.
pub fn minor_gcd(a: &[Vec<i64>], k: usize) -> BigInt {
    let (r, c) = (a.len(), a.first().map_or(0, Vec::len));
    let mut g = BigInt::zero();
    for rows in subsets(r, k) {
        for cols in subsets(c, k) {
            let m: Vec<Vec<i64>> = rows.iter().map(|&i| cols.iter().map(|&j| a[i][j]).collect()).collect();
            g = g.gcd(&det(&m));
        }
    }
    g.abs()
}

/// Element of the free class-2 nilpotent group: abelian part plus
/// coefficients on pairs `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heis {
    pub a: Vec<i64>,
    pub c: Vec<Vec<i64>>,
}

impl Heis {
    pub fn one(n: usize) -> Self {
        Heis { a: vec![0; n], c: vec![vec![0; n]; n] }
    }

    /// `(a, c)(b, d) = (a + b, c + d + beta(a, b))`, `beta(a, b)_ij = a_i b_j`.
    pub fn mul(&self, o: &Heis) -> Heis {
        let n = self.a.len();
        let mut r = Heis::one(n);
        for i in 0..n {
            r.a[i] = self.a[i] + o.a[i];
            for j in i + 1..n {
                r.c[i][j] = self.c[i][j] + o.c[i][j] + self.a[i] * o.a[j];
            }
        }
        r
    }

    pub fn generator_power(n: usize, g: usize, e: i64) -> Heis {
        let mut r = Heis::one(n);
        r.a[g] = e;
        r
    }

    pub fn inv(&self) -> Heis {
        let n = self.a.len();
        let mut r = Heis::one(n);
        for i in 0..n {
            r.a[i] = -self.a[i];
            for j in i + 1..n {
                r.c[i][j] = -self.c[i][j] + self.a[i] * self.a[j];
            }
        }
        r
    }
}

/// Evaluates a word over a presentation without eliminations.
pub fn eval(n: usize, w: &Word) -> Heis {
    let mut r = Heis::one(n);
    for l in w.letters() {
        let e: i64 = (&l.exp).try_into().expect("small exponent");
        r = r.mul(&Heis::generator_power(n, l.gen.index(), e));
    }
    r
}

pub fn free_abelian_product(ranks: &[(u32, &str)]) -> Presentation {
    let mut p = Presentation::new();
    for (r, prefix) in ranks {
        let names: Vec<String> = (1..=*r).map(|i| format!("{prefix}{i}")).collect();
        p.add_factor(FactorKind::FreeAbelian(*r), &names).unwrap();
    }
    p
}

pub fn random_word(rng: &mut impl Rng, p: &Presentation, max_len: usize) -> Word {
    let live = p.live_generators();
    let len = rng.gen_range(1..=max_len);
    let tokens: Vec<(String, BigInt)> = (0..len)
        .map(|_| {
            let g = live[rng.gen_range(0..live.len())];
            let mut e = rng.gen_range(-2i64..=2);
            if e == 0 {
                e = 1;
            }
            (p.name(g).to_string(), BigInt::from(e))
        })
        .collect();
    p.make_word(&tokens).unwrap()
}

pub fn random_base(rng: &mut impl Rng) -> BaseManifold {
    match rng.gen_range(0..7) {
        0 => BaseManifold::S4,
        1 => BaseManifold::S1xS3,
        2 => BaseManifold::FxS2(2 * rng.gen_range(1..3)),
        3 => BaseManifold::FxF(2, 2 * rng.gen_range(1..3)),
        4 => BaseManifold::T4,
        5 => BaseManifold::LensSumxS1(vec![rng.gen_range(2..6)]),
        _ => BaseManifold::FxS2(2),
    }
}

/// Euler characteristic of a base manifold, from the product formula.
pub fn base_chi(b: &BaseManifold) -> i64 {
    match b {
        BaseManifold::S4 => 2,
        BaseManifold::S1xS3 | BaseManifold::T4 | BaseManifold::LensSumxS1(_) => 0,
        BaseManifold::FxS2(a) => 2 * (2 - *a as i64),
        BaseManifold::FxF(a, b) => (2 - *a as i64) * (2 - *b as i64),
    }
}

/// A single generator or a two-letter word `x_i y_j^{+-1}`, over a product
/// of two free abelian factors named `x` and `y`.
pub fn mixed_word(rng: &mut impl Rng, p: &Presentation) -> Word {
    let live = p.live_generators();
    let xs: Vec<_> = live.iter().filter(|g| p.name(**g).starts_with('x')).collect();
    let ys: Vec<_> = live.iter().filter(|g| p.name(**g).starts_with('y')).collect();
    if rng.gen_bool(0.5) {
        return p.gen_word(live[rng.gen_range(0..live.len())]);
    }
    let x = p.name(*xs[rng.gen_range(0..xs.len())]).to_string();
    let y = p.name(*ys[rng.gen_range(0..ys.len())]).to_string();
    let e = if rng.gen_bool(0.5) { 1 } else { -1 };
    p.make_word(&[(x, BigInt::from(1)), (y, BigInt::from(e))]).unwrap()
}

/// A random construction step with the expected change in Euler
/// characteristic; `None` when the drawn operation does not apply.
pub fn random_step(rng: &mut impl Rng, m: &ManifoldState) -> Option<(ManifoldState, i64)> {
    let live = m.pres.live_generators();
    let sum = |rng: &mut _| {
        let b = random_base(rng);
        let d = base_chi(&b) - 2;
        m.sum_base(b, None).ok().map(|s| (s, d))
    };
    if live.is_empty() {
        return sum(rng);
    }
    match rng.gen_range(0..5) {
        0 => sum(rng),
        1 => m.surgery(&random_word(rng, &m.pres, 3)).ok().map(|s| (s, 2)),
        2 => {
            let (u, v) = (random_word(rng, &m.pres, 2), random_word(rng, &m.pres, 2));
            m.surgery_commutator(&u, &v).ok().map(|s| (s, 2))
        }
        3 => {
            let g = live[rng.gen_range(0..live.len())];
            let w = random_word(rng, &m.pres, 2);
            m.identify(g, &w).ok().map(|s| (s, 2))
        }
        _ => {
            let t = [0; 4].map(|_| random_word(rng, &m.pres, 2));
            m.four_reduce(&t).ok().map(|s| (s, 6))
        }
    }
}
