//! Closed-form invariant values and bounds, realizability closures, the
//! exterior-algebra witnesses and the tuple search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::deduce::{prove_abelian, Certificate, Limits};
use crate::mfd::{BaseManifold, ManifoldState, MfdError};
use crate::nil2::{spanning_check, Tuple4};
use crate::script::{corpus_entry, parse_script, run_script, Command, Script};
use crate::words::{generator_names, FactorKind, Presentation, Word};
use crate::zlinalg::{abelianize, AbelianInvariants};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("lower bound {lower} exceeds upper bound {upper}: inconsistent input")]
    LowerExceedsUpper { lower: BigInt, upper: BigInt },
    #[error("no torsion summands")]
    NoTorsion,
    #[error("torsion list is empty; use the free abelian formula")]
    EmptyTorsion,
    #[error("invalid group: {0}")]
    InvalidSpec(String),
    #[error("no bundled realizer for Z^{0}")]
    NoRealizer(u64),
    #[error("construction family {0} does not apply to this group")]
    FamilyNotApplicable(u8),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("exterior algebras of different ambient dimension")]
    AmbientMismatch,
    #[error("isotropy witness is only defined for n = 3 and n = 5")]
    UnsupportedN,
}

fn c2(n: u64) -> BigInt {
    binomial(BigInt::from(n), BigInt::from(2))
}

/// 1 when `C(n, 2)` is odd.
pub fn epsilon(n: u64) -> u8 {
    u8::from(n % 4 == 2 || n % 4 == 3)
}

/// Minimal second Betti number for fundamental group `Z^n`.
pub fn h_value(n: u64) -> BigInt {
    match n {
        3 => BigInt::from(6),
        5 => BigInt::from(14),
        _ => c2(n) + epsilon(n),
    }
}

/// Minimal Euler characteristic for fundamental group `Z^n`, by cases.
pub fn q_free_abelian(n: u64) -> BigInt {
    let n = BigInt::from(n);
    let base = (&n - 1) * (&n - 4) / 2;
    let r: u64 = (&n % 4u32).to_u64().expect("small");
    if n == BigInt::from(3) {
        BigInt::from(2)
    } else if n == BigInt::from(5) {
        BigInt::from(6)
    } else if r == 0 || r == 1 {
        base
    } else {
        base + 1
    }
}

/// One row of the free abelian table: `n, C(n,2), eps, h(n), q(Z^n)`.
pub fn free_row(n: u64) -> (u64, BigInt, u8, BigInt, BigInt) {
    (n, c2(n), epsilon(n), h_value(n), q_free_abelian(n))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsReport {
    pub lower: BigInt,
    pub upper: BigInt,
    pub exact: Option<BigInt>,
    pub provenance: Vec<String>,
}

impl BoundsReport {
    fn new(lower: BigInt, upper: BigInt, provenance: Vec<String>) -> Result<Self, BoundsError> {
        if lower > upper {
            return Err(BoundsError::LowerExceedsUpper { lower, upper });
        }
        let exact = (lower == upper).then(|| lower.clone());
        Ok(BoundsReport { lower, upper, exact, provenance })
    }
}

/// `2 - 2 beta1 + beta2 <= q <= 2 - 2 deficiency`.
pub fn hw_bounds(beta1: i64, beta2: i64, deficiency: i64) -> Result<BoundsReport, BoundsError> {
    if beta1 < 0 || beta2 < 0 {
        return Err(BoundsError::InvalidSpec("Betti numbers must be nonnegative".into()));
    }
    BoundsReport::new(
        BigInt::from(2 - 2 * beta1 + beta2),
        BigInt::from(2 - 2 * deficiency),
        vec!["lower: 2-2b1+b2".into(), "upper: 2-2def".into()],
    )
}

/// `Z/d_1 + ... + Z/d_k + Z^n` with `d_1 | d_2 | ... | d_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianGroupSpec {
    pub torsion: Vec<u64>,
    pub free_rank: u64,
}

impl AbelianGroupSpec {
    pub fn new(torsion: Vec<u64>, free_rank: u64) -> Result<Self, BoundsError> {
        if torsion.iter().any(|&d| d < 2) {
            return Err(BoundsError::InvalidSpec("torsion orders must be at least 2".into()));
        }
        if torsion.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(BoundsError::InvalidSpec("torsion orders must form a divisibility chain".into()));
        }
        Ok(AbelianGroupSpec { torsion, free_rank })
    }

    pub fn k(&self) -> u64 {
        self.torsion.len() as u64
    }

    pub fn invariants(&self) -> AbelianInvariants {
        AbelianInvariants {
            free_rank: self.free_rank as usize,
            torsion: self.torsion.iter().map(|&d| BigInt::from(d)).collect(),
        }
    }
}

impl fmt::Display for AbelianGroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.invariants())
    }
}

/// Ranks of `H_1` and `H_2` with coefficients in `Z/p` for a prime `p | d_1`.
pub fn mod_p_ranks(spec: &AbelianGroupSpec) -> Result<(BigInt, BigInt), BoundsError> {
    let (k, n) = (spec.k(), spec.free_rank);
    if k == 0 {
        return Err(BoundsError::NoTorsion);
    }
    Ok((BigInt::from(k + n), c2(k + n) + k))
}

/// Euler characteristic the torsion construction `family` (1, 2 or 3)
/// reaches, from the free abelian minima; `None` when it does not apply.
pub fn family_chi(family: u8, k: u64, n: u64) -> Option<BigInt> {
    match family {
        1 => Some(BigInt::from(2) - 2 * BigInt::from(n) + h_value(k + n)),
        2 if n >= 1 => Some(h_value(k + n - 1)),
        3 if n == 0 => Some(2 + h_value(k - 1)),
        _ => None,
    }
}

/// Runs the bundled `Z^m` realizer, skipping its expectations.
pub fn realizer(m: u64) -> Result<ManifoldState, BoundsError> {
    let entry = corpus_entry(&format!("m{m:02}")).ok_or(BoundsError::NoRealizer(m))?;
    let script = parse_script(entry.name, entry.text).map_err(|e| BoundsError::Construction(e.to_string()))?;
    let commands: Vec<Command> =
        script.commands.iter().filter(|c| !matches!(c, Command::Expect(_))).cloned().collect();
    let stripped = Script { commands, ..script };
    let report = run_script(&stripped, Limits::default()).map_err(|e| BoundsError::Construction(e.to_string()))?;
    Ok(report.final_state)
}

fn mfd(e: MfdError) -> BoundsError {
    BoundsError::Construction(e.to_string())
}

/// Builds the torsion construction `family` for `spec` from the bundled
/// free abelian realizers.
pub fn construct_family(family: u8, spec: &AbelianGroupSpec) -> Result<ManifoldState, BoundsError> {
    let (k, n) = (spec.k() as usize, spec.free_rank as usize);
    if k == 0 {
        return Err(BoundsError::EmptyTorsion);
    }
    let power = |m: &ManifoldState, g: &Word, d: u64| -> Result<ManifoldState, BoundsError> {
        m.surgery(&m.pres.power(g, &BigInt::from(d)).map_err(|e| mfd(e.into()))?).map_err(mfd)
    };
    let lens_prefix = ["p".to_string()];
    match family {
        1 => {
            let mut m = realizer((k + n) as u64)?;
            let live = m.pres.live_generators();
            for (i, &d) in spec.torsion.iter().enumerate() {
                let g = m.pres.gen_word(live[i]);
                m = power(&m, &g, d)?;
            }
            Ok(m)
        }
        2 => {
            if n == 0 {
                return Err(BoundsError::FamilyNotApplicable(2));
            }
            let b = realizer((k + n - 1) as u64)?;
            let live = b.pres.live_generators();
            let mut m = b.sum_base(BaseManifold::LensSumxS1(spec.torsion.clone()), Some(&lens_prefix)).map_err(mfd)?;
            let names = generator_names("p", k + 1);
            for (i, g) in live.iter().take(k).enumerate() {
                let p = m.pres.lookup(&names[i]).expect("lens generator");
                let w = m.pres.gen_word(*g);
                m = m.identify(p, &w).map_err(mfd)?;
            }
            let circle = m.pres.parse_word(&names[k]).map_err(|e| mfd(e.into()))?;
            for g in &live[k..] {
                let w = m.pres.gen_word(*g);
                m = m.surgery_commutator(&circle, &w).map_err(mfd)?;
            }
            Ok(m)
        }
        3 => {
            if n != 0 {
                return Err(BoundsError::FamilyNotApplicable(3));
            }
            let dk = *spec.torsion.last().expect("k >= 1");
            if k == 1 {
                let m = ManifoldState::base_with(BaseManifold::S1xS3, &lens_prefix).map_err(mfd)?;
                let g = m.pres.parse_word("p1").map_err(|e| mfd(e.into()))?;
                return power(&m, &g, dk);
            }
            let b = realizer((k - 1) as u64)?;
            let live = b.pres.live_generators();
            let lens = spec.torsion[..k - 1].to_vec();
            let mut m = b.sum_base(BaseManifold::LensSumxS1(lens), Some(&lens_prefix)).map_err(mfd)?;
            let names = generator_names("p", k);
            for (i, g) in live.iter().enumerate() {
                let p = m.pres.lookup(&names[i]).expect("lens generator");
                let w = m.pres.gen_word(*g);
                m = m.identify(p, &w).map_err(mfd)?;
            }
            let circle = m.pres.parse_word(&names[k - 1]).map_err(|e| mfd(e.into()))?;
            power(&m, &circle, dk)
        }
        f => Err(BoundsError::FamilyNotApplicable(f)),
    }
}

/// Bounds on the minimal Euler characteristic of a finitely generated
/// abelian group with torsion.
pub fn abelian_q_bounds(spec: &AbelianGroupSpec) -> Result<BoundsReport, BoundsError> {
    let (k, n) = (spec.k(), spec.free_rank);
    if k == 0 {
        return Err(BoundsError::EmptyTorsion);
    }
    let mod_p = BigInt::from(1) - BigInt::from(n) + c2(n + k - 1);
    let rational = BigInt::from(2) - 2 * BigInt::from(n) + c2(n);
    let exact = |v: i64, clause: &str| {
        BoundsReport::new(BigInt::from(v), BigInt::from(v), vec![format!("exact: {clause}")])
    };
    if k == 1 && n == 0 {
        return exact(2, "single cyclic group");
    }
    if k == 2 && n == 0 {
        return exact(2, "two cyclic summands");
    }
    let ck = c2(k);
    if n == 1 && (&ck % 2u32).is_zero() && k != 5 {
        let v = ck.to_i64().expect("small");
        return exact(v, "C(k,2) even, rank one, k != 5");
    }
    let (lower, lower_tag) = if mod_p >= rational {
        (mod_p.clone(), "lower: mod-p homology 1-n+C(n+k-1,2)")
    } else {
        (rational, "lower: rational homology 2-2n+C(n,2)")
    };
    let mut provenance = vec![lower_tag.to_string()];
    if !(3..=6).contains(&(k + n)) {
        let a = BigInt::from((n as i64 - 1).abs()) + epsilon(n + k - 1);
        let b = BigInt::from(k) + epsilon(n + k);
        let (gap, tag) = if a <= b {
            (a, "upper: mod-p value + |n-1| + eps(n+k-1)")
        } else {
            (b, "upper: mod-p value + k + eps(n+k)")
        };
        provenance.push(tag.to_string());
        return BoundsReport::new(lower, mod_p + gap, provenance);
    }
    let mut best: Option<(BigInt, u8)> = None;
    for family in 1..=3u8 {
        if family_chi(family, k, n).is_none() {
            continue;
        }
        let m = construct_family(family, spec)?;
        let chi = BigInt::from(m.chi);
        if best.as_ref().is_none_or(|(b, _)| chi < *b) {
            best = Some((chi, family));
        }
    }
    let (upper, family) = best.expect("family 1 always applies");
    provenance.push(format!("upper: construction family {family}"));
    BoundsReport::new(lower, upper, provenance)
}

/// Realizable pairs `(m, n)`: the closure of the three seed pairs under
/// stacking in either coordinate, entries at most `max`.
pub fn r_closure(max: u32) -> BTreeSet<(u32, u32)> {
    let mut set: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (a, b) in [(3, 4), (3, 6), (5, 6)] {
        if a <= max && b <= max {
            set.insert((a, b));
            set.insert((b, a));
        }
    }
    loop {
        let mut by_first: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &(a, b) in &set {
            by_first.entry(a).or_default().push(b);
        }
        let mut new = Vec::new();
        for (a, bs) in &by_first {
            for b in bs {
                for c in bs {
                    let s = b + c;
                    if s <= max && !set.contains(&(*a, s)) {
                        new.push((*a, s));
                    }
                }
            }
        }
        if new.is_empty() {
            return set;
        }
        for (a, b) in new {
            // the second-coordinate rule is the symmetric image of the first
            set.insert((a, b));
            set.insert((b, a));
        }
    }
}

/// Whether `m + n` follows from `m, n` realizable and `(m, n)` realizable.
pub fn s_step_applies(s: &BTreeSet<u32>, r: &BTreeSet<(u32, u32)>, m: u32, n: u32) -> bool {
    let mod4 = [m, m.wrapping_sub(1), n, n.wrapping_sub(1)].iter().any(|&x| x % 4 == 0);
    s.contains(&m) && s.contains(&n) && r.contains(&(m, n)) && mod4
}

/// Realizable integers up to `max`, with the pair each derived one came from.
pub fn s_closure(max: u32) -> (BTreeSet<u32>, BTreeMap<u32, (u32, u32)>) {
    let mut s: BTreeSet<u32> = [0, 1, 2, 4, 6, 7, 8, 9, 11, 12].into_iter().filter(|&x| x <= max).collect();
    let r = r_closure(max);
    let mut witness = BTreeMap::new();
    loop {
        let mut added = false;
        for &(m, n) in &r {
            if m <= n && m + n <= max && !s.contains(&(m + n)) && s_step_applies(&s, &r, m, n) {
                s.insert(m + n);
                witness.insert(m + n, (m, n));
                added = true;
            }
        }
        if !added {
            return (s, witness);
        }
    }
}

/// An element of the exterior algebra over `Z` on `e_1, ..., e_n`
/// (`n <= 64`), keyed by index bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multivector {
    pub n: u32,
    pub terms: BTreeMap<u64, BigInt>,
}

impl Multivector {
    pub fn zero(n: u32) -> Self {
        Multivector { n, terms: BTreeMap::new() }
    }

    /// `e_{i_1} ^ ... ^ e_{i_r}` for 1-based indices, in the given order.
    pub fn basis(n: u32, indices: &[u32]) -> Self {
        let mut out = Multivector { n, terms: BTreeMap::from([(0u64, BigInt::from(1))]) };
        for &i in indices {
            let e = Multivector { n, terms: BTreeMap::from([(1u64 << (i - 1), BigInt::from(1))]) };
            out = out.wedge(&e).expect("same ambient");
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Multivector) -> Result<Multivector, BoundsError> {
        if self.n != other.n {
            return Err(BoundsError::AmbientMismatch);
        }
        let mut terms = self.terms.clone();
        for (k, v) in &other.terms {
            let e = terms.entry(*k).or_insert_with(BigInt::zero);
            *e += v;
            if e.is_zero() {
                terms.remove(k);
            }
        }
        Ok(Multivector { n: self.n, terms })
    }

    pub fn scale(&self, c: &BigInt) -> Multivector {
        let terms = if c.is_zero() {
            BTreeMap::new()
        } else {
            self.terms.iter().map(|(k, v)| (*k, v * c)).collect()
        };
        Multivector { n: self.n, terms }
    }

    pub fn wedge(&self, other: &Multivector) -> Result<Multivector, BoundsError> {
        if self.n != other.n {
            return Err(BoundsError::AmbientMismatch);
        }
        let mut terms: BTreeMap<u64, BigInt> = BTreeMap::new();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                // inversions: pairs i in a, j in b with i > j
                let mut inv = 0u32;
                let mut bits = *b;
                while bits != 0 {
                    let j = bits.trailing_zeros();
                    inv += (a >> j >> 1).count_ones();
                    bits &= bits - 1;
                }
                let mut c = x * y;
                if inv % 2 == 1 {
                    c = -c;
                }
                let e = terms.entry(a | b).or_insert_with(BigInt::zero);
                *e += c;
            }
        }
        terms.retain(|_, v| !v.is_zero());
        Ok(Multivector { n: self.n, terms })
    }
}

/// `e1234` style label of a basis monomial.
pub fn monomial_label(mask: u64) -> String {
    let idx: Vec<String> = (0..64).filter(|i| mask >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
    format!("e{}", idx.join(""))
}

impl fmt::Display for Multivector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, v)| {
                let sign = if v.is_negative() { "-" } else { "+" };
                let mag = v.abs();
                let coeff = if mag == BigInt::from(1) { String::new() } else { mag.to_string() };
                format!("{sign}{coeff}{}", monomial_label(*k))
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropyReport {
    pub n: u32,
    /// The degree-2 classes examined, as labels.
    pub classes: Vec<String>,
    pub products_checked: usize,
    /// Distinct nonzero pairwise products, as signed labels.
    pub nonzero_products: Vec<String>,
    /// Supports of the nonzero products.
    pub supports: Vec<String>,
    pub all_products_zero: bool,
    /// Every pairwise product vanishes after wedging with `e_1`.
    pub annihilated_by_e1: bool,
}

/// Cup products among degree-2 classes in the cohomology of `Z^n`.
pub fn isotropy_witness(n: u32) -> Result<IsotropyReport, BoundsError> {
    let classes: Vec<[u32; 2]> = match n {
        3 => vec![[1, 2], [1, 3], [2, 3]],
        5 => vec![[1, 2], [1, 3], [1, 4], [1, 5], [2, 3], [2, 4], [2, 5]],
        _ => return Err(BoundsError::UnsupportedN),
    };
    let elems: Vec<Multivector> = classes.iter().map(|c| Multivector::basis(n, c)).collect();
    let e1 = Multivector::basis(n, &[1]);
    let mut nonzero = BTreeSet::new();
    let mut supports = BTreeSet::new();
    let mut checked = 0;
    let mut annihilated = true;
    for a in &elems {
        for b in &elems {
            checked += 1;
            let p = a.wedge(b)?;
            if !p.is_zero() {
                nonzero.insert(p.to_string());
                supports.extend(p.terms.keys().map(|k| monomial_label(*k)));
            }
            annihilated &= p.wedge(&e1)?.is_zero();
        }
    }
    Ok(IsotropyReport {
        n,
        classes: classes.iter().map(|c| format!("e{}{}", c[0], c[1])).collect(),
        products_checked: checked,
        all_products_zero: nonzero.is_empty(),
        nonzero_products: nonzero.into_iter().collect(),
        supports: supports.into_iter().collect(),
        annihilated_by_e1: annihilated,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("6 does not divide {0}*{1}")]
    NotDivisible(u32, u32),
    #[error("both ranks must be at least 3")]
    TooSmall,
    #[error("budget of {0} candidate evaluations exhausted")]
    BudgetExhausted(u64),
    #[error("search space exhausted without a verified tuple set")]
    NotFound,
}

#[derive(Clone, Debug)]
pub struct SearchHit {
    pub tuples: Vec<Tuple4>,
    pub certificate: Certificate,
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub presentation: Presentation,
    pub hits: Vec<SearchHit>,
    pub nodes: u64,
    pub candidates: usize,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub budget: u64,
    pub seed: u64,
    /// Longest candidate word, in letters (1 or 2).
    pub max_word_length: usize,
    pub max_hits: usize,
    pub limits: Limits,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: 2_000_000, seed: 0, max_word_length: 2, max_hits: 1, limits: Limits::default() }
    }
}

pub fn free_product_presentation(m: u32, n: u32) -> Presentation {
    let mut p = Presentation::new();
    p.add_factor(FactorKind::FreeAbelian(m), &generator_names("x", m as usize)).expect("fresh names");
    p.add_factor(FactorKind::FreeAbelian(n), &generator_names("y", n as usize)).expect("fresh names");
    p
}

/// Tuple sets for the seed pairs `(3,4)`, `(3,6)` and `(5,6)`, in the
/// generator names of [`free_product_presentation`].
pub const SEED_TUPLES: [(u32, u32, &[[&str; 4]]); 3] = [
    (3, 4, &[["x1", "y1", "x2 y2", "x3 y3"], ["x2", "x1 y3", "x3 y2", "y4"]]),
    (
        3,
        6,
        &[["x1", "y1", "x2 y2", "x3 y3"], ["x2", "x1 y3", "x3 y4", "x2 y5"], ["y6", "x1 y2", "x2 x3", "x3 y4"]],
    ),
    (
        5,
        6,
        &[
            ["x1", "y1", "x2 y2", "x3 y3"],
            ["x2", "y3", "x3 y4", "x4 y5"],
            ["x5", "y6", "x4 y3", "x1 y2 y5"],
            ["x3", "y5", "x5 y6", "x1 y4"],
            ["x1 y1", "x2 y4", "x4 y6", "x5 y2"],
        ],
    ),
];

/// Parses one of the [`SEED_TUPLES`] entries.
pub fn seed_tuples(m: u32, n: u32, words: &[[&str; 4]]) -> (Presentation, Vec<Tuple4>) {
    let pres = free_product_presentation(m, n);
    let tuples = words.iter().map(|t| t.map(|w| pres.parse_word(w).expect("seed word"))).collect();
    (pres, tuples)
}

const PRIME: i64 = 2_147_483_647;

/// Row-echelon basis over `Z/PRIME`, with pivot columns.
#[derive(Clone)]
struct Echelon {
    rows: Vec<(usize, Vec<i64>)>,
}

impl Echelon {
    fn reduce(&self, mut v: Vec<i64>) -> Vec<i64> {
        for (p, row) in &self.rows {
            let c = v[*p];
            if c != 0 {
                for (x, r) in v.iter_mut().zip(row) {
                    *x = (*x - c * r % PRIME + PRIME * 2) % PRIME;
                }
            }
        }
        v
    }

    fn insert(&mut self, v: Vec<i64>) -> bool {
        let mut v = self.reduce(v);
        let Some(p) = v.iter().position(|&x| x != 0) else { return false };
        let inv = mod_pow(v[p], PRIME - 2);
        for x in v.iter_mut() {
            *x = *x * inv % PRIME;
        }
        for (_, row) in self.rows.iter_mut() {
            let c = row[p];
            if c != 0 {
                for (x, r) in row.iter_mut().zip(&v) {
                    *x = (*x - c * r % PRIME + PRIME * 2) % PRIME;
                }
            }
        }
        self.rows.push((p, v));
        true
    }
}

fn mod_pow(mut b: i64, mut e: i64) -> i64 {
    let mut r = 1i64;
    b %= PRIME;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

/// Searches for `mn/6` tuples 4-reducing `Z^m * Z^n` to `Z^(m+n)`.
///
/// Candidate words are single generators and mixed words `x_i y_j^{+-1}`
/// (and `y_j x_i^{+-1}` when allowed by length).  Tuples are tried in order
/// of total length, ties shuffled by `seed`.  A tuple is kept only if its six
/// commutators raise the class-2 rank on the cross pairs by six; complete
/// sets are checked for integral spanning and then proved by the deduction
/// engine.
pub fn search_tuples(m: u32, n: u32, opts: &SearchOptions) -> Result<SearchReport, SearchError> {
    if m < 3 || n < 3 {
        if !(m * n).is_multiple_of(6) {
            return Err(SearchError::NotDivisible(m, n));
        }
        return Err(SearchError::TooSmall);
    }
    if !(m * n).is_multiple_of(6) {
        return Err(SearchError::NotDivisible(m, n));
    }
    let pres = free_product_presentation(m, n);
    let live = pres.live_generators();
    let xs: Vec<Word> = live[..m as usize].iter().map(|g| pres.gen_word(*g)).collect();
    let ys: Vec<Word> = live[m as usize..].iter().map(|g| pres.gen_word(*g)).collect();
    let one = BigInt::from(1);
    let mut words: Vec<Word> = xs.iter().chain(&ys).cloned().collect();
    if opts.max_word_length >= 2 {
        for x in &xs {
            for y in &ys {
                for e in [1, -1] {
                    let ye = pres.power(y, &BigInt::from(e)).expect("word");
                    words.push(pres.multiply(x, &ye).expect("word"));
                }
            }
        }
    }
    words.dedup();
    let _ = one;

    // class-2 vectors on cross pairs (x_i, y_j), reduced mod PRIME
    let ab: Vec<Vec<BigInt>> = words.iter().map(|w| abelianize(&pres, &live, w)).collect();
    let (mu, nu) = (m as usize, n as usize);
    let dim = mu * nu;
    let cross = |a: &[BigInt], b: &[BigInt]| -> Vec<i64> {
        let mut v = vec![0i64; dim];
        for i in 0..mu {
            for j in 0..nu {
                let c = &a[i] * &b[mu + j] - &a[mu + j] * &b[i];
                let r = (c % PRIME).to_i64().expect("reduced");
                v[i * nu + j] = (r + PRIME) % PRIME;
            }
        }
        v
    };

    let wcount = words.len();
    let mut tuples: Vec<([usize; 4], usize)> = Vec::new();
    for a in 0..wcount {
        for b in a + 1..wcount {
            for c in b + 1..wcount {
                for d in c + 1..wcount {
                    let len = [a, b, c, d].iter().map(|&i| words[i].len()).sum();
                    tuples.push(([a, b, c, d], len));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    tuples.sort_by_key(|t| t.1);
    let mut start = 0;
    while start < tuples.len() {
        let len = tuples[start].1;
        let end = tuples[start..].iter().position(|t| t.1 != len).map_or(tuples.len(), |p| start + p);
        tuples[start..end].shuffle(&mut rng);
        start = end;
    }
    // tuples that alone have full rank 6
    let vectors = |t: &[usize; 4]| -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                out.push(cross(&ab[t[i]], &ab[t[j]]));
            }
        }
        out
    };
    let mut nodes = 0u64;
    let mut good: Vec<([usize; 4], Vec<Vec<i64>>)> = Vec::new();
    for (t, _) in &tuples {
        nodes += 1;
        let vs = vectors(t);
        let mut e = Echelon { rows: Vec::new() };
        if vs.iter().all(|v| e.insert(v.clone())) {
            good.push((*t, vs));
        }
        if nodes >= opts.budget {
            return Err(SearchError::BudgetExhausted(opts.budget));
        }
    }

    let need = mu * nu / 6;
    let mut hits = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    let ctx = SearchCtx { pres: &pres, words: &words, good: &good, need, opts };
    let exhausted = ctx.dfs(0, &Echelon { rows: Vec::new() }, &mut chosen, &mut nodes, &mut hits);
    let report = SearchReport { presentation: pres.clone(), hits, nodes, candidates: good.len() };
    if report.hits.is_empty() {
        return Err(if exhausted { SearchError::NotFound } else { SearchError::BudgetExhausted(opts.budget) });
    }
    Ok(report)
}

struct SearchCtx<'a> {
    pres: &'a Presentation,
    words: &'a [Word],
    good: &'a [([usize; 4], Vec<Vec<i64>>)],
    need: usize,
    opts: &'a SearchOptions,
}

impl SearchCtx<'_> {
    /// Returns `false` when the budget ran out.
    fn dfs(
        &self,
        from: usize,
        basis: &Echelon,
        chosen: &mut Vec<usize>,
        nodes: &mut u64,
        hits: &mut Vec<SearchHit>,
    ) -> bool {
        if chosen.len() == self.need {
            let tuples: Vec<Tuple4> = chosen
                .iter()
                .map(|&i| self.good[i].0.map(|w| self.words[w].clone()))
                .collect();
            if spanning_check(self.pres, &tuples, &[]).spans {
                if let Ok(r) = prove_abelian(self.pres, &tuples, self.opts.limits) {
                    if let Some(certificate) = r.certificate {
                        hits.push(SearchHit { tuples, certificate });
                    }
                }
            }
            return true;
        }
        for i in from..self.good.len() {
            if hits.len() >= self.opts.max_hits {
                return true;
            }
            *nodes += 1;
            if *nodes >= self.opts.budget {
                return false;
            }
            let mut next = basis.clone();
            if self.good[i].1.iter().all(|v| next.insert(v.clone())) {
                chosen.push(i);
                let ok = self.dfs(i + 1, &next, chosen, nodes, hits);
                chosen.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        assert_eq!(epsilon(4), 0);
        assert_eq!(epsilon(6), 1);
        assert_eq!(epsilon(0), 0);
        assert_eq!(h_value(5), BigInt::from(14));
        assert_eq!(h_value(6), BigInt::from(16));
        assert_eq!(h_value(12), BigInt::from(66));
        let q: Vec<BigInt> = (0..5).map(q_free_abelian).collect();
        assert_eq!(q, [2, 0, 0, 2, 0].map(BigInt::from));
        assert_eq!(q_free_abelian(5), BigInt::from(6));
        assert_eq!(q_free_abelian(8), BigInt::from(14));
    }

    #[test]
    fn hw_bound_examples() {
        for n in 0..12i64 {
            let c = n * (n - 1) / 2;
            let r = hw_bounds(n, c, n - c).unwrap();
            assert_eq!(r.lower, BigInt::from((n - 1) * (n - 4) / 2));
            assert_eq!(r.upper, BigInt::from((n - 1) * (n - 2)));
        }
        assert_eq!(hw_bounds(0, 0, 0).unwrap().exact, Some(BigInt::from(2)));
        assert_eq!(hw_bounds(1, 0, 1).unwrap().exact, Some(BigInt::from(0)));
        assert!(matches!(hw_bounds(0, 10, 1), Err(BoundsError::LowerExceedsUpper { .. })));
    }

    #[test]
    fn mod_p_examples() {
        let s = |t: Vec<u64>, n| AbelianGroupSpec::new(t, n).unwrap();
        assert_eq!(mod_p_ranks(&s(vec![2], 0)).unwrap(), (BigInt::from(1), BigInt::from(1)));
        assert_eq!(mod_p_ranks(&s(vec![2, 2], 3)).unwrap(), (BigInt::from(5), BigInt::from(12)));
        assert_eq!(mod_p_ranks(&s(vec![2, 2, 2], 0)).unwrap(), (BigInt::from(3), BigInt::from(6)));
        assert_eq!(mod_p_ranks(&s(vec![], 2)), Err(BoundsError::NoTorsion));
        assert!(AbelianGroupSpec::new(vec![4, 6], 0).is_err());
    }

    #[test]
    fn abelian_examples() {
        let s = |t: Vec<u64>, n| AbelianGroupSpec::new(t, n).unwrap();
        assert_eq!(abelian_q_bounds(&s(vec![7], 0)).unwrap().exact, Some(BigInt::from(2)));
        assert_eq!(abelian_q_bounds(&s(vec![2], 1)).unwrap().exact, Some(BigInt::from(0)));
        assert_eq!(abelian_q_bounds(&s(vec![2, 2, 2, 2], 1)).unwrap().exact, Some(BigInt::from(6)));
        assert_eq!(abelian_q_bounds(&s(vec![], 1)), Err(BoundsError::EmptyTorsion));
        // outside the window: closed-form upper bound
        let r = abelian_q_bounds(&s(vec![2; 7], 0)).unwrap();
        assert_eq!(r.lower, BigInt::from(1 + 15));
        assert_eq!(r.upper, BigInt::from(16 + 2));
        // inside the window: constructive upper
        let r = abelian_q_bounds(&s(vec![3, 3, 3], 0)).unwrap();
        assert!(r.provenance.iter().any(|p| p.contains("construction")));
        assert!(r.lower <= r.upper);
    }

    #[test]
    fn closures() {
        let r = r_closure(30);
        assert!(r.contains(&(6, 4)) && r.contains(&(9, 4)));
        assert!(!r.contains(&(4, 4)));
        let (s, w) = s_closure(100);
        let expect: BTreeSet<u32> = [0, 1, 2, 4].into_iter().chain(6..=100).collect();
        assert_eq!(s, expect);
        assert_eq!(w[&10], (4, 6));
        assert_eq!(w[&17], (8, 9));
    }

    #[test]
    fn wedge_examples() {
        let e = |ix: &[u32]| Multivector::basis(4, ix);
        assert!(e(&[1, 2]).wedge(&e(&[1, 3])).unwrap().is_zero());
        assert_eq!(e(&[1, 2]).wedge(&e(&[3, 4])).unwrap(), e(&[1, 2, 3, 4]));
        assert_eq!(e(&[2]).wedge(&e(&[1])).unwrap(), e(&[1, 2]).scale(&BigInt::from(-1)));
        assert_eq!(Multivector::zero(3).wedge(&Multivector::zero(4)), Err(BoundsError::AmbientMismatch));
    }

    #[test]
    fn isotropy() {
        let r = isotropy_witness(3).unwrap();
        assert!(r.all_products_zero);
        assert_eq!(r.products_checked, 9);
        let r = isotropy_witness(5).unwrap();
        assert_eq!(r.supports, ["e1234", "e1235", "e1245"]);
        assert!(r.annihilated_by_e1);
        assert_eq!(isotropy_witness(4), Err(BoundsError::UnsupportedN));
    }

    #[test]
    fn search_small() {
        assert_eq!(search_tuples(3, 3, &SearchOptions::default()).unwrap_err(), SearchError::NotDivisible(3, 3));
        assert!(search_tuples(2, 4, &SearchOptions::default()).is_err());
    }
}
