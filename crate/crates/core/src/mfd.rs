//! Closed oriented 4-manifolds up to the data this toolkit tracks: a
//! presentation of the fundamental group and the rational Betti numbers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use thiserror::Error;

use crate::deduce::{prove_abelian, DeduceError, Limits, ProofReport};
use crate::nil2::Tuple4;
use crate::words::{generator_names, FactorKind, GenId, Presentation, Relator, Word, WordError};
use crate::zlinalg::{abelian_invariants, abelianize, order_in_cokernel, relation_matrix, AbelianInvariants, Order};

/// Prefixes handed out to summands that do not name their own.
pub const DEFAULT_PREFIXES: [&str; 11] = ["x", "y", "z", "w", "u", "v", "s", "t", "a", "b", "c"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MfdError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("generator name {0} is already in use")]
    PrefixCollision(String),
    #[error("ran out of default prefixes")]
    OutOfPrefixes,
    #[error("construction log is not expressible as a script: {0}")]
    NotScriptable(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseManifold {
    S4,
    S1xS3,
    /// `F_a x S^2`, with `F_a` the closed orientable surface of genus `a/2`.
    FxS2(u32),
    FxF(u32, u32),
    T4,
    /// `(L(d_1) # ... # L(d_k)) x S^1`.
    LensSumxS1(Vec<u64>),
}

impl BaseManifold {
    pub fn validate(&self) -> Result<(), MfdError> {
        let even = |a: u32| a >= 2 && a.is_multiple_of(2);
        match self {
            BaseManifold::FxS2(a) if !even(*a) => Err(MfdError::InvalidParameters(format!("F{a}: genus index must be even and at least 2"))),
            BaseManifold::FxF(a, b) if !even(*a) || !even(*b) => {
                Err(MfdError::InvalidParameters(format!("F{a}xF{b}: surface indices must be even and at least 2")))
            }
            BaseManifold::LensSumxS1(ds) if ds.is_empty() || ds.iter().any(|&d| d < 2) => {
                Err(MfdError::InvalidParameters("lens orders must be at least 2".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of generator prefixes the summand consumes.
    pub fn prefix_count(&self) -> usize {
        match self {
            BaseManifold::FxF(..) => 2,
            _ => 1,
        }
    }

    /// `(beta1, beta2, chi)`
    pub fn numbers(&self) -> (i64, i64, i64) {
        match self {
            BaseManifold::S4 => (0, 0, 2),
            BaseManifold::S1xS3 | BaseManifold::LensSumxS1(_) => (1, 0, 0),
            BaseManifold::FxS2(a) => {
                let a = *a as i64;
                (a, 2, 2 * (2 - a))
            }
            BaseManifold::FxF(a, b) => {
                let (a, b) = (*a as i64, *b as i64);
                let chi = (2 - a) * (2 - b);
                (a + b, chi - 2 + 2 * (a + b), chi)
            }
            BaseManifold::T4 => (4, 6, 0),
        }
    }
}

impl fmt::Display for BaseManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseManifold::S4 => write!(f, "S4"),
            BaseManifold::S1xS3 => write!(f, "S1xS3"),
            BaseManifold::FxS2(a) => write!(f, "F{a}xS2"),
            BaseManifold::FxF(a, b) => write!(f, "F{a}xF{b}"),
            BaseManifold::T4 => write!(f, "T4"),
            BaseManifold::LensSumxS1(ds) => {
                let ds: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
                write!(f, "lens({})xS1", ds.join(","))
            }
        }
    }
}

impl FromStr for BaseManifold {
    type Err = MfdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || MfdError::InvalidParameters(format!("unknown base manifold {s}"));
        let kind = match t.as_str() {
            "s4" => BaseManifold::S4,
            "s1xs3" => BaseManifold::S1xS3,
            "t4" => BaseManifold::T4,
            _ => {
                if let Some(inner) = t.strip_prefix("lens(").and_then(|r| r.strip_suffix(")xs1")) {
                    let ds = inner
                        .split(',')
                        .map(|d| d.trim().parse::<u64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad())?;
                    BaseManifold::LensSumxS1(ds)
                } else if let Some(rest) = t.strip_prefix('f') {
                    let (a, b) = rest.split_once('x').ok_or_else(bad)?;
                    let a: u32 = a.parse().map_err(|_| bad())?;
                    if b == "s2" {
                        BaseManifold::FxS2(a)
                    } else {
                        let b: u32 = b.strip_prefix('f').ok_or_else(bad)?.parse().map_err(|_| bad())?;
                        BaseManifold::FxF(a, b)
                    }
                } else {
                    return Err(bad());
                }
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogEntry {
    Start { base: BaseManifold, prefixes: Vec<String> },
    Sum { base: BaseManifold, prefixes: Vec<String> },
    /// A summand that was itself built by several steps.
    SumComposite(Vec<LogEntry>),
    Surgery(String),
    SurgeryCommutator(String, String),
    Identify(String, String),
    Reduce4([String; 4]),
}

impl LogEntry {
    /// The script line for this step.
    pub fn to_line(&self) -> Result<String, MfdError> {
        Ok(match self {
            LogEntry::Start { base, prefixes } => format!("start {base} as {}", prefixes.join(", ")),
            LogEntry::Sum { base, prefixes } => format!("sum {base} as {}", prefixes.join(", ")),
            LogEntry::SumComposite(_) => return Err(MfdError::NotScriptable("sum with a composite summand".into())),
            LogEntry::Surgery(w) => format!("surgery {w}"),
            LogEntry::SurgeryCommutator(u, v) => format!("surgery [{u}, {v}]"),
            LogEntry::Identify(g, w) => format!("identify {g} = {w}"),
            LogEntry::Reduce4(ws) => format!("reduce4 {}", ws.join(", ")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifoldState {
    pub pres: Presentation,
    pub beta1: i64,
    pub beta2: i64,
    pub chi: i64,
    pub log: Vec<LogEntry>,
    /// Every tuple passed to [`ManifoldState::four_reduce`], as given.
    pub tuples: Vec<Tuple4>,
    defaults_used: usize,
}

fn build_presentation(kind: &BaseManifold, prefixes: &[String]) -> Result<Presentation, MfdError> {
    let mut p = Presentation::new();
    match kind {
        BaseManifold::S4 => {}
        BaseManifold::S1xS3 => {
            p.add_factor(FactorKind::FreeAbelian(1), &generator_names(&prefixes[0], 1))?;
        }
        BaseManifold::T4 => {
            p.add_factor(FactorKind::FreeAbelian(4), &generator_names(&prefixes[0], 4))?;
        }
        BaseManifold::FxS2(a) => {
            p.add_factor(FactorKind::Surface(a / 2), &generator_names(&prefixes[0], *a as usize))?;
        }
        BaseManifold::FxF(a, b) => {
            let fa = p.add_factor(FactorKind::Surface(a / 2), &generator_names(&prefixes[0], *a as usize))?;
            let fb = p.add_factor(FactorKind::Surface(b / 2), &generator_names(&prefixes[1], *b as usize))?;
            p.add_relator(Relator::CrossCommutation(fa, fb))?;
        }
        BaseManifold::LensSumxS1(ds) => {
            let k = ds.len();
            let names = generator_names(&prefixes[0], k + 1);
            let mut lens = Vec::new();
            for (i, d) in ds.iter().enumerate() {
                lens.push(p.add_factor(FactorKind::FreeAbelian(1), &names[i..i + 1])?);
                let g = p.lookup(&names[i]).expect("just added");
                p.add_relator(Relator::Power(g, BigInt::from(*d)))?;
            }
            let circle = p.add_factor(FactorKind::FreeAbelian(1), &names[k..])?;
            for f in lens {
                p.add_relator(Relator::CrossCommutation(f, circle))?;
            }
        }
    }
    Ok(p)
}

/// How a surgery curve enters the presentation.
fn surgery_relator(pres: &Presentation, w: &Word) -> Result<Option<Relator>, WordError> {
    let letters = w.letters();
    if letters.is_empty() {
        return Ok(None);
    }
    if letters.len() == 1 && !letters[0].exp.abs().is_one() {
        return Ok(Some(Relator::Power(letters[0].gen, letters[0].exp.abs())));
    }
    let ends = [(0, 1..letters.len()), (letters.len() - 1, 0..letters.len() - 1)];
    for (at, rest) in ends {
        let l = &letters[at];
        if !l.exp.abs().is_one() || letters[rest.clone()].iter().any(|m| m.gen == l.gen) {
            continue;
        }
        // g^e * rest = 1 (or rest * g^e = 1) gives g^e = rest^-1
        let tokens: Vec<(String, BigInt)> =
            letters[rest].iter().map(|m| (pres.name(m.gen).to_string(), m.exp.clone())).collect();
        let rest = pres.make_word(&tokens)?;
        let value = if l.exp.is_positive() { pres.invert(&rest)? } else { rest };
        return Ok(Some(Relator::Identify(l.gen, value)));
    }
    Ok(Some(Relator::General(w.clone())))
}

#[derive(Clone, Debug)]
pub struct Pi1Report {
    pub invariants: AbelianInvariants,
    pub target: AbelianInvariants,
    pub proof: ProofReport,
}

impl Pi1Report {
    pub fn matches_target(&self) -> bool {
        self.invariants == self.target
    }

    pub fn pass(&self) -> bool {
        self.proof.proved && self.matches_target()
    }
}

impl ManifoldState {
    pub fn base(kind: BaseManifold) -> Result<Self, MfdError> {
        let n = kind.prefix_count();
        let prefixes: Vec<String> = DEFAULT_PREFIXES[..n].iter().map(|s| s.to_string()).collect();
        let mut m = Self::base_with(kind, &prefixes)?;
        m.defaults_used = n;
        Ok(m)
    }

    pub fn base_with(kind: BaseManifold, prefixes: &[String]) -> Result<Self, MfdError> {
        kind.validate()?;
        if prefixes.len() != kind.prefix_count() {
            return Err(MfdError::InvalidParameters(format!("{kind} takes {} prefix(es)", kind.prefix_count())));
        }
        let pres = build_presentation(&kind, prefixes).map_err(|e| match e {
            MfdError::Word(WordError::DuplicateName(n)) => MfdError::PrefixCollision(n),
            other => other,
        })?;
        let (beta1, beta2, chi) = kind.numbers();
        Ok(ManifoldState {
            pres,
            beta1,
            beta2,
            chi,
            log: vec![LogEntry::Start { base: kind.clone(), prefixes: prefixes.to_vec() }],
            tuples: Vec::new(),
            defaults_used: kind.prefix_count(),
        })
    }

    pub fn numbers(&self) -> (i64, i64, i64) {
        (self.beta1, self.beta2, self.chi)
    }

    /// The next `count` default prefixes.
    pub fn next_prefixes(&self, count: usize) -> Result<Vec<String>, MfdError> {
        DEFAULT_PREFIXES
            .get(self.defaults_used..self.defaults_used + count)
            .map(|ps| ps.iter().map(|s| s.to_string()).collect())
            .ok_or(MfdError::OutOfPrefixes)
    }

    /// Connected sum with another manifold.
    pub fn connected_sum(&self, other: &ManifoldState) -> Result<Self, MfdError> {
        let pres = self.pres.free_product(&other.pres).map_err(|e| match e {
            WordError::DuplicateName(n) => MfdError::PrefixCollision(n),
            e => MfdError::Word(e),
        })?;
        let mut log = self.log.clone();
        match other.log.as_slice() {
            [LogEntry::Start { base, prefixes }] => log.push(LogEntry::Sum { base: base.clone(), prefixes: prefixes.clone() }),
            entries => log.push(LogEntry::SumComposite(entries.to_vec())),
        }
        Ok(ManifoldState {
            pres,
            beta1: self.beta1 + other.beta1,
            beta2: self.beta2 + other.beta2,
            chi: self.chi + other.chi - 2,
            log,
            tuples: self.tuples.iter().chain(&other.tuples).cloned().collect(),
            defaults_used: self.defaults_used.max(other.defaults_used),
        })
    }

    /// Connected sum with a base manifold; `prefixes` default to the next
    /// unused ones.
    pub fn sum_base(&self, kind: BaseManifold, prefixes: Option<&[String]>) -> Result<Self, MfdError> {
        let count = kind.prefix_count();
        let prefixes = match prefixes {
            Some(p) => p.to_vec(),
            None => self.next_prefixes(count)?,
        };
        let summand = Self::base_with(kind, &prefixes)?;
        let mut out = self.connected_sum(&summand)?;
        out.defaults_used = self.defaults_used + count;
        Ok(out)
    }

    /// Order of the class of `w` in `H_1`.
    pub fn homology_order(&self, w: &Word) -> Order {
        let (live, m) = relation_matrix(&self.pres);
        let v = abelianize(&self.pres, &live, w);
        order_in_cokernel(&m, &v).expect("vector over live generators")
    }

    fn after_surgery(&self, w: &Word, relator: Option<Relator>, entry: LogEntry) -> Result<Self, MfdError> {
        let order = self.homology_order(w);
        let mut out = self.clone();
        if let Some(r) = relator {
            out.pres.add_relator(r)?;
        }
        match order {
            Order::Infinite => out.beta1 -= 1,
            Order::Finite(_) => out.beta2 += 2,
        }
        out.chi += 2;
        out.log.push(entry);
        Ok(out)
    }

    /// Surgery on a circle representing `w`.
    pub fn surgery(&self, w: &Word) -> Result<Self, MfdError> {
        let w = self.pres.normalize(w)?;
        let relator = surgery_relator(&self.pres, &w)?;
        self.after_surgery(&w, relator, LogEntry::Surgery(self.pres.render(&w)))
    }

    /// Surgery on the commutator `[u, v]`, recorded as a commutator relator.
    pub fn surgery_commutator(&self, u: &Word, v: &Word) -> Result<Self, MfdError> {
        let (u, v) = (self.pres.normalize(u)?, self.pres.normalize(v)?);
        let w = self.pres.commutator(&u, &v)?;
        let entry = LogEntry::SurgeryCommutator(self.pres.render(&u), self.pres.render(&v));
        self.after_surgery(&w, Some(Relator::CommutatorPair(u, v)), entry)
    }

    /// Surgery on `g w^-1` that eliminates the generator `g`.
    pub fn identify(&self, g: GenId, w: &Word) -> Result<Self, MfdError> {
        if self.pres.is_eliminated(g) {
            return Err(WordError::AlreadyEliminated(self.pres.name(g).to_string()).into());
        }
        let w = self.pres.normalize(w)?;
        if w.contains(g) {
            return Err(WordError::SelfReference(self.pres.name(g).to_string()).into());
        }
        let curve = self.pres.multiply(&self.pres.gen_word(g), &self.pres.invert(&w)?)?;
        let entry = LogEntry::Identify(self.pres.name(g).to_string(), self.pres.render(&w));
        self.after_surgery(&curve, Some(Relator::Identify(g, w)), entry)
    }

    /// Connected sum with `T^4` followed by surgeries making the four words
    /// commute pairwise.
    pub fn four_reduce(&self, tuple: &Tuple4) -> Result<Self, MfdError> {
        let mut out = self.clone();
        let mut names = Vec::new();
        for w in tuple {
            names.push(self.pres.render(&self.pres.normalize(w)?));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                out.pres.add_relator(Relator::CommutatorPair(tuple[i].clone(), tuple[j].clone()))?;
            }
        }
        out.beta2 += 6;
        out.chi += 6;
        out.tuples.push(tuple.clone());
        out.log.push(LogEntry::Reduce4(names.try_into().expect("four words")));
        Ok(out)
    }

    pub fn abelian_invariants(&self) -> AbelianInvariants {
        abelian_invariants(&self.pres)
    }

    /// Proves the fundamental group is abelian and compares its
    /// abelianization with `target`.
    pub fn verify_pi1(&self, target: &AbelianInvariants, limits: Limits) -> Result<Pi1Report, DeduceError> {
        let proof = prove_abelian(&self.pres, &[], limits)?;
        Ok(Pi1Report { invariants: self.abelian_invariants(), target: target.clone(), proof })
    }

    pub fn consistency_check(&self) -> bool {
        self.chi == 2 - 2 * self.beta1 + self.beta2
            && self.beta1 >= 0
            && self.beta2 >= 0
            && self.abelian_invariants().free_rank as i64 == self.beta1
    }

    /// The construction as a script.
    pub fn to_script(&self) -> Result<String, MfdError> {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&e.to_line()?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(s: &str) -> ManifoldState {
        ManifoldState::base(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn base_numbers() {
        assert_eq!(base("F2xF4").beta2, 10);
        assert_eq!(base("F2xS2").beta2, 2);
        assert_eq!(base("T4").numbers(), (4, 6, 0));
        for s in ["S4", "S1xS3", "F2xS2", "F4xS2", "F2xF4", "F4xF4", "T4", "lens(2,6)xS1"] {
            assert!(base(s).consistency_check(), "{s}");
        }
        assert!("F3xS2".parse::<BaseManifold>().is_err());
        assert!("lens(1)xS1".parse::<BaseManifold>().is_err());
    }

    #[test]
    fn sums() {
        let m = base("F2xF4").sum_base(BaseManifold::T4, None).unwrap();
        assert_eq!(m.beta2, 16);
        assert_eq!(m.pres.name(m.pres.live_generators()[6]), "z1");
        let m = base("F4xF4").sum_base(BaseManifold::FxF(2, 4), None).unwrap();
        assert_eq!(m.beta2, 28);
        assert_eq!(base("S4").connected_sum(&base("S4")).map(|m| m.numbers()), Ok((0, 0, 2)));
        assert!(matches!(base("T4").connected_sum(&base("T4")), Err(MfdError::PrefixCollision(_))));
    }

    #[test]
    fn surgery_cases() {
        let t = base("T4");
        let x1 = t.pres.parse_word("x1").unwrap();
        let m = t.surgery(&x1).unwrap();
        assert_eq!(m.numbers(), (3, 6, 2));
        assert!(m.consistency_check());

        let f = base("F2xF4");
        let m = f.identify(f.pres.lookup("y4").unwrap(), &f.pres.parse_word("y3").unwrap()).unwrap();
        assert_eq!((m.beta1, m.beta2), (5, 10));
        let (y1, y3) = (m.pres.parse_word("y1").unwrap(), m.pres.parse_word("y3").unwrap());
        let m = m.surgery_commutator(&y1, &y3).unwrap();
        assert_eq!((m.beta1, m.beta2), (5, 12));

        let l = base("S1xS3");
        let m = l.surgery(&l.pres.parse_word("x1^3").unwrap()).unwrap();
        assert_eq!(m.numbers(), (0, 0, 2));
        assert_eq!(m.abelian_invariants().to_string(), "Z/3");
    }

    #[test]
    fn four_reduction_bookkeeping() {
        let f = base("F2xF4");
        let w = |s: &str| f.pres.parse_word(s).unwrap();
        let m = f.four_reduce(&[w("y1"), w("y2"), w("y3"), w("y4")]).unwrap();
        assert_eq!(m.beta2, 16);
        assert!(m.consistency_check());
        let id = f.pres.identity();
        let m = f.four_reduce(&[id.clone(), id.clone(), id.clone(), id]).unwrap();
        assert_eq!(m.beta2, 16);
        assert_eq!(m.pres.relators(), f.pres.relators());
    }

    #[test]
    fn pi1_verification() {
        let f = base("F2xF4");
        let w = |s: &str| f.pres.parse_word(s).unwrap();
        let m = f.four_reduce(&[w("y1"), w("y2"), w("y3"), w("y4")]).unwrap();
        let r = m.verify_pi1(&AbelianInvariants::free(6), Limits::default()).unwrap();
        assert!(r.pass());
        let r = f.verify_pi1(&AbelianInvariants::free(6), Limits::default()).unwrap();
        assert!(!r.proof.proved);
        let mut bad = m.clone();
        bad.beta2 += 1;
        assert!(!bad.consistency_check());
    }
}
