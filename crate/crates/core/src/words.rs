//! Group words over free products of free abelian, surface and free factors.
//!
//! A [`Presentation`] owns the generator table, the factor structure, the
//! typed relators and the substitution map produced by eliminating
//! generators.  Words are always kept in canonical form: freely reduced,
//! substitution-normalized, and with every maximal run of letters from one
//! free abelian factor sorted by generator index with merged exponents.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Substituting an eliminated generator raised to a power larger than this
/// is refused rather than expanded letter by letter.
const MAX_EXPANDED_POWER: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("zero exponent on generator `{0}`")]
    ZeroExponent(String),
    #[error("words belong to different presentations")]
    MixedPresentations,
    #[error("identification of `{0}` refers to itself")]
    SelfReference(String),
    #[error("generator `{0}` is already eliminated")]
    AlreadyEliminated(String),
    #[error("duplicate generator name `{0}`")]
    DuplicateName(String),
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error("power {0} too large to expand through a substitution")]
    ExponentTooLarge(BigInt),
    #[error("invalid relator: {0}")]
    InvalidRelator(String),
}

pub type Result<T> = std::result::Result<T, WordError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenId(pub u32);

impl GenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub factor: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    FreeAbelian(u32),
    Surface(u32),
    Free(u32),
}

impl FactorKind {
    pub fn generator_count(self) -> usize {
        match self {
            FactorKind::FreeAbelian(r) | FactorKind::Free(r) => r as usize,
            FactorKind::Surface(g) => 2 * g as usize,
        }
    }

    pub fn is_abelian(self) -> bool {
        matches!(self, FactorKind::FreeAbelian(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub gens: Vec<GenId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: GenId,
    pub exp: BigInt,
}

/// A canonical word.  The `key` ties a word to the generator table it was
/// built against.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    key: u64,
    letters: Vec<Letter>,
}

impl Word {
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn contains(&self, g: GenId) -> bool {
        self.letters.iter().any(|l| l.gen == g)
    }

    /// The generator if this word is a single letter with exponent one.
    pub fn as_generator(&self) -> Option<GenId> {
        match self.letters.as_slice() {
            [l] if l.exp.is_one() => Some(l.gen),
            _ => None,
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shorter words first, then lexicographic on (generator, exponent).
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
            .then_with(|| self.key.cmp(&other.key))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Relator {
    /// `[u, v] = 1`
    CommutatorPair(Word, Word),
    /// `[u1, v1][u2, v2]... = 1`
    CommutatorProduct(Vec<(Word, Word)>),
    /// `g = w`; applying it eliminates `g`.
    Identify(GenId, Word),
    /// `g^d = 1`
    Power(GenId, BigInt),
    /// Every generator of the first factor commutes with every generator of
    /// the second.
    CrossCommutation(usize, usize),
    /// Any other word set to the identity.  Only its abelianization is used.
    General(Word),
}

#[derive(Clone, Debug)]
pub struct Presentation {
    key: u64,
    gens: Vec<Generator>,
    factors: Vec<FactorSpec>,
    relators: Vec<Relator>,
    subs: BTreeMap<GenId, Word>,
}

impl PartialEq for Presentation {
    fn eq(&self, other: &Self) -> bool {
        self.gens == other.gens
            && self.factors == other.factors
            && self.relators == other.relators
            && self.subs == other.subs
    }
}

impl Eq for Presentation {}

impl Default for Presentation {
    fn default() -> Self {
        Self::new()
    }
}

enum Run {
    Abelian(usize, Vec<Letter>),
    Single(Letter),
}

impl Presentation {
    pub fn new() -> Self {
        let mut p = Presentation {
            key: 0,
            gens: Vec::new(),
            factors: Vec::new(),
            relators: Vec::new(),
            subs: BTreeMap::new(),
        };
        p.rekey();
        p
    }

    fn rekey(&mut self) {
        let mut h = DefaultHasher::new();
        for g in &self.gens {
            g.name.hash(&mut h);
            g.factor.hash(&mut h);
        }
        self.factors.len().hash(&mut h);
        self.key = h.finish();
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator(&self, g: GenId) -> &Generator {
        &self.gens[g.index()]
    }

    pub fn name(&self, g: GenId) -> &str {
        &self.gens[g.index()].name
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn relators(&self) -> &[Relator] {
        &self.relators
    }

    pub fn substitutions(&self) -> &BTreeMap<GenId, Word> {
        &self.subs
    }

    pub fn is_eliminated(&self, g: GenId) -> bool {
        self.subs.contains_key(&g)
    }

    /// Generators not removed by an identification, in index order.
    pub fn live_generators(&self) -> Vec<GenId> {
        (0..self.gens.len() as u32)
            .map(GenId)
            .filter(|g| !self.subs.contains_key(g))
            .collect()
    }

    pub fn lookup(&self, name: &str) -> Option<GenId> {
        self.gens
            .iter()
            .position(|g| g.name == name)
            .map(|i| GenId(i as u32))
    }

    fn is_abelian_gen(&self, g: GenId) -> Option<usize> {
        let f = self.gens[g.index()].factor;
        self.factors[f].kind.is_abelian().then_some(f)
    }

    /// Adds a factor with the given generator names.  Surface factors get
    /// their product-of-commutators relator.
    pub fn add_factor(&mut self, kind: FactorKind, names: &[String]) -> Result<usize> {
        let count = kind.generator_count();
        if count == 0 {
            return Err(WordError::InvalidFactor("rank and genus must be positive".into()));
        }
        if names.len() != count {
            return Err(WordError::InvalidFactor(format!(
                "expected {count} generator names, got {}",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if self.lookup(n).is_some() || names[..i].contains(n) {
                return Err(WordError::DuplicateName(n.clone()));
            }
        }
        let factor = self.factors.len();
        let start = self.gens.len() as u32;
        for n in names {
            self.gens.push(Generator { name: n.clone(), factor });
        }
        let gens: Vec<GenId> = (start..start + count as u32).map(GenId).collect();
        self.factors.push(FactorSpec { kind, gens: gens.clone() });
        self.rekey();
        // existing words carry the old key
        self.relators = std::mem::take(&mut self.relators)
            .into_iter()
            .map(|r| self.rekey_relator(r))
            .collect();
        self.subs = std::mem::take(&mut self.subs)
            .into_iter()
            .map(|(g, w)| (g, self.with_key(w)))
            .collect();
        if let FactorKind::Surface(genus) = kind {
            let pairs = (0..genus as usize)
                .map(|i| (self.gen_word(gens[2 * i]), self.gen_word(gens[2 * i + 1])))
                .collect();
            self.add_relator(Relator::CommutatorProduct(pairs))?;
        }
        Ok(factor)
    }

    fn with_key(&self, w: Word) -> Word {
        Word { key: self.key, letters: w.letters }
    }

    fn rekey_relator(&self, r: Relator) -> Relator {
        match r {
            Relator::CommutatorPair(u, v) => Relator::CommutatorPair(self.with_key(u), self.with_key(v)),
            Relator::CommutatorProduct(ps) => Relator::CommutatorProduct(
                ps.into_iter().map(|(u, v)| (self.with_key(u), self.with_key(v))).collect(),
            ),
            Relator::Identify(g, w) => Relator::Identify(g, self.with_key(w)),
            Relator::General(w) => Relator::General(self.with_key(w)),
            other => other,
        }
    }

    pub fn identity(&self) -> Word {
        Word { key: self.key, letters: Vec::new() }
    }

    /// The word of a generator, substitution-normalized.
    pub fn gen_word(&self, g: GenId) -> Word {
        match self.subs.get(&g) {
            Some(w) => w.clone(),
            None => Word { key: self.key, letters: vec![Letter { gen: g, exp: BigInt::one() }] },
        }
    }

    fn check(&self, w: &Word) -> Result<()> {
        if w.key != self.key {
            return Err(WordError::MixedPresentations);
        }
        Ok(())
    }

    /// Builds the canonical word for a token sequence.
    pub fn make_word<S: AsRef<str>>(&self, tokens: &[(S, BigInt)]) -> Result<Word> {
        let mut raw = Vec::with_capacity(tokens.len());
        for (name, exp) in tokens {
            let name = name.as_ref();
            let g = self
                .lookup(name)
                .ok_or_else(|| WordError::UnknownGenerator(name.to_string()))?;
            if exp.is_zero() {
                return Err(WordError::ZeroExponent(name.to_string()));
            }
            raw.push(Letter { gen: g, exp: exp.clone() });
        }
        self.canonical(raw)
    }

    /// Canonical form of an arbitrary letter sequence (zero exponents are
    /// dropped, eliminated generators substituted).
    pub fn canonical(&self, raw: Vec<Letter>) -> Result<Word> {
        let mut expanded = Vec::with_capacity(raw.len());
        for l in raw {
            if l.exp.is_zero() {
                continue;
            }
            match self.subs.get(&l.gen) {
                None => expanded.push(l),
                Some(w) => self.push_power(&mut expanded, w, &l.exp)?,
            }
        }
        Ok(Word { key: self.key, letters: self.reduce(expanded) })
    }

    fn push_power(&self, out: &mut Vec<Letter>, w: &Word, exp: &BigInt) -> Result<()> {
        if w.letters.is_empty() {
            return Ok(());
        }
        // powers of a single abelian run scale letter-wise
        let single_run = w.letters.len() == 1
            || w.letters.iter().all(|l| {
                self.is_abelian_gen(l.gen).is_some()
                    && self.is_abelian_gen(l.gen) == self.is_abelian_gen(w.letters[0].gen)
            });
        if single_run {
            out.extend(w.letters.iter().map(|l| Letter { gen: l.gen, exp: &l.exp * exp }));
            return Ok(());
        }
        let times = exp
            .abs()
            .to_u64()
            .filter(|&t| t <= MAX_EXPANDED_POWER)
            .ok_or_else(|| WordError::ExponentTooLarge(exp.clone()))?;
        let base = if exp.is_negative() { self.inverse_letters(&w.letters) } else { w.letters.clone() };
        for _ in 0..times {
            out.extend(base.iter().cloned());
        }
        Ok(())
    }

    fn inverse_letters(&self, letters: &[Letter]) -> Vec<Letter> {
        letters.iter().rev().map(|l| Letter { gen: l.gen, exp: -&l.exp }).collect()
    }

    /// Stack-based free reduction with abelian-run sorting.  Input letters
    /// must all be live generators.
    fn reduce(&self, letters: Vec<Letter>) -> Vec<Letter> {
        let mut stack: Vec<Run> = Vec::new();
        for l in letters {
            if l.exp.is_zero() {
                continue;
            }
            match self.is_abelian_gen(l.gen) {
                Some(f) => {
                    if let Some(Run::Abelian(tf, run)) = stack.last_mut() {
                        if *tf == f {
                            match run.binary_search_by(|x| x.gen.cmp(&l.gen)) {
                                Ok(i) => {
                                    run[i].exp += &l.exp;
                                    if run[i].exp.is_zero() {
                                        run.remove(i);
                                    }
                                }
                                Err(i) => run.insert(i, l),
                            }
                            if run.is_empty() {
                                stack.pop();
                            }
                            continue;
                        }
                    }
                    stack.push(Run::Abelian(f, vec![l]));
                }
                None => {
                    if let Some(Run::Single(top)) = stack.last_mut() {
                        if top.gen == l.gen {
                            top.exp += &l.exp;
                            if top.exp.is_zero() {
                                stack.pop();
                            }
                            continue;
                        }
                    }
                    stack.push(Run::Single(l));
                }
            }
        }
        let mut out = Vec::new();
        for r in stack {
            match r {
                Run::Abelian(_, run) => out.extend(run),
                Run::Single(l) => out.push(l),
            }
        }
        out
    }

    pub fn multiply(&self, u: &Word, v: &Word) -> Result<Word> {
        self.check(u)?;
        self.check(v)?;
        let mut letters = u.letters.clone();
        letters.extend(v.letters.iter().cloned());
        Ok(Word { key: self.key, letters: self.reduce(letters) })
    }

    pub fn invert(&self, u: &Word) -> Result<Word> {
        self.check(u)?;
        Ok(Word { key: self.key, letters: self.reduce(self.inverse_letters(&u.letters)) })
    }

    /// Product of a sequence of words.
    pub fn product<'a>(&self, ws: impl IntoIterator<Item = &'a Word>) -> Result<Word> {
        let mut letters = Vec::new();
        for w in ws {
            self.check(w)?;
            letters.extend(w.letters.iter().cloned());
        }
        Ok(Word { key: self.key, letters: self.reduce(letters) })
    }

    /// `u v u^-1 v^-1`, canonical.
    pub fn commutator(&self, u: &Word, v: &Word) -> Result<Word> {
        let ui = self.invert(u)?;
        let vi = self.invert(v)?;
        self.product([u, v, &ui, &vi])
    }

    pub fn power(&self, u: &Word, k: &BigInt) -> Result<Word> {
        self.check(u)?;
        let mut out = Vec::new();
        self.push_power(&mut out, u, k)?;
        Ok(Word { key: self.key, letters: self.reduce(out) })
    }

    /// Re-canonicalizes a word against the current substitutions (used for
    /// words stored before an identification).
    pub fn normalize(&self, w: &Word) -> Result<Word> {
        self.check(w)?;
        self.canonical(w.letters.clone())
    }

    /// Splits a canonical word at every letter boundary, returning
    /// `(prefix, suffix)` pairs with both parts nonempty.
    pub fn splits(&self, w: &Word) -> Vec<(Word, Word)> {
        (1..w.letters.len())
            .map(|i| {
                (
                    Word { key: self.key, letters: w.letters[..i].to_vec() },
                    Word { key: self.key, letters: w.letters[i..].to_vec() },
                )
            })
            .collect()
    }

    /// All nonempty contiguous subwords of the canonical letter sequence.
    pub fn subwords(&self, w: &Word) -> Vec<Word> {
        let n = w.letters.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..=n {
                out.push(Word { key: self.key, letters: w.letters[i..j].to_vec() });
            }
        }
        out
    }

    /// Adds a relator.  `Identify` eliminates its generator; every other
    /// form is normalized and appended (trivial relators are dropped).
    pub fn add_relator(&mut self, r: Relator) -> Result<()> {
        match r {
            Relator::Identify(g, w) => self.apply_identification(g, &w),
            Relator::CrossCommutation(a, b) => {
                if a >= self.factors.len() || b >= self.factors.len() || a == b {
                    return Err(WordError::InvalidRelator(format!("cross commutation {a}, {b}")));
                }
                self.relators.push(Relator::CrossCommutation(a, b));
                Ok(())
            }
            other => {
                if let Relator::CommutatorProduct(ps) = &other {
                    if ps.is_empty() {
                        return Err(WordError::InvalidRelator("empty commutator product".into()));
                    }
                }
                if let Relator::Power(g, d) = &other {
                    if *d < BigInt::from(2) || g.index() >= self.gens.len() {
                        return Err(WordError::InvalidRelator("power relator needs d >= 2".into()));
                    }
                }
                if let Some(n) = self.normalize_relator(other)? {
                    self.relators.push(n);
                }
                Ok(())
            }
        }
    }

    fn trivial_pair(&self, u: &Word, v: &Word) -> Result<bool> {
        Ok(u.is_identity() || v.is_identity() || u == v || self.invert(u)? == *v)
    }

    fn normalize_relator(&self, r: Relator) -> Result<Option<Relator>> {
        Ok(match r {
            Relator::CommutatorPair(u, v) => {
                let (u, v) = (self.normalize(&u)?, self.normalize(&v)?);
                (!self.trivial_pair(&u, &v)?).then_some(Relator::CommutatorPair(u, v))
            }
            Relator::CommutatorProduct(ps) => {
                let mut kept = Vec::new();
                for (u, v) in ps {
                    let (u, v) = (self.normalize(&u)?, self.normalize(&v)?);
                    if !self.trivial_pair(&u, &v)? {
                        kept.push((u, v));
                    }
                }
                match kept.len() {
                    0 => None,
                    1 => {
                        let (u, v) = kept.pop().unwrap();
                        Some(Relator::CommutatorPair(u, v))
                    }
                    _ => Some(Relator::CommutatorProduct(kept)),
                }
            }
            Relator::Power(g, d) => match self.subs.get(&g) {
                None => Some(Relator::Power(g, d)),
                Some(w) => match w.as_generator() {
                    Some(h) => Some(Relator::Power(h, d)),
                    None => {
                        let p = self.power(w, &d)?;
                        (!p.is_identity()).then_some(Relator::General(p))
                    }
                },
            },
            Relator::General(w) => {
                let w = self.normalize(&w)?;
                (!w.is_identity()).then_some(Relator::General(w))
            }
            other => Some(other),
        })
    }

    /// Eliminates `g` by the substitution `g -> w` and rewrites every stored
    /// word.
    pub fn apply_identification(&mut self, g: GenId, w: &Word) -> Result<()> {
        self.check(w)?;
        if g.index() >= self.gens.len() {
            return Err(WordError::UnknownGenerator(format!("#{}", g.0)));
        }
        if self.subs.contains_key(&g) {
            return Err(WordError::AlreadyEliminated(self.name(g).to_string()));
        }
        let w = self.normalize(w)?;
        if w.contains(g) {
            return Err(WordError::SelfReference(self.name(g).to_string()));
        }
        self.subs.insert(g, w);
        let subs: Vec<(GenId, Word)> = self.subs.iter().map(|(k, v)| (*k, v.clone())).collect();
        for (k, v) in subs {
            let nv = self.normalize(&v)?;
            self.subs.insert(k, nv);
        }
        let old = std::mem::take(&mut self.relators);
        for r in old {
            if let Some(n) = self.normalize_relator(r)? {
                self.relators.push(n);
            }
        }
        Ok(())
    }

    /// Free product: the generators of `other` are appended after ours.
    pub fn free_product(&self, other: &Presentation) -> Result<Presentation> {
        for g in &other.gens {
            if self.lookup(&g.name).is_some() {
                return Err(WordError::DuplicateName(g.name.clone()));
            }
        }
        let shift = self.gens.len() as u32;
        let fshift = self.factors.len();
        let mut out = self.clone();
        out.gens.extend(other.gens.iter().map(|g| Generator { name: g.name.clone(), factor: g.factor + fshift }));
        out.factors.extend(other.factors.iter().map(|f| FactorSpec {
            kind: f.kind,
            gens: f.gens.iter().map(|g| GenId(g.0 + shift)).collect(),
        }));
        out.rekey();
        let key = out.key;
        let mv = |w: &Word, sh: u32| Word {
            key,
            letters: w.letters.iter().map(|l| Letter { gen: GenId(l.gen.0 + sh), exp: l.exp.clone() }).collect(),
        };
        let move_rel = |r: &Relator, sh: u32, fsh: usize| match r {
            Relator::CommutatorPair(u, v) => Relator::CommutatorPair(mv(u, sh), mv(v, sh)),
            Relator::CommutatorProduct(ps) => {
                Relator::CommutatorProduct(ps.iter().map(|(u, v)| (mv(u, sh), mv(v, sh))).collect())
            }
            Relator::Identify(g, w) => Relator::Identify(GenId(g.0 + sh), mv(w, sh)),
            Relator::Power(g, d) => Relator::Power(GenId(g.0 + sh), d.clone()),
            Relator::CrossCommutation(a, b) => Relator::CrossCommutation(a + fsh, b + fsh),
            Relator::General(w) => Relator::General(mv(w, sh)),
        };
        out.relators = self.relators.iter().map(|r| move_rel(r, 0, 0)).collect();
        out.relators.extend(other.relators.iter().map(|r| move_rel(r, shift, fshift)));
        out.subs = self.subs.iter().map(|(g, w)| (*g, mv(w, 0))).collect();
        out.subs.extend(other.subs.iter().map(|(g, w)| (GenId(g.0 + shift), mv(w, shift))));
        Ok(out)
    }

    /// Renders a word in the `x1 y2^-1` syntax; the identity renders as `1`.
    pub fn render(&self, w: &Word) -> String {
        if w.letters.is_empty() {
            return "1".to_string();
        }
        w.letters
            .iter()
            .map(|l| {
                let name = self.name(l.gen);
                if l.exp.is_one() {
                    name.to_string()
                } else {
                    format!("{name}^{}", l.exp)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the `x1 y2^-1 x3^2` syntax (`1` is the identity).
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let mut tokens: Vec<(String, BigInt)> = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let exp: BigInt = e
                        .parse()
                        .map_err(|_| WordError::UnknownGenerator(tok.to_string()))?;
                    (n, exp)
                }
                None => (tok, BigInt::one()),
            };
            tokens.push((name.to_string(), exp));
        }
        self.make_word(&tokens)
    }

    pub fn display<'a>(&'a self, w: &'a Word) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Presentation, &'a Word);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.render(self.1))
            }
        }
        D(self, w)
    }
}

/// Generator names for a factor: single-letter prefixes give `x1`, longer
/// prefixes give `pre.1`.
pub fn generator_names(prefix: &str, count: usize) -> Vec<String> {
    let dotted = prefix.chars().count() != 1 || prefix.ends_with(|c: char| c.is_ascii_digit());
    (1..=count)
        .map(|i| if dotted { format!("{prefix}.{i}") } else { format!("{prefix}{i}") })
        .collect()
}
