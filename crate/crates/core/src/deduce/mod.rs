//! Commutation deduction.
//!
//! A [`KnowledgeBase`] holds facts `[u, v] = 1` about words of a
//! presentation and saturates them under a small rule set:
//!
//! * R1 symmetry: facts are unordered pairs, so `[a,b]` and `[b,a]` coincide.
//! * R2 inverse: `[a,b] |- [a,b^-1]`.
//! * R3 product: `[a,b], [a,c] |- [a,bc]` (and `[a,cb]`).
//! * R4 cancellation: `[a,w], [a,b] |- [a,b^-1 w]` (and the other
//!   one-sided quotients).
//! * R5 relators: products of commutators set to one are simplified with
//!   known facts; when a single commutator remains it is derived.
//!
//! New words are only formed inside a fixed universe: the generators, every
//! word occurring in a relator, tuple or axiom, their contiguous subwords and
//! inverses.  Every derivation step is recorded and can be replayed by
//! [`replay::replay_certificate`] without any engine state.

pub mod cert;
pub mod replay;

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::nil2::Tuple4;
use crate::words::{FactorKind, GenId, Presentation, Relator, Word};

pub use cert::Certificate;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_facts: usize,
    pub max_word_length: usize,
    /// Enables `[a,b] |- [g a g^-1, g b g^-1]` for generators `g`.
    pub conjugation: bool,
    /// Lets R3/R4 admit words outside the initial universe when they are at
    /// most `max_word_length` letters long.
    pub open_universe: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_facts: 200_000, max_word_length: 6, conjugation: false, open_universe: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    /// Two generators of one free abelian factor.
    Factor,
    /// A pair from a cross-commutation relator.
    Cross,
    /// A pair `(w_i, w_j)` of a 4-tuple.
    Tuple,
    /// A commutator-pair relator.
    Relator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Axiom(AxiomKind),
    /// `[a, a]`
    Refl,
    Inverse,
    Product,
    Cancel,
    /// A relator reduced to a single commutator.
    Relator,
    Conjugate,
    /// A relator installed from the presentation, or from a fact.
    RelInit,
    /// A trivial or known commutator removed from a relator.
    RelDrop,
    /// `[p q, v] = [p, v]` when `[q, v] = 1` (and the prefix variant).
    RelStrip,
    /// `[p q, r s] = [p, r][q, s]` when `q, s` commute with `p, r`.
    RelSplit,
    /// A cyclic block equal to another relator removed.
    RelCancel,
}

impl Rule {
    pub fn tag(self) -> &'static str {
        match self {
            Rule::Axiom(AxiomKind::Factor) => "AXIOM-FACTOR",
            Rule::Axiom(AxiomKind::Cross) => "AXIOM-CROSS",
            Rule::Axiom(AxiomKind::Tuple) => "AXIOM-TUPLE",
            Rule::Axiom(AxiomKind::Relator) => "AXIOM-RELATOR",
            Rule::Refl => "REFL",
            Rule::Inverse => "R2",
            Rule::Product => "R3",
            Rule::Cancel => "R4",
            Rule::Relator => "R5",
            Rule::Conjugate => "CONJ",
            Rule::RelInit => "REL",
            Rule::RelDrop => "REL-DROP",
            Rule::RelStrip => "REL-STRIP",
            Rule::RelSplit => "REL-SPLIT",
            Rule::RelCancel => "REL-CANCEL",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Rule> {
        const ALL: [Rule; 15] = [
            Rule::Axiom(AxiomKind::Factor),
            Rule::Axiom(AxiomKind::Cross),
            Rule::Axiom(AxiomKind::Tuple),
            Rule::Axiom(AxiomKind::Relator),
            Rule::Refl,
            Rule::Inverse,
            Rule::Product,
            Rule::Cancel,
            Rule::Relator,
            Rule::Conjugate,
            Rule::RelInit,
            Rule::RelDrop,
            Rule::RelStrip,
            Rule::RelSplit,
            Rule::RelCancel,
        ];
        ALL.into_iter().find(|r| r.tag() == tag)
    }

    pub fn concludes_fact(self) -> bool {
        !matches!(self, Rule::RelInit | Rule::RelDrop | Rule::RelStrip | Rule::RelSplit | Rule::RelCancel)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conclusion {
    Fact(Word, Word),
    /// Ordered product of commutators equal to one.
    Relator(Vec<(Word, Word)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub id: usize,
    pub rule: Rule,
    pub premises: Vec<usize>,
    pub conclusion: Conclusion,
}

/// A derived commutation, as exposed to callers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommFact {
    pub id: usize,
    pub u: Word,
    pub v: Word,
    pub rule: Rule,
    pub premises: Vec<usize>,
}

#[derive(Debug, Error, Clone)]
pub enum DeduceError {
    #[error("tuple word is not over the presentation")]
    ForeignWord,
    #[error("fact limit exceeded after {} facts", .0.fact_count)]
    LimitExceeded(Box<ProofReport>),
}

type WordId = u32;

#[derive(Clone, Debug)]
struct WordTable {
    words: Vec<Word>,
    index: HashMap<Word, WordId>,
    inv: Vec<WordId>,
    prod: HashMap<(WordId, WordId), Option<WordId>>,
}

impl WordTable {
    fn new() -> Self {
        WordTable { words: Vec::new(), index: HashMap::new(), inv: Vec::new(), prod: HashMap::new() }
    }

    fn get(&self, w: &Word) -> Option<WordId> {
        self.index.get(w).copied()
    }

    /// Interns `w` and its inverse.  The identity is never interned.
    fn intern(&mut self, pres: &Presentation, w: &Word) -> Option<WordId> {
        if w.is_identity() {
            return None;
        }
        if let Some(id) = self.get(w) {
            return Some(id);
        }
        let wi = pres.invert(w).expect("word over presentation");
        let id = self.words.len() as WordId;
        self.words.push(w.clone());
        self.index.insert(w.clone(), id);
        self.inv.push(id);
        if wi == *w {
            return Some(id);
        }
        let iid = id + 1;
        self.words.push(wi.clone());
        self.index.insert(wi, iid);
        self.inv.push(id);
        self.inv[id as usize] = iid;
        Some(id)
    }
}

#[derive(Clone, Debug)]
struct RelSlot {
    step: usize,
    terms: Vec<(WordId, WordId)>,
    closed: bool,
}

#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    pres: Presentation,
    tuples: Vec<Tuple4>,
    limits: Limits,
    table: WordTable,
    steps: Vec<Step>,
    facts: HashMap<(WordId, WordId), usize>,
    fact_pairs: Vec<(usize, (WordId, WordId))>,
    centralizer: Vec<Vec<(WordId, usize)>>,
    touched: HashSet<WordId>,
    pending: VecDeque<usize>,
    relators: Vec<RelSlot>,
    goals: Vec<(GenId, GenId)>,
    goal_ids: Vec<(WordId, WordId)>,
    limit_hit: bool,
}

/// The axiom pairs a presentation and tuple list impose, in a fixed order.
pub fn axiom_pairs(pres: &Presentation, tuples: &[Tuple4]) -> Vec<(AxiomKind, Word, Word)> {
    let mut out = Vec::new();
    let gw = |g: &GenId| pres.gen_word(*g);
    for f in pres.factors() {
        if let FactorKind::FreeAbelian(_) = f.kind {
            for (i, a) in f.gens.iter().enumerate() {
                for b in &f.gens[i + 1..] {
                    out.push((AxiomKind::Factor, gw(a), gw(b)));
                }
            }
        }
    }
    for r in pres.relators() {
        if let Relator::CrossCommutation(fa, fb) = r {
            for a in &pres.factors()[*fa].gens {
                for b in &pres.factors()[*fb].gens {
                    out.push((AxiomKind::Cross, gw(a), gw(b)));
                }
            }
        }
    }
    for t in tuples {
        for i in 0..4 {
            for j in i + 1..4 {
                out.push((AxiomKind::Tuple, t[i].clone(), t[j].clone()));
            }
        }
    }
    for r in pres.relators() {
        if let Relator::CommutatorPair(u, v) = r {
            out.push((AxiomKind::Relator, u.clone(), v.clone()));
        }
    }
    out.retain(|(_, u, v)| !trivially_commute(pres, u, v));
    out
}

/// `[u, v] = 1` holds in every group: a side is trivial or `v = u^{+-1}`.
pub fn trivially_commute(pres: &Presentation, u: &Word, v: &Word) -> bool {
    u.is_identity() || v.is_identity() || u == v || pres.invert(u).map(|ui| ui == *v).unwrap_or(false)
}

/// Commutator-product relators the engine simplifies, in a fixed order.
pub fn relator_terms(pres: &Presentation) -> Vec<Vec<(Word, Word)>> {
    pres.relators()
        .iter()
        .filter_map(|r| match r {
            Relator::CommutatorProduct(ps) => {
                Some(ps.iter().filter(|(u, v)| !u.is_identity() && !v.is_identity()).cloned().collect())
            }
            _ => None,
        })
        .collect()
}

impl KnowledgeBase {
    /// Installs the axioms and computes the goals: the generator pairs the
    /// presentation alone does not make commute.
    pub fn new(pres: &Presentation, tuples: &[Tuple4], limits: Limits) -> Result<Self, DeduceError> {
        if tuples.iter().flatten().any(|w| w.key() != pres.key()) {
            return Err(DeduceError::ForeignWord);
        }
        let mut kb = KnowledgeBase {
            pres: pres.clone(),
            tuples: tuples.to_vec(),
            limits,
            table: WordTable::new(),
            steps: Vec::new(),
            facts: HashMap::new(),
            fact_pairs: Vec::new(),
            centralizer: Vec::new(),
            touched: HashSet::new(),
            pending: VecDeque::new(),
            relators: Vec::new(),
            goals: Vec::new(),
            goal_ids: Vec::new(),
            limit_hit: false,
        };
        let live = pres.live_generators();
        let axioms = axiom_pairs(pres, tuples);
        let products = relator_terms(pres);

        // universe: generators, every occurring word, subwords, inverses
        for g in &live {
            kb.table.intern(pres, &pres.gen_word(*g));
        }
        let mut seeds: Vec<&Word> = Vec::new();
        for (_, u, v) in &axioms {
            seeds.push(u);
            seeds.push(v);
        }
        for ps in &products {
            for (u, v) in ps {
                seeds.push(u);
                seeds.push(v);
            }
        }
        for w in seeds {
            for s in pres.subwords(w) {
                kb.table.intern(pres, &s);
                let si = pres.invert(&s).expect("word over presentation");
                for t in pres.subwords(&si) {
                    kb.table.intern(pres, &t);
                }
            }
        }
        kb.sync_centralizer();

        let mut composite = Vec::new();
        for (kind, u, v) in &axioms {
            let (a, b) = (kb.table.get(u).unwrap(), kb.table.get(v).unwrap());
            if let Some(id) = kb.add_fact(a, b, Rule::Axiom(*kind), vec![]) {
                if u.len() > 1 || v.len() > 1 {
                    composite.push(id);
                }
            }
        }
        for ps in &products {
            let terms: Vec<(WordId, WordId)> =
                ps.iter().map(|(u, v)| (kb.table.get(u).unwrap(), kb.table.get(v).unwrap())).collect();
            let step = kb.push_step(Rule::RelInit, vec![], kb.relator_conclusion(&terms));
            kb.relators.push(RelSlot { step, terms, closed: false });
        }
        for id in composite {
            let Conclusion::Fact(u, v) = kb.steps[id].conclusion.clone() else { unreachable!() };
            let terms = vec![(kb.table.get(&u).unwrap(), kb.table.get(&v).unwrap())];
            let step = kb.push_step(Rule::RelInit, vec![id], kb.relator_conclusion(&terms));
            kb.relators.push(RelSlot { step, terms, closed: false });
        }

        for (i, a) in live.iter().enumerate() {
            for b in &live[i + 1..] {
                let (wa, wb) = (kb.table.get(&pres.gen_word(*a)).unwrap(), kb.table.get(&pres.gen_word(*b)).unwrap());
                let by_presentation = kb
                    .fact(wa, wb)
                    .is_some_and(|id| kb.steps[id].rule != Rule::Axiom(AxiomKind::Tuple));
                if !by_presentation {
                    kb.goals.push((*a, *b));
                    kb.goal_ids.push((wa, wb));
                }
            }
        }
        Ok(kb)
    }

    pub fn presentation(&self) -> &Presentation {
        &self.pres
    }

    pub fn tuples(&self) -> &[Tuple4] {
        &self.tuples
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn goals(&self) -> &[(GenId, GenId)] {
        &self.goals
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn fact_count(&self) -> usize {
        self.fact_pairs.len()
    }

    pub fn universe_size(&self) -> usize {
        self.table.words.len()
    }

    pub fn limit_hit(&self) -> bool {
        self.limit_hit
    }

    pub fn facts(&self) -> impl Iterator<Item = CommFact> + '_ {
        self.fact_pairs.iter().map(|(id, _)| {
            let s = &self.steps[*id];
            let Conclusion::Fact(u, v) = &s.conclusion else { unreachable!() };
            CommFact { id: *id, u: u.clone(), v: v.clone(), rule: s.rule, premises: s.premises.clone() }
        })
    }

    /// Whether `[u, v] = 1` is known (or trivial).
    pub fn knows(&self, u: &Word, v: &Word) -> bool {
        if trivially_commute(&self.pres, u, v) {
            return true;
        }
        match (self.table.get(u), self.table.get(v)) {
            (Some(a), Some(b)) => self.fact(a, b).is_some(),
            _ => false,
        }
    }

    /// Goals not yet derived.
    pub fn missing(&self) -> Vec<(GenId, GenId)> {
        self.goals
            .iter()
            .zip(&self.goal_ids)
            .filter(|(_, (a, b))| self.fact(*a, *b).is_none())
            .map(|(g, _)| *g)
            .collect()
    }

    fn all_goals_known(&self) -> bool {
        self.goal_ids.iter().all(|(a, b)| self.fact(*a, *b).is_some())
    }

    fn sync_centralizer(&mut self) {
        while self.centralizer.len() < self.table.words.len() {
            self.centralizer.push(Vec::new());
        }
    }

    fn key(&self, a: WordId, b: WordId) -> (WordId, WordId) {
        if self.table.words[a as usize] <= self.table.words[b as usize] {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn fact(&self, a: WordId, b: WordId) -> Option<usize> {
        self.facts.get(&self.key(a, b)).copied()
    }

    fn push_step(&mut self, rule: Rule, premises: Vec<usize>, conclusion: Conclusion) -> usize {
        let id = self.steps.len();
        self.steps.push(Step { id, rule, premises, conclusion });
        id
    }

    fn relator_conclusion(&self, terms: &[(WordId, WordId)]) -> Conclusion {
        Conclusion::Relator(
            terms
                .iter()
                .map(|(u, v)| (self.table.words[*u as usize].clone(), self.table.words[*v as usize].clone()))
                .collect(),
        )
    }

    fn is_trivial_pair(&self, a: WordId, b: WordId) -> bool {
        a == b || self.table.inv[a as usize] == b
    }

    /// Records a new fact (canonical orientation); `None` if already known
    /// or trivial, or if the fact limit is reached.
    fn add_fact(&mut self, a: WordId, b: WordId, rule: Rule, premises: Vec<usize>) -> Option<usize> {
        if self.is_trivial_pair(a, b) && rule != Rule::Refl {
            return None;
        }
        let key = self.key(a, b);
        if self.facts.contains_key(&key) {
            return None;
        }
        if self.fact_pairs.len() >= self.limits.max_facts {
            self.limit_hit = true;
            return None;
        }
        let (u, v) = (self.table.words[key.0 as usize].clone(), self.table.words[key.1 as usize].clone());
        let id = self.push_step(rule, premises, Conclusion::Fact(u, v));
        self.facts.insert(key, id);
        self.fact_pairs.push((id, key));
        self.pending.push_back(id);
        for w in [key.0, key.1] {
            if rule != Rule::Refl && self.touched.insert(w) {
                self.add_fact(w, w, Rule::Refl, vec![]);
            }
        }
        Some(id)
    }

    fn product(&mut self, a: WordId, b: WordId) -> Option<WordId> {
        if let Some(r) = self.table.prod.get(&(a, b)) {
            return *r;
        }
        let w = self
            .pres
            .multiply(&self.table.words[a as usize], &self.table.words[b as usize])
            .expect("universe words share the presentation");
        let r = match self.table.get(&w) {
            Some(id) => Some(id),
            None if self.limits.open_universe && !w.is_identity() && w.len() <= self.limits.max_word_length => {
                let id = self.table.intern(&self.pres, &w);
                self.sync_centralizer();
                id
            }
            None => None,
        };
        self.table.prod.insert((a, b), r);
        r
    }

    /// Runs the rules to a fixed point, or until every goal is derived when
    /// `stop_at_goals` is set.  Returns `false` if the fact limit was hit.
    pub fn saturate(&mut self, stop_at_goals: bool) -> bool {
        loop {
            while let Some(f) = self.pending.pop_front() {
                if self.limit_hit {
                    return false;
                }
                self.process(f);
                if stop_at_goals && self.all_goals_known() {
                    return !self.limit_hit;
                }
            }
            if self.limit_hit {
                return false;
            }
            self.relator_pass();
            if self.pending.is_empty() {
                return !self.limit_hit;
            }
            if stop_at_goals && self.all_goals_known() {
                return !self.limit_hit;
            }
        }
    }

    fn process(&mut self, f: usize) {
        let Conclusion::Fact(u, v) = &self.steps[f].conclusion else { return };
        let (p, q) = (self.table.get(u).unwrap(), self.table.get(v).unwrap());
        self.centralizer[p as usize].push((q, f));
        if p != q {
            self.centralizer[q as usize].push((p, f));
        }
        let sides: &[(WordId, WordId)] = if p == q { &[(p, q)] } else { &[(p, q), (q, p)] };
        for &(a, b) in sides {
            // R2
            let bi = self.table.inv[b as usize];
            self.add_fact(a, bi, Rule::Inverse, vec![f]);
            let partners = self.centralizer[a as usize].clone();
            // R3
            for &(c, fc) in &partners {
                if let Some(bc) = self.product(b, c) {
                    self.add_fact(a, bc, Rule::Product, vec![f, fc]);
                }
                if let Some(cb) = self.product(c, b) {
                    self.add_fact(a, cb, Rule::Product, vec![f, fc]);
                }
            }
            // R4
            for &(c, fc) in &partners {
                let ci = self.table.inv[c as usize];
                for (x, y) in [(bi, c), (c, bi), (ci, b), (b, ci)] {
                    if let Some(r) = self.product(x, y) {
                        self.add_fact(a, r, Rule::Cancel, vec![fc, f]);
                    }
                }
            }
            if self.limit_hit {
                return;
            }
        }
        if self.limits.conjugation {
            self.conjugate(f, p, q);
        }
    }

    fn conjugate(&mut self, f: usize, p: WordId, q: WordId) {
        for g in self.pres.live_generators() {
            let gw = self.table.get(&self.pres.gen_word(g)).unwrap();
            let gi = self.table.inv[gw as usize];
            for (s, t) in [(gw, gi), (gi, gw)] {
                let cp = self.product(s, p).and_then(|x| self.product(x, t));
                let cq = self.product(s, q).and_then(|x| self.product(x, t));
                if let (Some(a), Some(b)) = (cp, cq) {
                    self.add_fact(a, b, Rule::Conjugate, vec![f]);
                }
            }
        }
    }

    fn known(&self, a: WordId, b: WordId) -> Option<Option<usize>> {
        if self.is_trivial_pair(a, b) {
            return Some(None);
        }
        self.fact(a, b).map(Some)
    }

    fn relator_pass(&mut self) {
        for i in 0..self.relators.len() {
            while !self.relators[i].closed && self.simplify(i) {
                if self.limit_hit {
                    return;
                }
            }
        }
    }

    fn replace_slot(&mut self, i: usize, rule: Rule, mut premises: Vec<usize>, terms: Vec<(WordId, WordId)>) {
        premises.insert(0, self.relators[i].step);
        let step = self.push_step(rule, premises, self.relator_conclusion(&terms));
        self.relators[i].step = step;
        self.relators[i].terms = terms;
    }

    /// One simplification of relator `i`; `false` when nothing applies.
    fn simplify(&mut self, i: usize) -> bool {
        let terms = self.relators[i].terms.clone();
        if terms.is_empty() {
            self.relators[i].closed = true;
            return false;
        }
        // drop
        for (k, &(u, v)) in terms.iter().enumerate() {
            if let Some(fact) = self.known(u, v) {
                let mut t = terms.clone();
                t.remove(k);
                self.replace_slot(i, Rule::RelDrop, fact.into_iter().collect(), t);
                return true;
            }
        }
        // conclude
        if terms.len() == 1 {
            let (u, v) = terms[0];
            let step = self.relators[i].step;
            self.add_fact(u, v, Rule::Relator, vec![step]);
            self.relators[i].closed = true;
            return false;
        }
        // strip
        for (k, &(u, v)) in terms.iter().enumerate() {
            if let Some((nu, nv, prem)) = self.strip(u, v) {
                let mut t = terms.clone();
                t[k] = (nu, nv);
                self.replace_slot(i, Rule::RelStrip, prem, t);
                return true;
            }
        }
        // split
        for (k, &(u, v)) in terms.iter().enumerate() {
            if let Some((first, second, prem)) = self.split(u, v) {
                let mut t = terms.clone();
                t[k] = first;
                t.insert(k + 1, second);
                self.replace_slot(i, Rule::RelSplit, prem, t);
                return true;
            }
        }
        // cancel against another relator
        for j in 0..self.relators.len() {
            if j == i || self.relators[j].terms.is_empty() {
                continue;
            }
            let other = self.relators[j].terms.clone();
            if other.len() > terms.len() {
                continue;
            }
            if let Some(rest) = cancel_block(&terms, &other) {
                let prem = vec![self.relators[j].step];
                self.replace_slot(i, Rule::RelCancel, prem, rest);
                return true;
            }
        }
        false
    }

    fn words_split(&self, w: WordId) -> Vec<(WordId, WordId)> {
        let word = &self.table.words[w as usize];
        self.pres
            .splits(word)
            .into_iter()
            .filter_map(|(p, q)| Some((self.table.get(&p)?, self.table.get(&q)?)))
            .collect()
    }

    fn strip(&self, u: WordId, v: WordId) -> Option<(WordId, WordId, Vec<usize>)> {
        for (p, q) in self.words_split(u) {
            if let Some(f) = self.known(q, v) {
                return Some((p, v, f.into_iter().collect()));
            }
            // u = p q with p in front: drop p when it commutes with v and q
            if let (Some(f1), Some(f2)) = (self.known(p, v), self.known(p, q)) {
                return Some((q, v, f1.into_iter().chain(f2).collect()));
            }
        }
        for (r, s) in self.words_split(v) {
            if let Some(f) = self.known(u, s) {
                return Some((u, r, f.into_iter().collect()));
            }
            if let (Some(f1), Some(f2)) = (self.known(u, r), self.known(r, s)) {
                return Some((u, s, f1.into_iter().chain(f2).collect()));
            }
        }
        None
    }

    #[allow(clippy::type_complexity)]
    fn split(&self, u: WordId, v: WordId) -> Option<((WordId, WordId), (WordId, WordId), Vec<usize>)> {
        for (p, q) in self.words_split(u) {
            for (r, s) in self.words_split(v) {
                let need = [(q, p), (q, r), (s, p), (s, r)];
                let mut prem = Vec::new();
                let mut ok = true;
                for (x, y) in need {
                    match self.known(x, y) {
                        Some(f) => prem.extend(f),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    return Some(((p, r), (q, s), prem));
                }
            }
        }
        None
    }

    /// Derived facts that answer the goals, with every step they depend on.
    pub fn certificate(&self) -> Certificate {
        let mut needed = vec![false; self.steps.len()];
        let mut stack: Vec<usize> = Vec::new();
        let mut goals = Vec::new();
        for (g, (a, b)) in self.goals.iter().zip(&self.goal_ids) {
            if let Some(id) = self.fact(*a, *b) {
                goals.push((g.0, g.1, id));
                stack.push(id);
            }
        }
        while let Some(s) = stack.pop() {
            if needed[s] {
                continue;
            }
            needed[s] = true;
            stack.extend(self.steps[s].premises.iter().copied());
        }
        let steps = self.steps.iter().filter(|s| needed[s.id]).cloned().collect();
        Certificate { steps, goals }
    }
}

/// Removes from the cyclic word `terms` a contiguous cyclic block equal to a
/// rotation of `block` or of its inverse; the remainder starts right after
/// the removed block.
pub fn cancel_block<T: Copy + PartialEq>(terms: &[(T, T)], block: &[(T, T)]) -> Option<Vec<(T, T)>> {
    let (n, l) = (terms.len(), block.len());
    if l == 0 || l > n {
        return None;
    }
    let inverse: Vec<(T, T)> = block.iter().rev().map(|&(u, v)| (v, u)).collect();
    for cand in [block.to_vec(), inverse] {
        for rot in 0..l {
            for start in 0..n {
                if (0..l).all(|k| terms[(start + k) % n] == cand[(rot + k) % l]) {
                    return Some((0..n - l).map(|k| terms[(start + l + k) % n]).collect());
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct ProofReport {
    pub proved: bool,
    pub missing_pairs: Vec<(String, String)>,
    pub certificate: Option<Certificate>,
    pub fact_count: usize,
    pub step_count: usize,
    pub goal_count: usize,
    pub universe_size: usize,
}

/// Tries to show that the quotient of the presented group by the tuples'
/// commutators is abelian.
pub fn prove_abelian(pres: &Presentation, tuples: &[Tuple4], limits: Limits) -> Result<ProofReport, DeduceError> {
    let mut kb = KnowledgeBase::new(pres, tuples, limits)?;
    let finished = kb.saturate(true);
    let missing: Vec<(String, String)> = kb
        .missing()
        .into_iter()
        .map(|(a, b)| (pres.name(a).to_string(), pres.name(b).to_string()))
        .collect();
    let proved = missing.is_empty();
    let report = ProofReport {
        proved,
        certificate: proved.then(|| kb.certificate()),
        missing_pairs: missing,
        fact_count: kb.fact_count(),
        step_count: kb.steps().len(),
        goal_count: kb.goals().len(),
        universe_size: kb.universe_size(),
    };
    if !finished && !proved {
        return Err(DeduceError::LimitExceeded(Box::new(report)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::generator_names;

    pub(crate) fn zmzn(m: u32, n: u32) -> Presentation {
        let mut p = Presentation::new();
        p.add_factor(FactorKind::FreeAbelian(m), &generator_names("x", m as usize)).unwrap();
        p.add_factor(FactorKind::FreeAbelian(n), &generator_names("y", n as usize)).unwrap();
        p
    }

    pub(crate) fn tuples(p: &Presentation, lines: &[&str]) -> Vec<Tuple4> {
        lines
            .iter()
            .map(|l| {
                let ws: Vec<Word> = l.split(',').map(|t| p.parse_word(t).unwrap()).collect();
                ws.try_into().unwrap()
            })
            .collect()
    }

    #[test]
    fn init_counts_for_three_four() {
        let p = zmzn(3, 4);
        let t = tuples(&p, &["x1, y1, x2 y2, x3 y3", "x2, x1 y3, x3 y2, y4"]);
        let kb = KnowledgeBase::new(&p, &t, Limits::default()).unwrap();
        let axioms = kb.steps().iter().filter(|s| matches!(s.rule, Rule::Axiom(_))).count();
        assert_eq!(axioms, 3 + 6 + 12);
        assert_eq!(kb.goals().len(), 12);
    }

    #[test]
    fn tuple_with_every_cross_pair() {
        let p = zmzn(2, 2);
        let t = tuples(&p, &["x1, x2, y1, y2"]);
        let kb = KnowledgeBase::new(&p, &t, Limits::default()).unwrap();
        assert_eq!(kb.goals().len(), 4);
        assert!(kb.missing().is_empty());
        let kb = KnowledgeBase::new(&p, &[], Limits::default()).unwrap();
        assert_eq!(kb.goals().len(), 4);
    }

    #[test]
    fn fixed_point_on_axioms_alone() {
        let p = zmzn(2, 2);
        let mut kb = KnowledgeBase::new(&p, &[], Limits::default()).unwrap();
        assert!(kb.saturate(false));
        let w = |s: &str| p.parse_word(s).unwrap();
        assert!(!kb.knows(&w("x1"), &w("y1")));
        assert!(kb.knows(&w("x1"), &w("x2^-1")));
    }

    #[test]
    fn derives_cross_pair_from_paired_products() {
        let p = zmzn(3, 4);
        let w = |s: &str| p.parse_word(s).unwrap();
        let mut q = p.clone();
        for (a, b) in [("x2 y2", "x3 y3"), ("x2", "y3")] {
            q.add_relator(Relator::CommutatorPair(w(a), w(b))).unwrap();
        }
        let q_w = |s: &str| q.parse_word(s).unwrap();
        let mut kb = KnowledgeBase::new(&q, &[], Limits::default()).unwrap();
        kb.saturate(false);
        assert!(kb.knows(&q_w("x3"), &q_w("y2")));
    }

    #[test]
    fn surface_relator_rule() {
        let mut p = Presentation::new();
        p.add_factor(FactorKind::Surface(2), &generator_names("y", 4)).unwrap();
        let y = |s: &str| p.parse_word(s).unwrap();
        let (a, b) = (y("y3"), y("y4"));
        p.add_relator(Relator::CommutatorPair(a, b)).unwrap();
        let mut kb = KnowledgeBase::new(&p, &[], Limits::default()).unwrap();
        kb.saturate(false);
        assert!(kb.knows(&p.parse_word("y1").unwrap(), &p.parse_word("y2").unwrap()));
        let r5 = kb.steps().iter().find(|s| s.rule == Rule::Relator).unwrap();
        assert_eq!(r5.conclusion, Conclusion::Fact(p.parse_word("y1").unwrap(), p.parse_word("y2").unwrap()));
    }

    #[test]
    fn three_four_is_proved() {
        let p = zmzn(3, 4);
        let t = tuples(&p, &["x1, y1, x2 y2, x3 y3", "x2, x1 y3, x3 y2, y4"]);
        let r = prove_abelian(&p, &t, Limits::default()).unwrap();
        assert!(r.proved, "missing {:?}", r.missing_pairs);
        assert_eq!(r.certificate.unwrap().goals.len(), 12);
        let r = prove_abelian(&p, &t[..1], Limits::default()).unwrap();
        assert!(!r.proved);
    }

    #[test]
    fn limit_is_distinguished() {
        let p = zmzn(3, 4);
        let t = tuples(&p, &["x1, y1, x2 y2, x3 y3", "x2, x1 y3, x3 y2, y4"]);
        let limits = Limits { max_facts: 10, ..Limits::default() };
        assert!(matches!(prove_abelian(&p, &t, limits), Err(DeduceError::LimitExceeded(_))));
    }

    #[test]
    fn foreign_tuple_word() {
        let p = zmzn(3, 4);
        let q = zmzn(2, 2);
        let t = tuples(&q, &["x1, x2, y1, y2"]);
        assert!(matches!(KnowledgeBase::new(&p, &t, Limits::default()), Err(DeduceError::ForeignWord)));
    }

    #[test]
    fn block_cancellation() {
        let b = [(1, 2), (3, 4), (5, 6)];
        assert_eq!(cancel_block(&b, &[(3, 4), (3, 4)]), None);
        assert_eq!(cancel_block(&b, &[(1, 2), (3, 4), (5, 6), (1, 2)]), None);
        assert_eq!(cancel_block(&b, &[(3, 4), (5, 6)]), Some(vec![(1, 2)]));
        // rotation of the block
        assert_eq!(cancel_block(&b, &[(5, 6), (1, 2)]), Some(vec![(3, 4)]));
        // inverse of the block
        assert_eq!(cancel_block(&b, &[(2, 1), (6, 5)]), Some(vec![(3, 4)]));
    }
}
