//! Certificate checking.  The checker works from the presentation and tuple
//! list alone: it recomputes the axioms itself and re-verifies each step
//! with plain word arithmetic.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use thiserror::Error;

use super::{AxiomKind, Certificate, Conclusion, Rule, Step};
use crate::nil2::Tuple4;
use crate::words::{FactorKind, GenId, Presentation, Relator, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("step #{step}: premise #{premise} is not an earlier step")]
    BadPremise { step: usize, premise: usize },
    #[error("step #{step}: {rule} does not justify its conclusion")]
    InvalidStep { step: usize, rule: &'static str },
    #[error("generator pair [{0}, {1}] is not proved")]
    MissingGoal(String, String),
    #[error("goal [{0}, {1}] points at a step with a different conclusion")]
    WrongGoal(String, String),
    #[error("tuple word is not over the presentation")]
    ForeignWord,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub steps_checked: usize,
    pub goals_checked: usize,
}

type Pair = (Word, Word);

fn same(a: &Pair, b: &Pair) -> bool {
    (a.0 == b.0 && a.1 == b.1) || (a.0 == b.1 && a.1 == b.0)
}

fn orientations(p: &Pair) -> [Pair; 2] {
    [(p.0.clone(), p.1.clone()), (p.1.clone(), p.0.clone())]
}

struct Checker<'a> {
    pres: &'a Presentation,
    axioms: Vec<(AxiomKind, Pair)>,
    products: Vec<Vec<Pair>>,
    done: HashMap<usize, Conclusion>,
}

impl Checker<'_> {
    fn mul(&self, u: &Word, v: &Word) -> Word {
        self.pres.multiply(u, v).expect("checked words")
    }

    fn inv(&self, u: &Word) -> Word {
        self.pres.invert(u).expect("checked words")
    }

    fn trivial(&self, p: &Pair) -> bool {
        p.0.is_identity() || p.1.is_identity() || p.0 == p.1 || self.inv(&p.0) == p.1
    }

    fn fact(&self, id: usize) -> Option<Pair> {
        match self.done.get(&id) {
            Some(Conclusion::Fact(u, v)) => Some((u.clone(), v.clone())),
            _ => None,
        }
    }

    fn relator(&self, id: usize) -> Option<&Vec<Pair>> {
        match self.done.get(&id) {
            Some(Conclusion::Relator(ts)) => Some(ts),
            _ => None,
        }
    }

    /// `[x, y] = 1` is available from the premise facts or holds trivially.
    fn available(&self, facts: &[Pair], x: &Word, y: &Word) -> bool {
        let p = (x.clone(), y.clone());
        self.trivial(&p) || facts.iter().any(|f| same(f, &p))
    }

    fn check(&self, step: &Step) -> bool {
        let prem = &step.premises;
        let facts: Vec<Pair> = prem.iter().filter_map(|&p| self.fact(p)).collect();
        match (&step.rule, &step.conclusion) {
            (Rule::Axiom(kind), Conclusion::Fact(u, v)) => {
                let c = (u.clone(), v.clone());
                prem.is_empty() && self.axioms.iter().any(|(k, p)| k == kind && same(p, &c))
            }
            (Rule::Refl, Conclusion::Fact(u, v)) => prem.is_empty() && u == v,
            (Rule::Inverse, Conclusion::Fact(u, v)) => {
                let c = (u.clone(), v.clone());
                prem.len() == 1
                    && facts.len() == 1
                    && orientations(&facts[0]).iter().any(|(a, b)| same(&c, &(a.clone(), self.inv(b))))
            }
            (Rule::Product, Conclusion::Fact(u, v)) | (Rule::Cancel, Conclusion::Fact(u, v)) => {
                if prem.len() != 2 || facts.len() != 2 {
                    return false;
                }
                let c = (u.clone(), v.clone());
                for (a, b) in orientations(&facts[0]) {
                    for (a2, d) in orientations(&facts[1]) {
                        if a != a2 {
                            continue;
                        }
                        let cands = if step.rule == Rule::Product {
                            vec![self.mul(&b, &d), self.mul(&d, &b)]
                        } else {
                            let (bi, di) = (self.inv(&b), self.inv(&d));
                            vec![self.mul(&bi, &d), self.mul(&d, &bi), self.mul(&di, &b), self.mul(&b, &di)]
                        };
                        if cands.into_iter().any(|w| same(&c, &(a.clone(), w))) {
                            return true;
                        }
                    }
                }
                false
            }
            (Rule::Conjugate, Conclusion::Fact(u, v)) => {
                if prem.len() != 1 || facts.len() != 1 {
                    return false;
                }
                let c = (u.clone(), v.clone());
                let (a, b) = &facts[0];
                self.pres.live_generators().into_iter().any(|g| {
                    [1, -1].into_iter().any(|e| {
                        let gw = self.pres.power(&self.pres.gen_word(g), &BigInt::from(e)).unwrap();
                        let gi = self.inv(&gw);
                        let conj = |w: &Word| self.mul(&self.mul(&gw, w), &gi);
                        same(&c, &(conj(a), conj(b)))
                    })
                })
            }
            (Rule::Relator, Conclusion::Fact(u, v)) => {
                prem.len() == 1
                    && self.relator(prem[0]).is_some_and(|ts| ts.len() == 1 && same(&ts[0], &(u.clone(), v.clone())))
            }
            (Rule::RelInit, Conclusion::Relator(ts)) => match prem.len() {
                0 => self.products.iter().any(|p| p == ts),
                1 => facts.len() == 1 && ts.len() == 1 && same(&ts[0], &facts[0]),
                _ => false,
            },
            (Rule::RelDrop, Conclusion::Relator(ts)) => {
                let Some(old) = prem.first().and_then(|&p| self.relator(p)) else { return false };
                if old.len() != ts.len() + 1 || prem.len() > 2 {
                    return false;
                }
                (0..old.len()).any(|k| {
                    let removed = &old[k];
                    old[..k] == ts[..k]
                        && old[k + 1..] == ts[k..]
                        && (self.trivial(removed) || facts.iter().any(|f| same(f, removed)))
                })
            }
            (Rule::RelStrip, Conclusion::Relator(ts)) => {
                let Some(old) = prem.first().and_then(|&p| self.relator(p)) else { return false };
                if old.len() != ts.len() {
                    return false;
                }
                let diff: Vec<usize> = (0..old.len()).filter(|&k| old[k] != ts[k]).collect();
                let [k] = diff[..] else { return false };
                self.strip_ok(&facts, &old[k], &ts[k])
            }
            (Rule::RelSplit, Conclusion::Relator(ts)) => {
                let Some(old) = prem.first().and_then(|&p| self.relator(p)) else { return false };
                if old.len() + 1 != ts.len() {
                    return false;
                }
                (0..old.len()).any(|k| {
                    old[..k] == ts[..k] && old[k + 1..] == ts[k + 2..] && {
                        let ((u, v), (p, r), (q, s)) = (&old[k], &ts[k], &ts[k + 1]);
                        *u == self.mul(p, q)
                            && *v == self.mul(r, s)
                            && [(q, p), (q, r), (s, p), (s, r)].iter().all(|(x, y)| self.available(&facts, x, y))
                    }
                })
            }
            (Rule::RelCancel, Conclusion::Relator(ts)) => {
                if prem.len() != 2 {
                    return false;
                }
                match (self.relator(prem[0]), self.relator(prem[1])) {
                    (Some(b), Some(a)) => cancels(b, a, ts),
                    _ => false,
                }
            }
            _ => false,
        }
    }

    fn strip_ok(&self, facts: &[Pair], old: &Pair, new: &Pair) -> bool {
        let ((u, v), (u2, v2)) = (old, new);
        if v == v2 {
            // u = u2 q with [q, v] = 1
            let q = self.mul(&self.inv(u2), u);
            if self.available(facts, &q, v) {
                return true;
            }
            // u = p u2 with p commuting with v and u2
            let p = self.mul(u, &self.inv(u2));
            if self.available(facts, &p, v) && self.available(facts, &p, u2) {
                return true;
            }
        }
        if u == u2 {
            let s = self.mul(&self.inv(v2), v);
            if self.available(facts, u, &s) {
                return true;
            }
            let r = self.mul(v, &self.inv(v2));
            if self.available(facts, u, &r) && self.available(facts, &r, v2) {
                return true;
            }
        }
        false
    }
}

/// `result` followed by a rotation of `block` (or of its inverse) is a
/// rotation of `whole`.
fn cancels(whole: &[Pair], block: &[Pair], result: &[Pair]) -> bool {
    let n = whole.len();
    if block.is_empty() || result.len() + block.len() != n {
        return false;
    }
    let inverse: Vec<Pair> = block.iter().rev().map(|(u, v)| (v.clone(), u.clone())).collect();
    let l = block.len();
    for cand in [block, &inverse[..]] {
        for r in 0..l {
            let mut seq: Vec<&Pair> = result.iter().collect();
            seq.extend((0..l).map(|k| &cand[(r + k) % l]));
            if (0..n).any(|s| (0..n).all(|k| *seq[k] == whole[(s + k) % n])) {
                return true;
            }
        }
    }
    false
}

fn recompute_axioms(pres: &Presentation, tuples: &[Tuple4]) -> Vec<(AxiomKind, Pair)> {
    let mut out = Vec::new();
    let factors = pres.factors();
    let words = |gs: &[GenId]| gs.iter().map(|g| pres.gen_word(*g)).collect::<Vec<_>>();
    for f in factors {
        if matches!(f.kind, FactorKind::FreeAbelian(_)) {
            let ws = words(&f.gens);
            for i in 0..ws.len() {
                for j in i + 1..ws.len() {
                    out.push((AxiomKind::Factor, (ws[i].clone(), ws[j].clone())));
                }
            }
        }
    }
    for r in pres.relators() {
        match r {
            Relator::CrossCommutation(a, b) => {
                for u in words(&factors[*a].gens) {
                    for v in words(&factors[*b].gens) {
                        out.push((AxiomKind::Cross, (u.clone(), v)));
                    }
                }
            }
            Relator::CommutatorPair(u, v) => out.push((AxiomKind::Relator, (u.clone(), v.clone()))),
            _ => {}
        }
    }
    for t in tuples {
        for i in 0..4 {
            for j in i + 1..4 {
                out.push((AxiomKind::Tuple, (t[i].clone(), t[j].clone())));
            }
        }
    }
    out
}

/// Checks every step of `cert` and that, together with the axioms, the
/// goals cover every pair of live generators.
pub fn replay_certificate(
    pres: &Presentation,
    tuples: &[Tuple4],
    cert: &Certificate,
) -> Result<ReplayReport, ReplayError> {
    if tuples.iter().flatten().any(|w| w.key() != pres.key()) {
        return Err(ReplayError::ForeignWord);
    }
    let products = pres
        .relators()
        .iter()
        .filter_map(|r| match r {
            Relator::CommutatorProduct(ps) => {
                Some(ps.iter().filter(|(u, v)| !u.is_identity() && !v.is_identity()).cloned().collect())
            }
            _ => None,
        })
        .collect();
    let mut ck = Checker { pres, axioms: recompute_axioms(pres, tuples), products, done: HashMap::new() };
    for step in &cert.steps {
        for &p in &step.premises {
            if p >= step.id || !ck.done.contains_key(&p) {
                return Err(ReplayError::BadPremise { step: step.id, premise: p });
            }
        }
        if ck.done.contains_key(&step.id) || !ck.check(step) {
            return Err(ReplayError::InvalidStep { step: step.id, rule: step.rule.tag() });
        }
        ck.done.insert(step.id, step.conclusion.clone());
    }

    let mut proved: HashSet<(GenId, GenId)> = HashSet::new();
    for (a, b, id) in &cert.goals {
        let want = (pres.gen_word(*a), pres.gen_word(*b));
        match ck.fact(*id) {
            Some(f) if same(&f, &want) => {
                proved.insert((*a, *b));
                proved.insert((*b, *a));
            }
            _ => return Err(ReplayError::WrongGoal(pres.name(*a).into(), pres.name(*b).into())),
        }
    }
    let live = pres.live_generators();
    for (i, a) in live.iter().enumerate() {
        for b in &live[i + 1..] {
            let want = (pres.gen_word(*a), pres.gen_word(*b));
            let axiom = ck.axioms.iter().any(|(_, p)| same(p, &want));
            if !axiom && !proved.contains(&(*a, *b)) {
                return Err(ReplayError::MissingGoal(pres.name(*a).into(), pres.name(*b).into()));
            }
        }
    }
    Ok(ReplayReport { steps_checked: cert.steps.len(), goals_checked: cert.goals.len() })
}
