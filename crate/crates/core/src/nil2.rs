//! Class-2 linearization.  In the free nilpotent class-2 quotient the
//! commutator `[u, v]` depends only on the abelianizations of `u` and `v`,
//! through the antisymmetric pairing `a ^ b`.  Collecting those vectors for
//! every known commutation gives a necessary condition for a quotient to be
//! abelian: the vectors must span the whole pair lattice.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::words::{FactorKind, GenId, Presentation, Relator, Word};
use crate::zlinalg::{abelianize, lattice_spans_full, SpanWitness};

pub type Tuple4 = [Word; 4];

/// Indexing of unordered live-generator pairs `{a, b}`, `a < b`.
#[derive(Clone, Debug)]
pub struct PairBasis {
    live: Vec<GenId>,
}

impl PairBasis {
    pub fn new(pres: &Presentation) -> Self {
        PairBasis { live: pres.live_generators() }
    }

    pub fn live(&self) -> &[GenId] {
        &self.live
    }

    pub fn dim(&self) -> usize {
        let n = self.live.len();
        n * n.saturating_sub(1) / 2
    }

    /// Position of the pair of live indices `i < j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        let n = self.live.len();
        i * (2 * n - i - 1) / 2 + (j - i - 1)
    }

    pub fn pair(&self, idx: usize) -> (GenId, GenId) {
        let n = self.live.len();
        let mut i = 0;
        let mut base = 0;
        while base + (n - i - 1) <= idx {
            base += n - i - 1;
            i += 1;
        }
        (self.live[i], self.live[i + 1 + idx - base])
    }
}

/// A vector over the pair basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nil2Vector(pub Vec<BigInt>);

impl Nil2Vector {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, other: &Nil2Vector) -> Nil2Vector {
        Nil2Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn neg(&self) -> Nil2Vector {
        Nil2Vector(self.0.iter().map(|a| -a).collect())
    }
}

/// Bilinear antisymmetric pairing of two abelianized words.
pub fn wedge_pairing(basis: &PairBasis, a: &[BigInt], b: &[BigInt]) -> Nil2Vector {
    let n = basis.live.len();
    let mut out = vec![BigInt::zero(); basis.dim()];
    for i in 0..n {
        for j in i + 1..n {
            let c = &a[i] * &b[j] - &a[j] * &b[i];
            if !c.is_zero() {
                out[basis.index(i, j)] = c;
            }
        }
    }
    Nil2Vector(out)
}

pub fn expand_commutator(pres: &Presentation, u: &Word, v: &Word) -> Nil2Vector {
    let basis = PairBasis::new(pres);
    expand_with(&basis, pres, u, v)
}

pub fn expand_with(basis: &PairBasis, pres: &Presentation, u: &Word, v: &Word) -> Nil2Vector {
    let a = abelianize(pres, &basis.live, u);
    let b = abelianize(pres, &basis.live, v);
    wedge_pairing(basis, &a, &b)
}

/// Class-2 images of every commutation the presentation and tuples impose.
pub fn collect_vectors(pres: &Presentation, basis: &PairBasis, tuples: &[Tuple4]) -> Vec<Nil2Vector> {
    let mut out = Vec::new();
    let gw = |g: &GenId| pres.gen_word(*g);
    for f in pres.factors() {
        if let FactorKind::FreeAbelian(_) = f.kind {
            for (i, a) in f.gens.iter().enumerate() {
                for b in &f.gens[i + 1..] {
                    out.push(expand_with(basis, pres, &gw(a), &gw(b)));
                }
            }
        }
    }
    let n = basis.live.len();
    for r in pres.relators() {
        match r {
            Relator::CrossCommutation(fa, fb) => {
                for a in &pres.factors()[*fa].gens {
                    for b in &pres.factors()[*fb].gens {
                        out.push(expand_with(basis, pres, &gw(a), &gw(b)));
                    }
                }
            }
            Relator::CommutatorPair(u, v) => out.push(expand_with(basis, pres, u, v)),
            Relator::CommutatorProduct(ps) => {
                let mut sum = Nil2Vector(vec![BigInt::zero(); basis.dim()]);
                for (u, v) in ps {
                    sum = sum.add(&expand_with(basis, pres, u, v));
                }
                out.push(sum);
            }
            Relator::Power(..) | Relator::General(_) | Relator::Identify(..) => {
                // the relator kills a(w) in H1, so a(w) ^ e_h dies for every h
                let a = match r {
                    Relator::Power(g, d) => {
                        let mut a = abelianize(pres, &basis.live, &pres.gen_word(*g));
                        a.iter_mut().for_each(|x| *x *= d);
                        a
                    }
                    Relator::General(w) => abelianize(pres, &basis.live, w),
                    Relator::Identify(g, w) => {
                        let mut a = abelianize(pres, &basis.live, w);
                        let ga = abelianize(pres, &basis.live, &pres.gen_word(*g));
                        a.iter_mut().zip(ga).for_each(|(x, y)| *x -= y);
                        a
                    }
                    _ => unreachable!(),
                };
                for h in 0..n {
                    let mut e = vec![BigInt::zero(); n];
                    e[h] = BigInt::from(1);
                    out.push(wedge_pairing(basis, &a, &e));
                }
            }
        }
    }
    for t in tuples {
        for i in 0..4 {
            for j in i + 1..4 {
                out.push(expand_with(basis, pres, &t[i], &t[j]));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanReport {
    pub spans: bool,
    pub dim: usize,
    pub vectors: usize,
    pub witness: Option<SpanWitness>,
    /// Pairs in the support of the witness functional, rendered `{a, b}`.
    pub witness_pairs: Vec<String>,
}

/// Necessary condition for the presented quotient to be abelian.
pub fn spanning_check(pres: &Presentation, tuples: &[Tuple4], extra: &[(Word, Word)]) -> SpanReport {
    let basis = PairBasis::new(pres);
    let mut vecs = collect_vectors(pres, &basis, tuples);
    vecs.extend(extra.iter().map(|(u, v)| expand_with(&basis, pres, u, v)));
    let rows: Vec<Vec<BigInt>> = vecs.into_iter().map(|v| v.0).collect();
    let count = rows.len();
    let verdict = lattice_spans_full(&rows, basis.dim()).expect("vectors have pair-lattice length");
    let witness_pairs = verdict
        .witness
        .as_ref()
        .map(|w| {
            w.functional()
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, _)| {
                    let (a, b) = basis.pair(i);
                    format!("{{{}, {}}}", pres.name(a), pres.name(b))
                })
                .collect()
        })
        .unwrap_or_default();
    SpanReport { spans: verdict.spans, dim: basis.dim(), vectors: count, witness: verdict.witness, witness_pairs }
}
