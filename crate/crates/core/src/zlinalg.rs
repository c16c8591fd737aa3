//! Exact integer linear algebra: Smith normal form with unimodular
//! transforms, lattice spanning tests, cokernel orders and abelianization
//! invariants of presentations.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::words::{GenId, Presentation, Relator, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[Vec<BigInt>]) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend(r.iter().cloned());
        }
        Ok(IntMatrix { rows: rows.len(), cols, data })
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must equal rows*cols");
        IntMatrix { rows, cols, data: entries.iter().map(|&x| BigInt::from(x)).collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        for j in 0..self.cols {
            let v = &self.data[src * self.cols + j] * q;
            self.data[dst * self.cols + j] += v;
        }
    }

    /// col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        for i in 0..self.rows {
            let v = &self.data[i * self.cols + src] * q;
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -&self.data[i * self.cols + j];
            self.data[i * self.cols + j] = v;
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `rows cols` on the first line, then the entries in row-major order.
impl FromStr for IntMatrix {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut toks = s.split_whitespace();
        let mut dim = |what: &str| -> Result<usize, LinalgError> {
            toks.next()
                .ok_or_else(|| LinalgError::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| LinalgError::Parse(format!("{what}: {e}")))
        };
        let rows = dim("row count")?;
        let cols = dim("column count")?;
        let data: Vec<BigInt> = toks
            .map(|t| t.parse::<BigInt>().map_err(|e| LinalgError::Parse(format!("entry `{t}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(IntMatrix { rows, cols, data })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    /// Diagonal form, same shape as the input.
    pub d: IntMatrix,
    /// Row transform, `rows x rows`, unimodular.
    pub u: IntMatrix,
    /// Column transform, `cols x cols`, unimodular.
    pub v: IntMatrix,
    pub rank: usize,
    /// Diagonal entries strictly greater than one.
    pub invariant_factors: Vec<BigInt>,
}

impl SnfResult {
    /// The nonzero diagonal entries `d_1 | d_2 | ... | d_rank`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.d.get(i, i).clone()).collect()
    }
}

/// Smith normal form `D = U A V` by smallest-absolute-value pivoting.
pub fn smith_normal_form(a: &IntMatrix) -> SnfResult {
    let (m, n) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);
    let mut t = 0;
    while t < m.min(n) {
        let Some((pi, pj)) = smallest_nonzero(&d, t, t) else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                if !d.get(i, t).is_zero() {
                    let q = -d.get(i, t).div_floor(d.get(t, t));
                    d.add_row(i, t, &q);
                    u.add_row(i, t, &q);
                    dirty |= !d.get(i, t).is_zero();
                }
            }
            for j in t + 1..n {
                if !d.get(t, j).is_zero() {
                    let q = -d.get(t, j).div_floor(d.get(t, t));
                    d.add_col(j, t, &q);
                    v.add_col(j, t, &q);
                    dirty |= !d.get(t, j).is_zero();
                }
            }
            if dirty {
                // a remainder is now smaller than the pivot; move it in
                let (pi, pj) = smallest_in_cross(&d, t);
                d.swap_rows(t, pi);
                u.swap_rows(t, pi);
                d.swap_cols(t, pj);
                v.swap_cols(t, pj);
                continue;
            }
            let pivot = d.get(t, t).clone();
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !d.get(i, j).is_multiple_of(&pivot)));
            match bad {
                Some(i) => {
                    let one = BigInt::one();
                    d.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
        t += 1;
    }
    let invariant_factors = (0..t).map(|i| d.get(i, i).clone()).filter(|x| *x > BigInt::one()).collect();
    SnfResult { d, u, v, rank: t, invariant_factors }
}

fn smallest_nonzero(d: &IntMatrix, r0: usize, c0: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in r0..d.rows {
        for j in c0..d.cols {
            let x = d.get(i, j);
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < d.get(bi, bj).abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

fn smallest_in_cross(d: &IntMatrix, t: usize) -> (usize, usize) {
    let mut best = (t, t);
    let consider = |i: usize, j: usize, best: &mut (usize, usize)| {
        let x = d.get(i, j);
        if !x.is_zero() && x.abs() < d.get(best.0, best.1).abs() {
            *best = (i, j);
        }
    };
    for i in t + 1..d.rows {
        consider(i, t, &mut best);
    }
    for j in t + 1..d.cols {
        consider(t, j, &mut best);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpanWitness {
    /// A nonzero integer functional vanishing on every vector.
    Functional(Vec<BigInt>),
    /// A functional vanishing on every vector modulo `p` but nonzero mod `p`.
    ModP { p: BigInt, functional: Vec<BigInt> },
}

impl SpanWitness {
    pub fn functional(&self) -> &[BigInt] {
        match self {
            SpanWitness::Functional(f) => f,
            SpanWitness::ModP { functional, .. } => functional,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanVerdict {
    pub spans: bool,
    pub witness: Option<SpanWitness>,
}

/// Whether the integer span of `vectors` is all of `Z^dim`.
pub fn lattice_spans_full(vectors: &[Vec<BigInt>], dim: usize) -> Result<SpanVerdict, LinalgError> {
    let a = IntMatrix::from_rows(dim, vectors)?;
    let snf = smith_normal_form(&a);
    if snf.rank < dim {
        let f = (0..dim).map(|i| snf.v.get(i, snf.rank).clone()).collect();
        return Ok(SpanVerdict { spans: false, witness: Some(SpanWitness::Functional(f)) });
    }
    match (0..dim).find(|&j| !snf.d.get(j, j).is_one()) {
        None => Ok(SpanVerdict { spans: true, witness: None }),
        Some(j) => {
            let p = smallest_prime_factor(snf.d.get(j, j));
            let functional = (0..dim).map(|i| snf.v.get(i, j).mod_floor(&p)).collect();
            Ok(SpanVerdict { spans: false, witness: Some(SpanWitness::ModP { p, functional }) })
        }
    }
}

fn smallest_prime_factor(n: &BigInt) -> BigInt {
    let n = n.abs();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        if n.is_multiple_of(&p) {
            return p;
        }
        p += 1;
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(BigInt),
    Infinite,
}

/// Order of the class of `v` in `Z^cols / rowspan(A)`.
pub fn order_in_cokernel(a: &IntMatrix, v: &[BigInt]) -> Result<Order, LinalgError> {
    if v.len() != a.cols {
        return Err(LinalgError::DimensionMismatch { expected: a.cols, got: v.len() });
    }
    let snf = smith_normal_form(a);
    Ok(order_with_snf(&snf, v))
}

pub(crate) fn order_with_snf(snf: &SnfResult, v: &[BigInt]) -> Order {
    let n = v.len();
    let y: Vec<BigInt> = (0..n)
        .map(|j| (0..n).fold(BigInt::zero(), |acc, i| acc + &v[i] * snf.v.get(i, j)))
        .collect();
    if y[snf.rank..].iter().any(|x| !x.is_zero()) {
        return Order::Infinite;
    }
    let mut order = BigInt::one();
    for (j, yj) in y.iter().enumerate().take(snf.rank) {
        let dj = snf.d.get(j, j);
        let need = dj / dj.gcd(yj);
        order = order.lcm(&need);
    }
    Order::Finite(order)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianInvariants {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianInvariants {
    pub fn free(rank: usize) -> Self {
        AbelianInvariants { free_rank: rank, torsion: Vec::new() }
    }
}

impl fmt::Display for AbelianInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.torsion.iter().map(|d| format!("Z/{d}")).collect();
        if self.free_rank > 0 || parts.is_empty() {
            parts.push(format!("Z^{}", self.free_rank));
        }
        f.write_str(&parts.join("+"))
    }
}

/// Exponent-sum vector of a word over the live generators.
pub fn abelianize(pres: &Presentation, live: &[GenId], w: &Word) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); live.len()];
    for l in w.letters() {
        if let Ok(i) = live.binary_search(&l.gen) {
            out[i] += &l.exp;
        }
    }
    let _ = pres;
    out
}

/// Abelianized relation matrix over the live generators.
pub fn relation_matrix(pres: &Presentation) -> (Vec<GenId>, IntMatrix) {
    let live = pres.live_generators();
    let mut rows = Vec::new();
    for r in pres.relators() {
        match r {
            Relator::Power(g, d) => {
                if let Ok(i) = live.binary_search(g) {
                    let mut row = vec![BigInt::zero(); live.len()];
                    row[i] = d.clone();
                    rows.push(row);
                }
            }
            Relator::General(w) => rows.push(abelianize(pres, &live, w)),
            Relator::Identify(g, w) => {
                let mut row = abelianize(pres, &live, w);
                if let Ok(i) = live.binary_search(g) {
                    row[i] -= 1;
                }
                rows.push(row);
            }
            Relator::CommutatorPair(..) | Relator::CommutatorProduct(..) | Relator::CrossCommutation(..) => {}
        }
    }
    let m = IntMatrix::from_rows(live.len(), &rows).expect("rows have live-generator length");
    (live, m)
}

pub fn abelian_invariants(pres: &Presentation) -> AbelianInvariants {
    let (live, m) = relation_matrix(pres);
    let snf = smith_normal_form(&m);
    AbelianInvariants { free_rank: live.len() - snf.rank, torsion: snf.invariant_factors }
}
