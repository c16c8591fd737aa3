//! The construction-script language.
//!
//! ```text
//! # comments start with '#'; '# note: ...' lines are kept in reports
//! start F2xF4                 # prefixes default to x, y, z, w, ...
//! sum T4 as z
//! identify z2 = y1
//! surgery x1 y2^-1
//! surgery [y1, y3]            # commutator curve
//! reduce4 z1, x1 y2, x2 y1, y3
//! expect beta2 = 22
//! expect pi1 = Z^6            # or Z/2+Z/6+Z^1
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::deduce::{Certificate, DeduceError, Limits};
use crate::mfd::{BaseManifold, ManifoldState, MfdError, DEFAULT_PREFIXES};
use crate::words::{Presentation, Word, WordError};
use crate::zlinalg::{smith_normal_form, AbelianInvariants, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptErrorKind {
    SyntaxError,
    UnknownGenerator,
    DuplicateStart,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind:?} at line {line}, column {column}: {message}")]
pub struct ScriptError {
    pub kind: ScriptErrorKind,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    Beta1(i64),
    Beta2(i64),
    Chi(i64),
    Pi1(AbelianInvariants),
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Beta1(v) => write!(f, "beta1 = {v}"),
            Expectation::Beta2(v) => write!(f, "beta2 = {v}"),
            Expectation::Chi(v) => write!(f, "chi = {v}"),
            Expectation::Pi1(g) => write!(f, "pi1 = {g}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Start { base: BaseManifold, prefixes: Option<Vec<String>> },
    Sum { base: BaseManifold, prefixes: Option<Vec<String>> },
    Surgery(String),
    SurgeryCommutator(String, String),
    Identify(String, String),
    Reduce4([String; 4]),
    Expect(Expectation),
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_prefixes = |f: &mut fmt::Formatter<'_>, kw: &str, base: &BaseManifold, ps: &Option<Vec<String>>| {
            write!(f, "{kw} {base}")?;
            if let Some(ps) = ps {
                write!(f, " as {}", ps.join(", "))?;
            }
            Ok(())
        };
        match self {
            Command::Start { base, prefixes } => with_prefixes(f, "start", base, prefixes),
            Command::Sum { base, prefixes } => with_prefixes(f, "sum", base, prefixes),
            Command::Surgery(w) => write!(f, "surgery {w}"),
            Command::SurgeryCommutator(u, v) => write!(f, "surgery [{u}, {v}]"),
            Command::Identify(g, w) => write!(f, "identify {g} = {w}"),
            Command::Reduce4(ws) => write!(f, "reduce4 {}", ws.join(", ")),
            Command::Expect(e) => write!(f, "expect {e}"),
        }
    }
}

/// A parsed script.  Equality ignores source positions.
#[derive(Clone, Debug)]
pub struct Script {
    pub name: String,
    pub commands: Vec<Command>,
    /// `(line, column)` of each command.
    pub positions: Vec<(usize, usize)>,
    pub notes: Vec<String>,
}

impl PartialEq for Script {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.commands == other.commands && self.notes == other.notes
    }
}

impl Eq for Script {}

impl Script {
    /// Script text; reparses to an equal script.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            out.push_str(&format!("# note: {n}\n"));
        }
        for c in &self.commands {
            out.push_str(&format!("{c}\n"));
        }
        out
    }
}

/// Parses `Z^n`, `Z`, `1` and sums such as `Z/2+Z/6+Z^1`.
pub fn parse_abelian_group(text: &str) -> Option<AbelianInvariants> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t == "1" || t == "0" {
        return Some(AbelianInvariants::free(0));
    }
    let mut free = 0usize;
    let mut torsion: Vec<BigInt> = Vec::new();
    for part in t.split(['+', '⊕']) {
        let p = part.strip_prefix('Z').or_else(|| part.strip_prefix('z'))?;
        if p.is_empty() {
            free += 1;
        } else if let Some(n) = p.strip_prefix('^') {
            free += n.parse::<usize>().ok()?;
        } else {
            let d = p.strip_prefix('/')?;
            let d: BigInt = d.parse().ok()?;
            if d < BigInt::from(2) {
                return None;
            }
            torsion.push(d);
        }
    }
    // normalize to invariant factors
    let k = torsion.len();
    let mut m = IntMatrix::zeros(k, k);
    for (i, d) in torsion.into_iter().enumerate() {
        m.set(i, i, d);
    }
    let torsion = smith_normal_form(&m).invariant_factors;
    Some(AbelianInvariants { free_rank: free, torsion })
}

struct LineCtx<'a> {
    raw: &'a str,
    line: usize,
}

impl LineCtx<'_> {
    fn col_of(&self, sub: &str) -> usize {
        let base = self.raw.as_ptr() as usize;
        let at = (sub.as_ptr() as usize).saturating_sub(base).min(self.raw.len());
        self.raw[..at].chars().count() + 1
    }

    fn err(&self, kind: ScriptErrorKind, at: &str, message: impl Into<String>) -> ScriptError {
        ScriptError { kind, line: self.line, column: self.col_of(at), message: message.into() }
    }

    fn syntax(&self, at: &str, message: impl Into<String>) -> ScriptError {
        self.err(ScriptErrorKind::SyntaxError, at, message)
    }

    /// Checks a word against the known generator names and normalizes its
    /// spacing.
    fn word(&self, text: &str, names: &HashSet<String>) -> Result<String, ScriptError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(self.syntax(text, "expected a word"));
        }
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                out.push(tok.to_string());
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (n, Some(e)),
                None => (tok, None),
            };
            let valid_name = !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '.' || c == '_');
            if !valid_name {
                return Err(self.syntax(tok, format!("malformed letter {tok}")));
            }
            if let Some(e) = exp {
                match e.parse::<BigInt>() {
                    Ok(v) if !v.is_zero() => {}
                    _ => return Err(self.syntax(tok, format!("bad exponent in {tok}"))),
                }
            }
            if !names.contains(name) {
                return Err(self.err(ScriptErrorKind::UnknownGenerator, tok, format!("unknown generator {name}")));
            }
            out.push(tok.to_string());
        }
        Ok(out.join(" "))
    }

    fn base(&self, text: &str) -> Result<(BaseManifold, Option<Vec<String>>), ScriptError> {
        let lower = text.to_ascii_lowercase();
        let (base_text, prefixes) = match lower.find(" as ") {
            Some(i) => (&text[..i], Some(&text[i + 4..])),
            None => (text, None),
        };
        let compact: String = base_text.chars().filter(|c| !c.is_whitespace()).collect();
        let base: BaseManifold = compact.parse().map_err(|e: MfdError| self.syntax(base_text, e.to_string()))?;
        let prefixes = match prefixes {
            None => None,
            Some(p) => {
                let ps: Vec<String> = p.split(',').map(|s| s.trim().to_string()).collect();
                if ps.len() != base.prefix_count() || ps.iter().any(|s| s.is_empty() || s.contains(char::is_whitespace)) {
                    return Err(self.syntax(p, format!("{base} takes {} prefix(es)", base.prefix_count())));
                }
                Some(ps)
            }
        };
        Ok((base, prefixes))
    }
}

fn base_names(base: &BaseManifold, prefixes: &[String]) -> Vec<String> {
    match ManifoldState::base_with(base.clone(), prefixes) {
        Ok(m) => m.pres.generators().iter().map(|g| g.name.clone()).collect(),
        Err(_) => Vec::new(),
    }
}

/// Parses a script.  Word tokens must name generators introduced by an
/// earlier `start` or `sum`.
pub fn parse_script(name: &str, text: &str) -> Result<Script, ScriptError> {
    let mut commands = Vec::new();
    let mut positions = Vec::new();
    let mut notes = Vec::new();
    let mut names: HashSet<String> = HashSet::new();
    let mut defaults_used = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let ctx = LineCtx { raw, line: i + 1 };
        let (body, comment) = match raw.find('#') {
            Some(at) => (&raw[..at], Some(&raw[at + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            let c = c.trim();
            if c.len() >= 5 && c[..5].eq_ignore_ascii_case("note:") {
                notes.push(c[5..].trim().to_string());
            }
        }
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let (kw, rest) = match body.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (body, ""),
        };
        let started = !commands.is_empty();
        let cmd = match kw.to_ascii_lowercase().as_str() {
            "start" | "sum" => {
                let is_start = kw.eq_ignore_ascii_case("start");
                if is_start && started {
                    return Err(ctx.err(ScriptErrorKind::DuplicateStart, kw, "start may appear only once"));
                }
                if rest.is_empty() {
                    return Err(ctx.syntax(kw, "expected a base manifold"));
                }
                let (base, prefixes) = ctx.base(rest)?;
                let count = base.prefix_count();
                let used: Vec<String> = match &prefixes {
                    Some(p) => p.clone(),
                    None => DEFAULT_PREFIXES
                        .get(defaults_used..defaults_used + count)
                        .ok_or_else(|| ctx.syntax(kw, "ran out of default prefixes"))?
                        .iter()
                        .map(|s| s.to_string())
                        .collect(),
                };
                defaults_used += count;
                names.extend(base_names(&base, &used));
                if is_start {
                    Command::Start { base, prefixes }
                } else {
                    Command::Sum { base, prefixes }
                }
            }
            _ if !started => return Err(ctx.syntax(kw, "the first command must be start")),
            "surgery" => {
                if let Some(inner) = rest.strip_prefix('[') {
                    let inner = inner.strip_suffix(']').ok_or_else(|| ctx.syntax(rest, "expected ']'"))?;
                    let (u, v) = inner.split_once(',').ok_or_else(|| ctx.syntax(inner, "expected [u, v]"))?;
                    Command::SurgeryCommutator(ctx.word(u, &names)?, ctx.word(v, &names)?)
                } else {
                    Command::Surgery(ctx.word(rest, &names)?)
                }
            }
            "identify" => {
                let (g, w) = rest.split_once('=').ok_or_else(|| ctx.syntax(rest, "expected g = word"))?;
                let g = g.trim();
                if g.is_empty() || g.contains(char::is_whitespace) {
                    return Err(ctx.syntax(g, "expected a single generator before '='"));
                }
                let g = ctx.word(g, &names)?;
                Command::Identify(g, ctx.word(w, &names)?)
            }
            "reduce4" => {
                let inner = match rest.strip_prefix('[') {
                    Some(r) => r.strip_suffix(']').ok_or_else(|| ctx.syntax(rest, "expected ']'"))?,
                    None => rest,
                };
                let parts: Vec<&str> = inner.split(',').collect();
                if parts.len() != 4 {
                    return Err(ctx.syntax(rest, format!("reduce4 takes 4 words, got {}", parts.len())));
                }
                let mut ws = Vec::new();
                for p in parts {
                    ws.push(ctx.word(p, &names)?);
                }
                Command::Reduce4(ws.try_into().expect("four words"))
            }
            "expect" => {
                let (key, value) = rest.split_once('=').ok_or_else(|| ctx.syntax(rest, "expected key = value"))?;
                let int = || value.trim().parse::<i64>().map_err(|_| ctx.syntax(value, "expected an integer"));
                let e = match key.trim().to_ascii_lowercase().as_str() {
                    "beta1" => Expectation::Beta1(int()?),
                    "beta2" => Expectation::Beta2(int()?),
                    "chi" => Expectation::Chi(int()?),
                    "pi1" => Expectation::Pi1(
                        parse_abelian_group(value).ok_or_else(|| ctx.syntax(value, "expected Z^n or Z/d+...+Z^n"))?,
                    ),
                    _ => return Err(ctx.syntax(key, "expected beta1, beta2, chi or pi1")),
                };
                Command::Expect(e)
            }
            _ => return Err(ctx.syntax(kw, format!("unknown command {kw}"))),
        };
        commands.push(cmd);
        positions.push((ctx.line, ctx.col_of(body)));
    }
    if commands.is_empty() {
        return Err(ScriptError {
            kind: ScriptErrorKind::SyntaxError,
            line: text.lines().count().max(1),
            column: 1,
            message: "script has no start".into(),
        });
    }
    Ok(Script { name: name.to_string(), commands, positions, notes })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub line: usize,
    pub command: String,
    pub beta1: i64,
    pub beta2: i64,
    pub chi: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectationResult {
    pub line: usize,
    pub expectation: Expectation,
    pub actual: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Pi1Outcome {
    pub target: AbelianInvariants,
    pub invariants: AbelianInvariants,
    pub proved: bool,
    pub limit_hit: bool,
    pub missing_pairs: Vec<(String, String)>,
    pub fact_count: usize,
    pub certificate: Option<Certificate>,
    pub certificate_digest: Option<String>,
    /// Presentation the certificate refers to.
    pub presentation: Presentation,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub name: String,
    pub steps: Vec<Snapshot>,
    pub expectations: Vec<ExpectationResult>,
    pub pi1: Option<Pi1Outcome>,
    pub notes: Vec<String>,
    pub final_state: ManifoldState,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.expectations.iter().all(|e| e.pass) && self.pi1.as_ref().is_none_or(|p| p.proved)
    }

    pub fn numbers(&self) -> (i64, i64, i64) {
        self.final_state.numbers()
    }
}

#[derive(Debug, Error)]
#[error("{script}: step {step} (line {line}): {source}")]
pub struct RunError {
    pub script: String,
    pub step: usize,
    pub line: usize,
    #[source]
    pub source: MfdError,
}

fn words(pres: &Presentation, text: &str) -> Result<Word, MfdError> {
    Ok(pres.parse_word(text)?)
}

/// Executes a script.  Expectations never halt the run; every one is
/// evaluated and reported.
pub fn run_script(script: &Script, limits: Limits) -> Result<RunReport, RunError> {
    let mut state: Option<ManifoldState> = None;
    let mut steps = Vec::new();
    let mut expectations = Vec::new();
    let mut pi1 = None;
    for (i, cmd) in script.commands.iter().enumerate() {
        let line = script.positions.get(i).map_or(0, |p| p.0);
        let fail = |source: MfdError| RunError { script: script.name.clone(), step: i, line, source };
        let next = match (cmd, state.as_ref()) {
            (Command::Start { base, prefixes }, _) => match prefixes {
                Some(p) => ManifoldState::base_with(base.clone(), p),
                None => ManifoldState::base(base.clone()),
            },
            (_, None) => Err(MfdError::InvalidParameters("script does not start with start".into())),
            (Command::Sum { base, prefixes }, Some(m)) => m.sum_base(base.clone(), prefixes.as_deref()),
            (Command::Surgery(w), Some(m)) => words(&m.pres, w).and_then(|w| m.surgery(&w)),
            (Command::SurgeryCommutator(u, v), Some(m)) => {
                words(&m.pres, u).and_then(|u| words(&m.pres, v).and_then(|v| m.surgery_commutator(&u, &v)))
            }
            (Command::Identify(g, w), Some(m)) => match m.pres.lookup(g) {
                Some(g) => words(&m.pres, w).and_then(|w| m.identify(g, &w)),
                None => Err(MfdError::Word(WordError::UnknownGenerator(g.clone()))),
            },
            (Command::Reduce4(ws), Some(m)) => ws
                .iter()
                .map(|w| words(&m.pres, w))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|ws| m.four_reduce(&ws.try_into().expect("four words"))),
            (Command::Expect(e), Some(m)) => {
                let (actual, pass) = match e {
                    Expectation::Beta1(v) => (m.beta1.to_string(), m.beta1 == *v),
                    Expectation::Beta2(v) => (m.beta2.to_string(), m.beta2 == *v),
                    Expectation::Chi(v) => (m.chi.to_string(), m.chi == *v),
                    Expectation::Pi1(target) => {
                        let outcome = pi1_outcome(m, target, limits);
                        let inv = outcome.invariants.to_string();
                        let pass = outcome.proved && outcome.invariants == *target;
                        let actual = if outcome.limit_hit {
                            format!("{inv}, fact limit reached")
                        } else if outcome.proved {
                            format!("{inv}, abelian")
                        } else {
                            format!("{inv}, {} pairs not derived", outcome.missing_pairs.len())
                        };
                        pi1 = Some(outcome);
                        (actual, pass)
                    }
                };
                expectations.push(ExpectationResult { line, expectation: e.clone(), actual, pass });
                continue;
            }
        };
        let m = next.map_err(fail)?;
        steps.push(Snapshot { line, command: cmd.to_string(), beta1: m.beta1, beta2: m.beta2, chi: m.chi });
        state = Some(m);
    }
    let final_state = state.ok_or_else(|| RunError {
        script: script.name.clone(),
        step: 0,
        line: 0,
        source: MfdError::InvalidParameters("empty script".into()),
    })?;
    Ok(RunReport { name: script.name.clone(), steps, expectations, pi1, notes: script.notes.clone(), final_state })
}

fn pi1_outcome(m: &ManifoldState, target: &AbelianInvariants, limits: Limits) -> Pi1Outcome {
    let invariants = m.abelian_invariants();
    let (proof, limit_hit) = match m.verify_pi1(target, limits) {
        Ok(r) => (r.proof, false),
        Err(DeduceError::LimitExceeded(p)) => (*p, true),
        Err(DeduceError::ForeignWord) => unreachable!("no tuples are passed"),
    };
    let digest = proof.certificate.as_ref().map(|c| c.digest(&m.pres));
    Pi1Outcome {
        target: target.clone(),
        invariants,
        proved: proof.proved,
        limit_hit,
        missing_pairs: proof.missing_pairs,
        fact_count: proof.fact_count,
        certificate: proof.certificate,
        certificate_digest: digest,
        presentation: m.pres.clone(),
    }
}

/// A bundled construction script.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        &[$(CorpusEntry { name: $name, text: include_str!(concat!("../corpus/", $name, ".hw4")) }),*]
    };
}

/// Constructions realizing `Z^n` for the listed `n`.
pub const FREE_CORPUS: &[CorpusEntry] =
    corpus!["m00", "m01", "m02", "m03", "m04", "m05", "m06", "m07", "m08", "m09", "m11", "m12"];

/// Torsion constructions: `lens<family>-k<k>-n<n>`.
pub const LENS_CORPUS: &[CorpusEntry] = corpus![
    "lens1-k1-n0",
    "lens1-k2-n0",
    "lens1-k1-n1",
    "lens1-k4-n1",
    "lens2-k1-n1",
    "lens2-k4-n1",
    "lens3-k1-n0",
    "lens3-k2-n0",
];

pub fn corpus() -> impl Iterator<Item = CorpusEntry> {
    FREE_CORPUS.iter().chain(LENS_CORPUS).copied()
}

pub fn corpus_entry(name: &str) -> Option<CorpusEntry> {
    corpus().find(|e| e.name == name)
}

/// Reads every `.hw4` file of a directory, sorted by file name.
pub fn load_corpus_dir(dir: &Path) -> std::io::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "hw4") {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            out.push((name, std::fs::read_to_string(&path)?));
        }
    }
    out.sort();
    Ok(out)
}
