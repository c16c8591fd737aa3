//! Subcommand implementations.  Each returns report items, or a fatal
//! message for usage and I/O problems.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use hwq_core::bounds::{
    abelian_q_bounds, free_product_presentation, free_row, h_value, isotropy_witness, q_free_abelian, r_closure,
    s_closure, search_tuples, seed_tuples, AbelianGroupSpec, SEED_TUPLES, SearchError, SearchOptions,
};
use hwq_core::deduce::replay::replay_certificate;
use hwq_core::deduce::DeduceError;
use hwq_core::script::{corpus, parse_script, run_script, RunReport};
use hwq_core::zlinalg::smith_normal_form;
use hwq_core::{prove_abelian, IntMatrix, Limits, Presentation, Tuple4};
use num_bigint::BigInt;

use crate::report::Item;

pub type Fatal = String;

/// Certificates to write out, as `(file stem, text)`.
pub type Certs = Vec<(String, String)>;

pub fn load_scripts(dir: Option<&Path>) -> Result<Vec<(String, String)>, Fatal> {
    match dir {
        None => Ok(corpus().map(|e| (e.name.to_string(), e.text.to_string())).collect()),
        Some(d) => {
            if !d.is_dir() {
                return Err(format!("corpus directory {} not found", d.display()));
            }
            let scripts = hwq_core::script::load_corpus_dir(d).map_err(|e| format!("{}: {e}", d.display()))?;
            if scripts.is_empty() {
                return Err(format!("corpus directory {} has no .hw4 files", d.display()));
            }
            Ok(scripts)
        }
    }
}

fn script_item(name: &str, kind: &str, report: &RunReport, certs: &mut Certs) -> Item {
    let mut problems: Vec<String> = report
        .expectations
        .iter()
        .filter(|e| !e.pass)
        .map(|e| format!("line {}: expected {}, got {}", e.line, e.expectation, e.actual))
        .collect();
    let mut digest = None;
    let mut summary = String::new();
    if let Some(p) = &report.pi1 {
        if p.limit_hit {
            problems.push(format!("fact limit reached after {} facts", p.fact_count));
        } else if !p.proved {
            let pairs: Vec<String> = p.missing_pairs.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
            problems.push(format!("commutators not derived: {}", pairs.join(" ")));
        }
        if let Some(cert) = &p.certificate {
            match replay_certificate(&p.presentation, &[], cert) {
                Ok(r) => summary = format!("pi1 = {} proved, {} steps replayed", p.invariants, r.steps_checked),
                Err(e) => problems.push(format!("certificate replay failed: {e}")),
            }
            certs.push((name.to_string(), cert.to_text(&p.presentation)));
        }
        digest = p.certificate_digest.clone();
    }
    if summary.is_empty() {
        summary = format!("{} expectations", report.expectations.len());
    }
    let pass = problems.is_empty() && report.pass();
    let mut details = if pass { summary } else { problems.join("; ") };
    for note in &report.notes {
        details.push_str(&format!("; note: {note}"));
    }
    Item::new(name, kind, pass, details).with_numbers(report.numbers()).with_digest(digest)
}

fn run_text(name: &str, text: &str, kind: &str, limits: Limits, certs: &mut Certs) -> Item {
    let script = match parse_script(name, text) {
        Ok(s) => s,
        Err(e) => return Item::new(name, kind, false, format!("parse error: {e}")),
    };
    match run_script(&script, limits) {
        Ok(r) => script_item(name, kind, &r, certs),
        Err(e) => Item::new(name, kind, false, format!("run error: {e}")),
    }
}

fn proof_item(name: &str, pres: &Presentation, tuples: &[Tuple4], limits: Limits, certs: &mut Certs) -> Item {
    let report = match prove_abelian(pres, tuples, limits) {
        Ok(r) => r,
        Err(DeduceError::LimitExceeded(r)) => {
            return Item::new(name, "tuples", false, format!("fact limit reached after {} facts", r.fact_count));
        }
        Err(e) => return Item::new(name, "tuples", false, e.to_string()),
    };
    let Some(cert) = report.certificate.filter(|_| report.proved) else {
        let pairs: Vec<String> = report.missing_pairs.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
        return Item::new(name, "tuples", false, format!("commutators not derived: {}", pairs.join(" ")));
    };
    let digest = cert.digest(pres);
    certs.push((name.to_string(), cert.to_text(pres)));
    match replay_certificate(pres, tuples, &cert) {
        Ok(r) => Item::new(
            name,
            "tuples",
            true,
            format!(
                "{} tuples, {} commutators derived, {} facts, {} steps replayed",
                tuples.len(),
                report.goal_count,
                report.fact_count,
                r.steps_checked
            ),
        )
        .with_digest(Some(digest)),
        Err(e) => Item::new(name, "tuples", false, format!("certificate replay failed: {e}")),
    }
}

fn closure_items() -> Vec<Item> {
    let r = r_closure(30);
    let expected: BTreeSet<(u32, u32)> =
        (3..=30).flat_map(|m| (3..=30).map(move |n| (m, n))).filter(|(m, n)| (m * n) % 6 == 0).collect();
    let r_item = Item::new(
        "R(30)",
        "closure",
        r == expected,
        format!("{} pairs; expected every 3 <= m,n <= 30 with 6 | mn", r.len()),
    );
    let (s, witness) = s_closure(100);
    let expected: BTreeSet<u32> = [0, 1, 2, 4].into_iter().chain(6..=100).collect();
    let steps = [(10, (4, 6)), (13, (4, 9)), (14, (6, 8)), (15, (6, 9)), (16, (4, 12)), (17, (8, 9))];
    let steps_ok = steps.iter().all(|(t, (m, n))| {
        hwq_core::bounds::s_step_applies(&s, &r_closure(100), *m, *n) && m + n == *t && s.contains(t)
    });
    let first: Vec<String> = steps
        .iter()
        .map(|(t, _)| match witness.get(t) {
            Some((m, n)) => format!("{t} via ({m},{n})"),
            None => format!("{t} not derived"),
        })
        .collect();
    vec![
        r_item,
        Item::new(
            "S(100)",
            "closure",
            s == expected && steps_ok,
            format!("{} integers; {}", s.len(), first.join(", ")),
        ),
    ]
}

fn isotropy_items() -> Vec<Item> {
    let r3 = isotropy_witness(3).expect("supported");
    let r5 = isotropy_witness(5).expect("supported");
    vec![
        Item::new(
            "isotropy n=3",
            "witness",
            r3.all_products_zero,
            format!("{} products of degree-2 classes, all zero", r3.products_checked),
        ),
        Item::new(
            "isotropy n=5",
            "witness",
            r5.supports == ["e1234", "e1235", "e1245"] && r5.annihilated_by_e1,
            format!("nonzero products {}; all annihilated by e1", r5.nonzero_products.join(", ")),
        ),
    ]
}

fn formula_items() -> Vec<Item> {
    let ok = (0..=200u64).all(|n| q_free_abelian(n) == BigInt::from(2) - 2 * BigInt::from(n) + h_value(n));
    let small: Vec<BigInt> = (0..5).map(q_free_abelian).collect();
    let small_ok = small == [2, 0, 0, 2, 0].map(BigInt::from);
    vec![Item::new(
        "q(Z^n) identities",
        "formula",
        ok && small_ok,
        format!("q = 2 - 2n + h(n) for n <= 200; q(Z^0..Z^4) = {small:?}"),
    )]
}

pub fn verify(dir: Option<&Path>, limits: Limits, certs: &mut Certs) -> Result<Vec<Item>, Fatal> {
    let scripts = load_scripts(dir)?;
    let mut items: Vec<Item> = scripts
        .iter()
        .map(|(name, text)| {
            let kind = if name.starts_with("lens") { "construction" } else { "script" };
            run_text(name, text, kind, limits, certs)
        })
        .collect();
    for (m, n, words) in SEED_TUPLES {
        let (pres, tuples) = seed_tuples(m, n, words);
        items.push(proof_item(&format!("tuples({m},{n})"), &pres, &tuples, limits, certs));
    }
    items.extend(closure_items());
    items.extend(isotropy_items());
    items.extend(formula_items());
    Ok(items)
}

pub fn run(path: &Path, limits: Limits, certs: &mut Certs) -> Result<Vec<Item>, Fatal> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let name = path.file_stem().map_or("script".into(), |s| s.to_string_lossy().into_owned());
    let script = parse_script(&name, &text).map_err(|e| format!("{}: {e}", path.display()))?;
    let report = run_script(&script, limits).map_err(|e| e.to_string())?;
    let mut items: Vec<Item> = report
        .steps
        .iter()
        .map(|s| {
            Item::new(format!("line {}", s.line), "step", true, s.command.clone())
                .with_numbers((s.beta1, s.beta2, s.chi))
        })
        .collect();
    items.push(script_item(&name, "script", &report, certs));
    Ok(items)
}

/// One tuple per line, four comma-separated words, optional brackets;
/// `#` starts a comment.
pub fn parse_tuples(pres: &Presentation, text: &str) -> Result<Vec<Tuple4>, Fatal> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line = line.trim_start_matches('[').trim_end_matches(']');
        let words: Vec<_> = line
            .split(',')
            .map(|w| pres.parse_word(w.trim()))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", i + 1))?;
        let tuple: Tuple4 =
            words.try_into().map_err(|w: Vec<_>| format!("line {}: expected 4 words, found {}", i + 1, w.len()))?;
        out.push(tuple);
    }
    Ok(out)
}

pub fn prove(m: u32, n: u32, path: &Path, limits: Limits, certs: &mut Certs) -> Result<Vec<Item>, Fatal> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let pres = free_product_presentation(m, n);
    let tuples = parse_tuples(&pres, &text)?;
    Ok(vec![proof_item(&format!("Z^{m} * Z^{n}"), &pres, &tuples, limits, certs)])
}

pub fn bounds_free(max: u64) -> Vec<Item> {
    (0..=max)
        .map(|n| {
            let (n, c, e, h, q) = free_row(n);
            Item::new(format!("n={n}"), "free", true, format!("{n}, {c}, {e}, {h}, {q}"))
        })
        .collect()
}

pub fn bounds_abelian(torsion: Vec<u64>, rank: u64) -> Result<Vec<Item>, Fatal> {
    let spec = AbelianGroupSpec::new(torsion, rank).map_err(|e| e.to_string())?;
    let r = abelian_q_bounds(&spec).map_err(|e| e.to_string())?;
    let exact = r.exact.map_or("-".to_string(), |e| e.to_string());
    Ok(vec![Item::new(
        spec.to_string(),
        "abelian",
        true,
        format!("lower {}, upper {}, exact {exact}; {}", r.lower, r.upper, r.provenance.join("; ")),
    )])
}

pub fn closure(set: &str, max: u32) -> Result<Vec<Item>, Fatal> {
    match set {
        "R" | "r" => {
            let pairs: Vec<String> = r_closure(max).iter().map(|(a, b)| format!("({a},{b})")).collect();
            Ok(vec![Item::new(format!("R({max})"), "closure", true, pairs.join(" "))])
        }
        "S" | "s" => {
            let (s, witness) = s_closure(max);
            let list: Vec<String> = s.iter().map(|x| x.to_string()).collect();
            let mut items = vec![Item::new(format!("S({max})"), "closure", true, list.join(" "))];
            items.extend(
                witness.iter().map(|(t, (m, n))| Item::new(format!("{t}"), "step", true, format!("{t} = {m} + {n}"))),
            );
            Ok(items)
        }
        other => Err(format!("unknown closure set {other:?}; use R or S")),
    }
}

fn rows(m: &IntMatrix) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| format!("[{}]", m.row(i).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn snf(path: &Path) -> Result<Vec<Item>, Fatal> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).map_err(|e| format!("stdin: {e}"))?
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
    };
    let a: IntMatrix = text.parse().map_err(|e| format!("{}: {e}", path.display()))?;
    let r = smith_normal_form(&a);
    let check = r.u.mul(&a).and_then(|ua| ua.mul(&r.v)).is_ok_and(|p| p == r.d);
    let factors: Vec<String> = r.invariant_factors.iter().map(|x| x.to_string()).collect();
    Ok(vec![Item::new(
        path.display().to_string(),
        "snf",
        check,
        format!(
            "rank {}, invariant factors [{}], D = {}, U = {}, V = {}",
            r.rank,
            factors.join(", "),
            rows(&r.d),
            rows(&r.u),
            rows(&r.v)
        ),
    )])
}

pub fn search(m: u32, n: u32, opts: &SearchOptions, certs: &mut Certs) -> Result<Vec<Item>, Fatal> {
    let name = format!("search({m},{n})");
    match search_tuples(m, n, opts) {
        Ok(report) => Ok(report
            .hits
            .iter()
            .enumerate()
            .map(|(i, hit)| {
                let pres = &report.presentation;
                let tuples: Vec<String> = hit
                    .tuples
                    .iter()
                    .map(|t| format!("[{}]", t.iter().map(|w| pres.render(w)).collect::<Vec<_>>().join(", ")))
                    .collect();
                let replay = replay_certificate(pres, &hit.tuples, &hit.certificate);
                certs.push((format!("{name}-{i}"), hit.certificate.to_text(pres)));
                Item::new(
                    name.clone(),
                    "search",
                    replay.is_ok(),
                    format!("{} after {} nodes", tuples.join(" "), report.nodes),
                )
                .with_digest(Some(hit.certificate.digest(pres)))
            })
            .collect()),
        Err(e @ (SearchError::NotDivisible(..) | SearchError::TooSmall)) => Err(e.to_string()),
        Err(e) => Ok(vec![Item::new(name, "search", false, e.to_string())]),
    }
}

/// Writes certificates: to `path` itself when there is one, otherwise one
/// `<name>.cert` file per item inside the directory `path`.
pub fn write_certs(path: &Path, certs: &Certs) -> Result<(), Fatal> {
    let io = |e: std::io::Error| format!("{}: {e}", path.display());
    if certs.len() == 1 && !path.is_dir() {
        return std::fs::write(path, &certs[0].1).map_err(io);
    }
    std::fs::create_dir_all(path).map_err(io)?;
    for (name, text) in certs {
        let file: PathBuf = path.join(format!("{}.cert", name.replace(['/', ' ', '*'], "_")));
        std::fs::write(&file, text).map_err(io)?;
    }
    Ok(())
}
