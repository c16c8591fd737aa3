//! Certificate text format.
//!
//! ```text
//! certificate steps 3 goals 1
//! #0 AXIOM-TUPLE : [x1, y1]
//! #4 R2 0 : [x1, y1^-1]
//! #9 REL-DROP 7,4 : [x2, y2][x3, y3]
//! goal x1 y1 #0
//! end
//! ```
//!
//! Each line names the step id, its rule, the comma-separated premise ids
//! and the conclusion.  Goals map a generator pair to the step proving it.

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Conclusion, Rule, Step};
use crate::words::{GenId, Presentation, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub steps: Vec<Step>,
    /// `(a, b, step)`: the generator pair `[a, b]` is concluded by `step`.
    pub goals: Vec<(GenId, GenId, usize)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("certificate line {line}: {message}")]
pub struct CertParseError {
    pub line: usize,
    pub message: String,
}

impl Certificate {
    pub fn empty() -> Self {
        Certificate { steps: Vec::new(), goals: Vec::new() }
    }

    pub fn step(&self, id: usize) -> Option<&Step> {
        self.steps.binary_search_by_key(&id, |s| s.id).ok().map(|i| &self.steps[i])
    }

    /// The last step concluding a fact.
    pub fn last_fact(&self) -> Option<(&Word, &Word)> {
        self.steps.iter().rev().find_map(|s| match &s.conclusion {
            Conclusion::Fact(u, v) => Some((u, v)),
            _ => None,
        })
    }

    pub fn to_text(&self, pres: &Presentation) -> String {
        let mut out = format!("certificate steps {} goals {}\n", self.steps.len(), self.goals.len());
        for s in &self.steps {
            let premises = s.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
            let sep = if premises.is_empty() { "" } else { " " };
            out.push_str(&format!(
                "#{} {}{sep}{premises} : {}\n",
                s.id,
                s.rule.tag(),
                render_conclusion(pres, &s.conclusion)
            ));
        }
        for (a, b, id) in &self.goals {
            out.push_str(&format!("goal {} {} #{id}\n", pres.name(*a), pres.name(*b)));
        }
        out.push_str("end\n");
        out
    }

    /// Hex SHA-256 of the text form.
    pub fn digest(&self, pres: &Presentation) -> String {
        hex::encode(Sha256::digest(self.to_text(pres).as_bytes()))
    }

    pub fn parse(text: &str, pres: &Presentation) -> Result<Certificate, CertParseError> {
        let mut steps = Vec::new();
        let mut goals = Vec::new();
        let mut ended = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |m: &str| CertParseError { line: n + 1, message: m.to_string() };
            if line.is_empty() || line.starts_with("certificate") {
                continue;
            }
            if ended {
                return Err(err("content after end"));
            }
            if line == "end" {
                ended = true;
            } else if let Some(rest) = line.strip_prefix("goal ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [a, b, id] = parts[..] else { return Err(err("goal needs two generators and a step")) };
                let ga = pres.lookup(a).ok_or_else(|| err("unknown generator"))?;
                let gb = pres.lookup(b).ok_or_else(|| err("unknown generator"))?;
                let id = id.strip_prefix('#').and_then(|i| i.parse().ok()).ok_or_else(|| err("bad step id"))?;
                goals.push((ga, gb, id));
            } else if let Some(rest) = line.strip_prefix('#') {
                let (head, concl) = rest.split_once(" : ").ok_or_else(|| err("missing ' : '"))?;
                let mut head = head.split_whitespace();
                let id: usize = head.next().and_then(|i| i.parse().ok()).ok_or_else(|| err("bad step id"))?;
                let rule = head.next().and_then(Rule::from_tag).ok_or_else(|| err("unknown rule"))?;
                let premises = match head.next() {
                    None => Vec::new(),
                    Some(p) => p
                        .split(',')
                        .map(|x| x.parse::<usize>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| err("bad premise list"))?,
                };
                if head.next().is_some() {
                    return Err(err("trailing tokens before ':'"));
                }
                let conclusion = parse_conclusion(pres, concl.trim(), rule.concludes_fact()).map_err(|m| err(&m))?;
                if steps.last().is_some_and(|s: &Step| s.id >= id) {
                    return Err(err("step ids must increase"));
                }
                steps.push(Step { id, rule, premises, conclusion });
            } else {
                return Err(err("unrecognized line"));
            }
        }
        if !ended {
            return Err(CertParseError { line: text.lines().count(), message: "missing end".into() });
        }
        Ok(Certificate { steps, goals })
    }
}

fn render_pair(pres: &Presentation, u: &Word, v: &Word) -> String {
    format!("[{}, {}]", pres.render(u), pres.render(v))
}

fn render_conclusion(pres: &Presentation, c: &Conclusion) -> String {
    match c {
        Conclusion::Fact(u, v) => render_pair(pres, u, v),
        Conclusion::Relator(ts) if ts.is_empty() => "1".to_string(),
        Conclusion::Relator(ts) => ts.iter().map(|(u, v)| render_pair(pres, u, v)).collect(),
    }
}

fn parse_conclusion(pres: &Presentation, text: &str, fact: bool) -> Result<Conclusion, String> {
    let mut terms = Vec::new();
    let mut rest = text;
    if rest != "1" {
        while !rest.is_empty() {
            let inner = rest.strip_prefix('[').ok_or("expected '['")?;
            let close = inner.find(']').ok_or("expected ']'")?;
            let (u, v) = inner[..close].split_once(',').ok_or("expected ','")?;
            let u = pres.parse_word(u).map_err(|e| e.to_string())?;
            let v = pres.parse_word(v).map_err(|e| e.to_string())?;
            terms.push((u, v));
            rest = inner[close + 1..].trim_start();
        }
    }
    if fact {
        match <[(Word, Word); 1]>::try_from(terms) {
            Ok([(u, v)]) => Ok(Conclusion::Fact(u, v)),
            Err(_) => Err("fact rules conclude a single commutator".into()),
        }
    } else {
        Ok(Conclusion::Relator(terms))
    }
}
