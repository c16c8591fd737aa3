use hwq_core::bounds::{seed_tuples, SEED_TUPLES};
use hwq_core::deduce::replay::replay_certificate;
use hwq_core::deduce::{Conclusion, Rule};
use hwq_core::script::{corpus_entry, parse_script, run_script};
use hwq_core::{prove_abelian, Certificate, Limits, Presentation, Tuple4};
use num_bigint::BigInt;

const RULES: [&str; 15] = [
    "AXIOM-FACTOR",
    "AXIOM-CROSS",
    "AXIOM-TUPLE",
    "AXIOM-RELATOR",
    "REFL",
    "R2",
    "R3",
    "R4",
    "R5",
    "CONJ",
    "REL",
    "REL-DROP",
    "REL-STRIP",
    "REL-SPLIT",
    "REL-CANCEL",
];

fn cases() -> Vec<(String, Presentation, Vec<Tuple4>, Certificate)> {
    let mut out = Vec::new();
    for (m, n, words) in SEED_TUPLES {
        let (pres, tuples) = seed_tuples(m, n, words);
        let cert = prove_abelian(&pres, &tuples, Limits::default()).unwrap().certificate.unwrap();
        out.push((format!("({m},{n})"), pres, tuples, cert));
    }
    for name in ["m08", "m12"] {
        let e = corpus_entry(name).unwrap();
        let r = run_script(&parse_script(e.name, e.text).unwrap(), Limits::default()).unwrap();
        let p = r.pi1.unwrap();
        out.push((name.to_string(), p.presentation, vec![], p.certificate.unwrap()));
    }
    out
}

fn square(pres: &Presentation, w: &hwq_core::Word) -> hwq_core::Word {
    pres.power(w, &BigInt::from(2)).unwrap()
}

#[test]
fn certificates_replay_and_round_trip() {
    for (name, pres, tuples, cert) in cases() {
        let report = replay_certificate(&pres, &tuples, &cert).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(report.steps_checked, cert.steps.len());
        let text = cert.to_text(&pres);
        let parsed = Certificate::parse(&text, &pres).unwrap();
        assert_eq!(parsed, cert, "{name}");
        assert_eq!(parsed.digest(&pres), cert.digest(&pres));
    }
}

#[test]
fn every_single_step_mutation_fails_replay() {
    let mut mutations = 0;
    for (name, pres, tuples, cert) in cases() {
        for i in 0..cert.steps.len() {
            let step = &cert.steps[i];
            let mut variants: Vec<(String, Certificate)> = Vec::new();

            // conclusion perturbed
            let mut c = cert.clone();
            c.steps[i].conclusion = match &step.conclusion {
                Conclusion::Fact(u, v) => Conclusion::Fact(square(&pres, u), v.clone()),
                Conclusion::Relator(terms) => {
                    let mut t = terms.clone();
                    if let Some(first) = t.first_mut() {
                        first.0 = square(&pres, &first.0);
                    } else {
                        let g = pres.gen_word(pres.live_generators()[0]);
                        let h = pres.gen_word(pres.live_generators()[1]);
                        t.push((g, h));
                    }
                    Conclusion::Relator(t)
                }
            };
            variants.push(("conclusion".into(), c));

            // rule swapped for every other tag
            for tag in RULES {
                let rule = Rule::from_tag(tag).unwrap();
                if rule != step.rule {
                    let mut c = cert.clone();
                    c.steps[i].rule = rule;
                    variants.push((format!("rule {tag}"), c));
                }
            }

            // premise pointing at itself
            if !step.premises.is_empty() {
                let mut c = cert.clone();
                c.steps[i].premises[0] = step.id;
                variants.push(("premise".into(), c));
            }

            for (what, c) in variants {
                mutations += 1;
                assert!(
                    replay_certificate(&pres, &tuples, &c).is_err(),
                    "{name}: step #{} ({}) mutation {what} still replays",
                    step.id,
                    step.rule.tag()
                );
            }
        }
        // a goal redirected to a different step
        if cert.goals.len() >= 2 {
            let mut c = cert.clone();
            let other = c.goals[1].2;
            c.goals[0].2 = other;
            if c.goals[0].2 != cert.goals[0].2 {
                assert!(replay_certificate(&pres, &tuples, &c).is_err(), "{name}: goal redirect");
            }
        }
    }
    assert!(mutations > 1000);
}

#[test]
fn dropping_a_tuple_breaks_replay() {
    let (m, n, words) = SEED_TUPLES[0];
    let (pres, tuples) = seed_tuples(m, n, words);
    let cert = prove_abelian(&pres, &tuples, Limits::default()).unwrap().certificate.unwrap();
    assert!(replay_certificate(&pres, &tuples[..1], &cert).is_err());
}
