use super::*;
use crate::corpus;
use crate::logic::parse_sentence;

fn opts(method: MethodChoice) -> ContainmentOptions {
    ContainmentOptions { method, ..Default::default() }
}

#[test]
fn every_micro_sentence_contains_itself() {
    for name in corpus::MICRO {
        let phi = corpus::sentence(name);
        let v = decide_containment(&phi, &phi, &opts(MethodChoice::Auto)).unwrap();
        assert_eq!((v.outcome, v.method), (Outcome::Contained, Method::Recolouring), "{name}");
        assert_eq!(falsify_containment(&phi, &phi, 3, &Budget::default()).unwrap(), None);
    }
}

#[test]
fn no_clauses_is_the_weakest_sentence() {
    let (two, empty) = (corpus::sentence("two_cycle"), corpus::sentence("empty"));
    let v = decide_containment(&two, &empty, &opts(MethodChoice::Auto)).unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
    let v = decide_containment(&empty, &two, &opts(MethodChoice::Auto)).unwrap();
    assert_eq!((v.outcome, v.method), (Outcome::NotContained, Method::OracleFalsified));
    // x = y is allowed, so a single loop is already a 2-cycle.
    let c = v.counterexample.unwrap();
    assert_eq!(c.structure.size(), 1);
    assert!(c.structure.holds(0, &[0, 0]));
}

#[test]
fn missing_recolouring_after_delta_refutes() {
    let (two, empty) = (corpus::sentence("two_cycle"), corpus::sentence("empty"));
    let v = decide_containment(&empty, &two, &opts(MethodChoice::Recolouring)).unwrap();
    assert_eq!((v.outcome, v.method), (Outcome::NotContained, Method::Recolouring));
    assert!(v.counterexample.is_none());
    assert!(v.pairs.iter().all(|p| p.outcome == SearchOutcome::Absent));
}

#[test]
fn delta_finds_what_raw_sentences_miss() {
    let (path, two) = (corpus::sentence("path"), corpus::sentence("two_colouring"));
    let raw = ContainmentOptions { raw: true, ..opts(MethodChoice::Recolouring) };
    let v = decide_containment(&path, &two, &raw).unwrap();
    assert_eq!((v.outcome, v.method), (Outcome::Unknown, Method::Recolouring));
    let v = decide_containment(&path, &two, &opts(MethodChoice::Recolouring)).unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
    assert_eq!(v.recolourings().count(), 1);
    let v = decide_containment(&corpus::sentence("two_cycle"), &corpus::sentence("empty"), &raw).unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
}

#[test]
fn oracle_alone_never_claims_containment() {
    let phi = corpus::sentence("loop");
    let v = decide_containment(&phi, &phi, &opts(MethodChoice::Oracle)).unwrap();
    assert_eq!((v.outcome, v.method), (Outcome::Unknown, Method::OracleExhausted));
}

#[test]
fn split_sentences_go_through_their_disjuncts() {
    // Either no 2-cycle or no edge at all.
    let split = parse_sentence("sentence { input { E/2 } exists { } clause { !E(x,y) | !E(y,x) | !E(u,v) } }").unwrap();
    let edgeless = parse_sentence("sentence { input { E/2 } exists { } clause { !E(x,y) } }").unwrap();
    let two = corpus::sentence("two_cycle");
    let o = opts(MethodChoice::Recolouring);
    let v = decide_containment(&split, &two, &o).unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
    assert!(v.stages.iter().any(|s| s.name == "decompose lhs" && s.detail == "2 disjuncts"));
    assert_eq!(v.recolourings().count(), 2);
    assert_eq!(decide_containment(&two, &split, &o).unwrap().outcome, Outcome::Contained);
    let v = decide_containment(&split, &edgeless, &o).unwrap();
    assert_eq!((v.outcome, v.method), (Outcome::NotContained, Method::Recolouring));
    let c = falsify_containment(&split, &edgeless, 4, &Budget::default()).unwrap().unwrap();
    assert_eq!((c.structure.size(), c.structure.tuple_count()), (2, 1));
}

#[test]
fn duplicated_clauses_do_not_change_verdicts() {
    let names = ["two_cycle", "loop", "path", "two_colouring"];
    for a in names {
        for b in names {
            let (p, q) = (corpus::sentence(a), corpus::sentence(b));
            let dup = |s: &Sentence| s.with_clauses(s.clauses().iter().chain(s.clauses()).cloned().collect()).unwrap();
            let o = opts(MethodChoice::Recolouring);
            let base = decide_containment(&p, &q, &o).unwrap().outcome;
            assert_eq!(decide_containment(&dup(&p), &q, &o).unwrap().outcome, base, "{a} {b}");
            assert_eq!(decide_containment(&p, &dup(&q), &o).unwrap().outcome, base, "{a} {b}");
        }
    }
}

#[test]
fn verdicts_are_deterministic() {
    let (p, q) = (corpus::sentence("orientation"), corpus::sentence("two_cycle"));
    let a = decide_containment(&p, &q, &opts(MethodChoice::Auto)).unwrap();
    let b = decide_containment(&p, &q, &opts(MethodChoice::Auto)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exhausted_budget_is_unknown() {
    let (p, q) = (corpus::sentence("orientation"), corpus::sentence("two_cycle"));
    let tight = ContainmentOptions { budget: Budget { nodes: 200, ..Budget::default() }, ..opts(MethodChoice::Recolouring) };
    let v = decide_containment(&p, &q, &tight).unwrap();
    assert_eq!((v.outcome, v.method), (Outcome::Unknown, Method::Budget));
    assert!(v.reason.unwrap().contains("budget"));
}

#[test]
fn different_inputs_are_rejected() {
    let marked = corpus::sentence("marked_edge");
    let two = corpus::sentence("two_cycle");
    assert!(matches!(decide_containment(&marked, &two, &opts(MethodChoice::Auto)), Err(Error::SignatureMismatch(_))));
}

#[test]
fn unguarded_sentences_need_raw_mode() {
    let eq12 = corpus::sentence("eq12");
    assert!(matches!(decide_containment(&eq12, &eq12, &opts(MethodChoice::Recolouring)), Err(Error::Precondition(_))));
    let raw = ContainmentOptions { raw: true, ..opts(MethodChoice::Recolouring) };
    let v = decide_containment(&eq12, &eq12, &raw).unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
}

#[test]
fn unsatisfiable_left_side_is_contained_in_anything() {
    let unsat = parse_sentence("sentence { input { E/2 } exists { } clause { !E(x,y) } clause { E(x,y) } }").unwrap();
    let v = decide_containment(&unsat, &corpus::sentence("loop"), &ContainmentOptions { raw: true, ..Default::default() }).unwrap();
    assert_eq!(v.outcome, Outcome::Contained);
}
