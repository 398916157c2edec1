use super::*;
use crate::corpus;
use crate::logic::{check_model, parse_sentence};
use crate::structures::enumerate_structures;

/// Micro sentences whose Ω fits the default budget; `orientation` has sixteen
/// binary guarded pieces and does not.
const OMEGA_MICRO: &[&str] = &["two_cycle", "loop", "path", "two_colouring", "marked_edge"];

fn same_finite_models(a: &Sentence, b: &Sentence, size: usize) {
    let budget = Budget::default();
    for s in enumerate_structures(a.input(), size, &budget, |_| true).unwrap() {
        let x = check_model(a, &s, &budget).unwrap().is_some();
        let y = check_model(b, &s, &budget).unwrap().is_some();
        assert_eq!(x, y, "models differ on\n{}", crate::structures::print_structure(&s));
    }
}

#[test]
fn complements_label_every_guarded_tuple() {
    let phi = corpus::sentence("orientation");
    let c = colour_complements(&phi).unwrap();
    assert_eq!(c.sentence.exist().len(), 2);
    assert_eq!(c.sentence.exist().name(1), "B~");
    // 4 tuples over the pair of an edge, two clauses each
    assert_eq!(c.sentence.clauses().len() - c.rewritten, 8);
    assert!(c.sentence.clauses()[..c.rewritten].iter().all(|cl| cl.lits.iter().all(|l| !l.is_positive())));
    same_finite_models(&phi, &c.sentence, 3);
}

#[test]
fn closure_reaches_correctly_labelled_clauses() {
    for name in corpus::MICRO {
        let phi = corpus::sentence(name);
        let c = colour_complements(&phi).unwrap();
        let closure = correct_labelling_closure(&c, &Budget::default()).unwrap();
        let full = c.sentence.full().clone();
        for cl in &closure {
            assert!(is_correctly_labelled(&cl.pattern_structure(&full), &c.pairs), "{name}");
        }
        let mut with = closure.clone();
        with.extend_from_slice(&c.sentence.clauses()[c.rewritten..]);
        same_finite_models(&phi, &c.sentence.with_clauses(with).unwrap(), 3);
    }
}

#[test]
fn closure_splits_each_unlabelled_tuple() {
    let phi = corpus::sentence("orientation");
    let c = colour_complements(&phi).unwrap();
    let closure = correct_labelling_closure(&c, &Budget::default()).unwrap();
    // !E(x,y) | !B~(x,y) leaves (x,x), (y,x), (y,y) open: 8 clauses; the
    // other leaves (x,x), (y,y) open: 4 clauses
    assert_eq!(closure.len(), 12);
}

#[test]
fn no_existentials_means_no_labelling() {
    let phi = corpus::sentence("two_cycle");
    let c = colour_complements(&phi).unwrap();
    assert!(c.pairs.is_empty());
    assert_eq!(correct_labelling_closure(&c, &Budget::default()).unwrap(), c.sentence.clauses().to_vec());
}

#[test]
fn guarded_pieces_carry_an_input_tuple_on_their_root() {
    let phi = corpus::sentence("two_cycle");
    let out = omega_transform(&phi, &OmegaOptions::default(), &Budget::default()).unwrap();
    assert!(!out.pieces.is_empty());
    for g in &out.pieces {
        let k = g.pre.sig().arity(g.relation);
        let root: Vec<Elem> = (0..k as Elem).collect();
        assert!(g.pre.holds(g.relation, &root));
        assert!(k >= g.piece.root_len());
    }
}

#[test]
fn omega_preserves_finite_models() {
    for name in OMEGA_MICRO {
        let phi = corpus::sentence(name);
        let out = omega_transform(&phi, &OmegaOptions::default(), &Budget::default()).unwrap();
        let class = out.sentence.classify();
        assert!(class.is_gmsnp() && class.is_connected, "{name}");
        assert_eq!(out.report.after.ar, out.report.before.ar, "{name}");
        assert_eq!(out.report.after.wd, out.report.before.wd, "{name}");
        same_finite_models(&phi, &out.sentence, 3);
    }
}

#[test]
fn omega_without_existentials_only_adds_pieces() {
    let phi = corpus::sentence("two_cycle");
    let out = omega_transform(&phi, &OmegaOptions::default(), &Budget::default()).unwrap();
    assert_eq!(out.report.counters.labelling, 0);
    assert_eq!(out.report.counters.closure, phi.clauses().len());
    let n = out.sentence.exist().len();
    assert_eq!(n, out.pieces.len());
}

#[test]
fn omega_rejects_disconnected_input() {
    let phi = corpus::sentence("split");
    assert!(matches!(omega_transform(&phi, &OmegaOptions::default(), &Budget::default()), Err(Error::Precondition(_))));
}

#[test]
fn tiny_budget_stops_omega() {
    let b = Budget { nodes: 10, ..Budget::default() };
    let err = omega_transform(&corpus::sentence("path"), &OmegaOptions::default(), &b).unwrap_err();
    assert!(err.is_budget());
}

#[test]
fn partitions_are_counted_by_bell_numbers() {
    let bell = [1, 1, 2, 5, 15, 52];
    for (k, &b) in bell.iter().enumerate() {
        let ps = partitions(k);
        assert_eq!(ps.len(), b);
        assert_eq!(ps.iter().collect::<HashSet<_>>().len(), b);
    }
}

#[test]
fn prime_has_one_symbol_per_guarded_colour() {
    for name in corpus::MICRO {
        let phi = corpus::sentence(name);
        let n = phi.input().max_arity();
        let out = omega_prime(&phi, n, &Budget::default()).unwrap();
        let (table, ids) = ordered_guarded_colours(&phi, n, &Budget::default()).unwrap();
        // brute force: colours of which some input tuple covers the domain
        let brute = table
            .colours
            .iter()
            .filter(|c| {
                (0..phi.input().len()).any(|r| c.tuples(r).any(|t| (0..c.size() as Elem).all(|e| t.contains(&e))))
            })
            .count();
        assert_eq!(ids.len(), brute, "{name}");
        assert_eq!(out.colours.len(), brute, "{name}");
        assert_eq!(out.sentence.exist().len(), brute + 1, "{name}");
        assert_eq!(out.sentence.exist().arity(brute), 2);
    }
}

#[test]
fn prime_is_equivalent_on_small_structures() {
    for name in corpus::MICRO {
        let phi = corpus::sentence(name);
        let out = omega_prime(&phi, phi.input().max_arity(), &Budget::default()).unwrap();
        assert!(out.sentence.classify().is_gmsnp(), "{name}");
        same_finite_models(&phi, &out.sentence, 3);
    }
}

#[test]
fn prime_of_omega_is_equivalent() {
    let phi = corpus::sentence("two_cycle");
    let omega = omega_transform(&phi, &OmegaOptions::default(), &Budget::default()).unwrap().sentence;
    let out = omega_prime(&omega, omega.input().max_arity(), &Budget::default()).unwrap();
    same_finite_models(&phi, &out.sentence, 3);
}

#[test]
fn prime_without_colours_forbids_every_input_tuple() {
    let phi = parse_sentence("sentence { input { E/2 } exists { B/1 } clause { !E(x,y) | B(x) } clause { !E(x,y) | !B(x) } }").unwrap();
    let out = omega_prime(&phi, 2, &Budget::default()).unwrap();
    assert!(out.colours.is_empty());
    // both partitions of E's arguments are forbidden outright
    assert_eq!(out.counters.covering, 2);
    same_finite_models(&phi, &out.sentence, 3);
}

#[test]
fn prime_needs_existentials_inside_input_atoms() {
    let phi = parse_sentence("sentence { input { E/2 } exists { B/1 } clause { !E(x,y) | !B(x) | !B(z) | !E(z,y) } }").unwrap();
    assert!(phi.classify().is_gmsnp());
    assert!(existentials_inside_tau_atoms(&phi));
    let bad = parse_sentence("sentence { input { E/2 } exists { B/2 } clause { !E(x,y) | !E(y,z) | !B(x,z) } }").unwrap();
    if bad.classify().is_gmsnp() {
        assert!(matches!(omega_prime(&bad, 2, &Budget::default()), Err(Error::Unsupported(_))));
    }
}

#[test]
fn prime_orders_colour_atoms_and_forbids_short_cycles() {
    let phi = corpus::sentence("path");
    let out = omega_prime(&phi, 2, &Budget::default()).unwrap();
    let two = out.colours.iter().filter(|c| c.size() == 2).count();
    assert_eq!(out.counters.order, two);
    assert_eq!(out.counters.cycles, phi.stats().wd);
}

#[test]
fn prime_rejects_small_n() {
    assert!(matches!(omega_prime(&corpus::sentence("path"), 1, &Budget::default()), Err(Error::Precondition(_))));
}

fn search(a: &Sentence, b: &Sentence) -> (GContext, GOutcome) {
    let ctx = gmsnp_context(a, b, None, &Budget::default()).unwrap();
    let (out, _) = gmsnp_recolouring_search(&ctx, &Budget::default()).unwrap();
    (ctx, out)
}

#[test]
fn identity_is_a_gmsnp_recolouring() {
    for name in corpus::MICRO {
        let phi = corpus::sentence(name);
        let (ctx, out) = search(&phi, &phi);
        let id = GRecolouring { map: ctx.guarded1.iter().map(|&c| (c, c)).collect() };
        assert_eq!(check_gmsnp_recolouring(&ctx, &id, &Budget::default()).unwrap(), None, "{name}");
        assert!(matches!(out, GOutcome::Found(_)), "{name}");
    }
}

#[test]
fn empty_target_colours_mean_no_recolouring() {
    let edgeless = parse_sentence("sentence { input { E/2 } exists { } clause { !E(x,y) } }").unwrap();
    let (ctx, out) = search(&corpus::sentence("path"), &edgeless);
    assert!(ctx.guarded2.is_empty());
    assert_eq!(out, GOutcome::Absent);
}

#[test]
fn search_agrees_with_the_oracle_on_micro_pairs() {
    use crate::containment::falsify_containment;
    for a in ["two_cycle", "path", "two_colouring", "loop"] {
        for b in ["two_cycle", "path", "two_colouring", "loop"] {
            let (p1, p2) = (corpus::sentence(a), corpus::sentence(b));
            let (_, out) = search(&p1, &p2);
            let cex = falsify_containment(&p1, &p2, 4, &Budget::default()).unwrap();
            match out {
                GOutcome::Found(_) => assert!(cex.is_none(), "{a} {b}"),
                GOutcome::Absent => assert!(cex.is_some(), "{a} {b}"),
                GOutcome::Unknown(e) => panic!("{a} {b}: {e}"),
            }
        }
    }
}

#[test]
fn identity_for_omega_images() {
    let omega = omega_transform(&corpus::sentence("two_cycle"), &OmegaOptions::default(), &Budget::default()).unwrap().sentence;
    let (ctx, out) = search(&omega, &omega);
    let id = GRecolouring { map: ctx.guarded1.iter().map(|&c| (c, c)).collect() };
    assert_eq!(check_gmsnp_recolouring(&ctx, &id, &Budget::default()).unwrap(), None);
    assert!(matches!(out, GOutcome::Found(_)));
}

#[test]
fn skeletons_are_connected_and_coloured() {
    let phi = corpus::sentence("two_colouring");
    let ctx = gmsnp_context(&phi, &phi, Some(3), &Budget::default()).unwrap();
    assert!(!ctx.skeletons.is_empty());
    for sk in &ctx.skeletons {
        assert!(crate::structures::is_connected(&sk.input));
        for (s, &c) in sk.sets.iter().zip(&sk.colours) {
            assert!(ctx.guarded1.contains(&c));
            assert_eq!(ctx.table1.tau_reduct(&ctx.table1.colours[c]), sk.input.induced(s));
        }
    }
    // distinct skeletons never share input and colours
    let mut seen = HashSet::new();
    assert!(ctx.skeletons.iter().all(|sk| seen.insert((sk.input.clone(), sk.colours.clone()))));
}
