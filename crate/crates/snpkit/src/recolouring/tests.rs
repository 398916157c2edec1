use super::search::random_consistent_map;
use super::*;
use crate::corpus;
use crate::logic::parse_sentence;
use crate::structures::{Elem, Structure};
use rand::{Rng, SeedableRng};

fn table(phi: &Sentence, n: usize) -> ColourTable {
    enumerate_colours(phi, n, &Budget::default()).unwrap()
}

fn sym(phi: &Sentence, name: &str) -> SymbolId {
    phi.full().find(name).unwrap()
}

/// Green stays green, red and blue become purple, tuple by tuple.
fn merge_red_blue(p: &Sentence, t: &Sentence, c1: &ColourTable, c2: &ColourTable) -> Recolouring {
    let (e1, r, g1, b) = (sym(p, "E"), sym(p, "R"), sym(p, "G"), sym(p, "B"));
    let (e2, pp, g2) = (sym(t, "E"), sym(t, "P"), sym(t, "G"));
    let map = c1
        .colours
        .iter()
        .map(|a| {
            let mut u = Structure::new(c2.sig.clone(), a.size());
            for tup in all_tuples(a.size(), 2) {
                u.set(e2, &tup, a.holds(e1, &tup));
                u.set(g2, &tup, a.holds(g1, &tup));
                u.set(pp, &tup, a.holds(r, &tup) || a.holds(b, &tup));
            }
            c2.id_of(&u).expect("image is a colour")
        })
        .collect();
    Recolouring { map }
}

/// Symmetric E-path through `0..=len`, every edge carrying `colours[i]`
/// in both directions.
fn coloured_path(phi: &Sentence, colours: &[&str]) -> Structure {
    let mut s = Structure::new(phi.full().clone(), colours.len() + 1);
    let e = sym(phi, "E");
    for (i, c) in colours.iter().enumerate() {
        let c = sym(phi, c);
        let (x, y) = (i as Elem, i as Elem + 1);
        for t in [[x, y], [y, x]] {
            s.insert(e, &t);
            s.insert(c, &t);
        }
    }
    s
}

fn coloured_triangle(phi: &Sentence, colours: [&str; 3]) -> Structure {
    let mut s = coloured_path(phi, &colours[..2]);
    let (e, c) = (sym(phi, "E"), sym(phi, colours[2]));
    for t in [[2, 0], [0, 2]] {
        s.insert(e, &t);
        s.insert(c, &t);
    }
    s
}

#[test]
fn colour_counts_respect_the_bound() {
    for name in corpus::MICRO.iter().chain(&["eq11", "pentagons"]) {
        let phi = corpus::sentence(name);
        let c = table(&phi, 2);
        assert!(!c.is_empty());
        assert!((c.len() as u128) <= c.count_bound().unwrap(), "{name}");
        for t in &c.colours {
            assert!(check_fo_part(&phi, t).unwrap());
        }
    }
}

#[test]
fn partition_clauses_colour_each_edge_once() {
    let phi = corpus::sentence("eq11");
    let c = table(&phi, 2);
    let (e, b, r) = (sym(&phi, "E"), sym(&phi, "B"), sym(&phi, "R"));
    let mut edges = 0;
    for t in c.colours.iter().filter(|t| t.size() == 2) {
        for tup in all_tuples(2, 2) {
            if t.holds(e, &tup) {
                edges += 1;
                assert!(t.holds(b, &tup) ^ t.holds(r, &tup));
            }
        }
    }
    assert!(edges > 0);
}

#[test]
fn unsatisfiable_sentence_has_no_colours() {
    let phi = parse_sentence("sentence { input { E/2 } exists { } clause { x != x } }").unwrap();
    assert!(table(&phi, 2).is_empty());
}

#[test]
fn views_and_faces_agree() {
    let phi = corpus::sentence("two_colouring");
    let c = table(&phi, 2);
    for t in (0..c.len()).filter(|&t| c.colours[t].size() == 2) {
        let faces = [c.view(t, &[1]).unwrap(), c.view(t, &[0]).unwrap()];
        assert!(c.with_faces(&faces).contains(&t));
    }
}

#[test]
fn merging_red_and_blue_is_a_recolouring() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let xi = merge_red_blue(&p, &t, &c1, &c2);
    let r = check_recolouring(&p, &t, &xi, &c1, &c2, ConditionMode::PatternDirected, &Budget::default()).unwrap();
    assert_eq!(r, None);
}

#[test]
fn red_blue_triangles_turn_purple_and_are_already_forbidden() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let xi = merge_red_blue(&p, &t, &c1, &c2);
    for cols in [["R", "R", "B"], ["R", "B", "B"], ["B", "B", "R"], ["B", "R", "R"]] {
        let a = coloured_triangle(&p, cols);
        assert!(!check_fo_part(&p, &a).unwrap());
        let image = apply_extension(&xi, &a, &c1, &c2).unwrap().unwrap();
        assert_eq!(image.relation_len(sym(&t, "P")), 6);
        assert_eq!(image.relation_len(sym(&t, "G")), 0);
        assert_eq!(c1.tau_reduct(&a), c2.tau_reduct(&image));
    }
}

#[test]
fn extension_of_a_colour_is_its_image() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let xi = merge_red_blue(&p, &t, &c1, &c2);
    for id in (0..c1.len()).step_by(97) {
        let got = apply_extension(&xi, &c1.colours[id], &c1, &c2).unwrap().unwrap();
        assert_eq!(got, c2.colours[xi.map[id]]);
    }
}

#[test]
fn asymmetric_image_of_a_symmetric_edge_breaks_partial_isomorphisms() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let mut xi = merge_red_blue(&p, &t, &c1, &c2);
    let green = c1.id_of(&coloured_path(&p, &["G"])).unwrap();
    let mut bad = Structure::new(c2.sig.clone(), 2);
    let (e, pp, g) = (sym(&t, "E"), sym(&t, "P"), sym(&t, "G"));
    bad.insert(e, &[0, 1]);
    bad.insert(e, &[1, 0]);
    bad.insert(g, &[0, 1]);
    bad.insert(pp, &[1, 0]);
    xi.map[green] = c2.id_of(&bad).unwrap();
    let budget = Budget::default();
    let fast = check_recolouring(&p, &t, &xi, &c1, &c2, ConditionMode::PatternDirected, &budget).unwrap();
    assert!(matches!(fast, Some(CheckFailure::PartialIso { .. })), "{fast:?}");
    // ξ′ now depends on how the elements are numbered.
    let a = coloured_path(&p, &["G", "R"]);
    let swapped = a.induced(&[1, 0, 2]);
    let x = apply_extension(&xi, &a, &c1, &c2).unwrap().unwrap();
    let y = apply_extension(&xi, &swapped, &c1, &c2).unwrap().unwrap();
    assert_ne!(x.induced(&[1, 0, 2]), y);
}

#[test]
fn merging_every_colour_produces_purple_triangles() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let mut xi = merge_red_blue(&p, &t, &c1, &c2);
    let (e, pp) = (sym(&t, "E"), sym(&t, "P"));
    for (id, a) in c1.colours.iter().enumerate() {
        let mut u = Structure::new(c2.sig.clone(), a.size());
        for tup in all_tuples(a.size(), 2) {
            if a.holds(sym(&p, "E"), &tup) {
                u.insert(e, &tup);
                u.insert(pp, &tup);
            }
        }
        xi.map[id] = c2.id_of(&u).unwrap();
    }
    let rgb = coloured_triangle(&p, ["R", "G", "B"]);
    assert!(check_fo_part(&p, &rgb).unwrap());
    let r = check_recolouring(&p, &t, &xi, &c1, &c2, ConditionMode::PatternDirected, &Budget::default()).unwrap();
    match r {
        Some(CheckFailure::Extension { d, image, .. }) => {
            assert!(check_fo_part(&p, &d).unwrap());
            assert!(!check_fo_part(&t, &image).unwrap());
        }
        other => panic!("expected a condition (iii) failure, got {other:?}"),
    }
}

#[test]
fn identity_is_a_recolouring_and_is_found_first() {
    for name in ["two_colouring", "orientation", "eq11"] {
        let phi = corpus::sentence(name);
        let c = table(&phi, 2);
        let id = Recolouring { map: (0..c.len()).collect() };
        let budget = Budget::default();
        assert_eq!(check_recolouring(&phi, &phi, &id, &c, &c, ConditionMode::PatternDirected, &budget).unwrap(), None);
        let (out, _) = recolouring_search(&phi, &phi, &c, &c, &budget).unwrap();
        assert_eq!(out, SearchOutcome::Found(id), "{name}");
    }
}

#[test]
fn search_finds_a_recolouring_for_pentagons_and_triangles() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let budget = Budget::default();
    let (out, stats) = recolouring_search(&p, &t, &c1, &c2, &budget).unwrap();
    let SearchOutcome::Found(xi) = out else { panic!("{out:?} {stats:?}") };
    assert_eq!(check_recolouring(&p, &t, &xi, &c1, &c2, ConditionMode::PatternDirected, &budget).unwrap(), None);
}

#[test]
fn search_reports_absence() {
    let budget = Budget::default();
    let unsat = parse_sentence("sentence { input { E/2 } exists { } clause { x != x } }").unwrap();
    let path = corpus::sentence("path");
    let two = corpus::sentence("two_colouring");
    // The last pair is contained, but the single vertex colour of `path`
    // cannot go to both ends of an edge of `two_colouring`.
    for (a, b) in [(&path, &unsat), (&two, &path), (&path, &two)] {
        let (c1, c2) = (table(a, 2), table(b, 2));
        assert_eq!(recolouring_search(a, b, &c1, &c2, &budget).unwrap().0, SearchOutcome::Absent);
    }
}

#[test]
fn tiny_budget_gives_unknown() {
    let (p, t) = (corpus::sentence("pentagons"), corpus::sentence("triangles"));
    let (c1, c2) = (table(&p, 2), table(&t, 2));
    let budget = Budget { nodes: 50, ..Budget::default() };
    assert!(matches!(recolouring_search(&p, &t, &c1, &c2, &budget).unwrap().0, SearchOutcome::Unknown(_)));
}

const ORIENTED_COVER: &str = "sentence { input { E/2 } exists { X/1 }
  clause { !E(x,x) }
  clause { !E(x,y) | !E(y,x) }
  clause { !E(x,y) | X(x) | X(y) }
}";

const NO_Y_PATH: &str = "sentence { input { E/2 } exists { Y/1 }
  clause { !E(x,y) | Y(x) | Y(y) }
  clause { !E(x,y) | !E(y,z) | !Y(x) | !Y(z) }
}";

#[test]
fn pattern_directed_condition_iii_matches_enumeration() {
    let phi1 = parse_sentence(ORIENTED_COVER).unwrap();
    let budget = Budget::default();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let (mut agree, mut failing) = (0, 0);
    for text in [ORIENTED_COVER, NO_Y_PATH, corpus::text("path"), corpus::text("two_colouring")] {
        let phi2 = parse_sentence(text).unwrap();
        let (c1, c2) = (table(&phi1, 2), table(&phi2, 2));
        let mut maps: Vec<Recolouring> = (0..60).filter_map(|_| random_consistent_map(&c1, &c2, &mut rng)).collect();
        if let SearchOutcome::Found(xi) = recolouring_search(&phi1, &phi2, &c1, &c2, &budget).unwrap().0 {
            maps.push(xi);
        }
        for xi in maps {
            assert_eq!(check_condition_ii_naive(&xi, &c1, &c2), None);
            let fast = check_recolouring(&phi1, &phi2, &xi, &c1, &c2, ConditionMode::PatternDirected, &budget).unwrap();
            let slow = check_recolouring(&phi1, &phi2, &xi, &c1, &c2, ConditionMode::Naive, &budget).unwrap();
            assert_eq!(fast.is_none(), slow.is_none(), "{xi:?}");
            agree += 1;
            failing += usize::from(fast.is_some());
        }
    }
    assert!(agree > 50 && failing > 0 && failing < agree, "{agree} {failing}");
}

#[test]
fn condition_ii_matches_partial_isomorphism_enumeration() {
    let phi1 = parse_sentence(ORIENTED_COVER).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let (mut passing, mut failing) = (0, 0);
    for phi2 in [phi1.clone(), parse_sentence(NO_Y_PATH).unwrap(), corpus::sentence("two_colouring")] {
        let (c1, c2) = (table(&phi1, 2), table(&phi2, 2));
        for _ in 0..40 {
            let Some(mut xi) = random_consistent_map(&c1, &c2, &mut rng) else { continue };
            if rng.gen_bool(0.7) {
                let t = rng.gen_range(0..c1.len());
                let same = c2.with_reduct(&c1.tau_reduct(&c1.colours[t]));
                xi.map[t] = same[rng.gen_range(0..same.len())];
            }
            let fast = check_condition_ii(&xi, &c1, &c2).unwrap();
            assert_eq!(fast.is_none(), check_condition_ii_naive(&xi, &c1, &c2).is_none(), "{xi:?}");
            passing += usize::from(fast.is_none());
            failing += usize::from(fast.is_some());
        }
    }
    assert!(passing > 10 && failing > 10, "{passing} {failing}");
}

#[test]
fn free_amalgams_suffice_without_clauses() {
    let phi = corpus::sentence("empty");
    assert!(bounded_ap_check(&phi, 2, 3, &Budget::default()).unwrap().is_empty());
}

#[test]
fn green_paths_do_not_amalgamate() {
    let p = corpus::sentence("pentagons");
    let pool = vec![coloured_path(&p, &["G", "G"]), coloured_path(&p, &["G", "G", "G"])];
    for s in &pool {
        assert!(check_fo_part(&p, s).unwrap());
    }
    let fails = bounded_ap_check_pool(&p, &pool, 5, &Budget::default()).unwrap();
    assert!(fails.iter().any(|c| c.a.size() == 3 && c.b.size() == 4 && c.common_a == [0, 2]), "{fails:?}");
    let mut meter = Budget::default().meter("test");
    // A path of length 2 and one of length 4 would close a hexagon: fine.
    let long = coloured_path(&p, &["G", "G", "G", "G"]);
    let w = amalgamate(&p, &pool[0], &long, &[0, 2], &[0, 4], 6, &mut meter).unwrap();
    assert!(w.is_some());
}
