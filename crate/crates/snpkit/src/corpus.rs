//! Sentences and structures shipped with the crate, used by tests, the
//! acceptance suite and the CLI.

use crate::logic::{parse_sentence, Sentence};
use crate::structures::{parse_structure, Signature, Structure};
use std::sync::Arc;

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../fixtures/", $name, ".snp")))
    };
}

pub const SENTENCES: &[(&str, &str)] = &[
    fixture!("eq11"),
    fixture!("eq12"),
    fixture!("split"),
    fixture!("pentagons"),
    fixture!("triangles"),
    fixture!("two_cycle"),
    fixture!("loop"),
    fixture!("path"),
    fixture!("two_colouring"),
    fixture!("marked_edge"),
    fixture!("orientation"),
    fixture!("empty"),
];

/// Small connected GMSNP sentences (width ≤ 3, arity ≤ 2, height ≤ 3) on
/// which the full transform pipeline is cheap.
pub const MICRO: &[&str] = &["two_cycle", "loop", "path", "two_colouring", "marked_edge", "orientation"];

pub const K5: &str = include_str!("../fixtures/k5.str");
pub const K5_COLOURED: &str = include_str!("../fixtures/k5_coloured.str");

pub fn text(name: &str) -> &'static str {
    SENTENCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .unwrap_or_else(|| panic!("no fixture named {name}"))
}

pub fn sentence(name: &str) -> Sentence {
    parse_sentence(text(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn structure(text: &str, sig: &Arc<Signature>) -> Structure {
    parse_structure(text, sig).expect("fixture structure")
}
