//! Containment of guarded monotone SNP sentences: parsing and model checking,
//! connected decomposition, the order-and-pieces expansion, recolouring
//! search, a brute-force containment oracle, and transforms over guarded
//! colours.

#![allow(clippy::type_complexity, clippy::needless_range_loop)]

pub mod budget;
pub mod containment;
pub mod corpus;
pub mod decompose;
pub mod hn_transform;
pub mod ready;
pub mod recolouring;
pub mod error;
mod lex;
pub mod logic;
pub mod structures;

pub use budget::Budget;
pub use error::{Error, Result};
