//! Toolkit for a movement-routine subset of ABB RAPID.
//!
//! - [`syntax`]: tokenizer, parser, pretty printer and canonical comparison.
//! - [`motion`]: geometric interpreter producing motion traces.
//! - [`transforms`]: reference implementations of the three editing tasks
//!   (argument modification, adding an offset, reversal).
//! - [`conformance`]: configurable rule validator and match scorers.
//! - [`corpus`]: seeded task-instance generator and lexical example retrieval.

pub mod conformance;
pub mod corpus;
pub mod motion;
pub mod syntax;
pub mod transforms;
