//! Graph-native query optimization for pattern-relational queries.
//!
//! A query flows through the crate in this order:
//!
//! 1. [`parser::parse`] turns Cypher-like text into a [`ir::LogicalPlan`].
//! 2. [`rbo::apply_rules`] rewrites it with heuristic rules.
//! 3. [`ir::match_to_pattern`] lifts the `MATCH_PATTERN` into a [`ir::Pattern`].
//! 4. [`typecheck::infer_and_validate`] narrows type constraints against the schema.
//! 5. [`cbo`] searches for a cheap join/expand plan using [`glogue`] statistics.
//! 6. [`executor::execute`] runs the physical plan over a [`graph::PropertyGraph`].
//!
//! [`pipeline::Engine`] wires all of the above together.
//!
//! The cost model and frequency estimation are generic over a [`Scalar`];
//! `f64` is the default, and [`ExactRational`] gives exact arithmetic for
//! verification.

pub mod cbo;
pub mod error;
pub mod executor;
pub mod fixtures;
pub mod glogue;
pub mod graph;
pub mod ir;
pub mod parser;
pub mod pipeline;
pub mod rbo;
pub mod scalar;
pub mod typecheck;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Arbitrary-precision rational, used where costs must compare exactly.
pub type ExactRational = num_rational::BigRational;

/// Default floating-point cost type.
pub type Cost = f64;

/// Statistics catalogue with floating-point estimates.
pub type GLogue = glogue::GLogue<f64>;
/// Statistics catalogue with exact rational estimates.
pub type ExactGLogue = glogue::GLogue<ExactRational>;

/// Pattern optimizer over floating-point costs.
pub type Optimizer<'a> = cbo::GraphOptimizer<'a, f64>;
/// Pattern optimizer over exact rational costs.
pub type ExactOptimizer<'a> = cbo::GraphOptimizer<'a, ExactRational>;
