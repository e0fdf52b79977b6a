//! Intermediate representation: values, expressions, type constraints,
//! logical operators and the pattern graph.

mod expr;
mod ops;
mod pattern;
mod types;
mod value;

pub use expr::{AggFunc, AliasUse, Bindings, CmpOp, Expr, Usage};
pub use ops::{
    dir_name, AggCall, Columns, GetVOpt, LogicalOp, LogicalPlan, PlanNode, ProjectItem, ScanTarget,
    SortKey,
};
pub use pattern::{
    is_hidden, match_to_pattern, pattern_to_ops, plan_to_pattern, triplet_fits, EdgeDir,
    PathBinding, Pattern, PatternEdge, PatternVertex, VMask, MAX_PATTERN_VERTICES,
};
pub use types::{ConstraintKind, EdgeConstraint, TypeConstraint, VertexConstraint};
pub use value::{OrdValue, Params, Path, Value};
