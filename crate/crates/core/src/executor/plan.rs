use std::fmt;

use crate::error::{Error, Result};
use crate::ir::{LogicalOp, Pattern, VMask};

/// Physical operator tree that binds a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternPlan {
    Scan {
        vertex: usize,
    },
    /// Binds `vertex` through `edges`, all of its edges into the input.
    Expand {
        input: Box<PatternPlan>,
        vertex: usize,
        edges: Vec<usize>,
    },
    /// Hash join on the shared vertices and edges.
    Join {
        left: Box<PatternPlan>,
        right: Box<PatternPlan>,
    },
}

impl PatternPlan {
    pub fn scan(vertex: usize) -> PatternPlan {
        PatternPlan::Scan { vertex }
    }

    pub fn expand(input: PatternPlan, vertex: usize, edges: Vec<usize>) -> PatternPlan {
        PatternPlan::Expand {
            input: Box::new(input),
            vertex,
            edges,
        }
    }

    pub fn join(left: PatternPlan, right: PatternPlan) -> PatternPlan {
        PatternPlan::Join {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Vertices bound by this subtree.
    pub fn mask(&self) -> VMask {
        match self {
            PatternPlan::Scan { vertex } => 1 << vertex,
            PatternPlan::Expand { input, vertex, .. } => input.mask() | (1 << vertex),
            PatternPlan::Join { left, right } => left.mask() | right.mask(),
        }
    }

    pub fn op_count(&self) -> usize {
        match self {
            PatternPlan::Scan { .. } => 1,
            PatternPlan::Expand { input, .. } => 1 + input.op_count(),
            PatternPlan::Join { left, right } => 1 + left.op_count() + right.op_count(),
        }
    }

    /// Checks that the tree binds every vertex and edge of `p` exactly as
    /// the operators require.
    pub fn validate(&self, p: &Pattern) -> Result<()> {
        self.check(p)?;
        if self.mask() != p.full_mask() {
            return Err(Error::Plan(
                "plan does not bind every pattern vertex".into(),
            ));
        }
        Ok(())
    }

    fn check(&self, p: &Pattern) -> Result<()> {
        match self {
            PatternPlan::Scan { vertex } => {
                if *vertex >= p.vertex_count() {
                    return Err(Error::Plan(format!("scan of unknown vertex {vertex}")));
                }
            }
            PatternPlan::Expand {
                input,
                vertex,
                edges,
            } => {
                input.check(p)?;
                let m = input.mask();
                if *vertex >= p.vertex_count() || m & (1 << vertex) != 0 {
                    return Err(Error::Plan(format!("bad expand target {vertex}")));
                }
                let mut want = p.edges_between(*vertex, m);
                let mut got = edges.clone();
                want.sort_unstable();
                got.sort_unstable();
                if want.is_empty() || want != got {
                    return Err(Error::Plan(format!(
                        "expand to `{}` must use exactly edges {want:?}",
                        p.vertices[*vertex].alias
                    )));
                }
            }
            PatternPlan::Join { left, right } => {
                left.check(p)?;
                right.check(p)?;
                let (l, r) = (left.mask(), right.mask());
                if l & r == 0 {
                    return Err(Error::Plan("join sides share no vertex".into()));
                }
                let (a, b) = (l & !r, r & !l);
                for e in &p.edges {
                    let (s, d) = (1u64 << e.src, 1u64 << e.dst);
                    if (a & s != 0 && b & d != 0) || (a & d != 0 && b & s != 0) {
                        return Err(Error::Plan(format!(
                            "edge `{}` is bound by neither join side",
                            e.alias
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// One-line rendering using pattern aliases.
    pub fn display<'a>(&'a self, p: &'a Pattern) -> impl fmt::Display + 'a {
        PlanDisplay { plan: self, p }
    }
}

struct PlanDisplay<'a> {
    plan: &'a PatternPlan,
    p: &'a Pattern,
}

impl fmt::Display for PlanDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.p;
        match self.plan {
            PatternPlan::Scan { vertex } => write!(f, "Scan({})", p.vertices[*vertex].alias),
            PatternPlan::Expand { input, vertex, .. } => write!(
                f,
                "Expand({}, {})",
                input.display(p),
                p.vertices[*vertex].alias
            ),
            PatternPlan::Join { left, right } => {
                write!(f, "Join({}, {})", left.display(p), right.display(p))
            }
        }
    }
}

/// A pattern, how to bind it, and the relational operators applied to
/// its bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPlan {
    pub pattern: Pattern,
    pub matching: PatternPlan,
    pub tail: Vec<LogicalOp>,
}

impl PhysicalPlan {
    pub fn new(pattern: Pattern, matching: PatternPlan, tail: Vec<LogicalOp>) -> Result<Self> {
        matching.validate(&pattern)?;
        if let Some(op) = tail.iter().find(|op| {
            !matches!(
                op,
                LogicalOp::Select { .. }
                    | LogicalOp::Project { .. }
                    | LogicalOp::Group { .. }
                    | LogicalOp::Order { .. }
                    | LogicalOp::Limit { .. }
            )
        }) {
            return Err(Error::Plan(format!(
                "{} cannot follow the pattern stage",
                op.name()
            )));
        }
        Ok(PhysicalPlan {
            pattern,
            matching,
            tail,
        })
    }
}
