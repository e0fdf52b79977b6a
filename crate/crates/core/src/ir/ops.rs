use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::expr::{AggFunc, Expr};
use super::types::{EdgeConstraint, VertexConstraint};
use crate::error::{Error, Result};
use crate::graph::{Direction, GraphSchema};

/// Property names retained for an alias; `None` keeps every property.
pub type Columns = Option<BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq)]
pub enum ScanTarget {
    Vertex(VertexConstraint),
    Edge(EdgeConstraint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GetVOpt {
    Source,
    Target,
    /// The endpoint opposite to the tag vertex of an undirected expansion.
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectItem {
    pub expr: Expr,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggCall {
    pub func: AggFunc,
    /// `None` is `count(*)`.
    pub arg: Option<Expr>,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortKey {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogicalOp {
    Scan {
        alias: String,
        target: ScanTarget,
        predicate: Option<Expr>,
        columns: Columns,
    },
    ExpandEdge {
        tag: String,
        alias: String,
        types: EdgeConstraint,
        dir: Direction,
        predicate: Option<Expr>,
        columns: Columns,
    },
    GetVertex {
        tag: String,
        alias: String,
        types: VertexConstraint,
        opt: GetVOpt,
        predicate: Option<Expr>,
        columns: Columns,
    },
    /// Fused EXPAND_EDGE + GET_VERTEX; the edge is not addressable.
    Expand {
        tag: String,
        alias: String,
        edge_types: EdgeConstraint,
        dir: Direction,
        edge_predicate: Option<Expr>,
        types: VertexConstraint,
        predicate: Option<Expr>,
        columns: Columns,
    },
    ExpandPath {
        tag: String,
        alias: String,
        types: EdgeConstraint,
        dir: Direction,
        hops: u32,
    },
    MatchPattern {
        sentences: Vec<Vec<LogicalOp>>,
    },
    Select {
        predicate: Expr,
    },
    Project {
        items: Vec<ProjectItem>,
    },
    Group {
        keys: Vec<ProjectItem>,
        aggs: Vec<AggCall>,
    },
    Order {
        keys: Vec<SortKey>,
        /// Top-k hint from a downstream LIMIT.
        limit: Option<u64>,
    },
    Limit {
        n: u64,
    },
    Join {
        keys: Vec<String>,
    },
}

impl LogicalOp {
    pub fn name(&self) -> &'static str {
        match self {
            LogicalOp::Scan { .. } => "SCAN",
            LogicalOp::ExpandEdge { .. } => "EXPAND_EDGE",
            LogicalOp::GetVertex { .. } => "GET_VERTEX",
            LogicalOp::Expand { .. } => "EXPAND",
            LogicalOp::ExpandPath { .. } => "EXPAND_PATH",
            LogicalOp::MatchPattern { .. } => "MATCH_PATTERN",
            LogicalOp::Select { .. } => "SELECT",
            LogicalOp::Project { .. } => "PROJECT",
            LogicalOp::Group { .. } => "GROUP",
            LogicalOp::Order { .. } => "ORDER",
            LogicalOp::Limit { .. } => "LIMIT",
            LogicalOp::Join { .. } => "JOIN",
        }
    }

    pub fn is_graph_op(&self) -> bool {
        matches!(
            self,
            LogicalOp::Scan { .. }
                | LogicalOp::ExpandEdge { .. }
                | LogicalOp::GetVertex { .. }
                | LogicalOp::Expand { .. }
                | LogicalOp::ExpandPath { .. }
        )
    }

    /// The alias a graph operator introduces.
    pub fn alias(&self) -> Option<&str> {
        match self {
            LogicalOp::Scan { alias, .. }
            | LogicalOp::ExpandEdge { alias, .. }
            | LogicalOp::GetVertex { alias, .. }
            | LogicalOp::Expand { alias, .. }
            | LogicalOp::ExpandPath { alias, .. } => Some(alias),
            _ => None,
        }
    }

    pub fn tag(&self) -> Option<&str> {
        match self {
            LogicalOp::ExpandEdge { tag, .. }
            | LogicalOp::GetVertex { tag, .. }
            | LogicalOp::Expand { tag, .. }
            | LogicalOp::ExpandPath { tag, .. } => Some(tag),
            _ => None,
        }
    }

    /// Mutable access to the predicate slot that filters the introduced alias.
    pub fn predicate_slot(&mut self) -> Option<&mut Option<Expr>> {
        match self {
            LogicalOp::Scan { predicate, .. }
            | LogicalOp::ExpandEdge { predicate, .. }
            | LogicalOp::GetVertex { predicate, .. }
            | LogicalOp::Expand { predicate, .. } => Some(predicate),
            _ => None,
        }
    }

    pub fn columns_slot(&mut self) -> Option<&mut Columns> {
        match self {
            LogicalOp::Scan { columns, .. }
            | LogicalOp::ExpandEdge { columns, .. }
            | LogicalOp::GetVertex { columns, .. }
            | LogicalOp::Expand { columns, .. } => Some(columns),
            _ => None,
        }
    }

    /// Every expression the operator evaluates.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            LogicalOp::Scan { predicate, .. }
            | LogicalOp::ExpandEdge { predicate, .. }
            | LogicalOp::GetVertex { predicate, .. } => predicate.iter().collect(),
            LogicalOp::Expand {
                edge_predicate,
                predicate,
                ..
            } => edge_predicate.iter().chain(predicate.iter()).collect(),
            LogicalOp::ExpandPath { .. } | LogicalOp::Limit { .. } | LogicalOp::Join { .. } => {
                vec![]
            }
            LogicalOp::MatchPattern { sentences } => sentences
                .iter()
                .flatten()
                .flat_map(|op| op.exprs())
                .collect(),
            LogicalOp::Select { predicate } => vec![predicate],
            LogicalOp::Project { items } => items.iter().map(|i| &i.expr).collect(),
            LogicalOp::Group { keys, aggs } => keys
                .iter()
                .map(|k| &k.expr)
                .chain(aggs.iter().filter_map(|a| a.arg.as_ref()))
                .collect(),
            LogicalOp::Order { keys, .. } => keys.iter().map(|k| &k.expr).collect(),
        }
    }

    fn expected_inputs(&self) -> usize {
        match self {
            LogicalOp::MatchPattern { .. } => 0,
            LogicalOp::Join { .. } => 2,
            _ => 1,
        }
    }

    fn describe(&self, schema: &GraphSchema) -> String {
        let mut s = String::new();
        let opt_pred = |s: &mut String, p: &Option<Expr>, key: &str| {
            if let Some(p) = p {
                let _ = write!(s, ", {key}={p}");
            }
        };
        let opt_cols = |s: &mut String, c: &Columns| {
            if let Some(c) = c {
                let _ = write!(
                    s,
                    ", columns=[{}]",
                    c.iter().cloned().collect::<Vec<_>>().join(", ")
                );
            }
        };
        match self {
            LogicalOp::Scan {
                alias,
                target,
                predicate,
                columns,
            } => {
                let (types, opt) = match target {
                    ScanTarget::Vertex(t) => (t.display(schema).to_string(), "V"),
                    ScanTarget::Edge(t) => (t.display(schema).to_string(), "E"),
                };
                let _ = write!(s, "SCAN(alias={alias}, types={types}, opt={opt}");
                opt_pred(&mut s, predicate, "predicate");
                opt_cols(&mut s, columns);
            }
            LogicalOp::ExpandEdge {
                tag,
                alias,
                types,
                dir,
                predicate,
                columns,
            } => {
                let _ = write!(
                    s,
                    "EXPAND_EDGE(tag={tag}, alias={alias}, types={}, dir={}",
                    types.display(schema),
                    dir_name(*dir)
                );
                opt_pred(&mut s, predicate, "predicate");
                opt_cols(&mut s, columns);
            }
            LogicalOp::GetVertex {
                tag,
                alias,
                types,
                opt,
                predicate,
                columns,
            } => {
                let opt = match opt {
                    GetVOpt::Source => "SOURCE",
                    GetVOpt::Target => "TARGET",
                    GetVOpt::Other => "OTHER",
                };
                let _ = write!(
                    s,
                    "GET_VERTEX(tag={tag}, alias={alias}, types={}, opt={opt}",
                    types.display(schema)
                );
                opt_pred(&mut s, predicate, "predicate");
                opt_cols(&mut s, columns);
            }
            LogicalOp::Expand {
                tag,
                alias,
                edge_types,
                dir,
                edge_predicate,
                types,
                predicate,
                columns,
            } => {
                let _ = write!(
                    s,
                    "EXPAND(tag={tag}, alias={alias}, edge_types={}, dir={}, types={}",
                    edge_types.display(schema),
                    dir_name(*dir),
                    types.display(schema)
                );
                opt_pred(&mut s, edge_predicate, "edge_predicate");
                opt_pred(&mut s, predicate, "predicate");
                opt_cols(&mut s, columns);
            }
            LogicalOp::ExpandPath {
                tag,
                alias,
                types,
                dir,
                hops,
            } => {
                let _ = write!(
                    s,
                    "EXPAND_PATH(tag={tag}, alias={alias}, types={}, dir={}, hops={hops}",
                    types.display(schema),
                    dir_name(*dir)
                );
            }
            LogicalOp::MatchPattern { .. } => s.push_str("MATCH_PATTERN"),
            LogicalOp::Select { predicate } => {
                let _ = write!(s, "SELECT(predicate={predicate}");
            }
            LogicalOp::Project { items } => {
                let _ = write!(s, "PROJECT(items=[{}]", items_text(items));
            }
            LogicalOp::Group { keys, aggs } => {
                let aggs: Vec<String> = aggs
                    .iter()
                    .map(|a| {
                        let arg = a.arg.as_ref().map(|e| e.to_string()).unwrap_or("*".into());
                        format!("{}({arg}) AS {}", a.func.name(), a.alias)
                    })
                    .collect();
                let _ = write!(
                    s,
                    "GROUP(keys=[{}], aggs=[{}]",
                    items_text(keys),
                    aggs.join(", ")
                );
            }
            LogicalOp::Order { keys, limit } => {
                let keys: Vec<String> = keys
                    .iter()
                    .map(|k| format!("{} {}", k.expr, if k.desc { "DESC" } else { "ASC" }))
                    .collect();
                let _ = write!(s, "ORDER(keys=[{}]", keys.join(", "));
                if let Some(l) = limit {
                    let _ = write!(s, ", limit={l}");
                }
            }
            LogicalOp::Limit { n } => {
                let _ = write!(s, "LIMIT(n={n}");
            }
            LogicalOp::Join { keys } => {
                let _ = write!(s, "JOIN(keys=[{}]", keys.join(", "));
            }
        }
        if !matches!(self, LogicalOp::MatchPattern { .. }) {
            s.push(')');
        }
        s
    }
}

fn items_text(items: &[ProjectItem]) -> String {
    items
        .iter()
        .map(|i| format!("{} AS {}", i.expr, i.alias))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn dir_name(d: Direction) -> &'static str {
    match d {
        Direction::Out => "OUT",
        Direction::In => "IN",
        Direction::Both => "BOTH",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub op: LogicalOp,
    pub inputs: Vec<usize>,
}

/// DAG of logical operators. Nodes are stored in topological order (every
/// input index is smaller than the consumer's) and there is one sink.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalPlan {
    nodes: Vec<PlanNode>,
}

impl LogicalPlan {
    pub fn new(nodes: Vec<PlanNode>) -> Result<LogicalPlan> {
        if nodes.is_empty() {
            return Err(Error::Plan("empty plan".into()));
        }
        let mut consumed = vec![false; nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if n.op.is_graph_op() {
                return Err(Error::Plan(format!(
                    "{} must appear inside a MATCH_PATTERN",
                    n.op.name()
                )));
            }
            if n.inputs.len() != n.op.expected_inputs() {
                return Err(Error::Plan(format!(
                    "{} expects {} inputs, got {}",
                    n.op.name(),
                    n.op.expected_inputs(),
                    n.inputs.len()
                )));
            }
            for &j in &n.inputs {
                if j >= i {
                    return Err(Error::Plan(format!("node {i} consumes later node {j}")));
                }
                consumed[j] = true;
            }
        }
        let sinks = consumed.iter().filter(|c| !**c).count();
        if sinks != 1 {
            return Err(Error::Plan(format!("plan has {sinks} sinks")));
        }
        let plan = LogicalPlan { nodes };
        plan.validate()?;
        Ok(plan)
    }

    /// Builds a linear plan; the first operator must take no input.
    pub fn chain(ops: Vec<LogicalOp>) -> Result<LogicalPlan> {
        let nodes = ops
            .into_iter()
            .enumerate()
            .map(|(i, op)| PlanNode {
                op,
                inputs: if i == 0 { vec![] } else { vec![i - 1] },
            })
            .collect();
        LogicalPlan::new(nodes)
    }

    pub fn nodes(&self) -> &[PlanNode] {
        &self.nodes
    }

    pub fn sink(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn consumers(&self, i: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&j| self.nodes[j].inputs.contains(&i))
            .collect()
    }

    /// The operators in order when the plan is a single chain.
    pub fn as_chain(&self) -> Option<Vec<&LogicalOp>> {
        for (i, n) in self.nodes.iter().enumerate() {
            let expected: Vec<usize> = if i == 0 { vec![] } else { vec![i - 1] };
            if n.inputs != expected {
                return None;
            }
        }
        Some(self.nodes.iter().map(|n| &n.op).collect())
    }

    pub fn into_chain(self) -> Option<Vec<LogicalOp>> {
        self.as_chain()?;
        Some(self.nodes.into_iter().map(|n| n.op).collect())
    }

    /// The sentences of the first MATCH_PATTERN.
    pub fn match_sentences(&self) -> Option<&Vec<Vec<LogicalOp>>> {
        self.nodes.iter().find_map(|n| match &n.op {
            LogicalOp::MatchPattern { sentences } => Some(sentences),
            _ => None,
        })
    }

    /// Aliases visible at the output of node `i`.
    pub fn output_aliases(&self, i: usize) -> Vec<String> {
        let node = &self.nodes[i];
        match &node.op {
            LogicalOp::MatchPattern { sentences } => {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                for op in sentences.iter().flatten() {
                    let alias = op.alias().unwrap_or_default().to_string();
                    if seen.insert(alias.clone()) {
                        out.push(alias);
                    }
                }
                out
            }
            LogicalOp::Project { items } => items.iter().map(|i| i.alias.clone()).collect(),
            LogicalOp::Group { keys, aggs } => keys
                .iter()
                .map(|k| k.alias.clone())
                .chain(aggs.iter().map(|a| a.alias.clone()))
                .collect(),
            LogicalOp::Join { .. } => {
                let mut out = self.output_aliases(node.inputs[0]);
                for a in self.output_aliases(node.inputs[1]) {
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
                out
            }
            _ => self.output_aliases(node.inputs[0]),
        }
    }

    /// Checks that every tag and expression alias resolves upstream.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if let LogicalOp::MatchPattern { sentences } = &n.op {
                validate_tags(sentences)?;
                continue;
            }
            let mut scope: BTreeSet<String> = BTreeSet::new();
            for &j in &n.inputs {
                scope.extend(self.output_aliases(j));
            }
            if let LogicalOp::Join { keys } = &n.op {
                for k in keys {
                    for &j in &n.inputs {
                        if !self.output_aliases(j).contains(k) {
                            return Err(Error::UnknownAlias(k.clone()));
                        }
                    }
                }
            }
            for e in n.op.exprs() {
                for a in e.aliases() {
                    if !scope.contains(&a) {
                        return Err(Error::UnknownAlias(a));
                    }
                }
            }
            let _ = i;
        }
        Ok(())
    }

    /// Deterministic indented text, one operator per line.
    pub fn dump(&self, schema: &GraphSchema) -> String {
        let linear = self.as_chain().is_some();
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if !linear {
                let inputs: Vec<String> = n.inputs.iter().map(|j| j.to_string()).collect();
                let _ = write!(out, "[{i}] <- [{}] ", inputs.join(", "));
            }
            out.push_str(&n.op.describe(schema));
            out.push('\n');
            if let LogicalOp::MatchPattern { sentences } = &n.op {
                out.push_str("  MATCH_START\n");
                for op in sentences.iter().flatten() {
                    out.push_str("  ");
                    out.push_str(&op.describe(schema));
                    out.push('\n');
                }
                out.push_str("  MATCH_END\n");
            }
        }
        out
    }
}

/// Resolves the tag of every graph operator against aliases introduced
/// earlier in the pattern. An empty tag means the previous operator.
pub(crate) fn validate_tags(sentences: &[Vec<LogicalOp>]) -> Result<()> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for sentence in sentences {
        let mut prev: Option<&str> = None;
        for op in sentence {
            if !op.is_graph_op() {
                return Err(Error::Plan(format!(
                    "{} cannot appear inside a MATCH_PATTERN",
                    op.name()
                )));
            }
            if let Some(tag) = op.tag() {
                let resolved = if tag.is_empty() { prev } else { Some(tag) };
                match resolved {
                    Some(t) if seen.contains(t) => {}
                    Some(t) => return Err(Error::UnknownAlias(t.to_string())),
                    None => return Err(Error::Plan("empty tag at sentence start".into())),
                }
            }
            let alias = op.alias().unwrap();
            seen.insert(alias);
            prev = Some(alias);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::value::Value;
    use crate::ir::CmpOp;

    fn schema() -> GraphSchema {
        GraphSchema::builder()
            .vertex("Person", &[])
            .vertex("Place", &[])
            .edge("Person", "LocatedIn", "Place", &[])
            .build()
            .unwrap()
    }

    fn scan(alias: &str, s: &GraphSchema) -> LogicalOp {
        LogicalOp::Scan {
            alias: alias.into(),
            target: ScanTarget::Vertex(VertexConstraint::any_vertex(s)),
            predicate: None,
            columns: None,
        }
    }

    #[test]
    fn chain_dump_is_stable() {
        let s = schema();
        let plan = LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![vec![
                    scan("a", &s),
                    LogicalOp::ExpandEdge {
                        tag: "a".into(),
                        alias: "e".into(),
                        types: EdgeConstraint::any_edge(&s),
                        dir: Direction::Out,
                        predicate: None,
                        columns: None,
                    },
                    LogicalOp::GetVertex {
                        tag: "".into(),
                        alias: "b".into(),
                        types: VertexConstraint::basic(s.vertex_type_id("Place").unwrap()),
                        opt: GetVOpt::Target,
                        predicate: None,
                        columns: None,
                    },
                ]],
            },
            LogicalOp::Select {
                predicate: Expr::cmp(
                    CmpOp::Eq,
                    Expr::prop("b", "name"),
                    Expr::lit(Value::Str("China".into())),
                ),
            },
            LogicalOp::Limit { n: 3 },
        ])
        .unwrap();
        let expected = "MATCH_PATTERN\n  MATCH_START\n  SCAN(alias=a, types=ALL, opt=V)\n  \
            EXPAND_EDGE(tag=a, alias=e, types=Person-LocatedIn->Place, dir=OUT)\n  \
            GET_VERTEX(tag=, alias=b, types=Place, opt=TARGET)\n  MATCH_END\n\
            SELECT(predicate=b.name = \"China\")\nLIMIT(n=3)\n";
        assert_eq!(plan.dump(&s), expected);
        assert_eq!(plan.output_aliases(2), vec!["a", "e", "b"]);
    }

    #[test]
    fn unresolved_references_rejected() {
        let s = schema();
        let bad_tag = LogicalPlan::chain(vec![LogicalOp::MatchPattern {
            sentences: vec![vec![
                scan("a", &s),
                LogicalOp::ExpandEdge {
                    tag: "zz".into(),
                    alias: "e".into(),
                    types: EdgeConstraint::any_edge(&s),
                    dir: Direction::Out,
                    predicate: None,
                    columns: None,
                },
            ]],
        }]);
        assert!(matches!(bad_tag, Err(Error::UnknownAlias(_))));
        let bad_ref = LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![vec![scan("a", &s)]],
            },
            LogicalOp::Select {
                predicate: Expr::prop("q", "x"),
            },
        ]);
        assert!(matches!(bad_ref, Err(Error::UnknownAlias(_))));
    }

    #[test]
    fn structure_checks() {
        let s = schema();
        assert!(LogicalPlan::chain(vec![scan("a", &s)]).is_err());
        let two_sinks = LogicalPlan::new(vec![
            PlanNode {
                op: LogicalOp::MatchPattern {
                    sentences: vec![vec![scan("a", &s)]],
                },
                inputs: vec![],
            },
            PlanNode {
                op: LogicalOp::MatchPattern {
                    sentences: vec![vec![scan("b", &s)]],
                },
                inputs: vec![],
            },
        ]);
        assert!(two_sinks.is_err());
        let joined = LogicalPlan::new(vec![
            PlanNode {
                op: LogicalOp::MatchPattern {
                    sentences: vec![vec![scan("a", &s)]],
                },
                inputs: vec![],
            },
            PlanNode {
                op: LogicalOp::MatchPattern {
                    sentences: vec![vec![scan("a", &s)]],
                },
                inputs: vec![],
            },
            PlanNode {
                op: LogicalOp::Join {
                    keys: vec!["a".into()],
                },
                inputs: vec![0, 1],
            },
        ])
        .unwrap();
        assert!(joined.as_chain().is_none());
        assert!(joined.dump(&s).contains("[2] <- [0, 1] JOIN(keys=[a])"));
    }
}
