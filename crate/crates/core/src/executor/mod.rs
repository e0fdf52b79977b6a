//! Physical execution: pattern operators over the property graph followed
//! by relational operators over binding tables.

mod matching;
mod plan;
mod relational;

pub use matching::{
    brute_force_match, edge_distinct, edge_ok as edge_matches, vertex_ok as vertex_matches,
    Matcher, OpKind, OpStats, Row, UNBOUND,
};
pub use plan::{PatternPlan, PhysicalPlan};
pub use relational::{apply_tail, Table};

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::graph::PropertyGraph;
use crate::ir::{Params, Value};

/// Default cap on rows produced by a single operator.
pub const DEFAULT_MAX_ROWS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub max_rows: usize,
    /// Drop bindings that map two pattern edges to the same data edge.
    pub edge_distinct: bool,
    pub workers: usize,
    /// Wall-clock limit on the pattern stage.
    pub timeout: Option<Duration>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            max_rows: DEFAULT_MAX_ROWS,
            edge_distinct: false,
            workers: 1,
            timeout: None,
        }
    }
}

/// Final rows of a query plus the pattern-stage statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub stats: Vec<OpStats>,
}

impl QueryResult {
    /// Sum of rows produced by all pattern operators.
    pub fn intermediate_rows(&self) -> u64 {
        self.stats.iter().map(|s| s.rows_out).sum()
    }

    /// Vertices read by scans.
    pub fn scanned_rows(&self) -> u64 {
        self.stats
            .iter()
            .filter(|s| s.kind == OpKind::Scan)
            .map(|s| s.examined)
            .sum()
    }

    pub fn to_csv(&self, g: &PropertyGraph) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.render(g)))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_json(&self, g: &PropertyGraph) -> serde_json::Value {
        serde_json::Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    serde_json::Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(|v| v.to_json(g)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// Binds the pattern with the plan's operators, then applies the
/// relational tail.
pub fn execute(
    g: &PropertyGraph,
    plan: &PhysicalPlan,
    params: &Params,
    opts: ExecOptions,
) -> Result<QueryResult> {
    let mut m = Matcher::new(g, &plan.pattern, params, opts.max_rows)
        .with_workers(opts.workers)
        .with_deadline(opts.timeout.map(|t| Instant::now() + t));
    let mut rows = m.run(&plan.matching)?;
    if opts.edge_distinct {
        rows = edge_distinct(&plan.pattern, rows);
    }
    let table = Table::from_bindings(&plan.pattern, &rows)?;
    let table = apply_tail(g, table, &plan.tail, params)?;
    Ok(QueryResult {
        columns: table.columns,
        rows: table.rows,
        stats: m.stats,
    })
}

/// Pattern-stage statistics of a plan without materializing the tail.
pub fn count_intermediate(
    g: &PropertyGraph,
    plan: &PhysicalPlan,
    params: &Params,
    max_rows: usize,
) -> Result<Vec<OpStats>> {
    let mut m = Matcher::new(g, &plan.pattern, params, max_rows);
    m.run(&plan.matching)?;
    Ok(m.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, GraphSchema, PropValue, Properties};
    use crate::ir::{
        AggCall, AggFunc, CmpOp, EdgeConstraint, EdgeDir, Expr, LogicalOp, Pattern, ProjectItem,
        SortKey, VertexConstraint,
    };
    use std::collections::BTreeSet;

    fn graph() -> PropertyGraph {
        let s = GraphSchema::builder()
            .vertex("P", &[("age", crate::graph::DataType::Integer)])
            .edge("P", "k", "P", &[])
            .build()
            .unwrap();
        let mut b = GraphBuilder::new(s);
        let vs: Vec<_> = (0..4)
            .map(|i| {
                let mut props = Properties::new();
                props.insert("age".into(), PropValue::Int(20 + i));
                b.add_vertex_named(i, "P", props).unwrap()
            })
            .collect();
        for (x, y) in [(0, 1), (1, 2), (2, 0), (0, 1), (2, 3)] {
            b.add_edge_labeled(vs[x], vs[y], "k", Properties::new())
                .unwrap();
        }
        b.build()
    }

    fn triangle(g: &PropertyGraph) -> Pattern {
        let s = g.schema();
        let mut p = Pattern::new();
        for a in ["a", "b", "c"] {
            p.add_vertex(a, VertexConstraint::any_vertex(s));
        }
        for (i, (x, y)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            p.add_edge(
                &format!("e{i}"),
                x,
                y,
                EdgeConstraint::any_edge(s),
                EdgeDir::Out,
            );
        }
        p
    }

    fn sorted(mut rows: Vec<Row>) -> Vec<Row> {
        rows.sort();
        rows
    }

    #[test]
    fn expand_and_join_agree_with_brute_force() {
        let g = graph();
        let p = triangle(&g);
        let params = Params::new();
        let reference = sorted(brute_force_match(&g, &p, &params, 1000).unwrap());
        // Parallel edge 0->1 doubles each rotation of the triangle.
        assert_eq!(reference.len(), 6);
        let expand = PatternPlan::expand(
            PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]),
            2,
            vec![1, 2],
        );
        let join = PatternPlan::join(
            PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]),
            PatternPlan::expand(
                PatternPlan::expand(PatternPlan::scan(2), 0, vec![2]),
                1,
                vec![0, 1],
            ),
        );
        for plan in [expand, join] {
            plan.validate(&p).unwrap();
            let mut m = Matcher::new(&g, &p, &params, 1000);
            assert_eq!(sorted(m.run(&plan).unwrap()), reference);
        }
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let g = graph();
        let p = triangle(&g);
        let partial = PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]);
        assert!(partial.validate(&p).is_err());
        let missing_edge = PatternPlan::expand(partial, 2, vec![1]);
        assert!(missing_edge.validate(&p).is_err());
        let crossing = PatternPlan::join(
            PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]),
            PatternPlan::expand(PatternPlan::scan(1), 2, vec![1]),
        );
        assert!(crossing.validate(&p).is_err());
    }

    #[test]
    fn guard_stops_large_results() {
        let g = graph();
        let p = triangle(&g);
        let plan = PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]);
        let params = Params::new();
        let mut m = Matcher::new(&g, &p, &params, 2);
        assert!(matches!(m.run(&plan), Err(crate::Error::Guard(_))));
    }

    #[test]
    fn workers_keep_sequential_order() {
        let g = crate::fixtures::ldbc_graph(3, 0.5);
        let q = "MATCH (a:PERSON)-[:KNOWS]->(b:PERSON)-[:LIKES]->(m:POST) RETURN a";
        let plan = crate::parser::parse(q, g.schema()).unwrap();
        let p = crate::ir::plan_to_pattern(&plan, g.schema()).unwrap();
        let order = PatternPlan::expand(
            PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]),
            2,
            vec![1],
        );
        let params = Params::new();
        let seq = Matcher::new(&g, &p, &params, DEFAULT_MAX_ROWS)
            .run(&order)
            .unwrap();
        assert!(seq.len() > 1024);
        let par = Matcher::new(&g, &p, &params, DEFAULT_MAX_ROWS)
            .with_workers(4)
            .run(&order)
            .unwrap();
        assert_eq!(seq, par);
        let late = Matcher::new(&g, &p, &params, DEFAULT_MAX_ROWS)
            .with_deadline(Some(std::time::Instant::now()))
            .run(&order);
        assert!(matches!(late, Err(crate::Error::Guard(_))));
    }

    #[test]
    fn relational_tail() {
        let g = graph();
        let mut p = Pattern::new();
        let s = g.schema();
        p.add_vertex("a", VertexConstraint::any_vertex(s));
        p.add_vertex("b", VertexConstraint::any_vertex(s));
        p.add_edge("#e", 0, 1, EdgeConstraint::any_edge(s), EdgeDir::Out);
        let tail = vec![
            LogicalOp::Select {
                predicate: Expr::cmp(CmpOp::Ge, Expr::prop("a", "age"), Expr::lit(Value::Int(21))),
            },
            LogicalOp::Group {
                keys: vec![ProjectItem {
                    expr: Expr::var("a"),
                    alias: "a".into(),
                }],
                aggs: vec![AggCall {
                    func: AggFunc::Count,
                    arg: Some(Expr::var("b")),
                    alias: "n".into(),
                }],
            },
            LogicalOp::Order {
                keys: vec![SortKey {
                    expr: Expr::var("n"),
                    desc: true,
                }],
                limit: Some(1),
            },
        ];
        let plan = PhysicalPlan::new(
            p,
            PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]),
            tail,
        )
        .unwrap();
        let r = execute(&g, &plan, &Params::new(), ExecOptions::default()).unwrap();
        assert_eq!(r.columns, vec!["a", "n"]);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0][1], Value::Int(2));
        assert_eq!(r.to_csv(&g), "a,n\nP:2,2\n");
    }

    #[test]
    fn empty_count_yields_zero_and_trimmed_columns_error() {
        let g = graph();
        let s = g.schema();
        let mut p = Pattern::new();
        p.add_vertex("a", VertexConstraint::any_vertex(s));
        p.vertices[0].predicate = Some(Expr::cmp(
            CmpOp::Gt,
            Expr::prop("a", "age"),
            Expr::lit(Value::Int(99)),
        ));
        let count = vec![LogicalOp::Group {
            keys: vec![],
            aggs: vec![AggCall {
                func: AggFunc::Count,
                arg: None,
                alias: "c".into(),
            }],
        }];
        let plan = PhysicalPlan::new(p.clone(), PatternPlan::scan(0), count).unwrap();
        let r = execute(&g, &plan, &Params::new(), ExecOptions::default()).unwrap();
        assert_eq!(r.rows, vec![vec![Value::Int(0)]]);

        p.vertices[0].predicate = None;
        p.vertices[0].columns = Some(BTreeSet::new());
        let read = vec![LogicalOp::Project {
            items: vec![ProjectItem {
                expr: Expr::prop("a", "age"),
                alias: "age".into(),
            }],
        }];
        let plan = PhysicalPlan::new(p, PatternPlan::scan(0), read).unwrap();
        assert!(execute(&g, &plan, &Params::new(), ExecOptions::default()).is_err());
    }

    #[test]
    fn edge_distinct_filters_repeated_edges() {
        let g = graph();
        let s = g.schema();
        let mut p = Pattern::new();
        p.add_vertex("a", VertexConstraint::any_vertex(s));
        p.add_vertex("b", VertexConstraint::any_vertex(s));
        p.add_edge("x", 0, 1, EdgeConstraint::any_edge(s), EdgeDir::Out);
        p.add_edge("y", 0, 1, EdgeConstraint::any_edge(s), EdgeDir::Out);
        let rows = brute_force_match(&g, &p, &Params::new(), 100).unwrap();
        // 0->1 has two parallel edges: 4 bindings there, 1 for each other edge.
        assert_eq!(rows.len(), 4 + 3);
        assert_eq!(edge_distinct(&p, rows).len(), 2);
    }
}
