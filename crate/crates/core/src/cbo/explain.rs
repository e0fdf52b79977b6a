use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use super::GraphOptimizer;
use crate::executor::PatternPlan;
use crate::graph::GraphSchema;
use crate::ir::{LogicalOp, Pattern};
use crate::scalar::Scalar;

/// One operator of an explained plan. `est_cost` is the estimated cost of
/// the subplan ending at this operator; relational operators carry no
/// estimates.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExplainOp {
    pub kind: String,
    pub params: Map<String, Json>,
    pub est_freq: Option<f64>,
    pub est_cost: Option<f64>,
}

fn aliases(p: &Pattern, mask: u64) -> Vec<String> {
    (0..p.vertex_count())
        .filter(|&v| mask & (1 << v) != 0)
        .map(|v| p.vertices[v].alias.clone())
        .collect()
}

fn edge_desc(p: &Pattern, schema: &GraphSchema, e: usize) -> String {
    let pe = &p.edges[e];
    let arrow = match pe.dir {
        crate::ir::EdgeDir::Out => "->",
        crate::ir::EdgeDir::Both => "-",
    };
    format!(
        "{} ({}{arrow}{}): {}",
        pe.alias,
        p.vertices[pe.src].alias,
        p.vertices[pe.dst].alias,
        pe.types.display(schema)
    )
}

fn walk<S: Scalar>(
    opt: &mut GraphOptimizer<'_, S>,
    schema: &GraphSchema,
    plan: &PatternPlan,
    out: &mut Vec<ExplainOp>,
) {
    let p = opt.pattern().clone();
    let mut params = Map::new();
    let kind = match plan {
        PatternPlan::Scan { vertex } => {
            let v = &p.vertices[*vertex];
            params.insert("alias".into(), json!(v.alias));
            params.insert("types".into(), json!(v.types.display(schema).to_string()));
            if let Some(pred) = &v.predicate {
                params.insert("predicate".into(), json!(pred.to_string()));
            }
            "SCAN"
        }
        PatternPlan::Expand {
            input,
            vertex,
            edges,
        } => {
            walk(opt, schema, input, out);
            let v = &p.vertices[*vertex];
            params.insert("alias".into(), json!(v.alias));
            params.insert("types".into(), json!(v.types.display(schema).to_string()));
            params.insert(
                "edges".into(),
                json!(edges
                    .iter()
                    .map(|&e| edge_desc(&p, schema, e))
                    .collect::<Vec<_>>()),
            );
            if let Some(pred) = &v.predicate {
                params.insert("predicate".into(), json!(pred.to_string()));
            }
            if edges.len() == 1 {
                "EXPAND"
            } else {
                "EXPAND_INTERSECT"
            }
        }
        PatternPlan::Join { left, right } => {
            walk(opt, schema, left, out);
            walk(opt, schema, right, out);
            let shared = left.mask() & right.mask();
            let keys = aliases(&p, shared);
            params.insert("keys".into(), json!(format!("({})", keys.join(", "))));
            params.insert("left".into(), json!(aliases(&p, left.mask())));
            params.insert("right".into(), json!(aliases(&p, right.mask())));
            "JOIN"
        }
    };
    let mask = plan.mask();
    let est_freq = opt.freq(mask).to_f64_lossy();
    let est_cost = opt.plan_cost(plan).to_f64_lossy();
    out.push(ExplainOp {
        kind: kind.into(),
        params,
        est_freq: Some(est_freq),
        est_cost: Some(est_cost),
    });
}

fn relational(op: &LogicalOp) -> ExplainOp {
    let mut params = Map::new();
    match op {
        LogicalOp::Select { predicate } => {
            params.insert("predicate".into(), json!(predicate.to_string()));
        }
        LogicalOp::Project { items } => {
            let cols: Vec<String> = items
                .iter()
                .map(|i| format!("{} AS {}", i.expr, i.alias))
                .collect();
            params.insert("items".into(), json!(cols));
        }
        LogicalOp::Group { keys, aggs } => {
            let k: Vec<String> = keys
                .iter()
                .map(|i| format!("{} AS {}", i.expr, i.alias))
                .collect();
            let a: Vec<String> = aggs
                .iter()
                .map(|a| {
                    let arg = a.arg.as_ref().map_or("*".to_string(), |e| e.to_string());
                    format!("{}({arg}) AS {}", a.func.name(), a.alias)
                })
                .collect();
            params.insert("keys".into(), json!(k));
            params.insert("aggs".into(), json!(a));
        }
        LogicalOp::Order { keys, limit } => {
            let k: Vec<String> = keys
                .iter()
                .map(|k| format!("{}{}", k.expr, if k.desc { " DESC" } else { "" }))
                .collect();
            params.insert("keys".into(), json!(k));
            if let Some(n) = limit {
                params.insert("limit".into(), json!(n));
            }
        }
        LogicalOp::Limit { n } => {
            params.insert("n".into(), json!(n));
        }
        _ => {}
    }
    ExplainOp {
        kind: op.name().into(),
        params,
        est_freq: None,
        est_cost: None,
    }
}

/// Operators in execution order with estimates, plus the total cost.
pub fn explain_json<S: Scalar>(
    opt: &mut GraphOptimizer<'_, S>,
    schema: &GraphSchema,
    plan: &PatternPlan,
    tail: &[LogicalOp],
) -> Json {
    let mut ops = Vec::new();
    walk(opt, schema, plan, &mut ops);
    let total = opt.plan_cost(plan).to_f64_lossy();
    ops.extend(tail.iter().map(relational));
    json!({
        "ops": ops,
        "total_cost": total,
    })
}
