//! Heuristic plan rewrites: filter pushdown into the pattern, fusion of
//! edge expansion with vertex retrieval, and field trimming.

use std::collections::BTreeSet;

use crate::graph::Direction;
use crate::graph::GraphSchema;
use crate::ir::{
    is_hidden, Expr, GetVOpt, LogicalOp, LogicalPlan, PlanNode, ProjectItem, ScanTarget, Usage,
};

/// A local plan rewrite with an applicability test.
pub trait RewriteRule {
    fn name(&self) -> &'static str;

    /// Whether [`RewriteRule::rewrite`] would change the plan.
    fn applies(&self, plan: &LogicalPlan) -> bool {
        self.rewrite(plan).is_some()
    }

    /// The rewritten plan, or `None` when the rule does not apply.
    fn rewrite(&self, plan: &LogicalPlan) -> Option<LogicalPlan>;
}

/// Moves single-alias conjuncts of a SELECT that directly consumes a
/// MATCH_PATTERN into the predicate of the operator binding that alias.
pub struct FilterIntoMatch;

/// Replaces EXPAND_EDGE + GET_VERTEX pairs whose edge alias is never
/// referenced elsewhere with a single EXPAND.
pub struct ExpandGetVFusion;

/// Drops dead aliases after the MATCH_PATTERN and restricts the properties
/// each graph operator carries to those read downstream.
pub struct FieldTrim;

/// The default rules in application order.
pub fn default_rules() -> Vec<Box<dyn RewriteRule>> {
    vec![
        Box::new(FilterIntoMatch),
        Box::new(ExpandGetVFusion),
        Box::new(FieldTrim),
    ]
}

/// Applies each rule to fixpoint in order, repeating the whole sequence
/// until nothing changes.
pub fn apply_rules(plan: &LogicalPlan, rules: &[Box<dyn RewriteRule>]) -> LogicalPlan {
    apply_rules_traced(plan, rules)
        .into_iter()
        .last()
        .map(|(_, p)| p)
        .unwrap_or_else(|| plan.clone())
}

/// Like [`apply_rules`] but returns the plan after every pass that changed
/// it, labelled with the rule name.
pub fn apply_rules_traced(
    plan: &LogicalPlan,
    rules: &[Box<dyn RewriteRule>],
) -> Vec<(&'static str, LogicalPlan)> {
    let mut trace = Vec::new();
    let mut current = plan.clone();
    loop {
        let mut changed = false;
        for rule in rules {
            while let Some(next) = rule.rewrite(&current) {
                if next == current {
                    break;
                }
                current = next;
                changed = true;
                trace.push((rule.name(), current.clone()));
            }
        }
        if !changed {
            return trace;
        }
    }
}

/// Text trace for `--explain-rbo`: the input plan, then one section per
/// rule pass.
pub fn explain_rbo(
    plan: &LogicalPlan,
    rules: &[Box<dyn RewriteRule>],
    schema: &GraphSchema,
) -> String {
    let mut out = format!("== input ==\n{}", plan.dump(schema));
    for (name, p) in apply_rules_traced(plan, rules) {
        out.push_str(&format!("== after {name} ==\n{}", p.dump(schema)));
    }
    out
}

fn rebuild(plan: &LogicalPlan, nodes: Vec<PlanNode>) -> Option<LogicalPlan> {
    let next = LogicalPlan::new(nodes).ok()?;
    (next != *plan).then_some(next)
}

/// Removes node `i` (which has exactly one input) and reconnects its
/// consumers to that input.
fn splice_out(nodes: Vec<PlanNode>, i: usize) -> Vec<PlanNode> {
    let input = nodes[i].inputs[0];
    nodes
        .into_iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, mut n)| {
            for x in &mut n.inputs {
                if *x == i {
                    *x = input;
                } else if *x > i {
                    *x -= 1;
                }
            }
            n
        })
        .collect()
}

/// Inserts `op` right after node `i`, taking over its consumers.
fn splice_in(nodes: Vec<PlanNode>, i: usize, op: LogicalOp) -> Vec<PlanNode> {
    let mut out = Vec::with_capacity(nodes.len() + 1);
    for (j, mut n) in nodes.into_iter().enumerate() {
        for x in &mut n.inputs {
            if *x > i {
                *x += 1;
            } else if *x == i {
                *x = i + 1;
            }
        }
        out.push(n);
        if j == i {
            out.push(PlanNode {
                op: op.clone(),
                inputs: vec![i],
            });
        }
    }
    out
}

enum Binding {
    Vertex,
    Edge,
    Other,
}

fn binding_kind(sentences: &[Vec<LogicalOp>], alias: &str) -> Option<Binding> {
    sentences.iter().flatten().find_map(|op| {
        if op.alias() != Some(alias) {
            return None;
        }
        Some(match op {
            LogicalOp::Scan {
                target: ScanTarget::Vertex(_),
                ..
            }
            | LogicalOp::GetVertex { .. }
            | LogicalOp::Expand { .. } => Binding::Vertex,
            LogicalOp::Scan {
                target: ScanTarget::Edge(_),
                ..
            }
            | LogicalOp::ExpandEdge { .. } => Binding::Edge,
            _ => Binding::Other,
        })
    })
}

impl RewriteRule for FilterIntoMatch {
    fn name(&self) -> &'static str {
        "FilterIntoMatch"
    }

    fn rewrite(&self, plan: &LogicalPlan) -> Option<LogicalPlan> {
        let nodes = plan.nodes();
        for (i, node) in nodes.iter().enumerate() {
            let LogicalOp::Select { predicate } = &node.op else {
                continue;
            };
            let m = node.inputs[0];
            let LogicalOp::MatchPattern { sentences } = &nodes[m].op else {
                continue;
            };
            if plan.consumers(m).len() != 1 {
                continue;
            }
            let mut sentences = sentences.clone();
            let mut kept = Vec::new();
            let mut moved = false;
            for c in predicate.conjuncts() {
                let aliases = c.aliases();
                let target = match aliases.iter().next() {
                    Some(a) if aliases.len() == 1 && !c.contains_agg() => a.clone(),
                    _ => {
                        kept.push(c);
                        continue;
                    }
                };
                if !matches!(
                    binding_kind(&sentences, &target),
                    Some(Binding::Vertex | Binding::Edge)
                ) {
                    kept.push(c);
                    continue;
                }
                let op = sentences
                    .iter_mut()
                    .flatten()
                    .find(|op| op.alias() == Some(target.as_str()))
                    .expect("alias is bound");
                let slot = op.predicate_slot().expect("vertex and edge ops filter");
                *slot = Some(match slot.take() {
                    Some(old) => Expr::and(old, c),
                    None => c,
                });
                moved = true;
            }
            if !moved {
                continue;
            }
            let mut out = nodes.to_vec();
            out[m].op = LogicalOp::MatchPattern { sentences };
            return match Expr::and_all(kept) {
                Some(rest) => {
                    out[i].op = LogicalOp::Select { predicate: rest };
                    rebuild(plan, out)
                }
                None => rebuild(plan, splice_out(out, i)),
            };
        }
        None
    }
}

/// Whether `alias` is used anywhere besides the EXPAND_EDGE at `at` and
/// the GET_VERTEX right after it, including as a column of the plan output.
fn referenced_elsewhere(plan: &LogicalPlan, alias: &str, at: (usize, usize, usize)) -> bool {
    if plan.output_aliases(plan.sink()).iter().any(|a| a == alias) {
        return true;
    }
    let mentions = |op: &LogicalOp| op.exprs().iter().any(|e| e.aliases().contains(alias));
    for (ni, n) in plan.nodes().iter().enumerate() {
        match &n.op {
            LogicalOp::MatchPattern { sentences } => {
                for (si, s) in sentences.iter().enumerate() {
                    for (oi, op) in s.iter().enumerate() {
                        if (ni, si) == (at.0, at.1) && (oi == at.2 || oi == at.2 + 1) {
                            continue;
                        }
                        if op.tag() == Some(alias) || op.alias() == Some(alias) || mentions(op) {
                            return true;
                        }
                    }
                }
            }
            LogicalOp::Join { keys } if keys.iter().any(|k| k == alias) => return true,
            op if mentions(op) => return true,
            _ => {}
        }
    }
    false
}

impl RewriteRule for ExpandGetVFusion {
    fn name(&self) -> &'static str {
        "ExpandGetVFusion"
    }

    fn rewrite(&self, plan: &LogicalPlan) -> Option<LogicalPlan> {
        for (ni, node) in plan.nodes().iter().enumerate() {
            let LogicalOp::MatchPattern { sentences } = &node.op else {
                continue;
            };
            for (si, s) in sentences.iter().enumerate() {
                for oi in 1..s.len() {
                    let (
                        LogicalOp::ExpandEdge {
                            tag: from,
                            alias: edge,
                            types: edge_types,
                            dir,
                            predicate: edge_predicate,
                            ..
                        },
                        LogicalOp::GetVertex {
                            tag,
                            alias,
                            types,
                            opt,
                            predicate,
                            columns,
                        },
                    ) = (&s[oi - 1], &s[oi])
                    else {
                        continue;
                    };
                    if !(tag == edge || tag.is_empty()) {
                        continue;
                    }
                    let expected = match dir {
                        Direction::Out => GetVOpt::Target,
                        Direction::In => GetVOpt::Source,
                        Direction::Both => GetVOpt::Other,
                    };
                    if *opt != expected || referenced_elsewhere(plan, edge, (ni, si, oi - 1)) {
                        continue;
                    }
                    let fused = LogicalOp::Expand {
                        tag: from.clone(),
                        alias: alias.clone(),
                        edge_types: edge_types.clone(),
                        dir: *dir,
                        edge_predicate: edge_predicate.clone(),
                        types: types.clone(),
                        predicate: predicate.clone(),
                        columns: columns.clone(),
                    };
                    let mut sentences = sentences.clone();
                    sentences[si].splice(oi - 1..=oi, [fused]);
                    let mut nodes = plan.nodes().to_vec();
                    nodes[ni].op = LogicalOp::MatchPattern { sentences };
                    return rebuild(plan, nodes);
                }
            }
        }
        None
    }
}

/// Names needed from the output of each node of a chain, computed
/// backwards from the sink, which needs every column it produces.
fn liveness(plan: &LogicalPlan) -> Option<Vec<Usage>> {
    let chain = plan.as_chain()?;
    let mut live = vec![Usage::new(); chain.len()];
    let mut needed = Usage::new();
    for a in plan.output_aliases(plan.sink()) {
        needed.entry(a).or_default().whole = true;
    }
    for i in (0..chain.len()).rev() {
        live[i] = needed.clone();
        let mut upstream = Usage::new();
        let pass_items = |items: &[ProjectItem], needed: &Usage, up: &mut Usage| {
            for it in items {
                match &it.expr {
                    Expr::Var(a) => {
                        let u = up.entry(a.clone()).or_default();
                        if let Some(n) = needed.get(&it.alias) {
                            u.whole |= n.whole;
                            u.props.extend(n.props.iter().cloned());
                        }
                    }
                    e => e.collect_usage(up),
                }
            }
        };
        match chain[i] {
            LogicalOp::Limit { .. } => upstream = needed.clone(),
            LogicalOp::Select { predicate } => {
                upstream = needed.clone();
                predicate.collect_usage(&mut upstream);
            }
            LogicalOp::Order { keys, .. } => {
                upstream = needed.clone();
                for k in keys {
                    k.expr.collect_usage(&mut upstream);
                }
            }
            LogicalOp::Project { items } => pass_items(items, &needed, &mut upstream),
            LogicalOp::Group { keys, aggs } => {
                pass_items(keys, &needed, &mut upstream);
                for a in aggs {
                    Expr::Agg(a.func, a.arg.clone().map(Box::new)).collect_usage(&mut upstream);
                }
            }
            LogicalOp::MatchPattern { .. } => {}
            _ => return None,
        }
        needed = upstream;
    }
    Some(live)
}

impl RewriteRule for FieldTrim {
    fn name(&self) -> &'static str {
        "FieldTrim"
    }

    fn rewrite(&self, plan: &LogicalPlan) -> Option<LogicalPlan> {
        let live = liveness(plan)?;
        let m = plan
            .nodes()
            .iter()
            .position(|n| matches!(n.op, LogicalOp::MatchPattern { .. }))?;
        if m + 1 == plan.nodes().len() {
            return None;
        }
        let LogicalOp::MatchPattern { sentences } = &plan.nodes()[m].op else {
            unreachable!()
        };
        let needed = &live[m];

        // Properties read by pattern predicates stay available as well.
        let mut own = Usage::new();
        for op in sentences.iter().flatten() {
            if let (Some(a), Some(Some(pred))) = (op.alias(), predicate_of(op)) {
                let mut u = Usage::new();
                pred.collect_usage(&mut u);
                if let Some(x) = u.get(a) {
                    own.entry(a.to_string())
                        .or_default()
                        .props
                        .extend(x.props.iter().cloned());
                }
            }
        }
        let mut sentences = sentences.clone();
        for op in sentences.iter_mut().flatten() {
            let Some(alias) = op.alias().map(str::to_string) else {
                continue;
            };
            let Some(slot) = op.columns_slot() else {
                continue;
            };
            let use_ = needed.get(&alias);
            *slot = if use_.is_some_and(|u| u.whole) {
                None
            } else {
                let mut props: BTreeSet<String> = use_.map(|u| u.props.clone()).unwrap_or_default();
                if let Some(o) = own.get(&alias) {
                    props.extend(o.props.iter().cloned());
                }
                Some(props)
            };
        }
        let mut nodes = plan.nodes().to_vec();
        nodes[m].op = LogicalOp::MatchPattern { sentences };

        let visible: Vec<String> = plan
            .output_aliases(m)
            .into_iter()
            .filter(|a| !is_hidden(a))
            .collect();
        let keep: Vec<String> = visible
            .iter()
            .filter(|a| needed.contains_key(*a))
            .cloned()
            .collect();
        let consumer_projects = matches!(plan.nodes()[m + 1].op, LogicalOp::Project { .. });
        if keep.len() < visible.len() && !consumer_projects {
            let items = keep
                .iter()
                .map(|a| ProjectItem {
                    expr: Expr::var(a),
                    alias: a.clone(),
                })
                .collect();
            nodes = splice_in(nodes, m, LogicalOp::Project { items });
        }
        rebuild(plan, nodes)
    }
}

fn predicate_of(op: &LogicalOp) -> Option<&Option<Expr>> {
    match op {
        LogicalOp::Scan { predicate, .. }
        | LogicalOp::ExpandEdge { predicate, .. }
        | LogicalOp::GetVertex { predicate, .. }
        | LogicalOp::Expand { predicate, .. } => Some(predicate),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{AggCall, AggFunc, CmpOp, EdgeConstraint, Value, VertexConstraint};

    fn schema() -> GraphSchema {
        GraphSchema::builder()
            .vertex("Person", &[])
            .vertex("Product", &[])
            .vertex("Place", &[])
            .edge("Person", "Knows", "Person", &[])
            .edge("Person", "Purchases", "Product", &[])
            .edge("Person", "LocatedIn", "Place", &[])
            .edge("Product", "ProducedIn", "Place", &[])
            .build()
            .unwrap()
    }

    fn hop(
        s: &GraphSchema,
        from: &str,
        e: &str,
        to: &str,
        types: VertexConstraint,
    ) -> Vec<LogicalOp> {
        vec![
            LogicalOp::ExpandEdge {
                tag: from.into(),
                alias: e.into(),
                types: EdgeConstraint::any_edge(s),
                dir: Direction::Out,
                predicate: None,
                columns: None,
            },
            LogicalOp::GetVertex {
                tag: e.into(),
                alias: to.into(),
                types,
                opt: GetVOpt::Target,
                predicate: None,
                columns: None,
            },
        ]
    }

    fn scan(s: &GraphSchema, a: &str) -> LogicalOp {
        LogicalOp::Scan {
            alias: a.into(),
            target: ScanTarget::Vertex(VertexConstraint::any_vertex(s)),
            predicate: None,
            columns: None,
        }
    }

    /// The triangle query with a filter on v3.name, grouped by v2.
    fn fig6(s: &GraphSchema) -> LogicalPlan {
        let all = VertexConstraint::any_vertex(s);
        let place = VertexConstraint::basic(s.vertex_type_id("Place").unwrap());
        let mut s1 = vec![scan(s, "v1")];
        s1.extend(hop(s, "v1", "#e0", "v2", all.clone()));
        let mut s2 = vec![scan(s, "v1")];
        s2.extend(hop(s, "v1", "#e1", "v3", place));
        let mut s3 = vec![scan(s, "v2")];
        s3.extend(hop(s, "v2", "#e2", "v3", all));
        LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![s1, s2, s3],
            },
            LogicalOp::Select {
                predicate: Expr::cmp(
                    CmpOp::Eq,
                    Expr::prop("v3", "name"),
                    Expr::lit(Value::Str("China".into())),
                ),
            },
            LogicalOp::Group {
                keys: vec![ProjectItem {
                    expr: Expr::var("v2"),
                    alias: "v2".into(),
                }],
                aggs: vec![AggCall {
                    func: AggFunc::Count,
                    arg: Some(Expr::var("v2")),
                    alias: "cnt".into(),
                }],
            },
        ])
        .unwrap()
    }

    #[test]
    fn figure_six_rewrite() {
        let s = schema();
        let out = apply_rules(&fig6(&s), &default_rules());
        let ops = out.as_chain().unwrap();
        assert_eq!(ops.len(), 3);
        let LogicalOp::MatchPattern { sentences } = ops[0] else {
            panic!()
        };
        // Filter landed on the first binding of v3; anonymous edges fused.
        let v3 = sentences[1].last().unwrap();
        assert!(matches!(
            v3,
            LogicalOp::Expand {
                predicate: Some(_),
                ..
            }
        ));
        assert!(sentences
            .iter()
            .flatten()
            .all(|o| !matches!(o, LogicalOp::ExpandEdge { .. })));
        let mut v3 = v3.clone();
        assert_eq!(
            v3.columns_slot().unwrap().clone(),
            Some(BTreeSet::from(["name".to_string()]))
        );
        assert_eq!(
            ops[1],
            &LogicalOp::Project {
                items: vec![ProjectItem {
                    expr: Expr::var("v2"),
                    alias: "v2".into()
                }]
            }
        );
        assert_eq!(apply_rules(&out, &default_rules()), out);
    }

    #[test]
    fn filters_with_two_aliases_stay() {
        let s = schema();
        let mut s1 = vec![scan(&s, "a")];
        s1.extend(hop(&s, "a", "e", "b", VertexConstraint::any_vertex(&s)));
        let plan = LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![s1],
            },
            LogicalOp::Select {
                predicate: Expr::cmp(CmpOp::Eq, Expr::prop("a", "id"), Expr::prop("b", "id")),
            },
        ])
        .unwrap();
        assert!(!FilterIntoMatch.applies(&plan));
        // `e` is visible in the output, so it blocks fusion.
        assert!(!ExpandGetVFusion.applies(&plan));
    }

    #[test]
    fn referenced_edge_blocks_fusion_but_own_predicate_does_not() {
        let s = schema();
        let mut s1 = vec![scan(&s, "a")];
        s1.extend(hop(&s, "a", "e", "b", VertexConstraint::any_vertex(&s)));
        let weight = Expr::cmp(CmpOp::Gt, Expr::prop("e", "w"), Expr::lit(Value::Int(1)));
        let plan = LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![s1],
            },
            LogicalOp::Select { predicate: weight },
            LogicalOp::Project {
                items: vec![ProjectItem {
                    expr: Expr::var("b"),
                    alias: "b".into(),
                }],
            },
        ])
        .unwrap();
        let out = apply_rules(&plan, &default_rules());
        let LogicalOp::MatchPattern { sentences } = &out.nodes()[0].op else {
            panic!()
        };
        assert!(matches!(
            sentences[0][1],
            LogicalOp::Expand {
                edge_predicate: Some(_),
                ..
            }
        ));

        let mut s1 = vec![scan(&s, "a")];
        s1.extend(hop(&s, "a", "e", "b", VertexConstraint::any_vertex(&s)));
        let keeps_edge = LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![s1],
            },
            LogicalOp::Project {
                items: vec![ProjectItem {
                    expr: Expr::prop("e", "w"),
                    alias: "w".into(),
                }],
            },
        ])
        .unwrap();
        assert!(!ExpandGetVFusion.applies(&keeps_edge));
    }

    #[test]
    fn returning_everything_trims_nothing() {
        let s = schema();
        let plan = LogicalPlan::chain(vec![
            LogicalOp::MatchPattern {
                sentences: vec![vec![scan(&s, "a")]],
            },
            LogicalOp::Project {
                items: vec![ProjectItem {
                    expr: Expr::var("a"),
                    alias: "a".into(),
                }],
            },
        ])
        .unwrap();
        assert!(apply_rules_traced(&plan, &default_rules()).is_empty());
        let text = explain_rbo(&plan, &default_rules(), &s);
        assert!(text.starts_with("== input ==\nMATCH_PATTERN"));
    }
}
