use std::sync::Arc;

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{GraphSchema, TypeCounts};
use crate::ir::{EdgeConstraint, EdgeDir, VertexConstraint};
use crate::typecheck::infer_and_validate;

fn fig1_schema() -> Arc<GraphSchema> {
    Arc::new(
        GraphSchema::builder()
            .vertex("Person", &[])
            .vertex("Product", &[])
            .vertex("Place", &[])
            .edge("Person", "Knows", "Person", &[])
            .edge("Person", "Purchases", "Product", &[])
            .edge("Person", "LocatedIn", "Place", &[])
            .edge("Product", "ProducedIn", "Place", &[])
            .build()
            .unwrap(),
    )
}

fn fig5_counts() -> TypeCounts {
    TypeCounts {
        vertices: vec![10, 20, 5],
        edges: vec![30, 40, 10, 20],
    }
}

fn triangle(s: &GraphSchema) -> Pattern {
    let mut p = Pattern::new();
    for a in ["v1", "v2", "v3"] {
        p.add_vertex(a, VertexConstraint::any_vertex(s));
    }
    p.add_edge("e1", 0, 1, EdgeConstraint::any_edge(s), EdgeDir::Out);
    p.add_edge("e2", 1, 2, EdgeConstraint::any_edge(s), EdgeDir::Out);
    p.add_edge("e3", 0, 2, EdgeConstraint::any_edge(s), EdgeDir::Out);
    infer_and_validate(&p, s).into_pattern().unwrap()
}

/// Every plan tree for `mask` with its cost, computed from scratch.
fn all_plans<S: Scalar>(gl: &GLogue<S>, p: &Pattern, mask: VMask) -> Vec<(PatternPlan, S)> {
    let f = |m: VMask| gl.get_freq(&Shape::induced(p, m));
    let n = mask.count_ones();
    if n == 1 {
        let v = mask.trailing_zeros() as usize;
        return vec![(PatternPlan::scan(v), f(mask))];
    }
    if n == 2 {
        return vec![(PatternPlan::scan(0), f(mask))];
    }
    let mut out = Vec::new();
    let members: Vec<usize> = (0..64).filter(|v| mask & (1 << v) != 0).collect();
    for &v in &members {
        let src = mask & !(1 << v);
        if !p.is_connected_mask(src) {
            continue;
        }
        let edges = p.edges_between(v, src);
        let shape = Shape::induced(p, mask);
        let within = p.edges_within(mask);
        let lv = members.iter().position(|&x| x == v).unwrap();
        let mut sig = S::zero();
        for (i, e) in edges.iter().enumerate() {
            let le = within.iter().position(|x| x == e).unwrap();
            sig = sig + gl.expand_ratio(&shape, le, lv, i > 0);
        }
        let ce = f(src) * sig;
        for (sub, c) in all_plans(gl, p, src) {
            out.push((
                PatternPlan::expand(sub, v, edges.clone()),
                c + f(mask) + ce.clone(),
            ));
        }
    }
    for l in 1..mask {
        for r in 1..mask {
            if l & !mask != 0 || r & !mask != 0 || l >= r || l | r != mask || l & r == 0 {
                continue;
            }
            if l == mask || r == mask || !p.is_connected_mask(l) || !p.is_connected_mask(r) {
                continue;
            }
            let (a, b) = (l & !r, r & !l);
            if p.edges.iter().any(|e| {
                let (s, d) = (1u64 << e.src, 1u64 << e.dst);
                (a & s != 0 && b & d != 0) || (a & d != 0 && b & s != 0)
            }) {
                continue;
            }
            let ce = f(l) + f(r);
            for (lp, lc) in all_plans(gl, p, l) {
                for (rp, rc) in all_plans(gl, p, r) {
                    out.push((
                        PatternPlan::join(lp.clone(), rp),
                        lc.clone() + rc + f(mask) + ce.clone(),
                    ));
                }
            }
        }
    }
    out
}

fn minimum<S: Scalar>(plans: &[(PatternPlan, S)]) -> S {
    plans
        .iter()
        .map(|(_, c)| c.clone())
        .reduce(|a, b| if b < a { b } else { a })
        .unwrap()
}

#[test]
fn operator_costs() {
    assert_eq!(cost_join(70.0, 30.0, 1.0), 100.0);
    assert_eq!(cost_join(0.0, 7.0, 1.0), 7.0);
    let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
    assert_eq!(
        cost_expand(r(70, 1), &[r(1, 1), r(1, 5)], r(1, 1)),
        r(84, 1)
    );
    assert_eq!(cost_expand(5.0, &[], 1.0), 0.0);
    assert_eq!(cost_expand(0.0, &[3.0], 1.0), 0.0);
}

#[test]
fn triangle_matches_exhaustive_minimum() {
    let s = fig1_schema();
    let gl: GLogue<BigRational> = GLogue::from_type_counts(s.clone(), fig5_counts()).unwrap();
    let p = triangle(&s);
    let best = minimum(&all_plans(&gl, &p, p.full_mask()));
    let mut opt = GraphOptimizer::new(&gl, &p);
    let r = opt.optimize().unwrap();
    assert_eq!(r.cost, best);
    assert!(r.greedy_cost >= r.cost);
    assert_eq!(opt.plan_cost(&r.plan), r.cost);
    r.plan.validate(&p).unwrap();
}

#[test]
fn pruning_does_not_change_cost() {
    let s = fig1_schema();
    let gl: GLogue<f64> = GLogue::from_type_counts(s.clone(), fig5_counts()).unwrap();
    let mut p = Pattern::new();
    for a in ["a", "b", "c", "d"] {
        p.add_vertex(a, VertexConstraint::any_vertex(&s));
    }
    for (i, (x, y)) in [(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)]
        .into_iter()
        .enumerate()
    {
        p.add_edge(
            &format!("e{i}"),
            x,
            y,
            EdgeConstraint::any_edge(&s),
            EdgeDir::Both,
        );
    }
    let p = infer_and_validate(&p, &s).into_pattern().unwrap();
    let a = GraphOptimizer::new(&gl, &p).optimize().unwrap();
    let b = GraphOptimizer::new(&gl, &p)
        .with_pruning(false)
        .optimize()
        .unwrap();
    assert_eq!(a.cost, b.cost);
    let best = minimum(&all_plans(&gl, &p, p.full_mask()));
    assert!((a.cost - best).abs() <= 1e-9 * best.max(1.0));
}

#[test]
fn single_vertex_and_single_edge() {
    let s = fig1_schema();
    let gl: GLogue<f64> = GLogue::from_type_counts(s.clone(), fig5_counts()).unwrap();
    let mut p = Pattern::new();
    p.add_vertex(
        "a",
        VertexConstraint::basic(s.vertex_type_id("Product").unwrap()),
    );
    let r = GraphOptimizer::new(&gl, &p).optimize().unwrap();
    assert_eq!(r.plan, PatternPlan::scan(0));
    assert_eq!(r.cost, 20.0);

    p.add_vertex(
        "b",
        VertexConstraint::basic(s.vertex_type_id("Place").unwrap()),
    );
    p.add_edge("e", 0, 1, EdgeConstraint::any_edge(&s), EdgeDir::Out);
    let p = infer_and_validate(&p, &s).into_pattern().unwrap();
    let r = GraphOptimizer::new(&gl, &p).optimize().unwrap();
    // Scan the rarer Place side, then expand.
    assert_eq!(
        r.plan,
        PatternPlan::expand(PatternPlan::scan(1), 0, vec![0])
    );
    assert_eq!(r.cost, 20.0);
}

#[test]
fn greedy_covers_a_four_clique() {
    let s = fig1_schema();
    let gl: GLogue<f64> = GLogue::from_type_counts(s.clone(), fig5_counts()).unwrap();
    let mut p = Pattern::new();
    let person = VertexConstraint::basic(s.vertex_type_id("Person").unwrap());
    for a in ["a", "b", "c", "d"] {
        p.add_vertex(a, person.clone());
    }
    let mut k = 0;
    for x in 0..4 {
        for y in (x + 1)..4 {
            p.add_edge(
                &format!("e{k}"),
                x,
                y,
                EdgeConstraint::any_edge(&s),
                EdgeDir::Out,
            );
            k += 1;
        }
    }
    let p = infer_and_validate(&p, &s).into_pattern().unwrap();
    let (plan, cost) = GraphOptimizer::new(&gl, &p).greedy_initial();
    plan.validate(&p).unwrap();
    fn edges(plan: &PatternPlan, out: &mut Vec<usize>) {
        match plan {
            PatternPlan::Scan { .. } => {}
            PatternPlan::Expand {
                input, edges: es, ..
            } => {
                out.extend(es);
                edges(input, out);
            }
            PatternPlan::Join { left, right } => {
                edges(left, out);
                edges(right, out);
            }
        }
    }
    let mut used = Vec::new();
    edges(&plan, &mut used);
    used.sort_unstable();
    assert_eq!(used, (0..6).collect::<Vec<_>>());
    let best = GraphOptimizer::new(&gl, &p).optimize().unwrap();
    assert!(best.cost <= cost);
}

#[test]
fn random_and_ordered_plans_are_valid() {
    let s = fig1_schema();
    let p = triangle(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        random_plan(&p, &mut rng).validate(&p).unwrap();
    }
    let plan = order_plan(&p, &[2, 0, 1]).unwrap();
    assert_eq!(
        plan,
        PatternPlan::expand(
            PatternPlan::expand(PatternPlan::scan(2), 0, vec![2]),
            1,
            vec![0, 1]
        )
    );
    assert!(order_plan(&p, &[0]).is_err());
}

#[test]
fn explain_lists_ops_in_execution_order() {
    let s = fig1_schema();
    let gl: GLogue<f64> = GLogue::from_type_counts(s.clone(), fig5_counts()).unwrap();
    let p = triangle(&s);
    let mut opt = GraphOptimizer::new(&gl, &p);
    let r = opt.optimize().unwrap();
    let tail = vec![LogicalOp::Limit { n: 5 }];
    let j = explain_json(&mut opt, &s, &r.plan, &tail);
    let ops = j["ops"].as_array().unwrap();
    assert_eq!(ops[0]["kind"], "SCAN");
    assert_eq!(ops.last().unwrap()["kind"], "LIMIT");
    assert_eq!(ops.len(), r.plan.op_count() + 1);
    assert!((j["total_cost"].as_f64().unwrap() - r.cost).abs() < 1e-9);
    let mut star = Pattern::new();
    for a in ["v1", "v2", "v3"] {
        star.add_vertex(a, VertexConstraint::any_vertex(&s));
    }
    star.add_edge("e1", 0, 1, EdgeConstraint::any_edge(&s), EdgeDir::Out);
    star.add_edge("e2", 0, 2, EdgeConstraint::any_edge(&s), EdgeDir::Out);
    let join = PatternPlan::join(
        PatternPlan::expand(PatternPlan::scan(0), 1, vec![0]),
        PatternPlan::expand(PatternPlan::scan(0), 2, vec![1]),
    );
    join.validate(&star).unwrap();
    let mut opt = GraphOptimizer::new(&gl, &star);
    let j = explain_json(&mut opt, &s, &join, &[]);
    let last = j["ops"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["kind"], "JOIN");
    assert_eq!(last["params"]["keys"], "(v1)");
}

#[test]
fn finalize_sets_top_k_hint() {
    let s = fig1_schema();
    let p = triangle(&s);
    let tail = vec![
        LogicalOp::Order {
            keys: vec![],
            limit: None,
        },
        LogicalOp::Limit { n: 3 },
    ];
    let plan = finalize_plan(p.clone(), order_plan(&p, &[0, 1, 2]).unwrap(), &tail).unwrap();
    assert_eq!(
        plan.tail[0],
        LogicalOp::Order {
            keys: vec![],
            limit: Some(3)
        }
    );
}

#[test]
fn plan_enumeration_is_valid_and_bounded() {
    let s = fig1_schema();
    let p = triangle(&s);
    let plans = plans::all_plans(&p, 1000);
    for plan in &plans {
        plan.validate(&p).unwrap();
    }
    let distinct: std::collections::BTreeSet<String> =
        plans.iter().map(|x| format!("{x:?}")).collect();
    assert_eq!(distinct.len(), plans.len());
    assert!(plans.len() >= 6);
    assert_eq!(plans::all_plans(&p, 2).len(), 2);
}
