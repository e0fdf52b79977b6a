use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphopt::executor::{brute_force_match, execute, ExecOptions, Matcher, DEFAULT_MAX_ROWS};
use graphopt::fixtures;
use graphopt::glogue::{canonical_order, Shape};
use graphopt::graph::{graph_to_csv, load_graph_from_str, GraphSchema, PropertyGraph};
use graphopt::ir::{OrdValue, Params, Value};
use graphopt::parser::parse;
use graphopt::pipeline::{Engine, EngineConfig};
use graphopt::rbo::{apply_rules, default_rules};
use graphopt::typecheck::{infer_and_validate, naive_unfold_validate};
use graphopt::{cbo, ExactGLogue, ExactOptimizer, GLogue, Optimizer};

fn fixture(seed: u64, n: usize, m: usize) -> (ChaCha8Rng, PropertyGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = fixtures::random_schema(&mut rng);
    let g = fixtures::random_graph(s, n, m, &mut rng);
    (rng, g)
}

fn sorted_shape(s: &Shape) -> (Vec<String>, Vec<String>) {
    let vs = s.vertices.iter().map(|v| format!("{v:?}")).collect();
    // An undirected edge has no meaningful endpoint order.
    let mut es: Vec<String> = s
        .edges
        .iter()
        .map(|e| {
            let (a, b) = if e.both {
                (e.src.min(e.dst), e.src.max(e.dst))
            } else {
                (e.src, e.dst)
            };
            format!("{a} {b} {:?} {}", e.types, e.both)
        })
        .collect();
    es.sort();
    (vs, es)
}

fn multiset(rows: &[Vec<Value>]) -> Vec<Vec<OrdValue>> {
    let mut out: Vec<Vec<OrdValue>> = rows
        .iter()
        .map(|r| r.iter().cloned().map(OrdValue).collect())
        .collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inference_is_tight_and_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = fixtures::random_schema(&mut rng);
        let p = fixtures::random_pattern(&s, 4, &mut rng);
        let oracle = naive_unfold_validate(&p, &s).unwrap();
        match infer_and_validate(&p, &s).into_pattern() {
            None => prop_assert!(oracle.is_empty()),
            Some(r) => {
                for v in 0..p.vertex_count() {
                    let union: std::collections::BTreeSet<_> = oracle.iter().map(|a| a.vertices[v]).collect();
                    prop_assert_eq!(r.vertices[v].types.members(), &union);
                }
                let again = infer_and_validate(&r, &s).into_pattern().unwrap();
                prop_assert_eq!(again, r);
            }
        }
    }

    #[test]
    fn inference_keeps_every_match(seed in any::<u64>()) {
        let (mut rng, g) = fixture(seed, 20, 60);
        let p = fixtures::random_pattern(g.schema(), 3, &mut rng);
        let all = brute_force_match(&g, &p, &Params::new(), DEFAULT_MAX_ROWS).unwrap();
        match infer_and_validate(&p, g.schema()).into_pattern() {
            None => prop_assert!(all.is_empty()),
            Some(r) => {
                let mut kept = brute_force_match(&g, &r, &Params::new(), DEFAULT_MAX_ROWS).unwrap();
                let mut all = all;
                kept.sort();
                all.sort();
                prop_assert_eq!(kept, all);
            }
        }
    }

    #[test]
    fn canonical_code_ignores_vertex_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = fixtures::random_schema(&mut rng);
        let p = fixtures::random_pattern(&s, 5, &mut rng);
        let shape = Shape::from_pattern(&p);
        let mut perm: Vec<usize> = (0..shape.vertex_count()).collect();
        perm.shuffle(&mut rng);
        let moved = shape.permuted(&perm);
        let (a, oa) = canonical_order(&shape).unwrap();
        let (b, ob) = canonical_order(&moved).unwrap();
        prop_assert_eq!(&a, &b);
        // Equal codes must come from identical canonical forms.
        prop_assert_eq!(sorted_shape(&shape.permuted(&oa)), sorted_shape(&moved.permuted(&ob)));
        prop_assert_eq!(a.clone(), graphopt::glogue::CanonicalCode::from_base64(&a.to_base64()).unwrap());
    }

    #[test]
    fn estimates_ignore_vertex_order(seed in any::<u64>()) {
        let (mut rng, g) = fixture(seed, 25, 80);
        let gl = ExactGLogue::build(&g, 2).unwrap();
        let p = fixtures::random_pattern(g.schema(), 5, &mut rng);
        let shape = Shape::from_pattern(&p);
        let mut perm: Vec<usize> = (0..shape.vertex_count()).collect();
        perm.shuffle(&mut rng);
        prop_assert_eq!(gl.get_freq(&shape), gl.get_freq(&shape.permuted(&perm)));
    }

    #[test]
    fn schema_and_graph_round_trip(seed in any::<u64>()) {
        let (_, g) = fixture(seed, 30, 90);
        let text = g.schema().to_json_string();
        let schema = GraphSchema::from_json_str(&text).unwrap();
        prop_assert_eq!(schema.to_json_string(), text);
        let (v, e) = graph_to_csv(&g);
        let back = load_graph_from_str(Arc::new(schema), "vertices.csv", &v, "edges.csv", &e).unwrap();
        prop_assert_eq!(back.type_counts(), g.type_counts());
        prop_assert_eq!(graph_to_csv(&back), (v, e));
    }

    #[test]
    fn glogue_json_round_trip(seed in any::<u64>()) {
        let (mut rng, g) = fixture(seed, 25, 70);
        let gl = GLogue::build(&g, 3).unwrap();
        let text = gl.to_json_string();
        let back = GLogue::from_json_str(g.schema_arc(), &text).unwrap();
        prop_assert_eq!(back.to_json_string(), text);
        let p = fixtures::random_pattern(g.schema(), 4, &mut rng);
        let shape = Shape::from_pattern(&p);
        prop_assert_eq!(back.get_freq(&shape), gl.get_freq(&shape));
    }

    #[test]
    fn optimizer_never_worse_than_greedy(seed in any::<u64>()) {
        let (mut rng, g) = fixture(seed, 25, 70);
        let gl = ExactGLogue::build(&g, 3).unwrap();
        let p = fixtures::random_pattern(g.schema(), 5, &mut rng);
        if let Some(p) = infer_and_validate(&p, g.schema()).into_pattern() {
            let mut opt = ExactOptimizer::new(&gl, &p);
            let r = opt.optimize().unwrap();
            prop_assert!(r.cost <= r.greedy_cost);
            prop_assert_eq!(opt.plan_cost(&r.plan), r.cost.clone());
            for plan in cbo::all_plans(&p, 200) {
                prop_assert!(ExactOptimizer::new(&gl, &p).plan_cost(&plan) >= r.cost);
            }
        }
    }

    #[test]
    fn every_plan_finds_the_same_matches(seed in any::<u64>()) {
        let (mut rng, g) = fixture(seed, 20, 50);
        let p = fixtures::random_pattern(g.schema(), 4, &mut rng);
        let Some(p) = infer_and_validate(&p, g.schema()).into_pattern() else {
            return Ok(());
        };
        let Ok(mut want) = brute_force_match(&g, &p, &Params::new(), 200_000) else {
            return Ok(());
        };
        want.sort();
        for _ in 0..4 {
            let plan = cbo::random_plan(&p, &mut rng);
            let mut got = Matcher::new(&g, &p, &Params::new(), DEFAULT_MAX_ROWS).run(&plan).unwrap();
            got.sort();
            prop_assert_eq!(&got, &want);
        }
    }

    #[test]
    fn rewrites_preserve_results(seed in any::<u64>()) {
        let (mut rng, g) = fixture(seed, 20, 60);
        let q = fixtures::random_query(g.schema(), &mut rng);
        let parsed = parse(&q, g.schema()).unwrap();
        let once = apply_rules(&parsed, &default_rules());
        prop_assert_eq!(&apply_rules(&once, &default_rules()), &once);
        let mut off = EngineConfig::default();
        off.rbo = false;
        off.type_inference = rng.gen_bool(0.5);
        let a = Engine::new(g.clone(), EngineConfig::default()).unwrap().run(&q, &Params::new()).unwrap();
        let b = Engine::new(g, off).unwrap().run(&q, &Params::new()).unwrap();
        prop_assert_eq!(&a.columns, &b.columns);
        prop_assert_eq!(multiset(&a.rows), multiset(&b.rows));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn parallel_expansion_matches_sequential(seed in any::<u64>(), workers in 2usize..6) {
        let (mut rng, g) = fixture(seed, 200, 1500);
        let p = fixtures::random_pattern(g.schema(), 3, &mut rng);
        let Some(p) = infer_and_validate(&p, g.schema()).into_pattern() else {
            return Ok(());
        };
        let gl = GLogue::build(&g, 3).unwrap();
        let plan = Optimizer::new(&gl, &p).optimize().unwrap().plan;
        let phys = cbo::finalize_plan(p, plan, &[]).unwrap();
        let one = execute(&g, &phys, &Params::new(), ExecOptions::default());
        let many = execute(&g, &phys, &Params::new(), ExecOptions { workers, ..ExecOptions::default() });
        match (one, many) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.rows, b.rows),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }
}
