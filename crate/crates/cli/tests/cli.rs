use std::path::Path;
use std::process::{Command, Output};

use graphopt::executor::{apply_tail, brute_force_match, Table, DEFAULT_MAX_ROWS};
use graphopt::fixtures::{self, FIG1_QUERY};
use graphopt::ir::{plan_to_pattern, Params};
use graphopt::parser::parse;

fn graphopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphopt"))
        .args(args)
        .env_remove("GOPT_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(kind: &str, dir: &Path, seed: &str) {
    stdout(&graphopt(&[
        "gen",
        kind,
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        seed,
    ]));
}

#[test]
fn run_matches_reference_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    gen("fig5", dir.path(), "1");
    let g = dir.path().to_str().unwrap();
    let csv = stdout(&graphopt(&["run", "fig1", "--graph", g]));

    // Reference: every homomorphism of the pattern as written, then the
    // relational operators of the unrewritten plan.
    let graph = fixtures::fig5_graph(1);
    let plan = parse(FIG1_QUERY, graph.schema()).unwrap();
    let p = plan_to_pattern(&plan, graph.schema()).unwrap();
    let rows = brute_force_match(&graph, &p, &Params::new(), DEFAULT_MAX_ROWS).unwrap();
    let chain = plan.into_chain().unwrap();
    let table = Table::from_bindings(&p, &rows).unwrap();
    let table = apply_tail(&graph, table, &chain[1..], &Params::new()).unwrap();
    let mut expected = String::from("v2.name,count(v2)\n");
    for r in &table.rows {
        let cells: Vec<String> = r.iter().map(|v| v.render(&graph)).collect();
        expected.push_str(&cells.join(","));
        expected.push('\n');
    }
    assert_eq!(csv, expected);
    assert!(table.rows.len() > 1);

    let json = stdout(&graphopt(&[
        "run", "fig1", "--graph", g, "--format", "json",
    ]));
    let j: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(j.as_array().unwrap().len(), table.rows.len());
}

#[test]
fn typecheck_reports_invalid_with_success() {
    let dir = tempfile::tempdir().unwrap();
    gen("fig5", dir.path(), "1");
    let g = dir.path().to_str().unwrap();
    assert_eq!(
        stdout(&graphopt(&["typecheck", "fig1d", "--graph", g])),
        "INVALID\n"
    );
    let out = stdout(&graphopt(&[
        "typecheck",
        "MATCH (v1)-[]->(v2), (v1)-[]->(v3:Place), (v2)-[]->(v3) RETURN v1",
        "--graph",
        g,
    ]));
    assert!(out.starts_with("VALID\n"));
    assert!(
        out.contains("v1: Person\nv2: Person|Product\nv3: Place\n"),
        "{out}"
    );
}

#[test]
fn money_mule_explain_reports_join_vertex() {
    let dir = tempfile::tempdir().unwrap();
    gen("mule", dir.path(), "3");
    let g = dir.path().to_str().unwrap();
    let pf = dir.path().join("params.json");
    let out = stdout(&graphopt(&[
        "explain",
        "money-mule",
        "--graph",
        g,
        "--params-file",
        pf.to_str().unwrap(),
        "--param",
        "k=6",
    ]));
    let line = out
        .lines()
        .find(|l| l.starts_with("join vertex: "))
        .unwrap();
    let tuple = line.trim_start_matches("join vertex: ");
    let inner = tuple.strip_prefix('(').unwrap().strip_suffix(')').unwrap();
    let (a, b) = inner.split_once(", ").unwrap();
    assert_eq!(a.parse::<usize>().unwrap() + b.parse::<usize>().unwrap(), 6);
}

#[test]
fn explain_json_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    gen("fig5", dir.path(), "1");
    let g = dir.path().to_str().unwrap();
    let args = ["explain", "fig1", "--graph", g, "--json", "--explain-rbo"];
    let a = stdout(&graphopt(&args));
    let b = stdout(&graphopt(&args));
    assert_eq!(a, b);
    let golden = include_str!("golden/fig1_explain.json");
    assert_eq!(a, golden);
}

#[test]
fn bench_is_reproducible_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    gen("ldbc", dir.path(), "2");
    let g = dir.path().to_str().unwrap();
    let run = || {
        let out = stdout(&graphopt(&[
            "bench", "Qc1a", "--graph", g, "--plans", "random:4", "--seed", "9",
        ]));
        // Drop the timing column.
        out.lines()
            .map(|l| {
                let f: Vec<&str> = l.splitn(6, ',').collect();
                format!("{},{},{},{},{}", f[0], f[1], f[2], f[3], f[5])
            })
            .collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a.len(), 6);
    assert_eq!(a, run());
    let all = stdout(&graphopt(&["bench", "Qt1", "--graph", g, "--plans", "all"]));
    assert!(all.lines().count() > 3);
}

#[test]
fn config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    gen("fig5", dir.path(), "1");
    let g = dir.path().to_str().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"alpha_join": 3.0, "workers": 2, "glogue_k": 2}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_graphopt"))
        .args(["run", "fig1", "--graph", g])
        .env("GOPT_CONFIG", &good)
        .output()
        .unwrap();
    assert!(o.status.success());
    let plain = stdout(&graphopt(&["run", "fig1", "--graph", g]));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), plain);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha": 1}"#).unwrap();
    let o = graphopt(&[
        "--config",
        bad.to_str().unwrap(),
        "run",
        "fig1",
        "--graph",
        g,
    ]);
    assert!(!o.status.success());

    let o = graphopt(&["run", "MATCH (a)-[]->(b) WHERE RETURN a", "--graph", g]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: "));

    let o = graphopt(&["load", "--graph", "/nonexistent/graph"]);
    assert!(!o.status.success());
}

#[test]
fn glogue_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    gen("fig5", dir.path(), "1");
    let g = dir.path().to_str().unwrap();
    let gl = dir.path().join("glogue.json");
    stdout(&graphopt(&[
        "glogue",
        "build",
        "--graph",
        g,
        "-o",
        gl.to_str().unwrap(),
    ]));
    let shown = stdout(&graphopt(&[
        "glogue",
        "show",
        gl.to_str().unwrap(),
        "--schema",
        dir.path().join("schema.json").to_str().unwrap(),
    ]));
    assert!(shown.lines().count() > 5);
    let with = stdout(&graphopt(&[
        "run",
        "fig1",
        "--graph",
        g,
        "--glogue",
        gl.to_str().unwrap(),
    ]));
    assert_eq!(with, stdout(&graphopt(&["run", "fig1", "--graph", g])));
}
