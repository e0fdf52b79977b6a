use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graphopt::fixtures::{self, MuleSets};
use graphopt::graph::{load_graph, load_schema, write_graph, GraphSchema, PropertyGraph};
use graphopt::ir::{match_to_pattern, LogicalOp, Params, Value};
use graphopt::parser::parse_with_params;
use graphopt::pipeline::{Engine, EngineConfig, PlanChoice};
use graphopt::typecheck::{format_constraints, infer_and_validate};
use graphopt::GLogue;

#[derive(Parser)]
#[command(
    name = "graphopt",
    version,
    about = "Optimize and run pattern queries over property graphs"
)]
struct Cli {
    /// JSON config file; defaults to $GOPT_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags that override the config file.
#[derive(Args, Default)]
struct Tuning {
    /// Weight of vertex-expansion steps in the cost model
    #[arg(long, global = true)]
    alpha_expand: Option<f64>,
    /// Weight of hash joins in the cost model
    #[arg(long, global = true)]
    alpha_join: Option<f64>,
    /// Largest pattern size counted exactly by the statistics
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Threads used for vertex expansion
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Abort when an operator produces more rows
    #[arg(long, global = true)]
    max_rows: Option<usize>,
    /// Abort the pattern stage after this many milliseconds
    #[arg(long, global = true)]
    timeout_ms: Option<u64>,
    /// Skip type inference and keep constraints as written
    #[arg(long, global = true)]
    no_type_inference: bool,
    /// Skip the rewrite rules
    #[arg(long, global = true)]
    no_rbo: bool,
    /// Search every candidate without cost bounds
    #[arg(long, global = true)]
    no_pruning: bool,
}

#[derive(Args)]
struct GraphArgs {
    /// Directory with schema.json, vertices.csv and edges.csv.
    #[arg(long)]
    graph: PathBuf,
    /// Schema file; defaults to <graph>/schema.json.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Precomputed statistics; built from the graph when absent.
    #[arg(long)]
    glogue: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    /// Query text, `@file`, or a built-in name (fig1, fig1d, money-mule, Qt1 ... Qc4b).
    query: String,
    /// Parameter binding `name=value`; values are JSON literals.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// JSON object of parameters, applied before --param.
    #[arg(long)]
    params_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a schema and graph and print type counts.
    Load(GraphArgs),
    /// Build or inspect statistics catalogues.
    Glogue {
        #[command(subcommand)]
        cmd: GlogueCmd,
    },
    /// Print inferred type constraints, or INVALID.
    Typecheck {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Graph directory whose schema.json is used when --schema is absent.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Show the plan after every compilation stage.
    Explain {
        #[command(flatten)]
        q: QueryArgs,
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long)]
        json: bool,
        /// Include the input and output of every rewrite rule.
        #[arg(long)]
        explain_rbo: bool,
    },
    /// Execute a query and print its results.
    Run {
        #[command(flatten)]
        q: QueryArgs,
        #[command(flatten)]
        g: GraphArgs,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Drop bindings that reuse a data edge.
        #[arg(long)]
        edge_distinct: bool,
    },
    /// Execute alternative pattern plans and report their work.
    Bench {
        #[command(flatten)]
        q: QueryArgs,
        #[command(flatten)]
        g: GraphArgs,
        /// `all` or `random:N`.
        #[arg(long, default_value = "random:10")]
        plans: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic graph directory.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Size factor for the ldbc graph.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

#[derive(Subcommand)]
enum GlogueCmd {
    Build {
        #[command(flatten)]
        g: GraphArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    Show {
        file: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Fig5,
    Ldbc,
    Mule,
    Random,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn config(cli_path: &Option<PathBuf>, t: &Tuning) -> Result<EngineConfig> {
    let path = cli_path
        .clone()
        .or_else(|| std::env::var_os("GOPT_CONFIG").map(PathBuf::from));
    let mut c = match path {
        Some(p) => EngineConfig::load(&p).with_context(|| format!("config {}", p.display()))?,
        None => EngineConfig::default(),
    };
    if let Some(x) = t.alpha_expand {
        c.alpha_expand = x;
    }
    if let Some(x) = t.alpha_join {
        c.alpha_join = x;
    }
    if let Some(x) = t.k {
        c.glogue_k = x;
    }
    if let Some(x) = t.workers {
        c.workers = x;
    }
    if let Some(x) = t.max_rows {
        c.max_rows = x;
    }
    if t.timeout_ms.is_some() {
        c.timeout_ms = t.timeout_ms;
    }
    c.type_inference &= !t.no_type_inference;
    c.rbo &= !t.no_rbo;
    c.pruning &= !t.no_pruning;
    Ok(c)
}

fn schema_at(explicit: &Option<PathBuf>, dir: Option<&Path>) -> Result<GraphSchema> {
    let path = match (explicit, dir) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) => d.join("schema.json"),
        (None, None) => bail!("pass --schema or --graph"),
    };
    Ok(load_schema(&path)?)
}

fn load(g: &GraphArgs) -> Result<PropertyGraph> {
    let schema = schema_at(&g.schema, Some(&g.graph))?;
    Ok(load_graph(
        schema,
        g.graph.join("vertices.csv"),
        g.graph.join("edges.csv"),
    )?)
}

fn engine(g: &GraphArgs, cfg: EngineConfig) -> Result<Engine> {
    let graph = load(g)?;
    match &g.glogue {
        Some(path) => {
            let gl = GLogue::load(graph.schema_arc(), path)?;
            Ok(Engine::with_glogue(graph, gl, cfg))
        }
        None => Ok(Engine::new(graph, cfg)?),
    }
}

fn query_text(q: &str) -> Result<String> {
    if let Some(path) = q.strip_prefix('@') {
        return std::fs::read_to_string(path).with_context(|| format!("reading {path}"));
    }
    let builtin = match q {
        "fig1" => Some(fixtures::FIG1_QUERY),
        "fig1d" => Some(fixtures::FIG1D_QUERY),
        "money-mule" => Some(fixtures::MONEY_MULE_QUERY),
        _ => fixtures::ldbc_query(q),
    };
    Ok(builtin.map_or_else(|| q.to_string(), str::to_string))
}

fn params(q: &QueryArgs) -> Result<Params> {
    let mut out = Params::new();
    if let Some(path) = &q.params_file {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let j: serde_json::Value = serde_json::from_str(&text)?;
        let Some(obj) = j.as_object() else {
            bail!("{} must hold a JSON object", path.display());
        };
        for (k, v) in obj {
            let v = Value::from_json(v).with_context(|| format!("parameter `{k}`"))?;
            out.insert(k.clone(), v);
        }
    }
    for p in &q.params {
        let Some((k, v)) = p.split_once('=') else {
            bail!("parameter `{p}` is not NAME=VALUE");
        };
        out.insert(k.trim().to_string(), Value::parse_literal(v));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = || config(&cli.config, &cli.tuning);
    match &cli.cmd {
        Cmd::Load(g) => {
            let graph = load(g)?;
            println!("vertices: {}", graph.vertex_count());
            println!("edges: {}", graph.edge_count());
            for (name, n) in graph.type_counts().named(graph.schema()) {
                println!("{name}: {n}");
            }
        }
        Cmd::Glogue { cmd } => match cmd {
            GlogueCmd::Build { g, out } => {
                let e = Engine::new(load(g)?, cfg()?)?;
                let gl = e.glogue();
                gl.save(out)?;
                println!(
                    "{} patterns written to {}",
                    gl.patterns().len(),
                    out.display()
                );
            }
            GlogueCmd::Show { file, schema } => {
                let s = load_schema(schema)?;
                let gl = GLogue::load(s.into(), file)?;
                print!("{}", gl.describe());
            }
        },
        Cmd::Typecheck { q, schema, graph } => {
            let s = schema_at(schema, graph.as_deref())?;
            let plan = parse_with_params(&query_text(&q.query)?, &s, &params(q)?)?;
            let Some(Some(LogicalOp::MatchPattern { sentences })) =
                plan.as_chain().map(|c| c.first().map(|op| (*op).clone()))
            else {
                bail!("query has no MATCH pattern");
            };
            let p = match_to_pattern(&sentences, &s)?;
            match infer_and_validate(&p, &s).into_pattern() {
                Some(p) => print!("VALID\n{}", format_constraints(&p, &s)),
                None => println!("INVALID"),
            }
        }
        Cmd::Explain {
            q,
            g,
            json,
            explain_rbo,
        } => {
            let e = engine(g, cfg()?)?;
            let x = e.explain(&query_text(&q.query)?, &params(q)?)?;
            if *json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&x.to_json(*explain_rbo))?
                );
            } else {
                print!("{}", x.to_text(*explain_rbo));
            }
        }
        Cmd::Run {
            q,
            g,
            format,
            edge_distinct,
        } => {
            let mut c = cfg()?;
            c.edge_distinct |= *edge_distinct;
            let e = engine(g, c)?;
            let r = e.run(&query_text(&q.query)?, &params(q)?)?;
            match format {
                Format::Csv => print!("{}", r.to_csv(e.graph())),
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&r.to_json(e.graph()))?)
                }
            }
        }
        Cmd::Bench {
            q,
            g,
            plans,
            seed,
            json,
        } => {
            let choice: PlanChoice = plans.parse()?;
            let e = engine(g, cfg()?)?;
            let ps = params(q)?;
            let c = e.compile(&query_text(&q.query)?, &ps)?;
            let Some(opt) = &c.optimized else {
                println!("INVALID pattern; nothing to run");
                return Ok(());
            };
            let mut rows = vec![("optimized".to_string(), e.measure(&c, &opt.plan, &ps)?)];
            for (i, plan) in e.alternative_plans(&c, choice, *seed).iter().enumerate() {
                rows.push((format!("alt{i}"), e.measure(&c, plan, &ps)?));
            }
            if *json {
                let j: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|(name, m)| {
                        let mut v = serde_json::to_value(m).expect("plain struct");
                        v["name"] = name.clone().into();
                        v
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&j)?);
            } else {
                println!("name,est_cost,intermediate,scanned,millis,plan");
                for (name, m) in &rows {
                    println!(
                        "{name},{},{},{},{:.3},\"{}\"",
                        m.est_cost, m.intermediate, m.scanned, m.millis, m.plan
                    );
                }
            }
        }
        Cmd::Gen {
            kind,
            out,
            seed,
            scale,
        } => {
            let (graph, ps) = match kind {
                GenKind::Fig5 => (fixtures::fig5_graph(*seed), Params::new()),
                GenKind::Ldbc => {
                    let g = fixtures::ldbc_graph(*seed, *scale);
                    let p = fixtures::ldbc_params(&g);
                    (g, p)
                }
                GenKind::Mule => {
                    fixtures::money_mule_graph(*seed, 2000, 8000, 4, MuleSets::Uniform)
                }
                GenKind::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    let s = fixtures::random_schema(&mut rng);
                    (fixtures::random_graph(s, 50, 120, &mut rng), Params::new())
                }
            };
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            std::fs::write(out.join("schema.json"), graph.schema().to_json_string())?;
            write_graph(&graph, out.join("vertices.csv"), out.join("edges.csv"))?;
            if !ps.is_empty() {
                let j: serde_json::Map<String, serde_json::Value> = ps
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json(&graph)))
                    .collect();
                std::fs::write(out.join("params.json"), serde_json::to_string_pretty(&j)?)?;
            }
            println!(
                "wrote {} vertices and {} edges to {}",
                graph.vertex_count(),
                graph.edge_count(),
                out.display()
            );
        }
    }
    Ok(())
}
