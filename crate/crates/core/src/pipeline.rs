//! End-to-end query engine: parse, rewrite, type-check, optimize, execute.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cbo::{
    all_plans, explain_json, finalize_plan, predicate_selectivity, random_plan, CostWeights,
    GraphOptimizer, Optimized,
};
use crate::error::{Error, Result};
use crate::executor::{
    apply_tail, count_intermediate, execute, ExecOptions, PatternPlan, PhysicalPlan, QueryResult,
    Table, DEFAULT_MAX_ROWS,
};
use crate::glogue::GLogue;
use crate::graph::PropertyGraph;
use crate::ir::{match_to_pattern, LogicalOp, LogicalPlan, Params, PathBinding, Pattern};
use crate::parser::parse_with_params;
use crate::rbo::{apply_rules, default_rules, explain_rbo};
use crate::typecheck::{format_constraints, infer_and_validate};

/// Engine settings. Every field is optional in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub alpha_expand: f64,
    pub alpha_join: f64,
    /// Largest pattern size counted exactly by the statistics catalogue.
    pub glogue_k: usize,
    pub workers: usize,
    pub max_rows: usize,
    pub timeout_ms: Option<u64>,
    pub type_inference: bool,
    pub rbo: bool,
    pub pruning: bool,
    pub edge_distinct: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha_expand: 1.0,
            alpha_join: 1.0,
            glogue_k: 3,
            workers: 1,
            max_rows: DEFAULT_MAX_ROWS,
            timeout_ms: None,
            type_inference: true,
            rbo: true,
            pruning: true,
            edge_distinct: false,
        }
    }
}

impl EngineConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights {
            alpha_expand: self.alpha_expand,
            alpha_join: self.alpha_join,
        }
    }

    pub fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            max_rows: self.max_rows,
            edge_distinct: self.edge_distinct,
            workers: self.workers,
            timeout: self.timeout_ms.map(Duration::from_millis),
        }
    }
}

/// A query after every compilation stage.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub parsed: LogicalPlan,
    pub rewritten: LogicalPlan,
    /// Pattern as written, before type inference.
    pub lifted: Pattern,
    /// Relational operators after the pattern stage.
    pub tail: Vec<LogicalOp>,
    /// Pattern handed to the optimizer; `None` when no typing exists.
    pub checked: Option<Pattern>,
    pub optimized: Option<Optimized<f64>>,
    pub physical: Option<PhysicalPlan>,
}

impl Compiled {
    pub fn is_valid(&self) -> bool {
        self.checked.is_some()
    }
}

/// Measured work of one plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub plan: String,
    pub est_cost: f64,
    pub intermediate: u64,
    pub scanned: u64,
    pub millis: f64,
}

/// Which alternative plans to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanChoice {
    /// Every plan tree, up to a limit.
    All(usize),
    /// Plans sampled by picking random candidates at every step.
    Random(usize),
}

impl std::str::FromStr for PlanChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Plan(format!("plan choice `{s}` is not `all` or `random:N`"));
        if s == "all" {
            return Ok(PlanChoice::All(1000));
        }
        let n = s.strip_prefix("random:").ok_or_else(bad)?;
        n.parse().map(PlanChoice::Random).map_err(|_| bad())
    }
}

pub struct Engine {
    graph: PropertyGraph,
    glogue: GLogue<f64>,
    config: EngineConfig,
}

impl Engine {
    /// Builds the statistics catalogue for `graph` and wraps both.
    pub fn new(graph: PropertyGraph, config: EngineConfig) -> Result<Engine> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers.max(1))
            .build()
            .map_err(|e| Error::Statistics(format!("cannot start workers: {e}")))?;
        let glogue = pool.install(|| GLogue::build(&graph, config.glogue_k))?;
        Ok(Engine {
            graph,
            glogue,
            config,
        })
    }

    pub fn with_glogue(graph: PropertyGraph, glogue: GLogue<f64>, config: EngineConfig) -> Engine {
        Engine {
            graph,
            glogue,
            config,
        }
    }

    pub fn graph(&self) -> &PropertyGraph {
        &self.graph
    }

    pub fn glogue(&self) -> &GLogue<f64> {
        &self.glogue
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut EngineConfig {
        &mut self.config
    }

    fn optimizer<'a>(&'a self, p: &'a Pattern, params: &Params) -> Result<GraphOptimizer<'a, f64>> {
        let (vs, es) = predicate_selectivity::<f64>(&self.graph, p, params)?;
        Ok(GraphOptimizer::new(&self.glogue, p)
            .with_weights(self.config.weights())
            .with_pruning(self.config.pruning)
            .with_selectivity(vs, es))
    }

    pub fn compile(&self, text: &str, params: &Params) -> Result<Compiled> {
        let schema = self.graph.schema();
        let parsed = parse_with_params(text, schema, params)?;
        let rewritten = if self.config.rbo {
            apply_rules(&parsed, &default_rules())
        } else {
            parsed.clone()
        };
        let mut ops = rewritten
            .clone()
            .into_chain()
            .ok_or_else(|| Error::Plan("only linear plans can be executed".into()))?
            .into_iter();
        let sentences = match ops.next() {
            Some(LogicalOp::MatchPattern { sentences }) => sentences,
            _ => return Err(Error::Plan("plan does not start with MATCH_PATTERN".into())),
        };
        let tail: Vec<LogicalOp> = ops.collect();
        let lifted = match_to_pattern(&sentences, schema)?;
        let checked = if self.config.type_inference {
            infer_and_validate(&lifted, schema).into_pattern()
        } else {
            Some(lifted.clone())
        };
        let (optimized, physical) = match &checked {
            Some(p) => {
                let r = self.optimizer(p, params)?.optimize()?;
                let phys = finalize_plan(p.clone(), r.plan.clone(), &tail)?;
                (Some(r), Some(phys))
            }
            None => (None, None),
        };
        Ok(Compiled {
            parsed,
            rewritten,
            lifted,
            tail,
            checked,
            optimized,
            physical,
        })
    }

    pub fn execute(&self, c: &Compiled, params: &Params) -> Result<QueryResult> {
        match &c.physical {
            Some(plan) => execute(&self.graph, plan, params, self.config.exec_options()),
            None => {
                // No data can match; the relational tail still runs so that
                // aggregates report their empty values.
                let table = Table::from_bindings(&c.lifted, &[])?;
                let table = apply_tail(&self.graph, table, &c.tail, params)?;
                Ok(QueryResult {
                    columns: table.columns,
                    rows: table.rows,
                    stats: Vec::new(),
                })
            }
        }
    }

    pub fn run(&self, text: &str, params: &Params) -> Result<QueryResult> {
        let c = self.compile(text, params)?;
        self.execute(&c, params)
    }

    /// Physical plan that uses `plan` for the pattern stage.
    pub fn physical_with(&self, c: &Compiled, plan: PatternPlan) -> Result<PhysicalPlan> {
        let p = c
            .checked
            .clone()
            .ok_or_else(|| Error::Plan("pattern has no valid typing".into()))?;
        finalize_plan(p, plan, &c.tail)
    }

    pub fn alternative_plans(
        &self,
        c: &Compiled,
        choice: PlanChoice,
        seed: u64,
    ) -> Vec<PatternPlan> {
        let Some(p) = &c.checked else {
            return Vec::new();
        };
        match choice {
            PlanChoice::All(limit) => all_plans(p, limit),
            PlanChoice::Random(n) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| random_plan(p, &mut rng)).collect()
            }
        }
    }

    /// Runs the pattern stage of `plan` and reports its work.
    pub fn measure(
        &self,
        c: &Compiled,
        plan: &PatternPlan,
        params: &Params,
    ) -> Result<Measurement> {
        let p = c
            .checked
            .as_ref()
            .ok_or_else(|| Error::Plan("pattern has no valid typing".into()))?;
        let est_cost = self.optimizer(p, params)?.plan_cost(plan);
        let phys = self.physical_with(c, plan.clone())?;
        let start = Instant::now();
        let stats = count_intermediate(&self.graph, &phys, params, self.config.max_rows)?;
        let millis = start.elapsed().as_secs_f64() * 1e3;
        Ok(Measurement {
            plan: plan.display(p).to_string(),
            est_cost,
            intermediate: stats.iter().map(|s| s.rows_out).sum(),
            scanned: stats
                .iter()
                .filter(|s| s.kind == crate::executor::OpKind::Scan)
                .map(|s| s.examined)
                .sum(),
            millis,
        })
    }

    pub fn explain(&self, text: &str, params: &Params) -> Result<Explanation> {
        let c = self.compile(text, params)?;
        let schema = self.graph.schema();
        let rbo_trace = explain_rbo(&c.parsed, &default_rules(), schema);
        let (plan_json, plan_text, join_position) = match (&c.checked, &c.optimized) {
            (Some(p), Some(r)) => {
                let mut opt = self.optimizer(p, params)?;
                let j = explain_json(&mut opt, schema, &r.plan, &c.tail);
                let pos = p
                    .paths
                    .first()
                    .and_then(|path| join_position(path, &r.plan));
                (j, Some(r.plan.display(p).to_string()), pos)
            }
            _ => (serde_json::Value::Null, None, None),
        };
        Ok(Explanation {
            parsed: c.parsed.dump(schema),
            rewritten: c.rewritten.dump(schema),
            rbo_trace,
            constraints: c.checked.as_ref().map(|p| format_constraints(p, schema)),
            plan_text,
            cost: c.optimized.as_ref().map(|r| r.cost),
            greedy_cost: c.optimized.as_ref().map(|r| r.greedy_cost),
            plan_json,
            join_position,
        })
    }
}

/// Outcome of every compilation stage in printable form.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub parsed: String,
    pub rewritten: String,
    pub rbo_trace: String,
    /// `None` when the pattern is INVALID.
    pub constraints: Option<String>,
    pub plan_text: Option<String>,
    pub cost: Option<f64>,
    pub greedy_cost: Option<f64>,
    pub plan_json: serde_json::Value,
    pub join_position: Option<(usize, usize)>,
}

impl Explanation {
    pub fn to_text(&self, with_rbo_trace: bool) -> String {
        let mut out = format!("== parsed ==\n{}", self.parsed);
        if with_rbo_trace {
            out.push_str(&self.rbo_trace);
        }
        out.push_str(&format!("== rewritten ==\n{}", self.rewritten));
        match &self.constraints {
            None => out.push_str("== types ==\nINVALID\n"),
            Some(c) => out.push_str(&format!("== types ==\n{c}")),
        }
        if let (Some(plan), Some(cost)) = (&self.plan_text, self.cost) {
            out.push_str(&format!("== plan ==\n{plan}\ncost: {cost}\n"));
        }
        if let Some((a, b)) = self.join_position {
            out.push_str(&format!("join vertex: ({a}, {b})\n"));
        }
        out
    }

    pub fn to_json(&self, with_rbo_trace: bool) -> serde_json::Value {
        let mut j = json!({
            "parsed": self.parsed.lines().collect::<Vec<_>>(),
            "rewritten": self.rewritten.lines().collect::<Vec<_>>(),
            "valid": self.constraints.is_some(),
            "plan": self.plan_json,
            "join_position": self.join_position.map(|(a, b)| vec![a, b]),
        });
        if with_rbo_trace {
            j["rbo_trace"] = json!(self.rbo_trace.lines().collect::<Vec<_>>());
        }
        j
    }
}

/// Where the search directions of `plan` meet along `path`, as hops from
/// the first endpoint and hops from the last. The meeting vertex is the
/// shared vertex of the outermost join, or the last vertex reached when
/// the plan has no join.
pub fn join_position(path: &PathBinding, plan: &PatternPlan) -> Option<(usize, usize)> {
    fn meet(p: &PatternPlan) -> Option<u64> {
        match p {
            PatternPlan::Join { left, right } => Some(left.mask() & right.mask()),
            PatternPlan::Expand { input, .. } => meet(input),
            PatternPlan::Scan { .. } => None,
        }
    }
    let mask = meet(plan).unwrap_or_else(|| match plan {
        PatternPlan::Expand { vertex, .. } | PatternPlan::Scan { vertex } => 1u64 << vertex,
        PatternPlan::Join { .. } => unreachable!(),
    });
    let k = path.vertices.len().checked_sub(1)?;
    let i = path.vertices.iter().position(|&v| mask & (1 << v) != 0)?;
    Some((i, k - i))
}

/// Left-deep plan that walks `path` from one end.
pub fn path_walk_plan(p: &Pattern, path: &PathBinding, reverse: bool) -> Result<PatternPlan> {
    let mut order: Vec<usize> = path.vertices.clone();
    if reverse {
        order.reverse();
    }
    let rest: Vec<usize> = (0..p.vertex_count())
        .filter(|v| !order.contains(v))
        .collect();
    order.extend(rest);
    crate::cbo::order_plan(p, &order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fig5_graph, money_mule_graph, MuleSets, FIG1_QUERY, MONEY_MULE_QUERY};
    use crate::ir::Value;

    #[test]
    fn figure_one_query_runs() {
        let e = Engine::new(fig5_graph(1), EngineConfig::default()).unwrap();
        let r = e.run(FIG1_QUERY, &Params::new()).unwrap();
        assert_eq!(r.columns, ["v2.name", "count(v2)"]);
        assert!(!r.rows.is_empty());
        let mut no_rbo = EngineConfig::default();
        no_rbo.rbo = false;
        no_rbo.type_inference = false;
        let e2 = Engine::new(fig5_graph(1), no_rbo).unwrap();
        assert_eq!(e2.run(FIG1_QUERY, &Params::new()).unwrap().rows, r.rows);
    }

    #[test]
    fn invalid_pattern_returns_empty_aggregate() {
        let e = Engine::new(fig5_graph(1), EngineConfig::default()).unwrap();
        let q = "MATCH (a:Place)-[]->(b) RETURN count(a)";
        let c = e.compile(q, &Params::new()).unwrap();
        assert!(!c.is_valid());
        let r = e.execute(&c, &Params::new()).unwrap();
        assert_eq!(r.rows, vec![vec![Value::Int(0)]]);
        let text = e.explain(q, &Params::new()).unwrap().to_text(false);
        assert!(text.contains("INVALID"));
    }

    #[test]
    fn config_json_fills_defaults() {
        let c = EngineConfig::from_json_str(r#"{"alpha_join": 2.5, "workers": 3}"#).unwrap();
        assert_eq!(c.alpha_join, 2.5);
        assert_eq!(c.workers, 3);
        assert_eq!(c.glogue_k, 3);
        assert!(EngineConfig::from_json_str(r#"{"alpha": 1}"#).is_err());
        assert_eq!(
            "random:7".parse::<PlanChoice>().unwrap(),
            PlanChoice::Random(7)
        );
        assert!("some".parse::<PlanChoice>().is_err());
    }

    #[test]
    fn money_mule_reports_join_position() {
        let (g, params) = money_mule_graph(2, 300, 900, 4, MuleSets::Uniform);
        let e = Engine::new(g, EngineConfig::default()).unwrap();
        let x = e.explain(MONEY_MULE_QUERY, &params).unwrap();
        let (a, b) = x.join_position.unwrap();
        assert_eq!(a + b, 4);
        let c = e.compile(MONEY_MULE_QUERY, &params).unwrap();
        let p = c.checked.as_ref().unwrap();
        let fwd = path_walk_plan(p, &p.paths[0], false).unwrap();
        let bwd = path_walk_plan(p, &p.paths[0], true).unwrap();
        assert_eq!(join_position(&p.paths[0], &fwd), Some((4, 0)));
        assert_eq!(join_position(&p.paths[0], &bwd), Some((0, 4)));
        let j1 = serde_json::to_string(&x.to_json(true)).unwrap();
        let j2 =
            serde_json::to_string(&e.explain(MONEY_MULE_QUERY, &params).unwrap().to_json(true))
                .unwrap();
        assert_eq!(j1, j2);
    }
}
