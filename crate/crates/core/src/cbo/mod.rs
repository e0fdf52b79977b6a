//! Cost-based pattern optimization: expand/join cost model, a greedy
//! initial plan, and a memoized top-down branch-and-bound search.

mod explain;
mod plans;

use std::collections::HashMap;

pub use explain::{explain_json, ExplainOp};
pub use plans::{all_plans, order_plan, random_plan};

use crate::error::{Error, Result};
use crate::executor::{PatternPlan, PhysicalPlan};
use crate::glogue::{canonicalize, get_candidates, Candidate, CanonicalCode, GLogue, Shape};
use crate::graph::PropertyGraph;
use crate::ir::{LogicalOp, Params, Pattern, VMask};
use crate::scalar::Scalar;

/// Normalizing factors applied to operator costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub alpha_expand: f64,
    pub alpha_join: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha_expand: 1.0,
            alpha_join: 1.0,
        }
    }
}

/// Cost of joining two subpatterns with the given frequencies.
pub fn cost_join<S: Scalar>(f1: S, f2: S, alpha: S) -> S {
    alpha * (f1 + f2)
}

/// Cost of extending a subpattern of frequency `f_s` by edges with the
/// given expand ratios.
pub fn cost_expand<S: Scalar>(f_s: S, sigmas: &[S], alpha: S) -> S {
    let total = sigmas.iter().cloned().fold(S::zero(), |a, b| a + b);
    alpha * f_s * total
}

#[derive(Debug, Clone)]
struct Entry<S> {
    plan: PatternPlan,
    cost: S,
}

struct GreedyStep<S> {
    cost: S,
    join: bool,
    vertex: usize,
    plan: PatternPlan,
}

impl<S: Scalar> GreedyStep<S> {
    /// Keeps the cheaper step; ties prefer expansions, then lower vertices.
    fn offer(
        best: &mut Option<GreedyStep<S>>,
        cost: S,
        join: bool,
        vertex: usize,
        plan: PatternPlan,
    ) {
        let better = match best {
            None => true,
            Some(b) => {
                cost < b.cost
                    || (cost == b.cost
                        && ((!join && b.join) || (join == b.join && vertex < b.vertex)))
            }
        };
        if better {
            *best = Some(GreedyStep {
                cost,
                join,
                vertex,
                plan,
            });
        }
    }
}

/// Counters from one search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub candidates: u64,
    pub pruned: u64,
    pub planmap_entries: u64,
}

#[derive(Debug, Clone)]
pub struct Optimized<S> {
    pub plan: PatternPlan,
    pub cost: S,
    pub greedy_cost: S,
    pub stats: SearchStats,
}

/// Plan search for one pattern against a frequency catalogue.
pub struct GraphOptimizer<'a, S: Scalar> {
    glogue: &'a GLogue<S>,
    p: &'a Pattern,
    alpha_expand: S,
    alpha_join: S,
    vertex_sel: Vec<S>,
    edge_sel: Vec<S>,
    pruning: bool,
    freq_cache: HashMap<VMask, S>,
    code_cache: HashMap<VMask, CanonicalCode>,
    planmap: HashMap<VMask, Entry<S>>,
    cost_star: Option<S>,
    stats: SearchStats,
}

impl<'a, S: Scalar> GraphOptimizer<'a, S> {
    pub fn new(glogue: &'a GLogue<S>, p: &'a Pattern) -> Self {
        GraphOptimizer {
            glogue,
            p,
            alpha_expand: S::one(),
            alpha_join: S::one(),
            vertex_sel: vec![S::one(); p.vertex_count()],
            edge_sel: vec![S::one(); p.edge_count()],
            pruning: true,
            freq_cache: HashMap::new(),
            code_cache: HashMap::new(),
            planmap: HashMap::new(),
            cost_star: None,
            stats: SearchStats::default(),
        }
    }

    pub fn with_weights(mut self, w: CostWeights) -> Self {
        self.alpha_expand = S::from_f64_lossy(w.alpha_expand);
        self.alpha_join = S::from_f64_lossy(w.alpha_join);
        self
    }

    pub fn with_pruning(mut self, on: bool) -> Self {
        self.pruning = on;
        self
    }

    /// Per-vertex and per-edge fractions of candidates passing their
    /// predicates; both default to one.
    pub fn with_selectivity(mut self, vertices: Vec<S>, edges: Vec<S>) -> Self {
        assert_eq!(vertices.len(), self.p.vertex_count());
        assert_eq!(edges.len(), self.p.edge_count());
        self.vertex_sel = vertices;
        self.edge_sel = edges;
        self.freq_cache.clear();
        self
    }

    pub fn pattern(&self) -> &Pattern {
        self.p
    }

    /// Estimated frequency of the subpattern induced by `mask`, scaled by
    /// the selectivity of every predicate inside it.
    pub fn freq(&mut self, mask: VMask) -> S {
        if let Some(f) = self.freq_cache.get(&mask) {
            return f.clone();
        }
        let mut f = self.glogue.get_freq(&Shape::induced(self.p, mask));
        for v in 0..self.p.vertex_count() {
            if mask & (1 << v) != 0 {
                f = f * self.vertex_sel[v].clone();
            }
        }
        for e in self.p.edges_within(mask) {
            f = f * self.edge_sel[e].clone();
        }
        self.freq_cache.insert(mask, f.clone());
        f
    }

    fn code(&mut self, mask: VMask) -> CanonicalCode {
        if let Some(c) = self.code_cache.get(&mask) {
            return c.clone();
        }
        let c = canonicalize(&Shape::induced(self.p, mask)).unwrap_or(CanonicalCode(Vec::new()));
        self.code_cache.insert(mask, c.clone());
        c
    }

    /// Expand ratios of binding `v` into `source` through `edges`, in
    /// order; the first edge opens the new vertex.
    pub fn sigmas(&mut self, source: VMask, v: usize, edges: &[usize]) -> Vec<S> {
        let mask = source | (1 << v);
        let shape = Shape::induced(self.p, mask);
        let within = self.p.edges_within(mask);
        let local_v = (mask & ((1u64 << v) - 1)).count_ones() as usize;
        edges
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let local_e = within
                    .iter()
                    .position(|&x| x == e)
                    .expect("edge inside mask");
                self.glogue.expand_ratio(&shape, local_e, local_v, i > 0) * self.edge_sel[e].clone()
            })
            .collect()
    }

    fn expand_edge_cost(&mut self, source: VMask, v: usize, edges: &[usize]) -> S {
        let f_s = self.freq(source);
        let sig = self.sigmas(source, v, edges);
        cost_expand(f_s, &sig, self.alpha_expand.clone())
    }

    fn join_edge_cost(&mut self, left: VMask, right: VMask) -> S {
        let (f1, f2) = (self.freq(left), self.freq(right));
        cost_join(f1, f2, self.alpha_join.clone())
    }

    /// Fixed plan and cost of a one- or two-vertex subpattern.
    fn seed(&mut self, mask: VMask) -> Option<Entry<S>> {
        match mask.count_ones() {
            1 => {
                let v = mask.trailing_zeros() as usize;
                Some(Entry {
                    plan: PatternPlan::scan(v),
                    cost: self.freq(mask),
                })
            }
            2 if self.p.is_connected_mask(mask) => {
                let a = mask.trailing_zeros() as usize;
                let b = (mask & (mask - 1)).trailing_zeros() as usize;
                let (fa, fb) = (self.freq(1 << a), self.freq(1 << b));
                let (s, t) = if fb < fa { (b, a) } else { (a, b) };
                Some(Entry {
                    plan: PatternPlan::expand(
                        PatternPlan::scan(s),
                        t,
                        self.p.edges_between(t, 1 << s),
                    ),
                    cost: self.freq(mask),
                })
            }
            _ => None,
        }
    }

    /// Cost of an arbitrary plan under the model.
    pub fn plan_cost(&mut self, plan: &PatternPlan) -> S {
        let mask = plan.mask();
        if mask.count_ones() <= 2 {
            if let Some(seed) = self.seed(mask) {
                return seed.cost;
            }
        }
        match plan {
            PatternPlan::Scan { .. } => self.freq(mask),
            PatternPlan::Expand {
                input,
                vertex,
                edges,
            } => {
                let c = self.plan_cost(input);
                let ce = self.expand_edge_cost(input.mask(), *vertex, edges);
                c + self.freq(mask) + ce
            }
            PatternPlan::Join { left, right } => {
                let c1 = self.plan_cost(left);
                let c2 = self.plan_cost(right);
                let ce = self.join_edge_cost(left.mask(), right.mask());
                c1 + c2 + self.freq(mask) + ce
            }
        }
    }

    /// Builds a plan one vertex at a time, always taking the cheapest
    /// extension.
    pub fn greedy_initial(&mut self) -> (PatternPlan, S) {
        let n = self.p.vertex_count();
        let start = (0..n)
            .min_by(|&a, &b| {
                let (fa, fb) = (self.freq(1 << a), self.freq(1 << b));
                fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("pattern has vertices");
        let mut mask: VMask = 1 << start;
        let mut plan = PatternPlan::scan(start);
        let mut cost = self.freq(mask);
        while mask != self.p.full_mask() {
            let mut best: Option<GreedyStep<S>> = None;
            for u in 0..n {
                if mask & (1 << u) != 0 {
                    continue;
                }
                let edges = self.p.edges_between(u, mask);
                if edges.is_empty() {
                    continue;
                }
                let grown = mask | (1 << u);
                if mask.count_ones() == 1 {
                    let seed = self.seed(grown).expect("connected pair");
                    GreedyStep::offer(&mut best, seed.cost, false, u, seed.plan);
                    continue;
                }
                let ce = self.expand_edge_cost(mask, u, &edges);
                let c = cost.clone() + self.freq(grown) + ce;
                GreedyStep::offer(
                    &mut best,
                    c,
                    false,
                    u,
                    PatternPlan::expand(plan.clone(), u, edges.clone()),
                );
                let anchors = self.p.neighbor_mask(u) & mask;
                if anchors.count_ones() == 1 {
                    let pair = anchors | (1 << u);
                    let seed = self.seed(pair).expect("connected pair");
                    let ce = self.join_edge_cost(mask, pair);
                    let c = cost.clone() + seed.cost + self.freq(grown) + ce;
                    GreedyStep::offer(
                        &mut best,
                        c,
                        true,
                        u,
                        PatternPlan::join(plan.clone(), seed.plan),
                    );
                }
            }
            let step = best.expect("connected pattern can always grow");
            mask |= 1 << step.vertex;
            cost = step.cost;
            plan = step.plan;
        }
        (plan, cost)
    }

    /// Candidates for `mask`: expands ordered by the code of their
    /// source, then joins ordered by the codes of their sides.
    fn ordered_candidates(&mut self, mask: VMask) -> Vec<Candidate> {
        let cands = get_candidates(self.p, mask);
        let mut keyed: Vec<((u8, CanonicalCode, CanonicalCode, VMask, VMask), Candidate)> = cands
            .into_iter()
            .map(|c| {
                let key = match &c {
                    Candidate::Expand { source, .. } => {
                        (0, self.code(*source), CanonicalCode(Vec::new()), *source, 0)
                    }
                    Candidate::Join { left, right } => {
                        (1, self.code(*left), self.code(*right), *left, *right)
                    }
                };
                (key, c)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.into_iter().map(|(_, c)| c).collect()
    }

    fn known_cost(&self, mask: VMask) -> Option<S> {
        self.planmap.get(&mask).map(|e| e.cost.clone())
    }

    fn pruned(&mut self, lb: S) -> bool {
        if !self.pruning {
            return false;
        }
        match &self.cost_star {
            Some(star) if lb >= *star => {
                self.stats.pruned += 1;
                true
            }
            _ => false,
        }
    }

    /// Best plan for the subpattern on `mask`, if any branch survived.
    fn search(&mut self, mask: VMask) -> Option<S> {
        if let Some(c) = self.known_cost(mask) {
            return Some(c);
        }
        if mask.count_ones() <= 2 {
            let seed = self.seed(mask)?;
            let c = seed.cost.clone();
            self.planmap.insert(mask, seed);
            return Some(c);
        }
        let f = self.freq(mask);
        let mut best: Option<Entry<S>> = None;
        for cand in self.ordered_candidates(mask) {
            self.stats.candidates += 1;
            match cand {
                Candidate::Expand {
                    source,
                    vertex,
                    edges,
                } => {
                    let ce = self.expand_edge_cost(source, vertex, &edges);
                    let mut lb = self.freq(source) + ce.clone();
                    if let Some(k) = self.known_cost(source) {
                        if k > lb {
                            lb = k;
                        }
                    }
                    if self.pruned(lb) {
                        continue;
                    }
                    let Some(cs) = self.search(source) else {
                        continue;
                    };
                    let cost = cs + f.clone() + ce;
                    if best.as_ref().map_or(true, |b| cost < b.cost) {
                        let input = self.planmap[&source].plan.clone();
                        best = Some(Entry {
                            plan: PatternPlan::expand(input, vertex, edges),
                            cost,
                        });
                    }
                }
                Candidate::Join { left, right } => {
                    let ce = self.join_edge_cost(left, right);
                    let l = self.known_cost(left).unwrap_or_else(|| self.freq(left));
                    let r = self.known_cost(right).unwrap_or_else(|| self.freq(right));
                    if self.pruned(l + r + ce.clone()) {
                        continue;
                    }
                    let Some(c1) = self.search(left) else {
                        continue;
                    };
                    let Some(c2) = self.search(right) else {
                        continue;
                    };
                    let cost = c1 + c2 + f.clone() + ce;
                    if best.as_ref().map_or(true, |b| cost < b.cost) {
                        let lp = self.planmap[&left].plan.clone();
                        let rp = self.planmap[&right].plan.clone();
                        best = Some(Entry {
                            plan: PatternPlan::join(lp, rp),
                            cost,
                        });
                    }
                }
            }
        }
        let best = best?;
        let c = best.cost.clone();
        if mask == self.p.full_mask() && self.cost_star.as_ref().map_or(true, |s| c < *s) {
            self.cost_star = Some(c.clone());
        }
        self.planmap.insert(mask, best);
        Some(c)
    }

    /// Cheapest plan found; never worse than the greedy plan.
    pub fn optimize(&mut self) -> Result<Optimized<S>> {
        self.p.validate()?;
        let (greedy_plan, greedy_cost) = self.greedy_initial();
        self.cost_star = Some(greedy_cost.clone());
        self.planmap.clear();
        self.stats = SearchStats::default();
        let full = self.p.full_mask();
        let found = self.search(full);
        self.stats.planmap_entries = self.planmap.len() as u64;
        let (plan, cost) = match found {
            Some(c) if c < greedy_cost => (self.planmap[&full].plan.clone(), c),
            _ => (greedy_plan, greedy_cost.clone()),
        };
        Ok(Optimized {
            plan,
            cost,
            greedy_cost,
            stats: self.stats,
        })
    }
}

/// Fraction of candidate vertices and edges passing each pushed predicate.
pub fn predicate_selectivity<S: Scalar>(
    g: &PropertyGraph,
    p: &Pattern,
    params: &Params,
) -> Result<(Vec<S>, Vec<S>)> {
    use crate::executor::{edge_matches, vertex_matches};
    let mut vs = Vec::with_capacity(p.vertex_count());
    for (i, v) in p.vertices.iter().enumerate() {
        if v.predicate.is_none() {
            vs.push(S::one());
            continue;
        }
        let (mut total, mut pass) = (0u64, 0u64);
        for t in v.types.iter() {
            for &x in g.vertices_of_type(t) {
                total += 1;
                if vertex_matches(g, p, i, x, params)? {
                    pass += 1;
                }
            }
        }
        vs.push(S::ratio(S::from_count(pass), S::from_count(total)));
    }
    let mut es = Vec::with_capacity(p.edge_count());
    for (i, e) in p.edges.iter().enumerate() {
        if e.predicate.is_none() {
            es.push(S::one());
            continue;
        }
        let (mut total, mut pass) = (0u64, 0u64);
        for (id, edge) in g.edges() {
            if e.types.contains(edge.etype) {
                total += 1;
                if edge_matches(g, p, i, id, params)? {
                    pass += 1;
                }
            }
        }
        es.push(S::ratio(S::from_count(pass), S::from_count(total)));
    }
    Ok((vs, es))
}

/// Attaches the relational tail; an ORDER directly followed by LIMIT
/// takes the limit as a top-k hint.
pub fn finalize_plan(
    pattern: Pattern,
    plan: PatternPlan,
    tail: &[LogicalOp],
) -> Result<PhysicalPlan> {
    let mut ops: Vec<LogicalOp> = tail.to_vec();
    for i in 0..ops.len() {
        if let Some(LogicalOp::Limit { n }) = ops.get(i + 1).cloned() {
            if let LogicalOp::Order { limit, .. } = &mut ops[i] {
                *limit = Some(limit.map_or(n, |l| l.min(n)));
            }
        }
    }
    if ops
        .iter()
        .any(|op| op.is_graph_op() || matches!(op, LogicalOp::MatchPattern { .. }))
    {
        return Err(Error::Plan(
            "graph operators after the pattern stage".into(),
        ));
    }
    PhysicalPlan::new(pattern, plan, ops)
}

#[cfg(test)]
mod tests;
