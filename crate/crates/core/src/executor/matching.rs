use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use super::plan::PatternPlan;
use crate::error::{Error, Result};
use crate::graph::{Direction, EdgeFilter, EdgeId, PropertyGraph, VertexId};
use crate::ir::{Bindings, EdgeDir, Expr, Params, Pattern, VMask, Value};

/// Slot value of a not yet bound vertex or edge.
pub const UNBOUND: u32 = u32::MAX;

/// One binding: `n` vertex slots followed by `m` edge slots.
pub type Row = Vec<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Scan,
    Expand,
    Join,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Scan => "SCAN",
            OpKind::Expand => "EXPAND",
            OpKind::Join => "JOIN",
        }
    }
}

/// Work done by one pattern operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpStats {
    pub kind: OpKind,
    /// Vertices bound by the operator's output.
    pub mask: VMask,
    pub rows_out: u64,
    /// Scan: vertices read from the type index. Expand: candidate
    /// neighbours tested. Join: probe rows.
    pub examined: u64,
}

/// Evaluates a predicate that mentions a single graph element.
struct Single<'a> {
    g: &'a PropertyGraph,
    alias: &'a str,
    value: Value,
}

impl Bindings for Single<'_> {
    fn var(&self, alias: &str) -> Result<Value> {
        if alias == self.alias {
            Ok(self.value.clone())
        } else {
            Err(Error::UnknownAlias(alias.to_string()))
        }
    }

    fn prop(&self, alias: &str, prop: &str) -> Result<Value> {
        if alias != self.alias {
            return Err(Error::UnknownAlias(alias.to_string()));
        }
        Ok(element_prop(self.g, &self.value, prop))
    }
}

/// Property of a vertex or edge value; missing properties are null.
pub(crate) fn element_prop(g: &PropertyGraph, value: &Value, prop: &str) -> Value {
    let p = match value {
        Value::Vertex(v) => g.vertex_property(*v, prop),
        Value::Edge(e) => g.edge_property(*e, prop),
        _ => None,
    };
    p.map(Value::from).unwrap_or(Value::Null)
}

fn passes(
    g: &PropertyGraph,
    pred: &Option<Expr>,
    alias: &str,
    value: Value,
    params: &Params,
) -> Result<bool> {
    match pred {
        None => Ok(true),
        Some(e) => e.eval_filter(&Single { g, alias, value }, params),
    }
}

/// Whether data vertex `x` satisfies the type constraint and predicate of
/// pattern vertex `v`.
pub fn vertex_ok(
    g: &PropertyGraph,
    p: &Pattern,
    v: usize,
    x: VertexId,
    params: &Params,
) -> Result<bool> {
    let pv = &p.vertices[v];
    if !pv.types.contains(g.vertex(x).vtype) {
        return Ok(false);
    }
    passes(g, &pv.predicate, &pv.alias, Value::Vertex(x), params)
}

/// Whether data edge `id` satisfies the constraint and predicate of pattern
/// edge `e`.
pub fn edge_ok(
    g: &PropertyGraph,
    p: &Pattern,
    e: usize,
    id: EdgeId,
    params: &Params,
) -> Result<bool> {
    let pe = &p.edges[e];
    if !pe.types.contains(g.edge(id).etype) {
        return Ok(false);
    }
    passes(g, &pe.predicate, &pe.alias, Value::Edge(id), params)
}

/// Executes pattern plans, recording per-operator statistics.
pub struct Matcher<'a> {
    g: &'a PropertyGraph,
    p: &'a Pattern,
    params: &'a Params,
    max_rows: usize,
    workers: usize,
    deadline: Option<Instant>,
    pub stats: Vec<OpStats>,
}

/// Rows per parallel expand task.
const CHUNK: usize = 1024;

impl<'a> Matcher<'a> {
    pub fn new(g: &'a PropertyGraph, p: &'a Pattern, params: &'a Params, max_rows: usize) -> Self {
        Matcher {
            g,
            p,
            params,
            max_rows,
            workers: 1,
            deadline: None,
            stats: Vec::new(),
        }
    }

    /// Splits expansions over `n` threads; results keep the sequential order.
    pub fn with_workers(mut self, n: usize) -> Self {
        self.workers = n.max(1);
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    fn width(&self) -> usize {
        self.p.vertex_count() + self.p.edge_count()
    }

    fn guard(&self, rows: usize) -> Result<()> {
        if rows > self.max_rows {
            return Err(Error::Guard(format!(
                "intermediate result exceeds {} rows",
                self.max_rows
            )));
        }
        if rows % 4096 == 0 {
            self.check_deadline()?;
        }
        Ok(())
    }

    fn check_deadline(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() > d => {
                Err(Error::Guard("query exceeded its time limit".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn run(&mut self, plan: &PatternPlan) -> Result<Vec<Row>> {
        match plan {
            PatternPlan::Scan { vertex } => self.scan(*vertex),
            PatternPlan::Expand {
                input,
                vertex,
                edges,
            } => {
                let rows = self.run(input)?;
                self.expand(rows, input.mask(), *vertex, edges)
            }
            PatternPlan::Join { left, right } => {
                let l = self.run(left)?;
                let r = self.run(right)?;
                self.join(l, left.mask(), r, right.mask())
            }
        }
    }

    fn scan(&mut self, v: usize) -> Result<Vec<Row>> {
        let mut rows = Vec::new();
        let mut examined = 0;
        for t in self.p.vertices[v].types.iter() {
            for &x in self.g.vertices_of_type(t) {
                examined += 1;
                if vertex_ok(self.g, self.p, v, x, self.params)? {
                    let mut row = vec![UNBOUND; self.width()];
                    row[v] = x.0;
                    rows.push(row);
                    self.guard(rows.len())?;
                }
            }
        }
        self.stats.push(OpStats {
            kind: OpKind::Scan,
            mask: 1 << v,
            rows_out: rows.len() as u64,
            examined,
        });
        Ok(rows)
    }

    /// `(neighbour, edge)` pairs that can bind pattern edge `e` from the
    /// bound vertex `anchor`, sorted and deduplicated.
    fn edge_list(&self, e: usize, anchor_slot: usize, anchor: VertexId) -> Result<Vec<(u32, u32)>> {
        let pe = &self.p.edges[e];
        let mut out = Vec::new();
        let sides: &[bool] = match pe.dir {
            EdgeDir::Both => &[true, false],
            EdgeDir::Out if pe.src == anchor_slot => &[true],
            EdgeDir::Out => &[false],
        };
        for &outgoing in sides {
            for t in pe.types.iter() {
                for a in self.g.adjacency_typed(anchor, outgoing, t) {
                    if edge_ok(self.g, self.p, e, a.edge, self.params)? {
                        out.push((a.neighbor.0, a.edge.0));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn expand(
        &mut self,
        rows: Vec<Row>,
        mask: VMask,
        v: usize,
        edges: &[usize],
    ) -> Result<Vec<Row>> {
        self.check_deadline()?;
        let (out, examined) = if self.workers > 1 && rows.len() > CHUNK {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::Plan(format!("cannot start workers: {e}")))?;
            let this = &*self;
            let parts: Vec<(Vec<Row>, u64)> = pool.install(|| {
                rows.par_chunks(CHUNK)
                    .map(|c| this.expand_rows(c, mask, v, edges))
                    .collect::<Result<_>>()
            })?;
            let mut out = Vec::new();
            let mut examined = 0;
            for (rows, n) in parts {
                out.extend(rows);
                examined += n;
                self.guard(out.len())?;
            }
            (out, examined)
        } else {
            self.expand_rows(&rows, mask, v, edges)?
        };
        self.stats.push(OpStats {
            kind: OpKind::Expand,
            mask: mask | (1 << v),
            rows_out: out.len() as u64,
            examined,
        });
        Ok(out)
    }

    fn expand_rows(
        &self,
        rows: &[Row],
        mask: VMask,
        v: usize,
        edges: &[usize],
    ) -> Result<(Vec<Row>, u64)> {
        let mut out = Vec::new();
        let mut examined = 0u64;
        let edge_base = self.p.vertex_count();
        let mut vertex_cache: HashMap<u32, bool> = HashMap::new();
        for row in rows {
            let mut lists = Vec::with_capacity(edges.len());
            for &e in edges {
                let anchor = self.p.edges[e].other(v);
                debug_assert!(mask & (1 << anchor) != 0);
                lists.push(self.edge_list(e, anchor, VertexId(row[anchor]))?);
            }
            let driver = (0..lists.len())
                .min_by_key(|&i| lists[i].len())
                .expect("expand has edges");
            let mut i = 0;
            while i < lists[driver].len() {
                let x = lists[driver][i].0;
                let run_end = i + lists[driver][i..].partition_point(|&(n, _)| n == x);
                examined += 1;
                // Range of each list whose neighbour is `x`.
                let mut ranges = Vec::with_capacity(lists.len());
                for l in &lists {
                    let lo = l.partition_point(|&(n, _)| n < x);
                    let hi = l.partition_point(|&(n, _)| n <= x);
                    if lo == hi {
                        break;
                    }
                    ranges.push((lo, hi));
                }
                let ok = ranges.len() == lists.len() && {
                    match vertex_cache.get(&x) {
                        Some(&b) => b,
                        None => {
                            let b = vertex_ok(self.g, self.p, v, VertexId(x), self.params)?;
                            vertex_cache.insert(x, b);
                            b
                        }
                    }
                };
                if ok {
                    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                    loop {
                        let mut r = row.clone();
                        r[v] = x;
                        for (k, &e) in edges.iter().enumerate() {
                            r[edge_base + e] = lists[k][idx[k]].1;
                        }
                        out.push(r);
                        self.guard(out.len())?;
                        let mut k = 0;
                        while k < idx.len() {
                            idx[k] += 1;
                            if idx[k] < ranges[k].1 {
                                break;
                            }
                            idx[k] = ranges[k].0;
                            k += 1;
                        }
                        if k == idx.len() {
                            break;
                        }
                    }
                }
                i = run_end;
            }
        }
        Ok((out, examined))
    }

    fn join(
        &mut self,
        left: Vec<Row>,
        lmask: VMask,
        right: Vec<Row>,
        rmask: VMask,
    ) -> Result<Vec<Row>> {
        let shared = lmask & rmask;
        let n = self.p.vertex_count();
        let mut slots: Vec<usize> = (0..n).filter(|&v| shared & (1 << v) != 0).collect();
        slots.extend(self.p.edges_within(shared).into_iter().map(|e| n + e));
        let (build, probe) = if left.len() <= right.len() {
            (&left, &right)
        } else {
            (&right, &left)
        };
        let mut table: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for (i, row) in build.iter().enumerate() {
            table
                .entry(slots.iter().map(|&s| row[s]).collect())
                .or_default()
                .push(i);
        }
        let mut out = Vec::new();
        for row in probe {
            let key: Vec<u32> = slots.iter().map(|&s| row[s]).collect();
            if let Some(matches) = table.get(&key) {
                for &i in matches {
                    let mut merged = row.clone();
                    for (slot, &val) in build[i].iter().enumerate() {
                        if merged[slot] == UNBOUND {
                            merged[slot] = val;
                        }
                    }
                    out.push(merged);
                    self.guard(out.len())?;
                }
            }
        }
        self.stats.push(OpStats {
            kind: OpKind::Join,
            mask: lmask | rmask,
            rows_out: out.len() as u64,
            examined: probe.len() as u64,
        });
        Ok(out)
    }
}

/// Reference matcher: binds vertices by depth-first search, then
/// enumerates every edge assignment between the bound endpoints.
/// Shares no code with the plan operators.
pub fn brute_force_match(
    g: &PropertyGraph,
    p: &Pattern,
    params: &Params,
    max_rows: usize,
) -> Result<Vec<Row>> {
    let n = p.vertex_count();
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    // Visit order: breadth first from vertex 0, each with its parent edge.
    let mut order = vec![(0usize, None::<usize>)];
    let mut seen: VMask = 1;
    let mut head = 0;
    while head < order.len() {
        let u = order[head].0;
        head += 1;
        for (e, pe) in p.edges.iter().enumerate() {
            if pe.touches(u) {
                let w = pe.other(u);
                if seen & (1 << w) == 0 {
                    seen |= 1 << w;
                    order.push((w, Some(e)));
                }
            }
        }
    }
    if order.len() != n {
        return Err(Error::Pattern("pattern is not connected".into()));
    }
    let mut out = Vec::new();
    let mut assign = vec![VertexId(UNBOUND); n];
    let mut state = Brute {
        g,
        p,
        params,
        order: &order,
        max_rows,
        out: &mut out,
    };
    state.bind_vertex(0, &mut assign)?;
    Ok(out)
}

struct Brute<'a, 'b> {
    g: &'a PropertyGraph,
    p: &'a Pattern,
    params: &'a Params,
    order: &'a [(usize, Option<usize>)],
    max_rows: usize,
    out: &'b mut Vec<Row>,
}

impl Brute<'_, '_> {
    fn connecting(&self, e: usize, assign: &[VertexId]) -> Result<Vec<EdgeId>> {
        let pe = &self.p.edges[e];
        let (s, d) = (assign[pe.src], assign[pe.dst]);
        let dir = match pe.dir {
            EdgeDir::Out => Direction::Out,
            EdgeDir::Both => Direction::Both,
        };
        let mut ids = Vec::new();
        for (id, nb) in self.g.neighbors(s, dir, EdgeFilter::All)? {
            if nb == d && edge_ok(self.g, self.p, e, id, self.params)? {
                ids.push(id);
            }
        }
        Ok(ids)
    }

    fn bind_vertex(&mut self, k: usize, assign: &mut [VertexId]) -> Result<()> {
        if k == self.order.len() {
            return self.bind_edges(assign);
        }
        let (v, parent) = self.order[k];
        let candidates: Vec<VertexId> = match parent {
            None => self.g.vertices().map(|(id, _)| id).collect(),
            Some(e) => {
                let pe = &self.p.edges[e];
                let from = pe.other(v);
                let dir = match pe.dir {
                    EdgeDir::Both => Direction::Both,
                    EdgeDir::Out if pe.src == from => Direction::Out,
                    EdgeDir::Out => Direction::In,
                };
                let mut c: Vec<VertexId> = self
                    .g
                    .neighbors(assign[from], dir, EdgeFilter::All)?
                    .into_iter()
                    .map(|(_, nb)| nb)
                    .collect();
                c.sort_unstable();
                c.dedup();
                c
            }
        };
        for x in candidates {
            if !vertex_ok(self.g, self.p, v, x, self.params)? {
                continue;
            }
            assign[v] = x;
            self.bind_vertex(k + 1, assign)?;
        }
        assign[v] = VertexId(UNBOUND);
        Ok(())
    }

    fn bind_edges(&mut self, assign: &[VertexId]) -> Result<()> {
        let mut choices = Vec::with_capacity(self.p.edge_count());
        for e in 0..self.p.edge_count() {
            let ids = self.connecting(e, assign)?;
            if ids.is_empty() {
                return Ok(());
            }
            choices.push(ids);
        }
        let n = self.p.vertex_count();
        let base: Row = assign.iter().map(|v| v.0).collect();
        let mut idx = vec![0usize; choices.len()];
        loop {
            let mut row = base.clone();
            row.resize(n + choices.len(), UNBOUND);
            for (e, &i) in idx.iter().enumerate() {
                row[n + e] = choices[e][i].0;
            }
            self.out.push(row);
            if self.out.len() > self.max_rows {
                return Err(Error::Guard(format!("more than {} matches", self.max_rows)));
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                return Ok(());
            }
        }
    }
}

/// Rows in which no data edge is bound to two pattern edges.
pub fn edge_distinct(p: &Pattern, rows: Vec<Row>) -> Vec<Row> {
    let n = p.vertex_count();
    rows.into_iter()
        .filter(|r| {
            let mut es: Vec<u32> = r[n..].to_vec();
            es.sort_unstable();
            es.windows(2).all(|w| w[0] != w[1])
        })
        .collect()
}
