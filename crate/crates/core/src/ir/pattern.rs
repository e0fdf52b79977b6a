use std::collections::{BTreeMap, BTreeSet};

use super::expr::Expr;
use super::ops::{validate_tags, Columns, GetVOpt, LogicalOp, LogicalPlan, ScanTarget};
use super::types::{EdgeConstraint, VertexConstraint};
use crate::error::{Error, Result};
use crate::graph::{Direction, ETypeId, GraphSchema, VTypeId};

/// Bitset over pattern vertex indices.
pub type VMask = u64;

pub const MAX_PATTERN_VERTICES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeDir {
    /// From `src` to `dst`.
    Out,
    /// Either orientation between the two endpoints.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternVertex {
    pub alias: String,
    pub types: VertexConstraint,
    pub predicate: Option<Expr>,
    pub columns: Columns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternEdge {
    pub alias: String,
    pub src: usize,
    pub dst: usize,
    pub types: EdgeConstraint,
    pub dir: EdgeDir,
    pub predicate: Option<Expr>,
    pub columns: Columns,
}

impl PatternEdge {
    pub fn other(&self, v: usize) -> usize {
        if self.src == v {
            self.dst
        } else {
            self.src
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.src == v || self.dst == v
    }
}

/// A fixed-length path alias over lowered hop edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBinding {
    pub alias: String,
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

/// Aliases synthesized by the compiler start with `#` and are never
/// visible in query results.
pub fn is_hidden(alias: &str) -> bool {
    alias.starts_with('#')
}

/// Whether triplet `t` can bind an edge between endpoints with the given
/// constraints, as `(forward, backward)` orientations.
pub fn triplet_fits(
    schema: &GraphSchema,
    t: ETypeId,
    src: &VertexConstraint,
    dst: &VertexConstraint,
    dir: EdgeDir,
) -> (bool, bool) {
    let tr = schema.triplet(t);
    let fwd = src.contains(tr.src) && dst.contains(tr.dst);
    let bwd = dir == EdgeDir::Both && src.contains(tr.dst) && dst.contains(tr.src);
    (fwd, bwd)
}

/// Query pattern graph with typed, optionally filtered vertices and edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pattern {
    pub vertices: Vec<PatternVertex>,
    pub edges: Vec<PatternEdge>,
    pub paths: Vec<PathBinding>,
}

impl Pattern {
    pub fn new() -> Pattern {
        Pattern::default()
    }

    pub fn add_vertex(&mut self, alias: &str, types: VertexConstraint) -> usize {
        self.vertices.push(PatternVertex {
            alias: alias.to_string(),
            types,
            predicate: None,
            columns: None,
        });
        self.vertices.len() - 1
    }

    pub fn add_edge(
        &mut self,
        alias: &str,
        src: usize,
        dst: usize,
        types: EdgeConstraint,
        dir: EdgeDir,
    ) -> usize {
        self.edges.push(PatternEdge {
            alias: alias.to_string(),
            src,
            dst,
            types,
            dir,
            predicate: None,
            columns: None,
        });
        self.edges.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, alias: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.alias == alias)
    }

    pub fn edge_index(&self, alias: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.alias == alias)
    }

    pub fn full_mask(&self) -> VMask {
        if self.vertices.len() >= 64 {
            u64::MAX
        } else {
            (1u64 << self.vertices.len()) - 1
        }
    }

    pub fn incident(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].touches(v))
            .collect()
    }

    /// Edges with both endpoints inside `mask`.
    pub fn edges_within(&self, mask: VMask) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| {
                let ed = &self.edges[e];
                mask & (1 << ed.src) != 0 && mask & (1 << ed.dst) != 0
            })
            .collect()
    }

    /// Edges joining `v` to a vertex of `mask` (which must not contain `v`).
    pub fn edges_between(&self, v: usize, mask: VMask) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| {
                let ed = &self.edges[e];
                ed.touches(v) && mask & (1 << ed.other(v)) != 0
            })
            .collect()
    }

    pub fn neighbor_mask(&self, v: usize) -> VMask {
        self.edges
            .iter()
            .filter(|e| e.touches(v))
            .fold(0, |m, e| m | (1 << e.other(v)))
    }

    /// Whether the subpattern induced by `mask` is connected (and non-empty).
    pub fn is_connected_mask(&self, mask: VMask) -> bool {
        if mask == 0 {
            return false;
        }
        let start = mask.trailing_zeros() as usize;
        let mut seen: VMask = 1 << start;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let nbrs = self.neighbor_mask(v) & mask & !seen;
            let mut rest = nbrs;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                seen |= 1 << u;
                stack.push(u);
            }
        }
        seen == mask
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_mask(self.full_mask())
    }

    /// Subpattern induced by `mask`, vertices in index order. Paths are dropped.
    pub fn induced(&self, mask: VMask) -> Pattern {
        let mut remap = BTreeMap::new();
        let mut out = Pattern::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if mask & (1 << i) != 0 {
                remap.insert(i, out.vertices.len());
                out.vertices.push(v.clone());
            }
        }
        for e in self.edges_within(mask) {
            let mut ed = self.edges[e].clone();
            ed.src = remap[&ed.src];
            ed.dst = remap[&ed.dst];
            out.edges.push(ed);
        }
        out
    }

    /// Structural checks: unique aliases, valid endpoints, no self-loops,
    /// connectivity, size guard.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::Pattern("pattern has no vertices".into()));
        }
        if self.vertices.len() > MAX_PATTERN_VERTICES {
            return Err(Error::Guard(format!(
                "pattern has {} vertices (limit {MAX_PATTERN_VERTICES})",
                self.vertices.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for a in self
            .vertices
            .iter()
            .map(|v| &v.alias)
            .chain(self.edges.iter().map(|e| &e.alias))
            .chain(self.paths.iter().map(|p| &p.alias))
        {
            if !seen.insert(a) {
                return Err(Error::Pattern(format!("duplicate alias `{a}`")));
            }
        }
        for e in &self.edges {
            if e.src >= self.vertices.len() || e.dst >= self.vertices.len() {
                return Err(Error::Pattern(format!(
                    "edge `{}` has a dangling endpoint",
                    e.alias
                )));
            }
            if e.src == e.dst {
                return Err(Error::Pattern(format!(
                    "edge `{}` is a self-loop; self-loop pattern edges are not supported",
                    e.alias
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::Pattern("pattern is disconnected".into()));
        }
        Ok(())
    }

    /// Visible aliases in result-column order: vertices, edges, paths.
    pub fn visible_aliases(&self) -> Vec<String> {
        self.vertices
            .iter()
            .map(|v| v.alias.clone())
            .chain(self.edges.iter().map(|e| e.alias.clone()))
            .chain(self.paths.iter().map(|p| p.alias.clone()))
            .filter(|a| !is_hidden(a))
            .collect()
    }

    pub fn has_predicates(&self) -> bool {
        self.vertices.iter().any(|v| v.predicate.is_some())
            || self.edges.iter().any(|e| e.predicate.is_some())
    }

    /// Every basic type the pattern could bind, for diagnostics.
    pub fn vertex_types(&self, v: usize) -> Vec<VTypeId> {
        self.vertices[v].types.iter().collect()
    }
}

struct PendingEdge {
    types: EdgeConstraint,
    dir: Direction,
    from: Option<usize>,
    src: Option<usize>,
    dst: Option<usize>,
    predicate: Option<Expr>,
    columns: Columns,
}

struct PendingPath {
    from: usize,
    types: EdgeConstraint,
    dir: Direction,
    hops: u32,
}

enum Bound {
    Vertex(usize),
    Edge,
    PendingEdge,
    PendingPath,
    Path,
}

/// Converts the sentences of a MATCH_PATTERN into a [`Pattern`].
///
/// Repeated vertex aliases denote one vertex; their constraints are
/// intersected and their predicates conjoined. Multi-hop expansions are
/// lowered into one edge per hop with hidden intermediate vertices.
pub fn match_to_pattern(sentences: &[Vec<LogicalOp>], schema: &GraphSchema) -> Result<Pattern> {
    validate_tags(sentences)?;
    let mut p = Pattern::new();
    let mut bound: BTreeMap<String, Bound> = BTreeMap::new();
    let mut pending_edges: BTreeMap<String, PendingEdge> = BTreeMap::new();
    let mut pending_paths: BTreeMap<String, PendingPath> = BTreeMap::new();
    let mut fused = 0usize;

    fn bind_vertex(
        p: &mut Pattern,
        bound: &mut BTreeMap<String, Bound>,
        alias: &str,
        types: &VertexConstraint,
        predicate: &Option<Expr>,
        columns: &Columns,
    ) -> Result<usize> {
        match bound.get(alias) {
            Some(Bound::Vertex(i)) => {
                let i = *i;
                let v = &mut p.vertices[i];
                let merged = v.types.intersect(types);
                if merged.is_empty() {
                    return Err(Error::Pattern(format!(
                        "conflicting type constraints on `{alias}`"
                    )));
                }
                v.types = merged;
                if let Some(pred) = predicate {
                    v.predicate = match v.predicate.take() {
                        Some(old) if &old == pred => Some(old),
                        Some(old) => Some(Expr::and(old, pred.clone())),
                        None => Some(pred.clone()),
                    };
                }
                v.columns = match (v.columns.take(), columns) {
                    (Some(a), Some(b)) => Some(a.union(b).cloned().collect()),
                    _ => None,
                };
                Ok(i)
            }
            Some(_) => Err(Error::Pattern(format!(
                "`{alias}` is bound to an edge or path, not a vertex"
            ))),
            None => {
                if types.is_empty() {
                    return Err(Error::Pattern(format!(
                        "empty type constraint on `{alias}`"
                    )));
                }
                let i = p.add_vertex(alias, types.clone());
                p.vertices[i].predicate = predicate.clone();
                p.vertices[i].columns = columns.clone();
                bound.insert(alias.to_string(), Bound::Vertex(i));
                Ok(i)
            }
        }
    }

    let fresh_alias = |bound: &BTreeMap<String, Bound>, alias: &str| -> Result<()> {
        if bound.contains_key(alias) {
            Err(Error::Pattern(format!(
                "alias `{alias}` is bound more than once"
            )))
        } else {
            Ok(())
        }
    };

    for sentence in sentences {
        let mut prev: Option<String> = None;
        for op in sentence {
            let resolve = |tag: &str| -> String {
                if tag.is_empty() {
                    prev.clone().unwrap_or_default()
                } else {
                    tag.to_string()
                }
            };
            let vertex_of = |bound: &BTreeMap<String, Bound>, tag: &str| -> Result<usize> {
                match bound.get(tag) {
                    Some(Bound::Vertex(i)) => Ok(*i),
                    _ => Err(Error::Pattern(format!("tag `{tag}` is not a vertex"))),
                }
            };
            match op {
                LogicalOp::Scan {
                    alias,
                    target,
                    predicate,
                    columns,
                } => match target {
                    ScanTarget::Vertex(types) => {
                        bind_vertex(&mut p, &mut bound, alias, types, predicate, columns)?;
                    }
                    ScanTarget::Edge(types) => {
                        fresh_alias(&bound, alias)?;
                        pending_edges.insert(
                            alias.clone(),
                            PendingEdge {
                                types: types.clone(),
                                dir: Direction::Out,
                                from: None,
                                src: None,
                                dst: None,
                                predicate: predicate.clone(),
                                columns: columns.clone(),
                            },
                        );
                        bound.insert(alias.clone(), Bound::PendingEdge);
                    }
                },
                LogicalOp::ExpandEdge {
                    tag,
                    alias,
                    types,
                    dir,
                    predicate,
                    columns,
                } => {
                    let from = vertex_of(&bound, &resolve(tag))?;
                    fresh_alias(&bound, alias)?;
                    pending_edges.insert(
                        alias.clone(),
                        PendingEdge {
                            types: types.clone(),
                            dir: *dir,
                            from: Some(from),
                            src: None,
                            dst: None,
                            predicate: predicate.clone(),
                            columns: columns.clone(),
                        },
                    );
                    bound.insert(alias.clone(), Bound::PendingEdge);
                }
                LogicalOp::ExpandPath {
                    tag,
                    alias,
                    types,
                    dir,
                    hops,
                } => {
                    if *hops == 0 {
                        return Err(Error::Pattern(format!("path `{alias}` has zero hops")));
                    }
                    let from = vertex_of(&bound, &resolve(tag))?;
                    fresh_alias(&bound, alias)?;
                    pending_paths.insert(
                        alias.clone(),
                        PendingPath {
                            from,
                            types: types.clone(),
                            dir: *dir,
                            hops: *hops,
                        },
                    );
                    bound.insert(alias.clone(), Bound::PendingPath);
                }
                LogicalOp::Expand {
                    tag,
                    alias,
                    edge_types,
                    dir,
                    edge_predicate,
                    types,
                    predicate,
                    columns,
                } => {
                    let from = vertex_of(&bound, &resolve(tag))?;
                    let to = bind_vertex(&mut p, &mut bound, alias, types, predicate, columns)?;
                    let name = format!("#fused{fused}");
                    fused += 1;
                    let (s, d, ed) = orient(from, to, *dir);
                    let e = p.add_edge(&name, s, d, edge_types.clone(), ed);
                    // The edge predicate names the edge by its pre-fusion alias.
                    p.edges[e].predicate = edge_predicate
                        .as_ref()
                        .map(|pred| pred.rename_aliases(&|_| name.clone()));
                    p.edges[e].columns = Some(BTreeSet::new());
                    bound.insert(name, Bound::Edge);
                }
                LogicalOp::GetVertex {
                    tag,
                    alias,
                    types,
                    opt,
                    predicate,
                    columns,
                } => {
                    let tag = resolve(tag);
                    match bound.get(&tag) {
                        Some(Bound::PendingEdge) => {
                            let v =
                                bind_vertex(&mut p, &mut bound, alias, types, predicate, columns)?;
                            let pe = pending_edges.get_mut(&tag).unwrap();
                            if let Some(from) = pe.from {
                                let expected = match pe.dir {
                                    Direction::Out => GetVOpt::Target,
                                    Direction::In => GetVOpt::Source,
                                    Direction::Both => GetVOpt::Other,
                                };
                                if *opt != expected {
                                    return Err(Error::Pattern(format!(
                                        "GET_VERTEX on `{tag}` must use {expected:?}"
                                    )));
                                }
                                let (s, d, ed) = orient(from, v, pe.dir);
                                pe.src = Some(s);
                                pe.dst = Some(d);
                                if ed == EdgeDir::Both {
                                    pe.dir = Direction::Both;
                                } else {
                                    pe.dir = Direction::Out;
                                }
                            } else {
                                match opt {
                                    GetVOpt::Source if pe.src.is_none() => pe.src = Some(v),
                                    GetVOpt::Target if pe.dst.is_none() => pe.dst = Some(v),
                                    _ => {
                                        return Err(Error::Pattern(format!(
                                            "endpoint of `{tag}` bound twice or with OTHER"
                                        )))
                                    }
                                }
                            }
                            if let (Some(s), Some(d)) = (pe.src, pe.dst) {
                                let pe = pending_edges.remove(&tag).unwrap();
                                let dir = if pe.dir == Direction::Both {
                                    EdgeDir::Both
                                } else {
                                    EdgeDir::Out
                                };
                                let e = p.add_edge(&tag, s, d, pe.types, dir);
                                p.edges[e].predicate = pe.predicate;
                                p.edges[e].columns = pe.columns;
                                bound.insert(tag.clone(), Bound::Edge);
                            }
                        }
                        Some(Bound::PendingPath) => {
                            let v =
                                bind_vertex(&mut p, &mut bound, alias, types, predicate, columns)?;
                            let pp = pending_paths.remove(&tag).unwrap();
                            let mut vs = vec![pp.from];
                            let mut es = Vec::new();
                            for h in 0..pp.hops {
                                let next = if h + 1 == pp.hops {
                                    v
                                } else {
                                    let name = format!("#{tag}.v{}", h + 1);
                                    let i =
                                        p.add_vertex(&name, VertexConstraint::any_vertex(schema));
                                    bound.insert(name, Bound::Vertex(i));
                                    i
                                };
                                let (s, d, ed) = orient(*vs.last().unwrap(), next, pp.dir);
                                let name = format!("#{tag}.e{h}");
                                let e = p.add_edge(&name, s, d, pp.types.clone(), ed);
                                bound.insert(name, Bound::Edge);
                                es.push(e);
                                vs.push(next);
                            }
                            p.paths.push(PathBinding {
                                alias: tag.clone(),
                                vertices: vs,
                                edges: es,
                            });
                            bound.insert(tag.clone(), Bound::Path);
                        }
                        _ => {
                            return Err(Error::Pattern(format!(
                                "GET_VERTEX tag `{tag}` is not an open edge or path"
                            )))
                        }
                    }
                }
                other => {
                    return Err(Error::Plan(format!(
                        "{} cannot appear inside a MATCH_PATTERN",
                        other.name()
                    )))
                }
            }
            prev = op.alias().map(str::to_string);
        }
    }
    if let Some(alias) = pending_edges.keys().next() {
        return Err(Error::Pattern(format!(
            "edge `{alias}` has an unbound endpoint"
        )));
    }
    if let Some(alias) = pending_paths.keys().next() {
        return Err(Error::Pattern(format!(
            "path `{alias}` has an unbound endpoint"
        )));
    }
    p.validate()?;
    Ok(p)
}

/// Lifts the first MATCH_PATTERN of a plan.
pub fn plan_to_pattern(plan: &LogicalPlan, schema: &GraphSchema) -> Result<Pattern> {
    let sentences = plan
        .match_sentences()
        .ok_or_else(|| Error::Plan("plan has no MATCH_PATTERN".into()))?;
    match_to_pattern(sentences, schema)
}

fn orient(from: usize, to: usize, dir: Direction) -> (usize, usize, EdgeDir) {
    match dir {
        Direction::Out => (from, to, EdgeDir::Out),
        Direction::In => (to, from, EdgeDir::Out),
        Direction::Both => (from, to, EdgeDir::Both),
    }
}

/// Emits graph operators that rebuild `p` when visited in `order`.
///
/// Each vertex after the first is reached through its lowest-indexed edge
/// to an already visited vertex; further edges to visited vertices close
/// cycles by re-binding the same alias.
pub fn pattern_to_ops(p: &Pattern, order: &[usize]) -> Result<Vec<LogicalOp>> {
    let n = p.vertex_count();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&v| v >= n) {
        return Err(Error::Pattern("order must visit every vertex once".into()));
    }
    for &v in order {
        if seen[v] {
            return Err(Error::Pattern("order visits a vertex twice".into()));
        }
        seen[v] = true;
    }
    let mut ops = Vec::new();
    let mut visited: VMask = 0;
    for (k, &v) in order.iter().enumerate() {
        let pv = &p.vertices[v];
        if k == 0 {
            ops.push(LogicalOp::Scan {
                alias: pv.alias.clone(),
                target: ScanTarget::Vertex(pv.types.clone()),
                predicate: pv.predicate.clone(),
                columns: pv.columns.clone(),
            });
            visited |= 1 << v;
            continue;
        }
        let edges = p.edges_between(v, visited);
        if edges.is_empty() {
            return Err(Error::Pattern(format!(
                "vertex `{}` is visited before any neighbor",
                pv.alias
            )));
        }
        for (i, &e) in edges.iter().enumerate() {
            let pe = &p.edges[e];
            let from = pe.other(v);
            let dir = match pe.dir {
                EdgeDir::Both => Direction::Both,
                EdgeDir::Out if pe.src == from => Direction::Out,
                EdgeDir::Out => Direction::In,
            };
            let opt = match dir {
                Direction::Out => GetVOpt::Target,
                Direction::In => GetVOpt::Source,
                Direction::Both => GetVOpt::Other,
            };
            ops.push(LogicalOp::ExpandEdge {
                tag: p.vertices[from].alias.clone(),
                alias: pe.alias.clone(),
                types: pe.types.clone(),
                dir,
                predicate: pe.predicate.clone(),
                columns: pe.columns.clone(),
            });
            ops.push(LogicalOp::GetVertex {
                tag: pe.alias.clone(),
                alias: pv.alias.clone(),
                types: pv.types.clone(),
                opt,
                predicate: if i == 0 { pv.predicate.clone() } else { None },
                columns: pv.columns.clone(),
            });
        }
        visited |= 1 << v;
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig1_schema() -> GraphSchema {
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

    fn scan(alias: &str, types: VertexConstraint) -> LogicalOp {
        LogicalOp::Scan {
            alias: alias.into(),
            target: ScanTarget::Vertex(types),
            predicate: None,
            columns: None,
        }
    }

    fn hop(
        s: &GraphSchema,
        from: &str,
        e: &str,
        to: &str,
        to_types: VertexConstraint,
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
                types: to_types,
                opt: GetVOpt::Target,
                predicate: None,
                columns: None,
            },
        ]
    }

    #[test]
    fn single_edge_sentence() {
        let s = fig1_schema();
        let all = VertexConstraint::any_vertex(&s);
        let mut ops = vec![scan("v1", all.clone())];
        ops.extend(hop(&s, "v1", "e1", "v2", all.clone()));
        let p = match_to_pattern(&[ops], &s).unwrap();
        assert_eq!(p.vertex_count(), 2);
        assert_eq!(p.edge_count(), 1);
        assert!(p
            .vertices
            .iter()
            .all(|v| v.types.is_all() && v.types.len() == 3));
        assert_eq!(p.edges[0].types.len(), 4);
    }

    #[test]
    fn triangle_from_three_sentences() {
        let s = fig1_schema();
        let all = VertexConstraint::any_vertex(&s);
        let place = VertexConstraint::basic(s.vertex_type_id("Place").unwrap());
        let mut s1 = vec![scan("v1", all.clone())];
        s1.extend(hop(&s, "v1", "e1", "v2", all.clone()));
        let mut s2 = vec![scan("v1", all.clone())];
        s2.extend(hop(&s, "v1", "e2", "v3", place.clone()));
        let mut s3 = vec![scan("v2", all.clone())];
        s3.extend(hop(&s, "v2", "e3", "v3", all.clone()));
        let p = match_to_pattern(&[s1, s2, s3], &s).unwrap();
        assert_eq!(p.vertex_count(), 3);
        assert_eq!(p.edge_count(), 3);
        assert_eq!(p.vertices[2].types, place);
    }

    #[test]
    fn shared_alias_constraints_intersect() {
        let s = fig1_schema();
        let person = s.vertex_type_id("Person").unwrap();
        let product = s.vertex_type_id("Product").unwrap();
        let all = VertexConstraint::any_vertex(&s);
        let mut s1 = vec![scan("v1", all.clone())];
        s1.extend(hop(&s, "v1", "e1", "v2", VertexConstraint::basic(person)));
        let mut s2 = vec![scan("v1", all.clone())];
        s2.extend(hop(
            &s,
            "v1",
            "e2",
            "v2",
            VertexConstraint::of([person, product]),
        ));
        let p = match_to_pattern(&[s1, s2], &s).unwrap();
        assert_eq!(p.vertices[1].types, VertexConstraint::basic(person));

        let mut bad = vec![scan("v1", all.clone())];
        bad.extend(hop(&s, "v1", "e3", "v2", VertexConstraint::basic(product)));
        let mut s1 = vec![scan("v1", all.clone())];
        s1.extend(hop(&s, "v1", "e1", "v2", VertexConstraint::basic(person)));
        assert!(matches!(
            match_to_pattern(&[s1, bad], &s),
            Err(Error::Pattern(_))
        ));
    }

    #[test]
    fn disconnected_rejected() {
        let s = fig1_schema();
        let all = VertexConstraint::any_vertex(&s);
        let r = match_to_pattern(&[vec![scan("a", all.clone())], vec![scan("b", all)]], &s);
        assert!(matches!(r, Err(Error::Pattern(_))));
    }

    #[test]
    fn path_lowering() {
        let s = fig1_schema();
        let person = VertexConstraint::basic(s.vertex_type_id("Person").unwrap());
        let ops = vec![
            scan("p1", person.clone()),
            LogicalOp::ExpandPath {
                tag: "p1".into(),
                alias: "p".into(),
                types: EdgeConstraint::any_edge(&s),
                dir: Direction::Both,
                hops: 3,
            },
            LogicalOp::GetVertex {
                tag: "p".into(),
                alias: "p2".into(),
                types: person,
                opt: GetVOpt::Other,
                predicate: None,
                columns: None,
            },
        ];
        let p = match_to_pattern(&[ops], &s).unwrap();
        assert_eq!(p.vertex_count(), 4);
        assert_eq!(p.edge_count(), 3);
        assert!(p.edges.iter().all(|e| e.dir == EdgeDir::Both));
        assert_eq!(p.paths[0].vertices.len(), 4);
        assert_eq!(p.visible_aliases(), vec!["p1", "p2", "p"]);
    }

    #[test]
    fn ops_round_trip_shapes() {
        let s = fig1_schema();
        let all = VertexConstraint::any_vertex(&s);
        let mut p = Pattern::new();
        for a in ["v1", "v2", "v3"] {
            p.add_vertex(a, all.clone());
        }
        p.add_edge("e1", 0, 1, EdgeConstraint::any_edge(&s), EdgeDir::Out);
        p.add_edge("e2", 1, 2, EdgeConstraint::any_edge(&s), EdgeDir::Out);
        p.add_edge("e3", 0, 2, EdgeConstraint::any_edge(&s), EdgeDir::Out);
        let ops = pattern_to_ops(&p, &[0, 1, 2]).unwrap();
        assert_eq!(
            ops.iter()
                .filter(|o| matches!(o, LogicalOp::Scan { .. }))
                .count(),
            1
        );
        assert_eq!(ops.len(), 1 + 2 * 3);
        let q = match_to_pattern(&[ops], &s).unwrap();
        assert_eq!(q.vertex_count(), 3);
        assert_eq!(q.edge_count(), 3);

        let single = pattern_to_ops(&p.induced(1), &[0]).unwrap();
        assert!(matches!(single.as_slice(), [LogicalOp::Scan { .. }]));
        assert!(pattern_to_ops(&p, &[0, 0, 1]).is_err());
        let mut path = Pattern::new();
        for a in ["a", "b", "c"] {
            path.add_vertex(a, all.clone());
        }
        path.add_edge("x", 0, 1, EdgeConstraint::any_edge(&s), EdgeDir::Out);
        path.add_edge("y", 1, 2, EdgeConstraint::any_edge(&s), EdgeDir::Out);
        assert!(pattern_to_ops(&path, &[0, 2, 1]).is_err());
    }
}
