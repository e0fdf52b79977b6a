//! Type inference and validation of pattern constraints against a schema.
//!
//! [`infer_and_validate`] first runs a worklist propagation: vertices are
//! popped smallest-constraint-first, their basic types are pruned to those
//! with schema support for every incident pattern edge, and neighbors and
//! edges are narrowed to the direction-sensitive candidates. On patterns
//! with cycles or parallel edges local propagation can leave types that
//! occur in no complete assignment, so a second pass keeps only types that
//! extend to a full valid assignment.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{ETypeId, GraphSchema, VTypeId};
use crate::ir::{triplet_fits, EdgeDir, Pattern};

/// Neighbor types of one basic vertex type, split by direction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateTypes {
    pub out_vertex: BTreeSet<VTypeId>,
    pub in_vertex: BTreeSet<VTypeId>,
    pub out_edge: BTreeSet<ETypeId>,
    pub in_edge: BTreeSet<ETypeId>,
}

impl CandidateTypes {
    pub fn union_with(&mut self, other: &CandidateTypes) {
        self.out_vertex.extend(&other.out_vertex);
        self.in_vertex.extend(&other.in_vertex);
        self.out_edge.extend(&other.out_edge);
        self.in_edge.extend(&other.in_edge);
    }
}

pub fn schema_nbr_types(schema: &GraphSchema, t: VTypeId) -> Result<CandidateTypes> {
    if t.index() >= schema.vertex_type_count() {
        return Err(Error::UnknownType(format!("#{}", t.0)));
    }
    let mut c = CandidateTypes::default();
    for &e in schema.out_triplets(t) {
        c.out_edge.insert(e);
        c.out_vertex.insert(schema.triplet(e).dst);
    }
    for &e in schema.in_triplets(t) {
        c.in_edge.insert(e);
        c.in_vertex.insert(schema.triplet(e).src);
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeCheck {
    Valid(Pattern),
    Invalid { reason: String },
}

impl TypeCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, TypeCheck::Valid(_))
    }

    pub fn pattern(&self) -> Option<&Pattern> {
        match self {
            TypeCheck::Valid(p) => Some(p),
            TypeCheck::Invalid { .. } => None,
        }
    }

    pub fn into_pattern(self) -> Option<Pattern> {
        match self {
            TypeCheck::Valid(p) => Some(p),
            TypeCheck::Invalid { .. } => None,
        }
    }
}

/// Node budget for one exact-support search; past it the type is kept.
const SEARCH_BUDGET: u64 = 2_000_000;

pub fn infer_and_validate(p: &Pattern, schema: &GraphSchema) -> TypeCheck {
    let mut p = p.clone();
    if let Err(reason) = propagate(&mut p, schema) {
        return TypeCheck::Invalid { reason };
    }
    let cyclic = p.edge_count() >= p.vertex_count();
    if cyclic {
        if let Err(reason) = prune_unsupported(&mut p, schema) {
            return TypeCheck::Invalid { reason };
        }
    }
    orient_edges(&mut p, schema);
    TypeCheck::Valid(p)
}

fn propagate(p: &mut Pattern, schema: &GraphSchema) -> std::result::Result<(), String> {
    for (i, v) in p.vertices.iter().enumerate() {
        if v.types.is_empty() {
            return Err(format!("`{}` admits no type", p.vertices[i].alias));
        }
    }
    let key = |p: &Pattern, v: usize| {
        Reverse((p.vertices[v].types.len(), p.vertices[v].alias.clone(), v))
    };
    let mut queue: BinaryHeap<Reverse<(usize, String, usize)>> =
        (0..p.vertex_count()).map(|v| key(p, v)).collect();
    let mut queued: Vec<bool> = vec![true; p.vertex_count()];

    while let Some(Reverse((_, _, u))) = queue.pop() {
        if !queued[u] {
            continue;
        }
        queued[u] = false;
        let incident = p.incident(u);

        // prune basic types of u lacking schema support on some incident edge
        let mut keep: BTreeSet<VTypeId> = BTreeSet::new();
        for tb in p.vertices[u].types.iter() {
            let cand = schema_nbr_types(schema, tb).expect("constraint member in schema");
            let supported = incident.iter().all(|&e| {
                let pe = &p.edges[e];
                let other = &p.vertices[pe.other(u)].types;
                let out_ok =
                    |cand_e: &BTreeSet<ETypeId>, far: fn(&GraphSchema, ETypeId) -> VTypeId| {
                        cand_e
                            .iter()
                            .any(|t| pe.types.contains(*t) && other.contains(far(schema, *t)))
                    };
                let as_src = out_ok(&cand.out_edge, |s, t| s.triplet(t).dst);
                let as_dst = out_ok(&cand.in_edge, |s, t| s.triplet(t).src);
                match pe.dir {
                    EdgeDir::Out if pe.src == u => as_src,
                    EdgeDir::Out => as_dst,
                    EdgeDir::Both => as_src || as_dst,
                }
            });
            if supported {
                keep.insert(tb);
            }
        }
        p.vertices[u].types.retain(|t| keep.contains(&t));
        if p.vertices[u].types.is_empty() {
            return Err(format!(
                "no type of `{}` fits its edges",
                p.vertices[u].alias
            ));
        }

        // candidates reachable from the remaining types of u
        let mut cand = CandidateTypes::default();
        for tb in p.vertices[u].types.iter() {
            cand.union_with(&schema_nbr_types(schema, tb).unwrap());
        }
        for &e in &incident {
            let v = p.edges[e].other(u);
            let (src_types, dst_types) = {
                let pe = &p.edges[e];
                (
                    p.vertices[pe.src].types.clone(),
                    p.vertices[pe.dst].types.clone(),
                )
            };
            let dir = p.edges[e].dir;
            let u_is_src = p.edges[e].src == u;
            p.edges[e].types.retain(|t| {
                let in_dir = match (dir, u_is_src) {
                    (EdgeDir::Out, true) => cand.out_edge.contains(&t),
                    (EdgeDir::Out, false) => cand.in_edge.contains(&t),
                    (EdgeDir::Both, _) => cand.out_edge.contains(&t) || cand.in_edge.contains(&t),
                };
                let (f, b) = triplet_fits(schema, t, &src_types, &dst_types, dir);
                in_dir && (f || b)
            });
            if p.edges[e].types.is_empty() {
                return Err(format!("no edge type fits `{}`", p.edges[e].alias));
            }
            let pe = p.edges[e].clone();
            let mut reach: BTreeSet<VTypeId> = BTreeSet::new();
            for t in pe.types.iter() {
                let tr = schema.triplet(t);
                let u_types = &p.vertices[u].types;
                if u_is_src || pe.dir == EdgeDir::Both {
                    if u_types.contains(tr.src) {
                        reach.insert(tr.dst);
                    }
                }
                if !u_is_src || pe.dir == EdgeDir::Both {
                    if u_types.contains(tr.dst) {
                        reach.insert(tr.src);
                    }
                }
            }
            if p.vertices[v].types.retain(|t| reach.contains(&t)) {
                if p.vertices[v].types.is_empty() {
                    return Err(format!(
                        "no type of `{}` fits its edges",
                        p.vertices[v].alias
                    ));
                }
                queued[v] = true;
                queue.push(key(p, v));
            }
        }
    }
    Ok(())
}

/// Allowed (src type, dst type) pairs of an edge, both orientations for
/// undirected edges.
fn allowed_pairs(p: &Pattern, schema: &GraphSchema, e: usize) -> HashSet<(VTypeId, VTypeId)> {
    let pe = &p.edges[e];
    let mut out = HashSet::new();
    for t in pe.types.iter() {
        let tr = schema.triplet(t);
        out.insert((tr.src, tr.dst));
        if pe.dir == EdgeDir::Both {
            out.insert((tr.dst, tr.src));
        }
    }
    out
}

struct Search<'a> {
    p: &'a Pattern,
    order: Vec<usize>,
    pairs: Vec<HashSet<(VTypeId, VTypeId)>>,
    nodes: u64,
}

impl Search<'_> {
    /// Finds one complete vertex assignment within `domains`.
    fn solve(&mut self, domains: &[Vec<VTypeId>]) -> Option<Vec<VTypeId>> {
        let mut assign: Vec<Option<VTypeId>> = vec![None; self.p.vertex_count()];
        self.nodes = 0;
        // on `None` the caller inspects `nodes` to tell exhaustion from failure
        if self.extend(0, domains, &mut assign) {
            Some(assign.into_iter().map(|t| t.unwrap()).collect())
        } else {
            None
        }
    }

    fn extend(
        &mut self,
        k: usize,
        domains: &[Vec<VTypeId>],
        assign: &mut Vec<Option<VTypeId>>,
    ) -> bool {
        if k == self.order.len() {
            return true;
        }
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET {
            return false;
        }
        let v = self.order[k];
        for &t in &domains[v] {
            let ok = self.p.incident(v).into_iter().all(|e| {
                let pe = &self.p.edges[e];
                let other = pe.other(v);
                match assign[other] {
                    None => true,
                    Some(o) => {
                        let pair = if pe.src == v { (t, o) } else { (o, t) };
                        self.pairs[e].contains(&pair)
                    }
                }
            });
            if ok {
                assign[v] = Some(t);
                if self.extend(k + 1, domains, assign) {
                    return true;
                }
                assign[v] = None;
            }
        }
        false
    }
}

fn bfs_order(p: &Pattern) -> Vec<usize> {
    let start = (0..p.vertex_count())
        .min_by_key(|&v| (p.vertices[v].types.len(), Reverse(p.incident(v).len()), v))
        .unwrap_or(0);
    let mut order = vec![start];
    let mut seen = vec![false; p.vertex_count()];
    seen[start] = true;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        let mut nbrs: Vec<usize> = p.incident(v).iter().map(|&e| p.edges[e].other(v)).collect();
        nbrs.sort_by_key(|&u| (p.vertices[u].types.len(), u));
        for u in nbrs {
            if !seen[u] {
                seen[u] = true;
                order.push(u);
            }
        }
    }
    order
}

fn prune_unsupported(p: &mut Pattern, schema: &GraphSchema) -> std::result::Result<(), String> {
    let n = p.vertex_count();
    let domains: Vec<Vec<VTypeId>> = p
        .vertices
        .iter()
        .map(|v| v.types.iter().collect())
        .collect();
    let mut search = Search {
        p,
        order: bfs_order(p),
        pairs: (0..p.edge_count())
            .map(|e| allowed_pairs(p, schema, e))
            .collect(),
        nodes: 0,
    };
    let mut sup_v: Vec<BTreeSet<VTypeId>> = vec![BTreeSet::new(); n];
    let mut sup_e: Vec<BTreeSet<ETypeId>> = vec![BTreeSet::new(); p.edge_count()];

    let mark = |sol: &[VTypeId],
                sup_v: &mut Vec<BTreeSet<VTypeId>>,
                sup_e: &mut Vec<BTreeSet<ETypeId>>| {
        for (v, t) in sol.iter().enumerate() {
            sup_v[v].insert(*t);
        }
        for (e, pe) in p.edges.iter().enumerate() {
            for t in pe.types.iter() {
                let tr = schema.triplet(t);
                let (a, b) = (sol[pe.src], sol[pe.dst]);
                if (tr.src, tr.dst) == (a, b)
                    || (pe.dir == EdgeDir::Both && (tr.dst, tr.src) == (a, b))
                {
                    sup_e[e].insert(t);
                }
            }
        }
    };

    for v in 0..n {
        for &t in &domains[v] {
            if sup_v[v].contains(&t) {
                continue;
            }
            let mut d = domains.clone();
            d[v] = vec![t];
            match search.solve(&d) {
                Some(sol) => mark(&sol, &mut sup_v, &mut sup_e),
                None if search.nodes > SEARCH_BUDGET => {
                    sup_v[v].insert(t);
                }
                None => {}
            }
        }
    }
    if sup_v.iter().any(|s| s.is_empty()) {
        return Err("no complete type assignment exists".into());
    }
    let vertex_domains: Vec<Vec<VTypeId>> =
        sup_v.iter().map(|s| s.iter().copied().collect()).collect();
    for e in 0..p.edge_count() {
        for t in p.edges[e].types.iter().collect::<Vec<_>>() {
            if sup_e[e].contains(&t) {
                continue;
            }
            let tr = schema.triplet(t);
            let (s, d) = (p.edges[e].src, p.edges[e].dst);
            let mut orientations = vec![(tr.src, tr.dst)];
            if p.edges[e].dir == EdgeDir::Both {
                orientations.push((tr.dst, tr.src));
            }
            for (a, b) in orientations {
                if !sup_v[s].contains(&a) || !sup_v[d].contains(&b) {
                    continue;
                }
                let mut dom = vertex_domains.clone();
                dom[s] = vec![a];
                dom[d] = vec![b];
                match search.solve(&dom) {
                    Some(sol) => {
                        mark(&sol, &mut sup_v, &mut sup_e);
                        break;
                    }
                    None if search.nodes > SEARCH_BUDGET => {
                        sup_e[e].insert(t);
                        break;
                    }
                    None => {}
                }
            }
        }
    }
    for v in 0..n {
        p.vertices[v].types.retain(|t| sup_v[v].contains(&t));
    }
    for e in 0..p.edge_count() {
        p.edges[e].types.retain(|t| sup_e[e].contains(&t));
        if p.edges[e].types.is_empty() {
            return Err(format!("no edge type fits `{}`", p.edges[e].alias));
        }
    }
    Ok(())
}

/// Turns undirected edges whose every triplet fits only one orientation
/// into directed edges.
fn orient_edges(p: &mut Pattern, schema: &GraphSchema) {
    for e in 0..p.edge_count() {
        if p.edges[e].dir != EdgeDir::Both {
            continue;
        }
        let (s, d) = (p.edges[e].src, p.edges[e].dst);
        let (mut any_f, mut any_b) = (false, false);
        for t in p.edges[e].types.iter() {
            let (f, b) = triplet_fits(
                schema,
                t,
                &p.vertices[s].types,
                &p.vertices[d].types,
                EdgeDir::Both,
            );
            any_f |= f;
            any_b |= b;
        }
        if any_f && !any_b {
            p.edges[e].dir = EdgeDir::Out;
        } else if any_b && !any_f {
            p.edges[e].dir = EdgeDir::Out;
            p.edges[e].src = d;
            p.edges[e].dst = s;
        }
    }
}

/// One basic type per vertex and edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    pub vertices: Vec<VTypeId>,
    pub edges: Vec<ETypeId>,
}

/// Guard on the number of vertex-type combinations and on the output size.
pub const UNFOLD_GUARD: u64 = 1_000_000;

/// Enumerates every assignment of one basic type per pattern element such
/// that each edge's triplet is declared between its endpoint types.
pub fn naive_unfold_validate(p: &Pattern, schema: &GraphSchema) -> Result<BTreeSet<Assignment>> {
    let combos: u64 = p
        .vertices
        .iter()
        .map(|v| v.types.len() as u64)
        .try_fold(1u64, |a, b| a.checked_mul(b))
        .unwrap_or(u64::MAX);
    if combos > UNFOLD_GUARD {
        return Err(Error::Guard(format!(
            "{combos} vertex type combinations exceed {UNFOLD_GUARD}"
        )));
    }
    let domains: Vec<Vec<VTypeId>> = p
        .vertices
        .iter()
        .map(|v| v.types.iter().collect())
        .collect();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; domains.len()];
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(out);
    }
    loop {
        let vt: Vec<VTypeId> = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| domains[i][k])
            .collect();
        let mut per_edge: Vec<Vec<ETypeId>> = Vec::new();
        for pe in &p.edges {
            let ok: Vec<ETypeId> = pe
                .types
                .iter()
                .filter(|&t| {
                    let tr = schema.triplet(t);
                    let (a, b) = (vt[pe.src], vt[pe.dst]);
                    (tr.src, tr.dst) == (a, b)
                        || (pe.dir == EdgeDir::Both && (tr.dst, tr.src) == (a, b))
                })
                .collect();
            per_edge.push(ok);
        }
        if per_edge.iter().all(|l| !l.is_empty()) {
            let mut eidx = vec![0usize; per_edge.len()];
            loop {
                out.insert(Assignment {
                    vertices: vt.clone(),
                    edges: eidx
                        .iter()
                        .enumerate()
                        .map(|(e, &k)| per_edge[e][k])
                        .collect(),
                });
                if out.len() as u64 > UNFOLD_GUARD {
                    return Err(Error::Guard(format!(
                        "more than {UNFOLD_GUARD} assignments"
                    )));
                }
                if !odometer(&mut eidx, |e| per_edge[e].len()) {
                    break;
                }
            }
        }
        if !odometer(&mut idx, |i| domains[i].len()) {
            break;
        }
    }
    Ok(out)
}

fn odometer(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < len(i) {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Human-readable constraint listing, one alias per line.
pub fn format_constraints(p: &Pattern, schema: &GraphSchema) -> String {
    let mut out = String::new();
    for v in &p.vertices {
        let _ = writeln!(out, "{}: {}", v.alias, v.types.display(schema));
    }
    for e in &p.edges {
        let (s, d) = (&p.vertices[e.src].alias, &p.vertices[e.dst].alias);
        let arrow = if e.dir == EdgeDir::Both { "-" } else { "->" };
        let _ = writeln!(
            out,
            "{} ({s}{arrow}{d}): {}",
            e.alias,
            e.types.display(schema)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{EdgeConstraint, VertexConstraint};

    fn fig1() -> GraphSchema {
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

    fn names(s: &GraphSchema, c: &VertexConstraint) -> Vec<String> {
        c.iter().map(|t| s.vertex_name(t).to_string()).collect()
    }

    fn triangle(
        s: &GraphSchema,
        v1: VertexConstraint,
        v2: VertexConstraint,
        v3: VertexConstraint,
    ) -> Pattern {
        let mut p = Pattern::new();
        p.add_vertex("v1", v1);
        p.add_vertex("v2", v2);
        p.add_vertex("v3", v3);
        p.add_edge("e1", 0, 1, EdgeConstraint::any_edge(s), EdgeDir::Out);
        p.add_edge("e2", 1, 2, EdgeConstraint::any_edge(s), EdgeDir::Out);
        p.add_edge("e3", 0, 2, EdgeConstraint::any_edge(s), EdgeDir::Out);
        p
    }

    #[test]
    fn nbr_types_of_place_and_person() {
        let s = fig1();
        let place = schema_nbr_types(&s, s.vertex_type_id("Place").unwrap()).unwrap();
        assert!(place.out_edge.is_empty() && place.out_vertex.is_empty());
        assert_eq!(place.in_edge.len(), 2);
        assert_eq!(place.in_vertex.len(), 2);
        let person = schema_nbr_types(&s, s.vertex_type_id("Person").unwrap()).unwrap();
        assert_eq!(person.out_vertex.len(), 3);
        assert_eq!(person.out_edge.len(), 3);
        assert_eq!(person.in_vertex.len(), 1);
        assert_eq!(person.in_edge.len(), 1);
        assert!(schema_nbr_types(&s, VTypeId(9)).is_err());
    }

    #[test]
    fn triangle_refinement() {
        let s = fig1();
        let all = VertexConstraint::any_vertex(&s);
        let place = VertexConstraint::basic(s.vertex_type_id("Place").unwrap());
        let p = triangle(&s, all.clone(), all.clone(), place);
        let r = infer_and_validate(&p, &s).into_pattern().unwrap();
        assert_eq!(names(&s, &r.vertices[0].types), ["Person"]);
        assert_eq!(names(&s, &r.vertices[1].types), ["Person", "Product"]);
        assert_eq!(names(&s, &r.vertices[2].types), ["Place"]);
        let labels = |e: usize| -> Vec<String> {
            r.edges[e]
                .types
                .iter()
                .map(|t| s.triplet(t).label.clone())
                .collect()
        };
        assert_eq!(labels(0), ["Knows", "Purchases"]);
        assert_eq!(labels(1), ["LocatedIn", "ProducedIn"]);
        assert_eq!(labels(2), ["LocatedIn"]);
        assert_eq!(naive_unfold_validate(&p, &s).unwrap().len(), 2);
    }

    #[test]
    fn invalid_assignment() {
        let s = fig1();
        let b = |n: &str| VertexConstraint::basic(s.vertex_type_id(n).unwrap());
        let p = triangle(&s, b("Product"), b("Place"), b("Place"));
        assert!(!infer_and_validate(&p, &s).is_valid());
        assert!(naive_unfold_validate(&p, &s).unwrap().is_empty());
    }

    #[test]
    fn single_vertex_unfold() {
        let s = fig1();
        let mut p = Pattern::new();
        p.add_vertex("a", VertexConstraint::any_vertex(&s));
        assert_eq!(naive_unfold_validate(&p, &s).unwrap().len(), 3);
    }

    #[test]
    fn parallel_edges_need_joint_support() {
        // e1 admits (A,X) or (B,Y); e2 admits (A,Y) or (B,X): no assignment
        let s = GraphSchema::builder()
            .vertex("A", &[])
            .vertex("B", &[])
            .vertex("X", &[])
            .vertex("Y", &[])
            .edge("A", "r", "X", &[])
            .edge("B", "r", "Y", &[])
            .edge("A", "q", "Y", &[])
            .edge("B", "q", "X", &[])
            .build()
            .unwrap();
        let mut p = Pattern::new();
        p.add_vertex("a", VertexConstraint::any_vertex(&s));
        p.add_vertex("b", VertexConstraint::any_vertex(&s));
        let r = s.resolve_edge_label("r").unwrap();
        let q = s.resolve_edge_label("q").unwrap();
        p.add_edge("e1", 0, 1, EdgeConstraint::of(r), EdgeDir::Out);
        p.add_edge("e2", 0, 1, EdgeConstraint::of(q), EdgeDir::Out);
        assert!(!infer_and_validate(&p, &s).is_valid());
    }

    #[test]
    fn undirected_edge_is_oriented_when_forced() {
        let s = fig1();
        let mut p = Pattern::new();
        p.add_vertex(
            "pl",
            VertexConstraint::basic(s.vertex_type_id("Place").unwrap()),
        );
        p.add_vertex("x", VertexConstraint::any_vertex(&s));
        p.add_edge("e", 0, 1, EdgeConstraint::any_edge(&s), EdgeDir::Both);
        let r = infer_and_validate(&p, &s).into_pattern().unwrap();
        assert_eq!(r.edges[0].dir, EdgeDir::Out);
        assert_eq!((r.edges[0].src, r.edges[0].dst), (1, 0));
        assert_eq!(names(&s, &r.vertices[1].types), ["Person", "Product"]);
    }

    #[test]
    fn fixpoint() {
        let s = fig1();
        let all = VertexConstraint::any_vertex(&s);
        let p = triangle(&s, all.clone(), all.clone(), all);
        let once = infer_and_validate(&p, &s).into_pattern().unwrap();
        let twice = infer_and_validate(&once, &s).into_pattern().unwrap();
        assert_eq!(once, twice);
    }
}
