use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;

use super::canon::{canonical_order, CanonicalCode};
use super::shape::{Shape, ShapeEdge};
use crate::error::Result;
use crate::graph::{GraphSchema, PropertyGraph, VertexId};

/// All connected, simple, basic patterns with at most `k` vertices that the
/// schema admits, in canonical form, keyed by code.
pub(crate) fn enumerate_basic(
    schema: &GraphSchema,
    k: usize,
) -> Result<BTreeMap<CanonicalCode, Shape>> {
    let mut all = BTreeMap::new();
    let mut level: BTreeMap<CanonicalCode, Shape> = BTreeMap::new();
    if k == 0 {
        return Ok(all);
    }
    for t in schema.vertex_type_ids() {
        let (code, order) = canonical_order(&Shape::basic_vertex(t))?;
        level.insert(code, Shape::basic_vertex(t).permuted(&order));
    }
    for _ in 1..k {
        let mut next = BTreeMap::new();
        for shape in level.values() {
            for grown in extensions(schema, shape) {
                let (code, order) = canonical_order(&grown)?;
                next.entry(code).or_insert_with(|| grown.permuted(&order));
            }
        }
        all.append(&mut level);
        level = next;
    }
    all.append(&mut level);
    Ok(all)
}

/// Shapes obtained by adding one vertex joined to a nonempty subset of the
/// existing vertices, one single-triplet edge per pair.
fn extensions(schema: &GraphSchema, shape: &Shape) -> Vec<Shape> {
    let n = shape.vertex_count();
    let mut out = Vec::new();
    for t in schema.vertex_type_ids() {
        // Per existing vertex: no edge, or one of the admissible edges.
        let options: Vec<Vec<Option<ShapeEdge>>> = (0..n)
            .map(|w| {
                let tw = shape.vertices[w][0];
                let mut opts = vec![None];
                for &e in schema.out_triplets(tw) {
                    if schema.triplet(e).dst == t {
                        opts.push(Some(ShapeEdge {
                            src: w,
                            dst: n,
                            types: vec![e],
                            both: false,
                        }));
                    }
                }
                for &e in schema.in_triplets(tw) {
                    if schema.triplet(e).src == t {
                        opts.push(Some(ShapeEdge {
                            src: n,
                            dst: w,
                            types: vec![e],
                            both: false,
                        }));
                    }
                }
                opts
            })
            .collect();
        for combo in options.iter().multi_cartesian_product() {
            let added: Vec<ShapeEdge> = combo.into_iter().flatten().cloned().collect();
            if !added.is_empty() {
                let mut s = shape.clone();
                s.vertices.push(vec![t]);
                s.edges.extend(added);
                out.push(s);
            }
        }
    }
    out
}

/// Number of homomorphic embeddings of a basic shape, counting each
/// distinct data edge bound to each pattern edge.
pub(crate) fn count_embeddings(g: &PropertyGraph, shape: &Shape) -> u64 {
    let n = shape.vertex_count();
    if n == 0 {
        return 1;
    }
    let start = (0..n)
        .min_by_key(|&v| g.vertices_of_type(shape.vertices[v][0]).len())
        .unwrap_or(0);
    let steps = plan_steps(shape, start);
    let roots = g.vertices_of_type(shape.vertices[start][0]);
    roots
        .par_iter()
        .map(|&r| {
            let mut bound = vec![VertexId(u32::MAX); n];
            bound[start] = r;
            extend(g, shape, &steps, 0, &mut bound)
        })
        .sum()
}

struct Step {
    vertex: usize,
    anchor: usize,
    checks: Vec<usize>,
}

fn plan_steps(shape: &Shape, start: usize) -> Vec<Step> {
    let n = shape.vertex_count();
    let mut placed = vec![false; n];
    placed[start] = true;
    let mut steps = Vec::new();
    for _ in 1..n {
        let (e, v) = shape
            .edges
            .iter()
            .enumerate()
            .find_map(|(i, e)| match (placed[e.src], placed[e.dst]) {
                (true, false) => Some((i, e.dst)),
                (false, true) => Some((i, e.src)),
                _ => None,
            })
            .expect("basic shapes are connected");
        placed[v] = true;
        let checks = shape
            .edges
            .iter()
            .enumerate()
            .filter(|(i, x)| *i != e && x.touches(v) && placed[x.other(v)])
            .map(|(i, _)| i)
            .collect();
        steps.push(Step {
            vertex: v,
            anchor: e,
            checks,
        });
    }
    steps
}

fn multiplicity(g: &PropertyGraph, shape: &Shape, e: usize, bound: &[VertexId]) -> u64 {
    let edge = &shape.edges[e];
    let (s, d) = (bound[edge.src], bound[edge.dst]);
    g.adjacency_typed(s, true, edge.types[0])
        .iter()
        .filter(|a| a.neighbor == d)
        .count() as u64
}

fn extend(
    g: &PropertyGraph,
    shape: &Shape,
    steps: &[Step],
    i: usize,
    bound: &mut [VertexId],
) -> u64 {
    let Some(step) = steps.get(i) else {
        return 1;
    };
    let edge = &shape.edges[step.anchor];
    let from = edge.other(step.vertex);
    let out = edge.src == from;
    let mut total = 0;
    for a in g.adjacency_typed(bound[from], out, edge.types[0]) {
        bound[step.vertex] = a.neighbor;
        let mut mult = 1;
        for &c in &step.checks {
            mult *= multiplicity(g, shape, c, bound);
            if mult == 0 {
                break;
            }
        }
        if mult > 0 {
            total += mult * extend(g, shape, steps, i + 1, bound);
        }
    }
    bound[step.vertex] = VertexId(u32::MAX);
    total
}
