use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use itertools::Itertools;

use super::shape::Shape;
use crate::error::{Error, Result};

/// Largest shape accepted by [`canonical_order`].
pub const MAX_CANONICAL_VERTICES: usize = 8;

/// Byte string identifying a shape up to isomorphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(pub Vec<u8>);

impl CanonicalCode {
    pub fn to_base64(&self) -> String {
        STANDARD.encode(&self.0)
    }

    pub fn from_base64(s: &str) -> Result<CanonicalCode> {
        STANDARD
            .decode(s)
            .map(CanonicalCode)
            .map_err(|e| Error::Statistics(format!("bad pattern code {s:?}: {e}")))
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_base64())
    }
}

fn put(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_be_bytes());
}

fn put_list(out: &mut Vec<u8>, xs: &[u32]) {
    put(out, xs.len() as u32);
    for &x in xs {
        put(out, x);
    }
}

fn vertex_label(shape: &Shape, v: usize) -> Vec<u8> {
    let mut out = Vec::new();
    let ids: Vec<u32> = shape.vertices[v].iter().map(|t| t.0).collect();
    put_list(&mut out, &ids);
    out
}

fn edge_label(shape: &Shape, e: usize) -> Vec<u8> {
    let edge = &shape.edges[e];
    let mut out = vec![edge.both as u8];
    let ids: Vec<u32> = edge.types.iter().map(|t| t.0).collect();
    put_list(&mut out, &ids);
    out
}

fn rank<T: Ord + Clone>(keys: &[T]) -> Vec<u32> {
    let distinct: Vec<T> = keys.iter().cloned().sorted().dedup().collect();
    keys.iter()
        .map(|k| distinct.binary_search(k).expect("key present") as u32)
        .collect()
}

/// Colour refinement: stable partition of vertices by label and
/// neighbourhood structure.
fn refine(shape: &Shape) -> Vec<u32> {
    let n = shape.vertex_count();
    let elabels: Vec<Vec<u8>> = (0..shape.edge_count())
        .map(|e| edge_label(shape, e))
        .collect();
    let mut colour = rank(&(0..n).map(|v| vertex_label(shape, v)).collect::<Vec<_>>());
    loop {
        let sigs: Vec<(u32, Vec<(Vec<u8>, u8, u32)>)> = (0..n)
            .map(|v| {
                let mut nbrs: Vec<(Vec<u8>, u8, u32)> = shape
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.touches(v))
                    .map(|(i, e)| {
                        let role = if e.both {
                            2
                        } else if e.src == v {
                            0
                        } else {
                            1
                        };
                        (elabels[i].clone(), role, colour[e.other(v)])
                    })
                    .collect();
                nbrs.sort();
                (colour[v], nbrs)
            })
            .collect();
        let next = rank(&sigs);
        let before = colour.iter().copied().unique().count();
        let after = next.iter().copied().unique().count();
        colour = next;
        if after == before {
            return colour;
        }
    }
}

fn encode(shape: &Shape, order: &[usize], vlabels: &[Vec<u8>], elabels: &[Vec<u8>]) -> Vec<u8> {
    let mut pos = vec![0u32; order.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i as u32;
    }
    let mut out = Vec::new();
    put(&mut out, order.len() as u32);
    put(&mut out, shape.edge_count() as u32);
    for &v in order {
        out.extend_from_slice(&vlabels[v]);
    }
    let mut edges: Vec<(u32, u32, &[u8])> = shape
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (a, b) = (pos[e.src], pos[e.dst]);
            let (a, b) = if e.both { (a.min(b), a.max(b)) } else { (a, b) };
            (a, b, elabels[i].as_slice())
        })
        .collect();
    edges.sort();
    for (a, b, l) in edges {
        put(&mut out, a);
        put(&mut out, b);
        out.extend_from_slice(l);
    }
    out
}

/// Canonical code plus a vertex order realising it: canonical vertex `i`
/// is `order[i]` of the input.
pub fn canonical_order(shape: &Shape) -> Result<(CanonicalCode, Vec<usize>)> {
    let n = shape.vertex_count();
    if n > MAX_CANONICAL_VERTICES {
        return Err(Error::Statistics(format!(
            "pattern with {n} vertices exceeds the canonical-code limit of {MAX_CANONICAL_VERTICES}"
        )));
    }
    let vlabels: Vec<Vec<u8>> = (0..n).map(|v| vertex_label(shape, v)).collect();
    let elabels: Vec<Vec<u8>> = (0..shape.edge_count())
        .map(|e| edge_label(shape, e))
        .collect();
    let colour = refine(shape);
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for c in colour.iter().copied().unique().sorted() {
        cells.push((0..n).filter(|&v| colour[v] == c).collect());
    }
    let mut best: Option<(Vec<u8>, Vec<usize>)> = None;
    let per_cell: Vec<Vec<Vec<usize>>> = cells
        .iter()
        .map(|cell| cell.iter().copied().permutations(cell.len()).collect())
        .collect();
    for combo in per_cell.iter().multi_cartesian_product() {
        let order: Vec<usize> = combo.into_iter().flatten().copied().collect();
        let code = encode(shape, &order, &vlabels, &elabels);
        if best.as_ref().map_or(true, |(b, _)| code < *b) {
            best = Some((code, order));
        }
    }
    let (code, order) = match best {
        Some(b) => b,
        None => (encode(shape, &[], &vlabels, &elabels), Vec::new()),
    };
    Ok((CanonicalCode(code), order))
}

pub fn canonicalize(shape: &Shape) -> Result<CanonicalCode> {
    canonical_order(shape).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glogue::shape::ShapeEdge;
    use crate::graph::{ETypeId, VTypeId};

    fn edge(src: usize, dst: usize, t: u32) -> ShapeEdge {
        ShapeEdge {
            src,
            dst,
            types: vec![ETypeId(t)],
            both: false,
        }
    }

    fn path(types: &[u32], edges: Vec<ShapeEdge>) -> Shape {
        Shape {
            vertices: types.iter().map(|&t| vec![VTypeId(t)]).collect(),
            edges,
        }
    }

    #[test]
    fn isomorphic_relabelings_share_a_code() {
        let a = path(
            &[0, 1, 0],
            vec![edge(0, 1, 0), edge(2, 1, 0), edge(0, 2, 1)],
        );
        let code = canonicalize(&a).unwrap();
        for order in (0..3).permutations(3) {
            let b = a.permuted(&order);
            assert_eq!(canonicalize(&b).unwrap(), code);
        }
    }

    #[test]
    fn direction_and_types_distinguish() {
        let a = path(&[0, 0], vec![edge(0, 1, 0)]);
        let b = path(&[0, 0], vec![edge(0, 1, 1)]);
        let c = path(&[0, 1], vec![edge(0, 1, 0)]);
        let d = path(&[0, 1], vec![edge(1, 0, 0)]);
        let e = path(&[1, 0], vec![edge(1, 0, 0)]);
        let codes: Vec<_> = [a, b].iter().map(|s| canonicalize(s).unwrap()).collect();
        assert_ne!(codes[0], codes[1]);
        assert_eq!(canonicalize(&c).unwrap(), canonicalize(&e).unwrap());
        assert_ne!(canonicalize(&c).unwrap(), canonicalize(&d).unwrap());
    }

    #[test]
    fn order_realises_code() {
        let a = path(
            &[2, 1, 0, 1],
            vec![edge(0, 1, 0), edge(1, 2, 1), edge(3, 2, 1)],
        );
        let (code, order) = canonical_order(&a).unwrap();
        let relabeled = a.permuted(&order);
        assert_eq!(canonical_order(&relabeled).unwrap().0, code);
        let b64 = code.to_base64();
        assert_eq!(CanonicalCode::from_base64(&b64).unwrap(), code);
    }

    #[test]
    fn oversized_shapes_are_rejected() {
        let s = path(&[0; 9], (0..8).map(|i| edge(i, i + 1, 0)).collect());
        assert!(canonicalize(&s).is_err());
    }
}
