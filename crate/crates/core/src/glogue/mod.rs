//! Pattern-frequency catalogue: exact counts for small basic patterns and
//! estimates for everything else.

mod build;
mod candidates;
mod canon;
mod shape;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

pub use candidates::{
    expand_candidates, get_candidates, join_candidates, Candidate, MAX_JOIN_SPLIT_VERTICES,
};
pub use canon::{canonical_order, canonicalize, CanonicalCode, MAX_CANONICAL_VERTICES};
pub use shape::{Shape, ShapeEdge};

use crate::error::{Error, Result};
use crate::graph::{ETypeId, GraphSchema, PropertyGraph, TypeCounts, VTypeId};
use crate::ir::VMask;
use crate::scalar::Scalar;

/// Exactly counted pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternEntry {
    pub code: CanonicalCode,
    pub shape: Shape,
    pub freq: u64,
}

/// Catalogue edge: `target` is `source` plus one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandEntry {
    pub source: CanonicalCode,
    pub target: CanonicalCode,
    pub vertex_type: VTypeId,
    pub triplets: Vec<ETypeId>,
    /// Expand ratio of each added edge, first one opening the new vertex.
    pub ratios: Vec<f64>,
}

/// Catalogue edge: `target` is the join of `left` and `right`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinEntry {
    pub left: CanonicalCode,
    pub right: CanonicalCode,
    pub target: CanonicalCode,
}

/// Frequency catalogue over scalar type `S`.
pub struct GLogue<S: Scalar> {
    schema: Arc<GraphSchema>,
    k: usize,
    counts: TypeCounts,
    patterns: Vec<PatternEntry>,
    index: HashMap<CanonicalCode, usize>,
    expand_edges: Vec<ExpandEntry>,
    join_edges: Vec<JoinEntry>,
    memo: RwLock<HashMap<CanonicalCode, S>>,
}

impl<S: Scalar> std::fmt::Debug for GLogue<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GLogue")
            .field("k", &self.k)
            .field("patterns", &self.patterns.len())
            .field("expand_edges", &self.expand_edges.len())
            .field("join_edges", &self.join_edges.len())
            .finish()
    }
}

impl<S: Scalar> GLogue<S> {
    /// Counts every basic pattern of up to `k` vertices in `g`.
    pub fn build(g: &PropertyGraph, k: usize) -> Result<Self> {
        if k > MAX_CANONICAL_VERTICES {
            return Err(Error::Statistics(format!(
                "catalogue size {k} exceeds {MAX_CANONICAL_VERTICES}"
            )));
        }
        let schema = g.schema_arc();
        let shapes = build::enumerate_basic(&schema, k)?;
        let patterns: Vec<PatternEntry> = shapes
            .into_iter()
            .map(|(code, shape)| {
                let freq = build::count_embeddings(g, &shape);
                PatternEntry { code, shape, freq }
            })
            .collect();
        Self::assemble(schema, k, g.type_counts(), patterns)
    }

    /// A catalogue holding only per-type counts.
    pub fn from_type_counts(schema: Arc<GraphSchema>, counts: TypeCounts) -> Result<Self> {
        let patterns = schema
            .vertex_type_ids()
            .map(|t| {
                let shape = Shape::basic_vertex(t);
                Ok(PatternEntry {
                    code: canonicalize(&shape)?,
                    freq: counts.vertex(t),
                    shape,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(schema, 1, counts, patterns)
    }

    fn assemble(
        schema: Arc<GraphSchema>,
        k: usize,
        counts: TypeCounts,
        patterns: Vec<PatternEntry>,
    ) -> Result<Self> {
        let index = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (p.code.clone(), i))
            .collect();
        let mut cat = GLogue {
            schema,
            k,
            counts,
            patterns,
            index,
            expand_edges: Vec::new(),
            join_edges: Vec::new(),
            memo: RwLock::new(HashMap::new()),
        };
        cat.link()?;
        Ok(cat)
    }

    /// Derives catalogue edges between stored patterns.
    fn link(&mut self) -> Result<()> {
        let mut expands = Vec::new();
        let mut joins = Vec::new();
        for entry in &self.patterns {
            let shape = &entry.shape;
            let n = shape.vertex_count();
            if n < 2 {
                continue;
            }
            let full = shape.full_mask();
            for v in 0..n {
                let source_mask = full & !(1 << v);
                if !shape.is_connected_mask(source_mask) {
                    continue;
                }
                let source = canonicalize(&shape.sub(source_mask))?;
                let incident = shape.incident(v);
                let ratios = incident
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| self.expand_ratio(shape, e, v, i > 0).to_f64_lossy())
                    .collect();
                expands.push(ExpandEntry {
                    source,
                    target: entry.code.clone(),
                    vertex_type: shape.vertices[v][0],
                    triplets: incident.iter().map(|&e| shape.edges[e].types[0]).collect(),
                    ratios,
                });
            }
            for (left, right) in shape_joins(shape) {
                joins.push(JoinEntry {
                    left: canonicalize(&shape.sub(left))?,
                    right: canonicalize(&shape.sub(right))?,
                    target: entry.code.clone(),
                });
            }
        }
        self.expand_edges = expands;
        self.join_edges = joins;
        Ok(())
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn type_counts(&self) -> &TypeCounts {
        &self.counts
    }

    pub fn patterns(&self) -> &[PatternEntry] {
        &self.patterns
    }

    pub fn expand_edges(&self) -> &[ExpandEntry] {
        &self.expand_edges
    }

    pub fn join_edges(&self) -> &[JoinEntry] {
        &self.join_edges
    }

    /// Stored exact count, if the code is in the catalogue.
    pub fn lookup(&self, code: &CanonicalCode) -> Option<u64> {
        self.index.get(code).map(|&i| self.patterns[i].freq)
    }

    fn vertex_total(&self, types: &[VTypeId]) -> S {
        S::from_count(types.iter().map(|&t| self.counts.vertex(t)).sum())
    }

    /// Count of data edges that can bind pattern edge `e` given the
    /// endpoint constraints; undirected edges count both orientations.
    fn edge_total(&self, shape: &Shape, e: usize) -> S {
        let edge = &shape.edges[e];
        let (src, dst) = (&shape.vertices[edge.src], &shape.vertices[edge.dst]);
        let mut total = 0u64;
        for &t in &edge.types {
            let tr = self.schema.triplet(t);
            let c = self.counts.edge(t);
            if src.contains(&tr.src) && dst.contains(&tr.dst) {
                total += c;
            }
            if edge.both && src.contains(&tr.dst) && dst.contains(&tr.src) {
                total += c;
            }
        }
        S::from_count(total)
    }

    /// Expected number of bindings of edge `e` per embedding of the part
    /// not containing `new_vertex`. An opening edge binds the new vertex;
    /// a closing edge only checks an already bound pair.
    pub fn expand_ratio(&self, shape: &Shape, e: usize, new_vertex: usize, closing: bool) -> S {
        let anchor = shape.edges[e].other(new_vertex);
        let fe = self.edge_total(shape, e);
        let fa = self.vertex_total(&shape.vertices[anchor]);
        if closing {
            let fv = self.vertex_total(&shape.vertices[new_vertex]);
            S::ratio(fe, fa * fv)
        } else {
            S::ratio(fe, fa)
        }
    }

    /// Estimated (exact where stored) number of embeddings of `shape`.
    pub fn get_freq(&self, shape: &Shape) -> S {
        let n = shape.vertex_count();
        if n == 0 {
            return S::one();
        }
        if !shape.is_connected() {
            return shape
                .components()
                .into_iter()
                .fold(S::one(), |acc, m| acc * self.get_freq(&shape.sub(m)));
        }
        if n == 1 {
            return self.vertex_total(&shape.vertices[0]);
        }
        let Ok((code, order)) = canonical_order(shape) else {
            return self.peel(shape);
        };
        if n <= self.k && shape.is_basic() && shape.is_simple() {
            return S::from_count(self.lookup(&code).unwrap_or(0));
        }
        if let Some(v) = self.memo.read().expect("memo lock").get(&code) {
            return v.clone();
        }
        let value = self.peel(&shape.permuted(&order));
        self.memo
            .write()
            .expect("memo lock")
            .entry(code)
            .or_insert(value)
            .clone()
    }

    /// Removes one vertex and scales the remainder's frequency by the
    /// expand ratios of its edges.
    fn peel(&self, shape: &Shape) -> S {
        let v = peel_vertex(shape);
        let rest = shape.sub(shape.full_mask() & !(1 << v));
        let base = self.get_freq(&rest);
        if base.is_zero() {
            return S::zero();
        }
        let mut f = base;
        for (i, e) in shape.incident(v).into_iter().enumerate() {
            f = f * self.expand_ratio(shape, e, v, i > 0);
            if f.is_zero() {
                break;
            }
        }
        f
    }

    /// Frequency of a join of two patterns sharing a subpattern of
    /// frequency `f_shared`.
    pub fn join_freq(f_left: S, f_right: S, f_shared: S) -> S {
        S::ratio(f_left * f_right, f_shared)
    }

    /// Number of memoised estimates.
    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(schema: Arc<GraphSchema>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(schema, &text)
    }

    pub fn to_json_string(&self) -> String {
        let s = &self.schema;
        let file = CatalogueFile {
            k: self.k,
            vertex_types: s
                .vertex_type_ids()
                .map(|t| s.vertex_name(t).to_string())
                .collect(),
            edge_types: s
                .edge_type_ids()
                .map(|t| s.triplet_display(t).to_string())
                .collect(),
            vertex_counts: self.counts.vertices.clone(),
            edge_counts: self.counts.edges.clone(),
            patterns: self
                .patterns
                .iter()
                .map(|p| PatternJson {
                    code: p.code.to_base64(),
                    freq: p.freq,
                    vertices: p.shape.vertices.iter().map(|v| v[0].0).collect(),
                    edges: p
                        .shape
                        .edges
                        .iter()
                        .map(|e| [e.src as u32, e.dst as u32, e.types[0].0])
                        .collect(),
                })
                .collect(),
            expand_edges: self
                .expand_edges
                .iter()
                .map(|x| ExpandJson {
                    source: x.source.to_base64(),
                    target: x.target.to_base64(),
                    vertex_type: x.vertex_type.0,
                    triplets: x.triplets.iter().map(|t| t.0).collect(),
                    ratios: x.ratios.clone(),
                })
                .collect(),
            join_edges: self
                .join_edges
                .iter()
                .map(|j| JoinJson {
                    left: j.left.to_base64(),
                    right: j.right.to_base64(),
                    target: j.target.to_base64(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("catalogue serialises")
    }

    /// Reads a catalogue written by [`GLogue::to_json_string`]; the schema
    /// must list the same types in the same order.
    pub fn from_json_str(schema: Arc<GraphSchema>, text: &str) -> Result<Self> {
        let file: CatalogueFile = serde_json::from_str(text)?;
        let vnames: Vec<String> = schema
            .vertex_type_ids()
            .map(|t| schema.vertex_name(t).to_string())
            .collect();
        let enames: Vec<String> = schema
            .edge_type_ids()
            .map(|t| schema.triplet_display(t).to_string())
            .collect();
        if vnames != file.vertex_types || enames != file.edge_types {
            return Err(Error::Statistics(
                "catalogue was built for a different schema".into(),
            ));
        }
        if file.vertex_counts.len() != vnames.len() || file.edge_counts.len() != enames.len() {
            return Err(Error::Statistics(
                "type count arrays have the wrong length".into(),
            ));
        }
        let mut patterns = Vec::with_capacity(file.patterns.len());
        for p in file.patterns {
            let bad = |what: &str| Error::Statistics(format!("pattern {}: {what}", p.code));
            let n = p.vertices.len();
            if p.vertices.iter().any(|&t| t as usize >= vnames.len()) {
                return Err(bad("unknown vertex type"));
            }
            if p.edges
                .iter()
                .any(|e| e[0] as usize >= n || e[1] as usize >= n || e[2] as usize >= enames.len())
            {
                return Err(bad("edge out of range"));
            }
            let shape = Shape {
                vertices: p.vertices.iter().map(|&t| vec![VTypeId(t)]).collect(),
                edges: p
                    .edges
                    .iter()
                    .map(|e| ShapeEdge {
                        src: e[0] as usize,
                        dst: e[1] as usize,
                        types: vec![ETypeId(e[2])],
                        both: false,
                    })
                    .collect(),
            };
            let code = canonicalize(&shape)?;
            if code != CanonicalCode::from_base64(&p.code)? {
                return Err(bad("code does not match its shape"));
            }
            patterns.push(PatternEntry {
                code,
                shape,
                freq: p.freq,
            });
        }
        let counts = TypeCounts {
            vertices: file.vertex_counts,
            edges: file.edge_counts,
        };
        Self::assemble(schema, file.k, counts, patterns)
    }

    /// One line per stored pattern, `freq<TAB>description`.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let by_size: BTreeMap<(usize, String), u64> = self
            .patterns
            .iter()
            .map(|p| {
                (
                    (p.shape.vertex_count(), p.shape.describe(&self.schema)),
                    p.freq,
                )
            })
            .collect();
        for ((_, d), f) in by_size {
            out.push_str(&format!("{f}\t{d}\n"));
        }
        out
    }
}

/// Vertex whose removal keeps the shape connected, minimising
/// `|types(v)| * product of |types(e)|` over its edges; ties go to the
/// largest index.
pub(crate) fn peel_vertex(shape: &Shape) -> usize {
    let full = shape.full_mask();
    let mut best: Option<(u128, usize)> = None;
    for v in 0..shape.vertex_count() {
        if !shape.is_connected_mask(full & !(1 << v)) {
            continue;
        }
        let weight = shape
            .incident(v)
            .iter()
            .fold(shape.vertices[v].len() as u128, |w, &e| {
                w.saturating_mul(shape.edges[e].types.len() as u128)
            });
        if best.map_or(true, |(w, _)| weight <= w) {
            best = Some((weight, v));
        }
    }
    best.map(|(_, v)| v).unwrap_or(0)
}

/// Induced binary splits of a whole shape.
fn shape_joins(shape: &Shape) -> Vec<(VMask, VMask)> {
    let full = shape.full_mask();
    let n = shape.vertex_count() as u32;
    if !(3..=MAX_JOIN_SPLIT_VERTICES).contains(&n) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for left in 1..full {
        if !shape.is_connected_mask(left) {
            continue;
        }
        for right in (left + 1)..full {
            if left & right == 0 || left | right != full || !shape.is_connected_mask(right) {
                continue;
            }
            let (a, b) = (left & !right, right & !left);
            let crossing = shape.edges.iter().any(|e| {
                let (s, d) = (1u64 << e.src, 1u64 << e.dst);
                (a & s != 0 && b & d != 0) || (a & d != 0 && b & s != 0)
            });
            if !crossing {
                out.push((left, right));
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct CatalogueFile {
    k: usize,
    vertex_types: Vec<String>,
    edge_types: Vec<String>,
    vertex_counts: Vec<u64>,
    edge_counts: Vec<u64>,
    patterns: Vec<PatternJson>,
    expand_edges: Vec<ExpandJson>,
    join_edges: Vec<JoinJson>,
}

#[derive(Serialize, Deserialize)]
struct PatternJson {
    code: String,
    freq: u64,
    /// Vertex type ids in canonical order.
    vertices: Vec<u32>,
    /// `[src, dst, triplet id]`.
    edges: Vec<[u32; 3]>,
}

#[derive(Serialize, Deserialize)]
struct ExpandJson {
    source: String,
    target: String,
    vertex_type: u32,
    triplets: Vec<u32>,
    ratios: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JoinJson {
    left: String,
    right: String,
    target: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, Properties};
    use num_rational::BigRational;

    fn schema() -> Arc<GraphSchema> {
        Arc::new(
            GraphSchema::builder()
                .vertex("A", &[])
                .vertex("B", &[])
                .edge("A", "r", "B", &[])
                .edge("A", "s", "A", &[])
                .build()
                .unwrap(),
        )
    }

    fn graph() -> PropertyGraph {
        let schema = schema();
        let mut b = GraphBuilder::new(schema.clone());
        let a: Vec<_> = (0..3)
            .map(|i| b.add_vertex_named(i, "A", Properties::new()).unwrap())
            .collect();
        let bs: Vec<_> = (3..5)
            .map(|i| b.add_vertex_named(i, "B", Properties::new()).unwrap())
            .collect();
        for (x, y) in [(0, 0), (0, 1), (1, 1), (2, 0), (2, 0)] {
            b.add_edge_labeled(a[x], bs[y], "r", Properties::new())
                .unwrap();
        }
        for (x, y) in [(0, 1), (1, 2), (2, 0)] {
            b.add_edge_labeled(a[x], a[y], "s", Properties::new())
                .unwrap();
        }
        b.build()
    }

    #[test]
    fn counts_include_parallel_edges() {
        let g = graph();
        let cat: GLogue<f64> = GLogue::build(&g, 3).unwrap();
        let s = cat.schema().clone();
        let a = s.vertex_type_id("A").unwrap();
        let b = s.vertex_type_id("B").unwrap();
        let r = s.find_triplet(a, "r", b).unwrap();
        let shape = Shape {
            vertices: vec![vec![a], vec![b], vec![a]],
            edges: vec![
                ShapeEdge {
                    src: 0,
                    dst: 1,
                    types: vec![r],
                    both: false,
                },
                ShapeEdge {
                    src: 2,
                    dst: 1,
                    types: vec![r],
                    both: false,
                },
            ],
        };
        // in-degrees of B: b0 has 3 (with a parallel pair), b1 has 2.
        assert_eq!(cat.get_freq(&shape), 9.0 + 4.0);
        assert!(!cat.expand_edges().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let g = graph();
        let cat: GLogue<f64> = GLogue::build(&g, 3).unwrap();
        let text = cat.to_json_string();
        let back: GLogue<f64> = GLogue::from_json_str(g.schema_arc(), &text).unwrap();
        assert_eq!(back.patterns(), cat.patterns());
        assert_eq!(back.expand_edges(), cat.expand_edges());
        assert_eq!(back.join_edges(), cat.join_edges());
        assert_eq!(back.type_counts(), cat.type_counts());
    }

    #[test]
    fn estimate_of_single_edge_matches_type_count() {
        let g = graph();
        let cat: GLogue<BigRational> =
            GLogue::from_type_counts(g.schema_arc(), g.type_counts()).unwrap();
        let s = cat.schema().clone();
        let a = s.vertex_type_id("A").unwrap();
        let sid = s.find_triplet(a, "s", a).unwrap();
        let both = Shape {
            vertices: vec![vec![a], vec![a]],
            edges: vec![ShapeEdge {
                src: 0,
                dst: 1,
                types: vec![sid],
                both: true,
            }],
        };
        assert_eq!(cat.get_freq(&both), BigRational::from_count(6));
    }

    #[test]
    fn join_frequency_divides_by_overlap() {
        assert_eq!(GLogue::<f64>::join_freq(6.0, 10.0, 4.0), 15.0);
        assert_eq!(GLogue::<f64>::join_freq(6.0, 10.0, 0.0), 0.0);
    }
}
