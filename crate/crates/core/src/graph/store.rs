use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::schema::{ETypeId, GraphSchema, PropertyDef, VTypeId};
use super::value::{PropValue, Properties};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Out,
    In,
    Both,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::Out => Direction::In,
            Direction::In => Direction::Out,
            Direction::Both => Direction::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub vtype: VTypeId,
    pub external_id: i64,
    pub props: Properties,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub etype: ETypeId,
    pub props: Properties,
}

/// One adjacency slot: the edge, its triplet, and the vertex on the other end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdjEntry {
    pub etype: ETypeId,
    pub edge: EdgeId,
    pub neighbor: VertexId,
}

/// Which edge triplets a neighbor lookup accepts.
#[derive(Debug, Clone, Copy)]
pub enum EdgeFilter<'a> {
    All,
    Types(&'a [ETypeId]),
}

/// Exact per-type cardinalities (the low-order statistics).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeCounts {
    pub vertices: Vec<u64>,
    pub edges: Vec<u64>,
}

impl TypeCounts {
    pub fn vertex(&self, t: VTypeId) -> u64 {
        self.vertices.get(t.index()).copied().unwrap_or(0)
    }

    pub fn edge(&self, t: ETypeId) -> u64 {
        self.edges.get(t.index()).copied().unwrap_or(0)
    }

    pub fn total_vertices(&self) -> u64 {
        self.vertices.iter().sum()
    }

    pub fn total_edges(&self) -> u64 {
        self.edges.iter().sum()
    }

    /// Same counts keyed by type name / triplet display string.
    pub fn named(&self, schema: &GraphSchema) -> Vec<(String, u64)> {
        let mut out: Vec<(String, u64)> = schema
            .vertex_type_ids()
            .map(|t| (schema.vertex_name(t).to_string(), self.vertex(t)))
            .collect();
        out.extend(
            schema
                .edge_type_ids()
                .map(|t| (schema.triplet_display(t).to_string(), self.edge(t))),
        );
        out
    }

    /// Every count multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> TypeCounts {
        TypeCounts {
            vertices: self.vertices.iter().map(|c| c * factor).collect(),
            edges: self.edges.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Immutable in-memory property graph with sorted adjacency in both directions.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    schema: Arc<GraphSchema>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<AdjEntry>>,
    in_adj: Vec<Vec<AdjEntry>>,
    by_type: Vec<Vec<VertexId>>,
    external: HashMap<i64, VertexId>,
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.vertices == other.vertices && self.edges == other.edges
    }
}

impl PropertyGraph {
    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<GraphSchema> {
        Arc::clone(&self.schema)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &Vertex)> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (VertexId(i as u32), v))
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (EdgeId(i as u32), e))
    }

    pub fn vertices_of_type(&self, t: VTypeId) -> &[VertexId] {
        &self.by_type[t.index()]
    }

    pub fn lookup_external(&self, external_id: i64) -> Option<VertexId> {
        self.external.get(&external_id).copied()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        v.index() < self.vertices.len()
    }

    /// All adjacency entries of `v` in one direction, sorted by `(etype, edge)`.
    pub fn adjacency(&self, v: VertexId, out: bool) -> &[AdjEntry] {
        if out {
            &self.out_adj[v.index()]
        } else {
            &self.in_adj[v.index()]
        }
    }

    /// The contiguous slice of adjacency entries of one triplet.
    pub fn adjacency_typed(&self, v: VertexId, out: bool, t: ETypeId) -> &[AdjEntry] {
        let adj = self.adjacency(v, out);
        let lo = adj.partition_point(|a| a.etype < t);
        let hi = adj.partition_point(|a| a.etype <= t);
        &adj[lo..hi]
    }

    /// Adjacent `(edge, neighbor)` pairs matching direction and filter,
    /// sorted by edge id.
    pub fn neighbors(
        &self,
        v: VertexId,
        direction: Direction,
        filter: EdgeFilter<'_>,
    ) -> Result<Vec<(EdgeId, VertexId)>> {
        if !self.contains_vertex(v) {
            return Err(Error::UnknownVertex(v.0 as u64));
        }
        let mut out = Vec::new();
        let mut collect = |outgoing: bool| match filter {
            EdgeFilter::All => out.extend(
                self.adjacency(v, outgoing)
                    .iter()
                    .map(|a| (a.edge, a.neighbor)),
            ),
            EdgeFilter::Types(ts) => {
                for t in ts {
                    out.extend(
                        self.adjacency_typed(v, outgoing, *t)
                            .iter()
                            .map(|a| (a.edge, a.neighbor)),
                    );
                }
            }
        };
        match direction {
            Direction::Out => collect(true),
            Direction::In => collect(false),
            Direction::Both => {
                collect(true);
                collect(false);
            }
        }
        out.sort();
        // a self-loop shows up in both lists
        out.dedup();
        Ok(out)
    }

    pub fn type_counts(&self) -> TypeCounts {
        let mut edges = vec![0u64; self.schema.edge_type_count()];
        for e in &self.edges {
            edges[e.etype.index()] += 1;
        }
        TypeCounts {
            vertices: self.by_type.iter().map(|v| v.len() as u64).collect(),
            edges,
        }
    }

    pub fn vertex_property(&self, v: VertexId, name: &str) -> Option<&PropValue> {
        self.vertex(v).props.get(name)
    }

    pub fn edge_property(&self, e: EdgeId, name: &str) -> Option<&PropValue> {
        self.edge(e).props.get(name)
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        self.schema.vertex_name(self.vertex(v).vtype)
    }
}

/// Incrementally assembles a [`PropertyGraph`], validating against the schema.
#[derive(Debug)]
pub struct GraphBuilder {
    schema: Arc<GraphSchema>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    external: HashMap<i64, VertexId>,
}

impl GraphBuilder {
    pub fn new(schema: impl Into<Arc<GraphSchema>>) -> Self {
        GraphBuilder {
            schema: schema.into(),
            vertices: Vec::new(),
            edges: Vec::new(),
            external: HashMap::new(),
        }
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_type_of(&self, v: VertexId) -> Option<VTypeId> {
        self.vertices.get(v.index()).map(|v| v.vtype)
    }

    pub fn lookup_external(&self, external_id: i64) -> Option<VertexId> {
        self.external.get(&external_id).copied()
    }

    pub fn add_vertex(
        &mut self,
        external_id: i64,
        vtype: VTypeId,
        props: Properties,
    ) -> Result<VertexId> {
        if vtype.index() >= self.schema.vertex_type_count() {
            return Err(Error::Schema(format!(
                "vertex type id {} out of range",
                vtype.0
            )));
        }
        if self.external.contains_key(&external_id) {
            return Err(Error::Schema(format!("duplicate vertex id {external_id}")));
        }
        let owner = self.schema.vertex_name(vtype).to_string();
        let props = check_props(&owner, &self.schema.vertex_type(vtype).properties, props)?;
        let id = VertexId(self.vertices.len() as u32);
        self.vertices.push(Vertex {
            vtype,
            external_id,
            props,
        });
        self.external.insert(external_id, id);
        Ok(id)
    }

    pub fn add_vertex_named(
        &mut self,
        external_id: i64,
        vtype: &str,
        props: Properties,
    ) -> Result<VertexId> {
        let t = self
            .schema
            .vertex_type_id(vtype)
            .ok_or_else(|| Error::UnknownType(vtype.to_string()))?;
        self.add_vertex(external_id, t, props)
    }

    pub fn add_edge(
        &mut self,
        src: VertexId,
        dst: VertexId,
        etype: ETypeId,
        props: Properties,
    ) -> Result<EdgeId> {
        let st = self
            .vertex_type_of(src)
            .ok_or(Error::UnknownVertex(src.0 as u64))?;
        let dt = self
            .vertex_type_of(dst)
            .ok_or(Error::UnknownVertex(dst.0 as u64))?;
        if etype.index() >= self.schema.edge_type_count() {
            return Err(Error::Schema(format!(
                "edge type id {} out of range",
                etype.0
            )));
        }
        let triplet = self.schema.triplet(etype);
        if triplet.src != st || triplet.dst != dt {
            return Err(Error::Schema(format!(
                "edge {} does not connect {} to {}",
                self.schema.triplet_display(etype),
                self.schema.vertex_name(st),
                self.schema.vertex_name(dt)
            )));
        }
        let owner = triplet.label.clone();
        let props = check_props(&owner, &triplet.properties, props)?;
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(Edge {
            src,
            dst,
            etype,
            props,
        });
        Ok(id)
    }

    /// Adds an edge whose triplet is resolved from `label` and the endpoint types.
    pub fn add_edge_labeled(
        &mut self,
        src: VertexId,
        dst: VertexId,
        label: &str,
        props: Properties,
    ) -> Result<EdgeId> {
        let st = self
            .vertex_type_of(src)
            .ok_or(Error::UnknownVertex(src.0 as u64))?;
        let dt = self
            .vertex_type_of(dst)
            .ok_or(Error::UnknownVertex(dst.0 as u64))?;
        let t = self.schema.find_triplet(st, label, dt).ok_or_else(|| {
            Error::Schema(format!(
                "no edge type {}-{}->{} in schema",
                self.schema.vertex_name(st),
                label,
                self.schema.vertex_name(dt)
            ))
        })?;
        self.add_edge(src, dst, t, props)
    }

    pub fn build(self) -> PropertyGraph {
        let n = self.vertices.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            let id = EdgeId(i as u32);
            out_adj[e.src.index()].push(AdjEntry {
                etype: e.etype,
                edge: id,
                neighbor: e.dst,
            });
            in_adj[e.dst.index()].push(AdjEntry {
                etype: e.etype,
                edge: id,
                neighbor: e.src,
            });
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        let mut by_type = vec![Vec::new(); self.schema.vertex_type_count()];
        for (i, v) in self.vertices.iter().enumerate() {
            by_type[v.vtype.index()].push(VertexId(i as u32));
        }
        PropertyGraph {
            schema: self.schema,
            vertices: self.vertices,
            edges: self.edges,
            out_adj,
            in_adj,
            by_type,
            external: self.external,
        }
    }
}

fn check_props(owner: &str, defs: &[PropertyDef], props: Properties) -> Result<Properties> {
    let mut out = Properties::new();
    for (k, v) in props {
        let def = defs
            .iter()
            .find(|d| d.name == k)
            .ok_or_else(|| Error::Schema(format!("property `{k}` is not declared on `{owner}`")))?;
        if !v.conforms_to(&def.datatype) {
            return Err(Error::Schema(format!(
                "property `{k}` on `{owner}` expects {}, got {v}",
                def.datatype
            )));
        }
        out.insert(k, v.coerce_to(&def.datatype));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::value::DataType;

    fn schema() -> GraphSchema {
        GraphSchema::builder()
            .vertex("Person", &[("name", DataType::String)])
            .vertex("Product", &[])
            .vertex("Place", &[])
            .edge("Person", "Knows", "Person", &[("weight", DataType::Float)])
            .edge("Person", "Purchases", "Product", &[])
            .edge("Person", "LocatedIn", "Place", &[])
            .edge("Product", "ProducedIn", "Place", &[])
            .build()
            .unwrap()
    }

    fn small() -> (PropertyGraph, Vec<VertexId>) {
        let mut b = GraphBuilder::new(schema());
        let p0 = b.add_vertex_named(0, "Person", Properties::new()).unwrap();
        let p1 = b.add_vertex_named(1, "Person", Properties::new()).unwrap();
        let p2 = b.add_vertex_named(2, "Person", Properties::new()).unwrap();
        let pr = b.add_vertex_named(3, "Product", Properties::new()).unwrap();
        let pl = b.add_vertex_named(4, "Place", Properties::new()).unwrap();
        let _iso = b.add_vertex_named(5, "Place", Properties::new()).unwrap();
        b.add_edge_labeled(p0, p1, "Knows", Properties::new())
            .unwrap();
        b.add_edge_labeled(p0, pr, "Purchases", Properties::new())
            .unwrap();
        b.add_edge_labeled(p0, p2, "Knows", Properties::new())
            .unwrap();
        b.add_edge_labeled(pr, pl, "ProducedIn", Properties::new())
            .unwrap();
        (b.build(), vec![p0, p1, p2, pr, pl, _iso])
    }

    #[test]
    fn neighbors_by_direction_and_filter() {
        let (g, v) = small();
        let all = g.neighbors(v[0], Direction::Out, EdgeFilter::All).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.windows(2).all(|w| w[0].0 < w[1].0));
        let knows = g.schema().resolve_edge_label("Knows").unwrap();
        let k = g
            .neighbors(v[0], Direction::Out, EdgeFilter::Types(&knows))
            .unwrap();
        assert_eq!(k.len(), 2);
        assert!(g
            .neighbors(v[5], Direction::Both, EdgeFilter::All)
            .unwrap()
            .is_empty());
        assert!(matches!(
            g.neighbors(VertexId(99), Direction::Out, EdgeFilter::All),
            Err(Error::UnknownVertex(99))
        ));
    }

    #[test]
    fn counts_sum_to_totals() {
        let (g, _) = small();
        let c = g.type_counts();
        assert_eq!(c.total_vertices(), g.vertex_count() as u64);
        assert_eq!(c.total_edges(), g.edge_count() as u64);
        assert_eq!(c.vertices, vec![3, 1, 2]);
        assert_eq!(c.edges, vec![2, 1, 0, 1]);
    }

    #[test]
    fn schema_violations() {
        let mut b = GraphBuilder::new(schema());
        let p = b.add_vertex_named(0, "Person", Properties::new()).unwrap();
        let pr = b.add_vertex_named(1, "Product", Properties::new()).unwrap();
        assert!(b
            .add_edge_labeled(p, pr, "Knows", Properties::new())
            .is_err());
        assert!(b.add_vertex_named(0, "Person", Properties::new()).is_err());
        let mut bad = Properties::new();
        bad.insert("name".into(), PropValue::Int(3));
        assert!(b.add_vertex_named(7, "Person", bad).is_err());
        let mut undeclared = Properties::new();
        undeclared.insert("age".into(), PropValue::Int(3));
        assert!(b.add_vertex_named(8, "Person", undeclared).is_err());
        let mut w = Properties::new();
        w.insert("weight".into(), PropValue::Int(2));
        let p2 = b.add_vertex_named(2, "Person", Properties::new()).unwrap();
        let e = b.add_edge_labeled(p, p2, "Knows", w).unwrap();
        let g = b.build();
        assert_eq!(g.edge_property(e, "weight"), Some(&PropValue::Float(2.0)));
    }

    #[test]
    fn adjacency_matches_edge_set() {
        let (g, _) = small();
        let mut rebuilt = Vec::new();
        for (v, _) in g.vertices() {
            for (e, n) in g.neighbors(v, Direction::Out, EdgeFilter::All).unwrap() {
                rebuilt.push((e, v, n));
                let back = g.neighbors(n, Direction::In, EdgeFilter::All).unwrap();
                assert!(back.contains(&(e, v)));
            }
        }
        rebuilt.sort();
        let expected: Vec<_> = g.edges().map(|(id, e)| (id, e.src, e.dst)).collect();
        assert_eq!(rebuilt, expected);
    }
}
