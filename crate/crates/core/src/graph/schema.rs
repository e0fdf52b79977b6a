use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::value::DataType;
use crate::error::{Error, Result};

/// Index of a vertex type in its schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VTypeId(pub u32);

/// Index of an edge triplet `(src, label, dst)` in its schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ETypeId(pub u32);

impl VTypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ETypeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub name: String,
    #[serde(rename = "type")]
    pub datatype: DataType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexType {
    pub name: String,
    pub properties: Vec<PropertyDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTriplet {
    pub src: VTypeId,
    pub label: String,
    pub dst: VTypeId,
    pub properties: Vec<PropertyDef>,
}

/// Vertex types, edge triplets and named unions of vertex types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSchema {
    vertex_types: Vec<VertexType>,
    edge_types: Vec<EdgeTriplet>,
    supertypes: BTreeMap<String, Vec<VTypeId>>,
    vertex_index: HashMap<String, VTypeId>,
    out_triplets: Vec<Vec<ETypeId>>,
    in_triplets: Vec<Vec<ETypeId>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFile {
    vertex_types: Vec<VertexTypeFile>,
    #[serde(default)]
    edge_types: Vec<EdgeTypeFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    supertypes: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexTypeFile {
    name: String,
    #[serde(default)]
    properties: Vec<PropertyDef>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeTypeFile {
    src: String,
    label: String,
    dst: String,
    #[serde(default)]
    properties: Vec<PropertyDef>,
}

/// Builder-style description used to construct schemas in code.
#[derive(Debug, Default, Clone)]
pub struct SchemaSpec {
    pub vertex_types: Vec<(String, Vec<PropertyDef>)>,
    pub edge_types: Vec<(String, String, String, Vec<PropertyDef>)>,
    pub supertypes: BTreeMap<String, Vec<String>>,
}

impl SchemaSpec {
    pub fn vertex(mut self, name: &str, props: &[(&str, DataType)]) -> Self {
        self.vertex_types.push((name.to_string(), prop_defs(props)));
        self
    }

    pub fn edge(mut self, src: &str, label: &str, dst: &str, props: &[(&str, DataType)]) -> Self {
        self.edge_types.push((
            src.to_string(),
            label.to_string(),
            dst.to_string(),
            prop_defs(props),
        ));
        self
    }

    pub fn supertype(mut self, name: &str, members: &[&str]) -> Self {
        self.supertypes.insert(
            name.to_string(),
            members.iter().map(|s| s.to_string()).collect(),
        );
        self
    }

    pub fn build(self) -> Result<GraphSchema> {
        GraphSchema::new(self.vertex_types, self.edge_types, self.supertypes)
    }
}

fn prop_defs(props: &[(&str, DataType)]) -> Vec<PropertyDef> {
    props
        .iter()
        .map(|(n, t)| PropertyDef {
            name: n.to_string(),
            datatype: t.clone(),
        })
        .collect()
}

impl GraphSchema {
    pub fn builder() -> SchemaSpec {
        SchemaSpec::default()
    }

    pub fn new(
        vertex_types: Vec<(String, Vec<PropertyDef>)>,
        edge_types: Vec<(String, String, String, Vec<PropertyDef>)>,
        supertypes: BTreeMap<String, Vec<String>>,
    ) -> Result<Self> {
        let mut vertex_index = HashMap::new();
        let mut vts = Vec::with_capacity(vertex_types.len());
        for (i, (name, properties)) in vertex_types.into_iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Schema("empty vertex type name".into()));
            }
            check_unique_props(&name, &properties)?;
            if vertex_index
                .insert(name.clone(), VTypeId(i as u32))
                .is_some()
            {
                return Err(Error::Schema(format!("duplicate vertex type `{name}`")));
            }
            vts.push(VertexType { name, properties });
        }

        let lookup = |name: &str, role: &str, label: &str| -> Result<VTypeId> {
            vertex_index.get(name).copied().ok_or_else(|| {
                Error::Schema(format!(
                    "edge type `{label}` references undeclared {role} vertex type `{name}`"
                ))
            })
        };
        let mut seen = BTreeSet::new();
        let mut ets = Vec::with_capacity(edge_types.len());
        for (src, label, dst, properties) in edge_types {
            let s = lookup(&src, "source", &label)?;
            let d = lookup(&dst, "target", &label)?;
            if label.is_empty() {
                return Err(Error::Schema("empty edge label".into()));
            }
            if !seen.insert((s, label.clone(), d)) {
                return Err(Error::Schema(format!(
                    "duplicate edge triplet {src}-{label}->{dst}"
                )));
            }
            check_unique_props(&label, &properties)?;
            ets.push(EdgeTriplet {
                src: s,
                label,
                dst: d,
                properties,
            });
        }

        let mut sup = BTreeMap::new();
        for (name, members) in supertypes {
            if vertex_index.contains_key(&name) {
                return Err(Error::Schema(format!(
                    "supertype `{name}` collides with a vertex type"
                )));
            }
            let mut ids = Vec::new();
            for m in &members {
                let id = vertex_index.get(m).copied().ok_or_else(|| {
                    Error::Schema(format!(
                        "supertype `{name}` references undeclared vertex type `{m}`"
                    ))
                })?;
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
            if ids.is_empty() {
                return Err(Error::Schema(format!("supertype `{name}` has no members")));
            }
            ids.sort();
            sup.insert(name, ids);
        }

        let mut out_triplets = vec![Vec::new(); vts.len()];
        let mut in_triplets = vec![Vec::new(); vts.len()];
        for (i, t) in ets.iter().enumerate() {
            out_triplets[t.src.index()].push(ETypeId(i as u32));
            in_triplets[t.dst.index()].push(ETypeId(i as u32));
        }

        Ok(GraphSchema {
            vertex_types: vts,
            edge_types: ets,
            supertypes: sup,
            vertex_index,
            out_triplets,
            in_triplets,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SchemaFile = serde_json::from_str(text).map_err(|e| Error::SchemaParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        GraphSchema::new(
            file.vertex_types
                .into_iter()
                .map(|v| (v.name, v.properties))
                .collect(),
            file.edge_types
                .into_iter()
                .map(|e| (e.src, e.label, e.dst, e.properties))
                .collect(),
            file.supertypes,
        )
    }

    pub fn to_json_string(&self) -> String {
        let file = SchemaFile {
            vertex_types: self
                .vertex_types
                .iter()
                .map(|v| VertexTypeFile {
                    name: v.name.clone(),
                    properties: v.properties.clone(),
                })
                .collect(),
            edge_types: self
                .edge_types
                .iter()
                .map(|e| EdgeTypeFile {
                    src: self.vertex_name(e.src).to_string(),
                    label: e.label.clone(),
                    dst: self.vertex_name(e.dst).to_string(),
                    properties: e.properties.clone(),
                })
                .collect(),
            supertypes: self
                .supertypes
                .iter()
                .map(|(k, ids)| {
                    (
                        k.clone(),
                        ids.iter()
                            .map(|i| self.vertex_name(*i).to_string())
                            .collect(),
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("schema serializes")
    }

    pub fn vertex_type_count(&self) -> usize {
        self.vertex_types.len()
    }

    pub fn edge_type_count(&self) -> usize {
        self.edge_types.len()
    }

    pub fn vertex_types(&self) -> &[VertexType] {
        &self.vertex_types
    }

    pub fn edge_types(&self) -> &[EdgeTriplet] {
        &self.edge_types
    }

    pub fn vertex_type_ids(&self) -> impl Iterator<Item = VTypeId> + '_ {
        (0..self.vertex_types.len() as u32).map(VTypeId)
    }

    pub fn edge_type_ids(&self) -> impl Iterator<Item = ETypeId> + '_ {
        (0..self.edge_types.len() as u32).map(ETypeId)
    }

    pub fn vertex_type(&self, id: VTypeId) -> &VertexType {
        &self.vertex_types[id.index()]
    }

    pub fn vertex_name(&self, id: VTypeId) -> &str {
        &self.vertex_types[id.index()].name
    }

    pub fn triplet(&self, id: ETypeId) -> &EdgeTriplet {
        &self.edge_types[id.index()]
    }

    pub fn vertex_type_id(&self, name: &str) -> Option<VTypeId> {
        self.vertex_index.get(name).copied()
    }

    pub fn find_triplet(&self, src: VTypeId, label: &str, dst: VTypeId) -> Option<ETypeId> {
        self.out_triplets[src.index()].iter().copied().find(|t| {
            let e = self.triplet(*t);
            e.dst == dst && e.label == label
        })
    }

    /// Triplets whose source type is `t`.
    pub fn out_triplets(&self, t: VTypeId) -> &[ETypeId] {
        &self.out_triplets[t.index()]
    }

    /// Triplets whose target type is `t`.
    pub fn in_triplets(&self, t: VTypeId) -> &[ETypeId] {
        &self.in_triplets[t.index()]
    }

    pub fn supertypes(&self) -> &BTreeMap<String, Vec<VTypeId>> {
        &self.supertypes
    }

    /// Resolves a vertex label (type or supertype name) to vertex types.
    /// Exact match wins; otherwise a unique case-insensitive match is accepted.
    pub fn resolve_vertex_label(&self, name: &str) -> Option<Vec<VTypeId>> {
        if let Some(id) = self.vertex_index.get(name) {
            return Some(vec![*id]);
        }
        if let Some(ids) = self.supertypes.get(name) {
            return Some(ids.clone());
        }
        let mut hits: Vec<Vec<VTypeId>> = self
            .vertex_types
            .iter()
            .enumerate()
            .filter(|(_, v)| v.name.eq_ignore_ascii_case(name))
            .map(|(i, _)| vec![VTypeId(i as u32)])
            .collect();
        hits.extend(
            self.supertypes
                .iter()
                .filter(|(k, _)| k.eq_ignore_ascii_case(name))
                .map(|(_, ids)| ids.clone()),
        );
        if hits.len() == 1 {
            hits.pop()
        } else {
            None
        }
    }

    /// Resolves an edge label to every triplet carrying it.
    pub fn resolve_edge_label(&self, name: &str) -> Option<Vec<ETypeId>> {
        let exact: Vec<ETypeId> = self
            .edge_type_ids()
            .filter(|t| self.triplet(*t).label == name)
            .collect();
        if !exact.is_empty() {
            return Some(exact);
        }
        let labels: BTreeSet<&str> = self
            .edge_types
            .iter()
            .filter(|e| e.label.eq_ignore_ascii_case(name))
            .map(|e| e.label.as_str())
            .collect();
        if labels.len() != 1 {
            return None;
        }
        let label = *labels.iter().next().unwrap();
        Some(
            self.edge_type_ids()
                .filter(|t| self.triplet(*t).label == label)
                .collect(),
        )
    }

    pub fn vertex_property(&self, t: VTypeId, name: &str) -> Option<&PropertyDef> {
        self.vertex_type(t)
            .properties
            .iter()
            .find(|p| p.name == name)
    }

    pub fn edge_property(&self, t: ETypeId, name: &str) -> Option<&PropertyDef> {
        self.triplet(t).properties.iter().find(|p| p.name == name)
    }

    pub fn triplet_display(&self, id: ETypeId) -> TripletDisplay<'_> {
        TripletDisplay { schema: self, id }
    }
}

fn check_unique_props(owner: &str, props: &[PropertyDef]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in props {
        if !seen.insert(p.name.as_str()) {
            return Err(Error::Schema(format!(
                "duplicate property `{}` on `{owner}`",
                p.name
            )));
        }
    }
    Ok(())
}

pub struct TripletDisplay<'a> {
    schema: &'a GraphSchema,
    id: ETypeId,
}

impl fmt::Display for TripletDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.schema.triplet(self.id);
        write!(
            f,
            "{}-{}->{}",
            self.schema.vertex_name(t.src),
            t.label,
            self.schema.vertex_name(t.dst)
        )
    }
}

/// Reads and validates a schema JSON file.
pub fn load_schema(path: impl AsRef<Path>) -> Result<GraphSchema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GraphSchema::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"{
        "vertex_types": [
            {"name": "Person", "properties": [{"name": "name", "type": "String"}]},
            {"name": "Product", "properties": [{"name": "name", "type": "String"}]},
            {"name": "Place", "properties": [{"name": "name", "type": "String"}]}
        ],
        "edge_types": [
            {"src": "Person", "label": "Knows", "dst": "Person"},
            {"src": "Person", "label": "Purchases", "dst": "Product"},
            {"src": "Person", "label": "LocatedIn", "dst": "Place"},
            {"src": "Product", "label": "ProducedIn", "dst": "Place"}
        ]
    }"#;

    #[test]
    fn parses_motivating_schema() {
        let s = GraphSchema::from_json_str(FIG1).unwrap();
        assert_eq!(s.vertex_type_count(), 3);
        assert_eq!(s.edge_type_count(), 4);
        let place = s.vertex_type_id("Place").unwrap();
        assert_eq!(s.in_triplets(place).len(), 2);
        assert!(s.out_triplets(place).is_empty());
        let knows = s.resolve_edge_label("Knows").unwrap();
        assert_eq!(
            s.triplet_display(knows[0]).to_string(),
            "Person-Knows->Person"
        );
    }

    #[test]
    fn edge_less_schema_is_valid() {
        let s = GraphSchema::from_json_str(r#"{"vertex_types":[{"name":"A"}],"edge_types":[]}"#)
            .unwrap();
        assert_eq!(s.vertex_type_count(), 1);
        assert_eq!(s.edge_type_count(), 0);
    }

    #[test]
    fn dangling_reference_rejected() {
        let err = GraphSchema::from_json_str(
            r#"{"vertex_types":[{"name":"A"}],"edge_types":[{"src":"A","label":"x","dst":"Ghost"}]}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Schema(ref m) if m.contains("Ghost")),
            "{err}"
        );
    }

    #[test]
    fn duplicates_rejected() {
        assert!(
            GraphSchema::from_json_str(r#"{"vertex_types":[{"name":"A"},{"name":"A"}]}"#).is_err()
        );
        assert!(GraphSchema::from_json_str(
            r#"{"vertex_types":[{"name":"A"}],"edge_types":[{"src":"A","label":"x","dst":"A"},{"src":"A","label":"x","dst":"A"}]}"#
        )
        .is_err());
    }

    #[test]
    fn parse_error_reports_position() {
        let err = GraphSchema::from_json_str("{\n  \"vertex_types\": [\n  {\"name\": 3}\n]}")
            .unwrap_err();
        match err {
            Error::SchemaParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn label_resolution() {
        let s = GraphSchema::builder()
            .vertex("POST", &[])
            .vertex("COMMENT", &[])
            .vertex("PERSON", &[])
            .edge("POST", "HASCREATOR", "PERSON", &[])
            .edge("COMMENT", "HASCREATOR", "PERSON", &[])
            .supertype("MESSAGE", &["POST", "COMMENT"])
            .build()
            .unwrap();
        assert_eq!(s.resolve_vertex_label("Message").unwrap().len(), 2);
        assert_eq!(s.resolve_vertex_label("person").unwrap().len(), 1);
        assert_eq!(s.resolve_edge_label("hasCreator").unwrap().len(), 2);
        assert!(s.resolve_vertex_label("Ghost").is_none());
        let round = GraphSchema::from_json_str(&s.to_json_string()).unwrap();
        assert_eq!(round, s);
    }
}
