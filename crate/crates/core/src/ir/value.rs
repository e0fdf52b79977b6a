use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, PropValue, PropertyGraph, VertexId};

/// Alternating vertex/edge sequence; `vertices.len() == edges.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeId>,
}

impl Path {
    pub fn new(vertices: Vec<VertexId>, edges: Vec<EdgeId>) -> Result<Path> {
        if vertices.is_empty() || vertices.len() != edges.len() + 1 {
            return Err(Error::Plan(format!(
                "malformed path with {} vertices and {} edges",
                vertices.len(),
                edges.len()
            )));
        }
        Ok(Path { vertices, edges })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn length(&self) -> usize {
        self.edges.len()
    }
}

/// Runtime value flowing through binding tables and expressions.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    List(Vec<Value>),
    Vertex(VertexId),
    Edge(EdgeId),
    Path(Path),
}

pub type Params = BTreeMap<String, Value>;

impl From<&PropValue> for Value {
    fn from(p: &PropValue) -> Self {
        match p {
            PropValue::Int(i) => Value::Int(*i),
            PropValue::Float(x) => Value::Float(*x),
            PropValue::Str(s) => Value::Str(s.clone()),
            PropValue::Bool(b) => Value::Bool(*b),
            PropValue::List(items) => Value::List(items.iter().map(Value::from).collect()),
        }
    }
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Null => "Null",
            Value::Int(_) => "Integer",
            Value::Float(_) => "Float",
            Value::Str(_) => "String",
            Value::Bool(_) => "Boolean",
            Value::List(_) => "List",
            Value::Vertex(_) => "Vertex",
            Value::Edge(_) => "Edge",
            Value::Path(_) => "Path",
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) | Value::Float(_) => 0,
            Value::Str(_) => 1,
            Value::Bool(_) => 2,
            Value::Vertex(_) => 3,
            Value::Edge(_) => 4,
            Value::Path(_) => 5,
            Value::List(_) => 6,
            Value::Null => 7,
        }
    }

    /// Total order used by ORDER BY and grouping: numbers < strings <
    /// booleans < vertices < edges < paths < lists, nulls last.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        let (ra, rb) = (self.rank(), other.rank());
        if ra != rb {
            return ra.cmp(&rb);
        }
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Int(a), Value::Float(b)) => (*a as f64).total_cmp(b),
            (Value::Float(a), Value::Int(b)) => a.total_cmp(&(*b as f64)),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Vertex(a), Value::Vertex(b)) => a.cmp(b),
            (Value::Edge(a), Value::Edge(b)) => a.cmp(b),
            (Value::Path(a), Value::Path(b)) => a
                .vertices
                .cmp(&b.vertices)
                .then_with(|| a.edges.cmp(&b.edges)),
            (Value::List(a), Value::List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let c = x.total_cmp(y);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                a.len().cmp(&b.len())
            }
            _ => Ordering::Equal,
        }
    }

    /// Comparison under predicate semantics: `None` when either side is
    /// null, an error when kinds are incomparable.
    pub fn compare(&self, other: &Value) -> Result<Option<Ordering>> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => Ok(None),
            (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_))
            | (Value::Str(_), Value::Str(_))
            | (Value::Bool(_), Value::Bool(_))
            | (Value::Vertex(_), Value::Vertex(_))
            | (Value::Edge(_), Value::Edge(_))
            | (Value::Path(_), Value::Path(_)) => Ok(Some(self.total_cmp(other))),
            (Value::List(a), Value::List(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.compare(y)? {
                        Some(Ordering::Equal) => {}
                        other => return Ok(other),
                    }
                }
                Ok(Some(a.len().cmp(&b.len())))
            }
            _ => Err(Error::TypeMismatch(format!(
                "cannot compare {} with {}",
                self.kind_name(),
                other.kind_name()
            ))),
        }
    }

    /// Parses a parameter literal: JSON scalars and arrays; anything else
    /// is taken as a bare string.
    pub fn parse_literal(text: &str) -> Value {
        let t = text.trim();
        let unquoted = t
            .strip_prefix('\'')
            .and_then(|r| r.strip_suffix('\''))
            .unwrap_or(t);
        match serde_json::from_str::<serde_json::Value>(unquoted) {
            Ok(j) => Value::from_json(&j).unwrap_or_else(|| Value::Str(unquoted.to_string())),
            Err(_) => Value::Str(unquoted.to_string()),
        }
    }

    pub fn from_json(j: &serde_json::Value) -> Option<Value> {
        use serde_json::Value as J;
        Some(match j {
            J::Null => Value::Null,
            J::Bool(b) => Value::Bool(*b),
            J::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64()?),
            },
            J::String(s) => Value::Str(s.clone()),
            J::Array(items) => Value::List(
                items
                    .iter()
                    .map(Value::from_json)
                    .collect::<Option<Vec<_>>>()?,
            ),
            J::Object(_) => return None,
        })
    }

    /// JSON rendering; graph elements are expanded using `g`.
    pub fn to_json(&self, g: &PropertyGraph) -> serde_json::Value {
        use serde_json::{json, Value as J};
        let props = |p: &crate::graph::Properties| {
            J::Object(p.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
        };
        match self {
            Value::Null => J::Null,
            Value::Int(i) => J::from(*i),
            Value::Float(x) => serde_json::Number::from_f64(*x)
                .map(J::Number)
                .unwrap_or(J::Null),
            Value::Str(s) => J::String(s.clone()),
            Value::Bool(b) => J::Bool(*b),
            Value::List(items) => J::Array(items.iter().map(|v| v.to_json(g)).collect()),
            Value::Vertex(v) => {
                let vx = g.vertex(*v);
                json!({"id": vx.external_id, "label": g.vertex_label(*v), "properties": props(&vx.props)})
            }
            Value::Edge(e) => {
                let ex = g.edge(*e);
                json!({
                    "src": g.vertex(ex.src).external_id,
                    "dst": g.vertex(ex.dst).external_id,
                    "label": g.schema().triplet(ex.etype).label,
                    "properties": props(&ex.props),
                })
            }
            Value::Path(p) => json!({
                "vertices": p.vertices.iter().map(|v| g.vertex(*v).external_id).collect::<Vec<_>>(),
                "edges": p.edges.iter().map(|e| Value::Edge(*e).to_json(g)).collect::<Vec<_>>(),
                "length": p.length(),
            }),
        }
    }

    /// Compact text rendering used in CSV output.
    pub fn render(&self, g: &PropertyGraph) -> String {
        match self {
            Value::Null => String::new(),
            Value::Str(s) => s.clone(),
            Value::Vertex(v) => format!("{}:{}", g.vertex_label(*v), g.vertex(*v).external_id),
            Value::Edge(e) => {
                let ex = g.edge(*e);
                format!(
                    "{}-{}->{}",
                    g.vertex(ex.src).external_id,
                    g.schema().triplet(ex.etype).label,
                    g.vertex(ex.dst).external_id
                )
            }
            Value::Path(p) => {
                let mut s = g.vertex(p.vertices[0]).external_id.to_string();
                for (i, e) in p.edges.iter().enumerate() {
                    let ex = g.edge(*e);
                    let label = &g.schema().triplet(ex.etype).label;
                    let next = p.vertices[i + 1];
                    if ex.dst == next {
                        s.push_str(&format!("-{label}->"));
                    } else {
                        s.push_str(&format!("<-{label}-"));
                    }
                    s.push_str(&g.vertex(next).external_id.to_string());
                }
                s
            }
            Value::List(items) => format!(
                "[{}]",
                items
                    .iter()
                    .map(|v| v.render(g))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.fract() == 0.0 && x.is_finite() {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Vertex(v) => write!(f, "v#{}", v.0),
            Value::Edge(e) => write!(f, "e#{}", e.0),
            Value::Path(p) => write!(f, "path(len={})", p.length()),
        }
    }
}

/// Wrapper giving [`Value`] the total order of [`Value::total_cmp`].
#[derive(Debug, Clone)]
pub struct OrdValue(pub Value);

impl PartialEq for OrdValue {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for OrdValue {}

impl PartialOrd for OrdValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
