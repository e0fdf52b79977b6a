use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Declared datatype of a property.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DataType {
    Integer,
    Float,
    String,
    Boolean,
    List(Box<DataType>),
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Integer => f.write_str("Integer"),
            DataType::Float => f.write_str("Float"),
            DataType::String => f.write_str("String"),
            DataType::Boolean => f.write_str("Boolean"),
            DataType::List(inner) => write!(f, "List<{inner}>"),
        }
    }
}

impl FromStr for DataType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if let Some(inner) = lower
            .strip_prefix("list<")
            .and_then(|r| r.strip_suffix('>'))
        {
            let inner: DataType = inner.parse()?;
            if matches!(inner, DataType::List(_)) {
                return Err(format!("nested list type `{t}` is not supported"));
            }
            return Ok(DataType::List(Box::new(inner)));
        }
        match lower.as_str() {
            "integer" | "int" | "long" | "int64" => Ok(DataType::Integer),
            "float" | "double" | "float64" => Ok(DataType::Float),
            "string" | "str" => Ok(DataType::String),
            "boolean" | "bool" => Ok(DataType::Boolean),
            _ => Err(format!("unknown datatype `{t}`")),
        }
    }
}

impl Serialize for DataType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DataType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A stored property value.
#[derive(Debug, Clone, PartialEq)]
pub enum PropValue {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    List(Vec<PropValue>),
}

pub type Properties = BTreeMap<String, PropValue>;

impl PropValue {
    pub fn conforms_to(&self, ty: &DataType) -> bool {
        match (self, ty) {
            (PropValue::Int(_), DataType::Integer) => true,
            (PropValue::Int(_) | PropValue::Float(_), DataType::Float) => true,
            (PropValue::Str(_), DataType::String) => true,
            (PropValue::Bool(_), DataType::Boolean) => true,
            (PropValue::List(items), DataType::List(inner)) => {
                items.iter().all(|v| v.conforms_to(inner))
            }
            _ => false,
        }
    }

    /// Coerces integers stored under a `Float` declaration.
    pub fn coerce_to(self, ty: &DataType) -> PropValue {
        match (self, ty) {
            (PropValue::Int(i), DataType::Float) => PropValue::Float(i as f64),
            (PropValue::List(items), DataType::List(inner)) => {
                PropValue::List(items.into_iter().map(|v| v.coerce_to(inner)).collect())
            }
            (v, _) => v,
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Option<PropValue>, String> {
        use serde_json::Value as J;
        Ok(match v {
            J::Null => None,
            J::Bool(b) => Some(PropValue::Bool(*b)),
            J::Number(n) => Some(match n.as_i64() {
                Some(i) => PropValue::Int(i),
                None => PropValue::Float(n.as_f64().ok_or("number out of range")?),
            }),
            J::String(s) => Some(PropValue::Str(s.clone())),
            J::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match PropValue::from_json(item)? {
                        Some(PropValue::List(_)) => {
                            return Err("nested lists are not supported".into())
                        }
                        Some(v) => out.push(v),
                        None => return Err("null inside list".into()),
                    }
                }
                Some(PropValue::List(out))
            }
            J::Object(_) => return Err("map property values are not supported".into()),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            PropValue::Int(i) => J::from(*i),
            PropValue::Float(x) => serde_json::Number::from_f64(*x)
                .map(J::Number)
                .unwrap_or(J::Null),
            PropValue::Str(s) => J::String(s.clone()),
            PropValue::Bool(b) => J::Bool(*b),
            PropValue::List(items) => J::Array(items.iter().map(PropValue::to_json).collect()),
        }
    }
}

impl fmt::Display for PropValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datatype_parsing() {
        assert_eq!("Integer".parse::<DataType>().unwrap(), DataType::Integer);
        assert_eq!(
            "List<String>".parse::<DataType>().unwrap(),
            DataType::List(Box::new(DataType::String))
        );
        assert!("List<List<Integer>>".parse::<DataType>().is_err());
        assert!("Map".parse::<DataType>().is_err());
    }

    #[test]
    fn json_conversion() {
        let v: serde_json::Value = serde_json::json!([1, 2, 3]);
        let p = PropValue::from_json(&v).unwrap().unwrap();
        assert!(p.conforms_to(&DataType::List(Box::new(DataType::Integer))));
        assert_eq!(p.to_json(), v);
        assert!(PropValue::from_json(&serde_json::json!({"a": 1})).is_err());
        assert_eq!(
            PropValue::from_json(&serde_json::Value::Null).unwrap(),
            None
        );
    }
}
