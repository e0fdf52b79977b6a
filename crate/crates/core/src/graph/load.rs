use std::path::Path;
use std::sync::Arc;

use super::schema::GraphSchema;
use super::store::{GraphBuilder, PropertyGraph};
use super::value::{PropValue, Properties};
use crate::error::{Error, Result};

/// Loads vertices and edges from CSV files.
///
/// Vertices: header `id,label,properties`. Edges: header
/// `src,dst,label,properties` with optional `src_label,dst_label` columns.
/// `properties` holds a JSON object (may be empty).
pub fn load_graph(
    schema: impl Into<Arc<GraphSchema>>,
    vertices_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<PropertyGraph> {
    let vpath = vertices_path.as_ref();
    let epath = edges_path.as_ref();
    let vtext = std::fs::read_to_string(vpath).map_err(|e| Error::io(vpath, e))?;
    let etext = std::fs::read_to_string(epath).map_err(|e| Error::io(epath, e))?;
    load_graph_from_str(
        schema,
        &vpath.display().to_string(),
        &vtext,
        &epath.display().to_string(),
        &etext,
    )
}

pub fn load_graph_from_str(
    schema: impl Into<Arc<GraphSchema>>,
    vname: &str,
    vertices_csv: &str,
    ename: &str,
    edges_csv: &str,
) -> Result<PropertyGraph> {
    let mut b = GraphBuilder::new(schema);

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(vertices_csv.as_bytes());
    let header = header_index(&mut rdr, vname, &["id", "label"], &["properties"])?;
    for rec in rdr.records() {
        let (rec, line) = record(rec, vname)?;
        let err = |message: String| Error::GraphLoad {
            file: vname.to_string(),
            line,
            message,
        };
        let id = parse_id(field(&rec, header[0]), "id").map_err(err)?;
        let label = field(&rec, header[1]);
        let vtype = b
            .schema()
            .vertex_type_id(label)
            .ok_or_else(|| err(format!("unknown vertex type `{label}`")))?;
        let props = parse_props(header[2].map(|i| field(&rec, Some(i)))).map_err(err)?;
        b.add_vertex(id, vtype, props).map_err(|e| err(strip(e)))?;
    }

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(edges_csv.as_bytes());
    let header = header_index(
        &mut rdr,
        ename,
        &["src", "dst", "label"],
        &["properties", "src_label", "dst_label"],
    )?;
    for rec in rdr.records() {
        let (rec, line) = record(rec, ename)?;
        let err = |message: String| Error::GraphLoad {
            file: ename.to_string(),
            line,
            message,
        };
        let src_ext = parse_id(field(&rec, header[0]), "src").map_err(err)?;
        let dst_ext = parse_id(field(&rec, header[1]), "dst").map_err(err)?;
        let label = field(&rec, header[2]);
        let src = b
            .lookup_external(src_ext)
            .ok_or_else(|| err(format!("edge references missing vertex {src_ext}")))?;
        let dst = b
            .lookup_external(dst_ext)
            .ok_or_else(|| err(format!("edge references missing vertex {dst_ext}")))?;
        for (col, v) in [(header[4], src), (header[5], dst)] {
            let want = field(&rec, col);
            if !want.is_empty() {
                let actual = b.schema().vertex_name(b.vertex_type_of(v).unwrap());
                if actual != want {
                    return Err(err(format!(
                        "endpoint label `{want}` does not match vertex type `{actual}`"
                    )));
                }
            }
        }
        let props = parse_props(header[3].map(|i| field(&rec, Some(i)))).map_err(err)?;
        b.add_edge_labeled(src, dst, label, props)
            .map_err(|e| err(strip(e)))?;
    }
    Ok(b.build())
}

/// Writes a graph back out in the CSV format read by [`load_graph`].
pub fn write_graph(
    g: &PropertyGraph,
    vertices_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<()> {
    let (v, e) = graph_to_csv(g);
    let vp = vertices_path.as_ref();
    let ep = edges_path.as_ref();
    std::fs::write(vp, v).map_err(|e| Error::io(vp, e))?;
    std::fs::write(ep, e).map_err(|e| Error::io(ep, e))?;
    Ok(())
}

pub fn graph_to_csv(g: &PropertyGraph) -> (String, String) {
    let schema = g.schema();
    let mut vw = csv::Writer::from_writer(Vec::new());
    vw.write_record(["id", "label", "properties"]).unwrap();
    for (_, v) in g.vertices() {
        vw.write_record([
            v.external_id.to_string(),
            schema.vertex_name(v.vtype).to_string(),
            props_json(&v.props),
        ])
        .unwrap();
    }
    let mut ew = csv::Writer::from_writer(Vec::new());
    ew.write_record(["src", "dst", "label", "properties"])
        .unwrap();
    for (_, e) in g.edges() {
        ew.write_record([
            g.vertex(e.src).external_id.to_string(),
            g.vertex(e.dst).external_id.to_string(),
            schema.triplet(e.etype).label.clone(),
            props_json(&e.props),
        ])
        .unwrap();
    }
    (
        String::from_utf8(vw.into_inner().unwrap()).unwrap(),
        String::from_utf8(ew.into_inner().unwrap()).unwrap(),
    )
}

fn props_json(p: &Properties) -> String {
    let m: serde_json::Map<String, serde_json::Value> =
        p.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
    serde_json::Value::Object(m).to_string()
}

fn strip(e: Error) -> String {
    match e {
        Error::Schema(m) => m,
        other => other.to_string(),
    }
}

fn header_index(
    rdr: &mut csv::Reader<&[u8]>,
    file: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<Vec<Option<usize>>> {
    let headers = rdr.headers().map_err(|e| Error::GraphLoad {
        file: file.to_string(),
        line: 1,
        message: e.to_string(),
    })?;
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut out = Vec::new();
    for name in required {
        match find(name) {
            Some(i) => out.push(Some(i)),
            None => {
                return Err(Error::GraphLoad {
                    file: file.to_string(),
                    line: 1,
                    message: format!("missing column `{name}`"),
                })
            }
        }
    }
    out.extend(optional.iter().map(|n| find(n)));
    Ok(out)
}

fn record(
    rec: std::result::Result<csv::StringRecord, csv::Error>,
    file: &str,
) -> Result<(csv::StringRecord, u64)> {
    match rec {
        Ok(r) => {
            let line = r.position().map(|p| p.line()).unwrap_or(0);
            Ok((r, line))
        }
        Err(e) => Err(Error::GraphLoad {
            file: file.to_string(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        }),
    }
}

fn field(rec: &csv::StringRecord, i: Option<usize>) -> &str {
    i.and_then(|i| rec.get(i)).unwrap_or("")
}

fn parse_id(s: &str, what: &str) -> std::result::Result<i64, String> {
    s.parse()
        .map_err(|_| format!("malformed {what} `{s}`: expected an integer"))
}

fn parse_props(s: Option<&str>) -> std::result::Result<Properties, String> {
    let s = s.unwrap_or("").trim();
    let mut out = Properties::new();
    if s.is_empty() {
        return Ok(out);
    }
    let v: serde_json::Value =
        serde_json::from_str(s).map_err(|e| format!("malformed properties: {e}"))?;
    let obj = v
        .as_object()
        .ok_or_else(|| "properties must be a JSON object".to_string())?;
    for (k, v) in obj {
        if let Some(p) = PropValue::from_json(v).map_err(|e| format!("property `{k}`: {e}"))? {
            out.insert(k.clone(), p);
        }
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
            .edge("Person", "Knows", "Person", &[])
            .edge("Person", "Purchases", "Product", &[])
            .build()
            .unwrap()
    }

    const VERTS: &str = "id,label,properties\n\
        1,Person,\"{\"\"name\"\":\"\"a\"\"}\"\n2,Person,{}\n3,Person,\n4,Person,\n5,Person,\n\
        6,Product,\n7,Product,\n8,Product,\n9,Place,\n10,Place,\n";

    #[test]
    fn counts_equal_rows() {
        let edges = "src,dst,label,properties\n1,2,Knows,\n2,3,Knows,\n3,4,Knows,\n4,5,Knows,\n";
        let g = load_graph_from_str(schema(), "v", VERTS, "e", edges).unwrap();
        assert_eq!(g.vertex_count(), 10);
        assert_eq!(g.edge_count(), 4);
        let v1 = g.lookup_external(1).unwrap();
        assert_eq!(
            g.vertex_property(v1, "name"),
            Some(&PropValue::Str("a".into()))
        );
    }

    #[test]
    fn missing_endpoint() {
        let edges = "src,dst,label,properties\n1,2,Knows,\n99,1,Knows,\n";
        match load_graph_from_str(schema(), "v", VERTS, "e", edges) {
            Err(Error::GraphLoad { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("99"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_violation() {
        let edges = "src,dst,label,properties\n1,6,Knows,\n";
        assert!(matches!(
            load_graph_from_str(schema(), "v", VERTS, "e", edges),
            Err(Error::GraphLoad { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_rows() {
        let edges = "src,dst,label,properties\nx,6,Knows,\n";
        assert!(load_graph_from_str(schema(), "v", VERTS, "e", edges).is_err());
        let verts = "id,label,properties\n1,Person,{bad\n";
        assert!(load_graph_from_str(schema(), "v", verts, "e", "src,dst,label\n").is_err());
    }

    #[test]
    fn endpoint_label_columns_are_checked() {
        let ok = "src,dst,label,properties,src_label,dst_label\n1,6,Purchases,,Person,Product\n";
        assert!(load_graph_from_str(schema(), "v", VERTS, "e", ok).is_ok());
        let bad = "src,dst,label,properties,src_label,dst_label\n1,6,Purchases,,Product,Product\n";
        assert!(load_graph_from_str(schema(), "v", VERTS, "e", bad).is_err());
    }

    #[test]
    fn round_trip_is_structurally_equal() {
        let edges = "src,dst,label,properties\n1,2,Knows,\n1,6,Purchases,\n";
        let g = load_graph_from_str(schema(), "v", VERTS, "e", edges).unwrap();
        let (v, e) = graph_to_csv(&g);
        let h = load_graph_from_str(schema(), "v", &v, "e", &e).unwrap();
        assert_eq!(g, h);
    }
}
