//! Property graph storage, schema and CSV ingestion.

mod load;
mod schema;
mod store;
mod value;

pub use load::{graph_to_csv, load_graph, load_graph_from_str, write_graph};
pub use schema::{
    load_schema, ETypeId, EdgeTriplet, GraphSchema, PropertyDef, SchemaSpec, VTypeId, VertexType,
};
pub use store::{
    AdjEntry, Direction, Edge, EdgeFilter, EdgeId, GraphBuilder, PropertyGraph, TypeCounts, Vertex,
    VertexId,
};
pub use value::{DataType, PropValue, Properties};
