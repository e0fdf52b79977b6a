use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::matching::{element_prop, Row};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, PropertyGraph, VertexId};
use crate::ir::{
    is_hidden, AggCall, AggFunc, Bindings, Columns, Expr, LogicalOp, OrdValue, Params, Path,
    Pattern, ProjectItem, SortKey, Value,
};

/// Relational intermediate result.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Properties readable through each column; `None` allows all.
    access: Vec<Columns>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Value>>) -> Table {
        let access = vec![None; columns.len()];
        Table {
            columns,
            rows,
            access,
        }
    }

    /// One row per pattern binding; columns are the visible vertex, edge
    /// and path aliases.
    pub fn from_bindings(p: &Pattern, rows: &[Row]) -> Result<Table> {
        let n = p.vertex_count();
        let mut columns = Vec::new();
        let mut access = Vec::new();
        let mut getters: Vec<Box<dyn Fn(&Row) -> Result<Value>>> = Vec::new();
        for (i, v) in p.vertices.iter().enumerate() {
            if !is_hidden(&v.alias) {
                columns.push(v.alias.clone());
                access.push(v.columns.clone());
                getters.push(Box::new(move |r: &Row| Ok(Value::Vertex(VertexId(r[i])))));
            }
        }
        for (i, e) in p.edges.iter().enumerate() {
            if !is_hidden(&e.alias) {
                columns.push(e.alias.clone());
                access.push(e.columns.clone());
                getters.push(Box::new(move |r: &Row| Ok(Value::Edge(EdgeId(r[n + i])))));
            }
        }
        for path in &p.paths {
            if is_hidden(&path.alias) {
                continue;
            }
            columns.push(path.alias.clone());
            access.push(None);
            let vs = path.vertices.clone();
            let es = path.edges.clone();
            getters.push(Box::new(move |r: &Row| {
                Path::new(
                    vs.iter().map(|&v| VertexId(r[v])).collect(),
                    es.iter().map(|&e| EdgeId(r[n + e])).collect(),
                )
                .map(Value::Path)
            }));
        }
        let rows = rows
            .iter()
            .map(|r| getters.iter().map(|g| g(r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            columns,
            rows,
            access,
        })
    }

    fn index(&self, alias: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == alias)
            .ok_or_else(|| Error::UnknownAlias(alias.to_string()))
    }
}

struct RowRef<'a> {
    g: &'a PropertyGraph,
    table: &'a Table,
    row: &'a [Value],
}

impl Bindings for RowRef<'_> {
    fn var(&self, alias: &str) -> Result<Value> {
        Ok(self.row[self.table.index(alias)?].clone())
    }

    fn prop(&self, alias: &str, prop: &str) -> Result<Value> {
        let i = self.table.index(alias)?;
        if let Some(keep) = &self.table.access[i] {
            if !keep.contains(prop) {
                return Err(Error::Plan(format!(
                    "property `{alias}.{prop}` was trimmed from the plan"
                )));
            }
        }
        match &self.row[i] {
            Value::Null => Ok(Value::Null),
            v @ (Value::Vertex(_) | Value::Edge(_)) => Ok(element_prop(self.g, v, prop)),
            other => Err(Error::TypeMismatch(format!(
                "`{alias}` is a {}, it has no property `{prop}`",
                other.kind_name()
            ))),
        }
    }
}

/// Applies relational operators in order.
pub fn apply_tail(
    g: &PropertyGraph,
    mut table: Table,
    ops: &[LogicalOp],
    params: &Params,
) -> Result<Table> {
    for op in ops {
        table = match op {
            LogicalOp::Select { predicate } => select(g, table, predicate, params)?,
            LogicalOp::Project { items } => project(g, &table, items, params)?,
            LogicalOp::Group { keys, aggs } => group(g, &table, keys, aggs, params)?,
            LogicalOp::Order { keys, limit } => order(g, table, keys, *limit, params)?,
            LogicalOp::Limit { n } => {
                let mut t = table;
                t.rows.truncate(usize::try_from(*n).unwrap_or(usize::MAX));
                t
            }
            other => {
                return Err(Error::Plan(format!(
                    "{} is not a relational operator",
                    other.name()
                )))
            }
        };
    }
    Ok(table)
}

fn select(g: &PropertyGraph, table: Table, pred: &Expr, params: &Params) -> Result<Table> {
    let mut keep = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        keep.push(pred.eval_filter(
            &RowRef {
                g,
                table: &table,
                row,
            },
            params,
        )?);
    }
    let Table {
        columns,
        rows,
        access,
    } = table;
    let rows = rows
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();
    Ok(Table {
        columns,
        rows,
        access,
    })
}

fn item_access(table: &Table, e: &Expr) -> Columns {
    match e {
        Expr::Var(a) => table.index(a).ok().and_then(|i| table.access[i].clone()),
        _ => None,
    }
}

fn project(
    g: &PropertyGraph,
    table: &Table,
    items: &[ProjectItem],
    params: &Params,
) -> Result<Table> {
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let r = RowRef { g, table, row };
        rows.push(
            items
                .iter()
                .map(|it| it.expr.eval(&r, params))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Table {
        columns: items.iter().map(|it| it.alias.clone()).collect(),
        rows,
        access: items
            .iter()
            .map(|it| item_access(table, &it.expr))
            .collect(),
    })
}

#[derive(Clone)]
enum Acc {
    Count(i64),
    Sum {
        int: i64,
        float: f64,
        any_float: bool,
    },
    Extreme(Option<Value>),
}

impl Acc {
    fn new(f: AggFunc) -> Acc {
        match f {
            AggFunc::Count => Acc::Count(0),
            AggFunc::Sum => Acc::Sum {
                int: 0,
                float: 0.0,
                any_float: false,
            },
            AggFunc::Min | AggFunc::Max => Acc::Extreme(None),
        }
    }

    fn add(&mut self, f: AggFunc, v: Option<Value>) -> Result<()> {
        match (self, v) {
            (Acc::Count(c), None) => *c += 1,
            (Acc::Count(c), Some(v)) => {
                if !v.is_null() {
                    *c += 1
                }
            }
            (_, None) => return Err(Error::Plan(format!("{}(*) is not supported", f.name()))),
            (
                Acc::Sum {
                    int,
                    float,
                    any_float,
                },
                Some(v),
            ) => match v {
                Value::Null => {}
                Value::Int(i) => *int = int.wrapping_add(i),
                Value::Float(x) => {
                    *float += x;
                    *any_float = true;
                }
                other => {
                    return Err(Error::TypeMismatch(format!(
                        "sum over {}",
                        other.kind_name()
                    )))
                }
            },
            (Acc::Extreme(cur), Some(v)) => {
                if v.is_null() {
                    return Ok(());
                }
                let replace = match cur {
                    None => true,
                    Some(c) => {
                        let o = v.total_cmp(c);
                        (f == AggFunc::Min && o == Ordering::Less)
                            || (f == AggFunc::Max && o == Ordering::Greater)
                    }
                };
                if replace {
                    *cur = Some(v);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Value {
        match self {
            Acc::Count(c) => Value::Int(c),
            Acc::Sum {
                int,
                float,
                any_float,
            } => {
                if any_float {
                    Value::Float(float + int as f64)
                } else {
                    Value::Int(int)
                }
            }
            Acc::Extreme(v) => v.unwrap_or(Value::Null),
        }
    }
}

fn group(
    g: &PropertyGraph,
    table: &Table,
    keys: &[ProjectItem],
    aggs: &[AggCall],
    params: &Params,
) -> Result<Table> {
    let mut groups: BTreeMap<Vec<OrdValue>, Vec<Acc>> = BTreeMap::new();
    for row in &table.rows {
        let r = RowRef { g, table, row };
        let key = keys
            .iter()
            .map(|k| k.expr.eval(&r, params).map(OrdValue))
            .collect::<Result<Vec<_>>>()?;
        let accs = groups
            .entry(key)
            .or_insert_with(|| aggs.iter().map(|a| Acc::new(a.func)).collect());
        for (acc, call) in accs.iter_mut().zip(aggs) {
            let v = match &call.arg {
                None => None,
                Some(e) => Some(e.eval(&r, params)?),
            };
            acc.add(call.func, v)?;
        }
    }
    if groups.is_empty() && keys.is_empty() {
        groups.insert(Vec::new(), aggs.iter().map(|a| Acc::new(a.func)).collect());
    }
    let rows = groups
        .into_iter()
        .map(|(k, accs)| {
            k.into_iter()
                .map(|o| o.0)
                .chain(accs.into_iter().map(Acc::finish))
                .collect()
        })
        .collect();
    let mut columns: Vec<String> = keys.iter().map(|k| k.alias.clone()).collect();
    columns.extend(aggs.iter().map(|a| a.alias.clone()));
    let mut access: Vec<Columns> = keys.iter().map(|k| item_access(table, &k.expr)).collect();
    access.extend(aggs.iter().map(|_| None));
    Ok(Table {
        columns,
        rows,
        access,
    })
}

fn order(
    g: &PropertyGraph,
    table: Table,
    keys: &[SortKey],
    limit: Option<u64>,
    params: &Params,
) -> Result<Table> {
    let mut keyed = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let r = RowRef {
            g,
            table: &table,
            row,
        };
        let k = keys
            .iter()
            .map(|k| k.expr.eval(&r, params))
            .collect::<Result<Vec<_>>>()?;
        keyed.push(k);
    }
    let Table {
        columns,
        rows,
        access,
    } = table;
    let mut pairs: Vec<(Vec<Value>, Vec<Value>)> = keyed.into_iter().zip(rows).collect();
    pairs.sort_by(|(a, _), (b, _)| {
        for ((x, y), k) in a.iter().zip(b).zip(keys) {
            let o = x.total_cmp(y);
            let o = if k.desc { o.reverse() } else { o };
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    });
    let mut rows: Vec<Vec<Value>> = pairs.into_iter().map(|(_, r)| r).collect();
    if let Some(n) = limit {
        rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }
    Ok(Table {
        columns,
        rows,
        access,
    })
}
