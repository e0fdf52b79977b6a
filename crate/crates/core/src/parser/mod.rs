//! Recursive-descent parser for the Cypher-like query subset.
//!
//! ```text
//! query    := (MATCH part ("," part)* [WHERE expr])+ RETURN item ("," item)*
//!             [ORDER BY key ("," key)*] [LIMIT (int | $param)] [";"]
//! part     := node (edge node)*
//! node     := "(" [alias] [":" label ("|" label)*] ")"
//! edge     := "-" [body] "->" | "<-" [body] "-" | "-" [body] "-"
//! body     := "[" [alias] [":" label ("|" label)*] ["*" (int | $param)] "]"
//! ```
//!
//! Keywords and type names are case-insensitive. Unnamed vertices and
//! edges receive hidden aliases.

mod lexer;

use lexer::{tokenize, Tok, Token};

use crate::error::{Error, Result};
use crate::graph::{Direction, GraphSchema};
use crate::ir::{
    match_to_pattern, AggCall, AggFunc, CmpOp, EdgeConstraint, Expr, GetVOpt, LogicalOp,
    LogicalPlan, Params, ProjectItem, ScanTarget, SortKey, Value, VertexConstraint,
};

/// Parses `text` into a logical plan, validating type names and aliases
/// against `schema`.
pub fn parse(text: &str, schema: &GraphSchema) -> Result<LogicalPlan> {
    parse_with_params(text, schema, &Params::new())
}

/// Like [`parse`], resolving `$param` hop counts and limits from `params`.
/// Parameters inside expressions stay symbolic until execution.
pub fn parse_with_params(text: &str, schema: &GraphSchema, params: &Params) -> Result<LogicalPlan> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        schema,
        params,
        anon_vertices: 0,
        anon_edges: 0,
    };
    let plan = p.query()?;
    if let Some(sentences) = plan.match_sentences() {
        match_to_pattern(sentences, schema)?;
    }
    Ok(plan)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    schema: &'a GraphSchema,
    params: &'a Params,
    anon_vertices: usize,
    anon_edges: usize,
}

struct Node {
    alias: String,
    types: VertexConstraint,
}

struct EdgeSpec {
    alias: String,
    types: EdgeConstraint,
    dir: Direction,
    hops: Option<u32>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Error {
        let t = &self.toks[self.pos];
        Error::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{p}`")]))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn query(&mut self) -> Result<LogicalPlan> {
        let mut sentences = Vec::new();
        let mut filters = Vec::new();
        if !self.is_keyword("MATCH") {
            return Err(self.error(&["MATCH"]));
        }
        while self.eat_keyword("MATCH") {
            loop {
                sentences.push(self.pattern_part()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            if self.eat_keyword("WHERE") {
                let e = self.expr()?;
                if e.contains_agg() {
                    return Err(Error::Plan("aggregates are not allowed in WHERE".into()));
                }
                filters.push(e);
            }
        }
        let mut ops = vec![LogicalOp::MatchPattern { sentences }];
        if let Some(predicate) = Expr::and_all(filters) {
            ops.push(LogicalOp::Select { predicate });
        }

        if !self.eat_keyword("RETURN") {
            return Err(self.error(&["MATCH", "WHERE", "RETURN"]));
        }
        let mut items = Vec::new();
        loop {
            let expr = self.expr()?;
            let alias = if self.eat_keyword("AS") {
                self.ident("column name")?
            } else {
                expr.to_string()
            };
            items.push(ProjectItem { expr, alias });
            if !self.eat_punct(",") {
                break;
            }
        }
        ops.extend(returns(items.clone())?);

        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            let mut keys = Vec::new();
            loop {
                let e = self.expr()?;
                let expr = resolve_output(&e, &items)?;
                let desc = if self.eat_keyword("DESC") || self.eat_keyword("DESCENDING") {
                    true
                } else {
                    let _ = self.eat_keyword("ASC") || self.eat_keyword("ASCENDING");
                    false
                };
                keys.push(SortKey { expr, desc });
                if !self.eat_punct(",") {
                    break;
                }
            }
            ops.push(LogicalOp::Order { keys, limit: None });
        }
        if self.eat_keyword("LIMIT") {
            let n = self.count_value("LIMIT")?;
            ops.push(LogicalOp::Limit { n });
        }
        self.eat_punct(";");
        if *self.peek() != Tok::Eof {
            return Err(self.error(&["ORDER", "LIMIT", "end of input"]));
        }
        LogicalPlan::chain(ops)
    }

    /// A non-negative integer literal or a parameter bound to one.
    fn count_value(&mut self, what: &str) -> Result<u64> {
        match self.peek().clone() {
            Tok::Int(i) if i >= 0 => {
                self.bump();
                Ok(i as u64)
            }
            Tok::Param(name) => {
                self.bump();
                match self.params.get(&name) {
                    Some(Value::Int(i)) if *i >= 0 => Ok(*i as u64),
                    Some(other) => Err(Error::TypeMismatch(format!(
                        "{what} parameter `${name}` must be a non-negative Integer, got {other}"
                    ))),
                    None => Err(Error::UnboundParameter(name)),
                }
            }
            _ => Err(self.error(&["non-negative integer", "parameter"])),
        }
    }

    fn pattern_part(&mut self) -> Result<Vec<LogicalOp>> {
        let first = self.node()?;
        let mut ops = vec![LogicalOp::Scan {
            alias: first.alias.clone(),
            target: ScanTarget::Vertex(first.types),
            predicate: None,
            columns: None,
        }];
        let mut prev = first.alias;
        while self.is_punct("-") || self.is_punct("<") {
            let edge = self.edge()?;
            let node = self.node()?;
            let opt = match edge.dir {
                Direction::Out => GetVOpt::Target,
                Direction::In => GetVOpt::Source,
                Direction::Both => GetVOpt::Other,
            };
            match edge.hops {
                Some(hops) => ops.push(LogicalOp::ExpandPath {
                    tag: prev.clone(),
                    alias: edge.alias.clone(),
                    types: edge.types,
                    dir: edge.dir,
                    hops,
                }),
                None => ops.push(LogicalOp::ExpandEdge {
                    tag: prev.clone(),
                    alias: edge.alias.clone(),
                    types: edge.types,
                    dir: edge.dir,
                    predicate: None,
                    columns: None,
                }),
            }
            ops.push(LogicalOp::GetVertex {
                tag: edge.alias,
                alias: node.alias.clone(),
                types: node.types,
                opt,
                predicate: None,
                columns: None,
            });
            prev = node.alias;
        }
        Ok(ops)
    }

    fn labels(&mut self) -> Result<Vec<String>> {
        let mut out = vec![self.ident("type name")?];
        while self.eat_punct("|") {
            self.eat_punct(":");
            out.push(self.ident("type name")?);
        }
        Ok(out)
    }

    fn node(&mut self) -> Result<Node> {
        self.expect_punct("(")?;
        let alias = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                s
            }
            _ => {
                self.anon_vertices += 1;
                format!("#v{}", self.anon_vertices - 1)
            }
        };
        let types = if self.eat_punct(":") {
            let mut ids = Vec::new();
            for name in self.labels()? {
                ids.extend(
                    self.schema
                        .resolve_vertex_label(&name)
                        .ok_or(Error::UnknownType(name))?,
                );
            }
            VertexConstraint::of(ids)
        } else {
            VertexConstraint::any_vertex(self.schema)
        };
        self.expect_punct(")")?;
        Ok(Node { alias, types })
    }

    fn edge(&mut self) -> Result<EdgeSpec> {
        let left = self.eat_punct("<");
        self.expect_punct("-")?;
        let mut alias = None;
        let mut types = EdgeConstraint::any_edge(self.schema);
        let mut hops = None;
        if self.eat_punct("[") {
            if let Tok::Ident(s) = self.peek().clone() {
                self.bump();
                alias = Some(s);
            }
            if self.eat_punct(":") {
                if !self.is_punct("*") {
                    let mut ids = Vec::new();
                    for name in self.labels()? {
                        ids.extend(
                            self.schema
                                .resolve_edge_label(&name)
                                .ok_or(Error::UnknownType(name))?,
                        );
                    }
                    types = EdgeConstraint::of(ids);
                }
            }
            if self.eat_punct("*") {
                let n = self.count_value("hop count")?;
                if n == 0 || n > u32::MAX as u64 {
                    return Err(Error::Pattern(format!(
                        "hop count must be positive, got {n}"
                    )));
                }
                hops = Some(n as u32);
            }
            self.expect_punct("]")?;
        }
        self.expect_punct("-")?;
        let right = self.eat_punct(">");
        let dir = match (left, right) {
            (false, true) => Direction::Out,
            (true, false) => Direction::In,
            (false, false) => Direction::Both,
            (true, true) => return Err(self.error(&["`(`"])),
        };
        let alias = alias.unwrap_or_else(|| {
            self.anon_edges += 1;
            format!("#e{}", self.anon_edges - 1)
        });
        Ok(EdgeSpec {
            alias,
            types,
            dir,
            hops,
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut l = self.and_expr()?;
        while self.eat_keyword("OR") {
            let r = self.and_expr()?;
            l = Expr::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut l = self.not_expr()?;
        while self.eat_keyword("AND") {
            let r = self.not_expr()?;
            l = Expr::and(l, r);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.eat_keyword("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let l = self.primary()?;
        let op = match self.peek() {
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("<>") | Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            _ => {
                if self.eat_keyword("IN") {
                    let r = self.primary()?;
                    return Ok(Expr::In(Box::new(l), Box::new(r)));
                }
                return Ok(l);
            }
        };
        self.bump();
        let r = self.primary()?;
        Ok(Expr::cmp(op, l, r))
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::lit(Value::Int(i)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Expr::lit(Value::Float(x)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::lit(Value::Str(s)))
            }
            Tok::Param(p) => {
                self.bump();
                Ok(Expr::Param(p))
            }
            Tok::Punct("-") => {
                self.bump();
                match self.bump() {
                    Tok::Int(i) => Ok(Expr::lit(Value::Int(-i))),
                    Tok::Float(x) => Ok(Expr::lit(Value::Float(-x))),
                    _ => {
                        self.pos -= 1;
                        Err(self.error(&["number"]))
                    }
                }
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat_punct("]") {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct("]")?;
                }
                Ok(Expr::List(items))
            }
            Tok::Ident(name) => {
                self.bump();
                let lower = name.to_ascii_lowercase();
                match lower.as_str() {
                    "true" => return Ok(Expr::lit(Value::Bool(true))),
                    "false" => return Ok(Expr::lit(Value::Bool(false))),
                    "null" => return Ok(Expr::lit(Value::Null)),
                    _ => {}
                }
                if self.is_punct("(") {
                    let func = match lower.as_str() {
                        "count" => AggFunc::Count,
                        "sum" => AggFunc::Sum,
                        "min" => AggFunc::Min,
                        "max" => AggFunc::Max,
                        _ => {
                            self.pos -= 1;
                            return Err(self.error(&["count", "sum", "min", "max"]));
                        }
                    };
                    self.bump();
                    let arg = if func == AggFunc::Count && self.eat_punct("*") {
                        None
                    } else {
                        let a = self.expr()?;
                        if a.contains_agg() {
                            return Err(Error::Plan("nested aggregates are not supported".into()));
                        }
                        Some(Box::new(a))
                    };
                    self.expect_punct(")")?;
                    return Ok(Expr::Agg(func, arg));
                }
                if self.is_punct(".") {
                    if let Tok::Ident(prop) = self.peek_at(1).clone() {
                        self.bump();
                        self.bump();
                        return Ok(Expr::Prop(name, prop));
                    }
                    self.bump();
                    return Err(self.error(&["property name"]));
                }
                Ok(Expr::Var(name))
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

/// PROJECT for plain returns; GROUP (plus a reordering PROJECT when
/// aggregates precede keys) when any item aggregates.
fn returns(items: Vec<ProjectItem>) -> Result<Vec<LogicalOp>> {
    let mut seen = std::collections::BTreeSet::new();
    for it in &items {
        if !seen.insert(it.alias.clone()) {
            return Err(Error::Plan(format!("duplicate column name `{}`", it.alias)));
        }
    }
    if !items.iter().any(|it| it.expr.contains_agg()) {
        return Ok(vec![LogicalOp::Project { items }]);
    }
    let mut keys = Vec::new();
    let mut aggs = Vec::new();
    for it in &items {
        match &it.expr {
            Expr::Agg(func, arg) => aggs.push(AggCall {
                func: *func,
                arg: arg.as_deref().cloned(),
                alias: it.alias.clone(),
            }),
            e if e.contains_agg() => {
                return Err(Error::Plan(format!(
                    "`{e}` mixes an aggregate into a larger expression"
                )))
            }
            _ => keys.push(it.clone()),
        }
    }
    let grouped: Vec<&str> = keys
        .iter()
        .map(|k| k.alias.as_str())
        .chain(aggs.iter().map(|a| a.alias.as_str()))
        .collect();
    let wanted: Vec<&str> = items.iter().map(|it| it.alias.as_str()).collect();
    let reorder = grouped != wanted;
    let mut ops = vec![LogicalOp::Group { keys, aggs }];
    if reorder {
        ops.push(LogicalOp::Project {
            items: items
                .iter()
                .map(|it| ProjectItem {
                    expr: Expr::var(&it.alias),
                    alias: it.alias.clone(),
                })
                .collect(),
        });
    }
    Ok(ops)
}

/// ORDER BY keys refer to returned columns, by name or by repeating the
/// returned expression.
fn resolve_output(e: &Expr, items: &[ProjectItem]) -> Result<Expr> {
    if let Expr::Var(name) = e {
        if items.iter().any(|it| &it.alias == name) {
            return Ok(e.clone());
        }
    }
    items
        .iter()
        .find(|it| &it.expr == e)
        .map(|it| Expr::var(&it.alias))
        .ok_or_else(|| Error::UnknownAlias(format!("{e} (ORDER BY must name a returned column)")))
}
