use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::value::{Params, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, o: Ordering) -> bool {
        match self {
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::Ne => o != Ordering::Equal,
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Ge => o != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
        }
    }
}

/// Scalar expression over aliases, properties, literals and parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Param(String),
    Var(String),
    Prop(String, String),
    List(Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    In(Box<Expr>, Box<Expr>),
    /// Aggregate call; `None` argument is `count(*)`.
    Agg(AggFunc, Option<Box<Expr>>),
}

/// How an expression touches one alias.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasUse {
    /// The alias value itself is needed (not just some properties).
    pub whole: bool,
    pub props: BTreeSet<String>,
}

pub type Usage = BTreeMap<String, AliasUse>;

/// Resolves aliases and properties while evaluating an expression.
pub trait Bindings {
    fn var(&self, alias: &str) -> Result<Value>;
    fn prop(&self, alias: &str, prop: &str) -> Result<Value>;
}

impl Expr {
    pub fn var(a: &str) -> Expr {
        Expr::Var(a.to_string())
    }

    pub fn prop(a: &str, p: &str) -> Expr {
        Expr::Prop(a.to_string(), p.to_string())
    }

    pub fn lit(v: Value) -> Expr {
        Expr::Lit(v)
    }

    pub fn cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
        Expr::Cmp(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    /// Left-nested conjunction of all parts; `None` when empty.
    pub fn and_all(parts: impl IntoIterator<Item = Expr>) -> Option<Expr> {
        parts.into_iter().reduce(Expr::and)
    }

    /// Splits nested ANDs into their conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        fn walk(e: &Expr, out: &mut Vec<Expr>) {
            match e {
                Expr::And(l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                other => out.push(other.clone()),
            }
        }
        walk(self, &mut out);
        out
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Lit(_) | Expr::Param(_) | Expr::Var(_) | Expr::Prop(..) => vec![],
            Expr::List(items) => items.iter().collect(),
            Expr::Cmp(_, l, r) | Expr::And(l, r) | Expr::Or(l, r) | Expr::In(l, r) => {
                vec![l, r]
            }
            Expr::Not(x) => vec![x],
            Expr::Agg(_, arg) => arg.iter().map(|b| b.as_ref()).collect(),
        }
    }

    pub fn aliases(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Var(a) | Expr::Prop(a, _) => {
                out.insert(a.clone());
            }
            _ => {}
        });
        out
    }

    /// Copy of the expression with every alias reference passed through `f`.
    pub fn rename_aliases(&self, f: &impl Fn(&str) -> String) -> Expr {
        let b = |e: &Expr| Box::new(e.rename_aliases(f));
        match self {
            Expr::Lit(_) | Expr::Param(_) => self.clone(),
            Expr::Var(a) => Expr::Var(f(a)),
            Expr::Prop(a, p) => Expr::Prop(f(a), p.clone()),
            Expr::List(items) => Expr::List(items.iter().map(|e| e.rename_aliases(f)).collect()),
            Expr::Cmp(op, l, r) => Expr::Cmp(*op, b(l), b(r)),
            Expr::And(l, r) => Expr::And(b(l), b(r)),
            Expr::Or(l, r) => Expr::Or(b(l), b(r)),
            Expr::Not(x) => Expr::Not(b(x)),
            Expr::In(l, r) => Expr::In(b(l), b(r)),
            Expr::Agg(func, arg) => Expr::Agg(*func, arg.as_ref().map(|a| b(a))),
        }
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn contains_agg(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Agg(..)));
        found
    }

    /// Records alias and property usage. An alias inside `count(...)` does
    /// not need its value materialized, so it is not marked `whole`.
    pub fn collect_usage(&self, usage: &mut Usage) {
        match self {
            Expr::Var(a) => usage.entry(a.clone()).or_default().whole = true,
            Expr::Prop(a, p) => {
                usage.entry(a.clone()).or_default().props.insert(p.clone());
            }
            Expr::Agg(AggFunc::Count, Some(arg)) if matches!(arg.as_ref(), Expr::Var(_)) => {
                if let Expr::Var(a) = arg.as_ref() {
                    usage.entry(a.clone()).or_default();
                }
            }
            other => {
                for c in other.children() {
                    c.collect_usage(usage);
                }
            }
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn eval(&self, row: &dyn Bindings, params: &Params) -> Result<Value> {
        match self {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Param(p) => params
                .get(p)
                .cloned()
                .ok_or_else(|| Error::UnboundParameter(p.clone())),
            Expr::Var(a) => row.var(a),
            Expr::Prop(a, p) => row.prop(a, p),
            Expr::List(items) => Ok(Value::List(
                items
                    .iter()
                    .map(|e| e.eval(row, params))
                    .collect::<Result<_>>()?,
            )),
            Expr::Cmp(op, l, r) => {
                let (l, r) = (l.eval(row, params)?, r.eval(row, params)?);
                Ok(match l.compare(&r)? {
                    None => Value::Null,
                    Some(o) => Value::Bool(op.holds(o)),
                })
            }
            Expr::And(l, r) => {
                let l = truth(l.eval(row, params)?)?;
                if l == Some(false) {
                    return Ok(Value::Bool(false));
                }
                let r = truth(r.eval(row, params)?)?;
                Ok(match (l, r) {
                    (_, Some(false)) => Value::Bool(false),
                    (Some(true), Some(true)) => Value::Bool(true),
                    _ => Value::Null,
                })
            }
            Expr::Or(l, r) => {
                let l = truth(l.eval(row, params)?)?;
                if l == Some(true) {
                    return Ok(Value::Bool(true));
                }
                let r = truth(r.eval(row, params)?)?;
                Ok(match (l, r) {
                    (_, Some(true)) => Value::Bool(true),
                    (Some(false), Some(false)) => Value::Bool(false),
                    _ => Value::Null,
                })
            }
            Expr::Not(x) => Ok(match truth(x.eval(row, params)?)? {
                Some(b) => Value::Bool(!b),
                None => Value::Null,
            }),
            Expr::In(l, r) => {
                let l = l.eval(row, params)?;
                let r = r.eval(row, params)?;
                let items = match r {
                    Value::Null => return Ok(Value::Null),
                    Value::List(items) => items,
                    other => {
                        return Err(Error::TypeMismatch(format!(
                            "IN expects a List, got {}",
                            other.kind_name()
                        )))
                    }
                };
                if l.is_null() {
                    return Ok(Value::Null);
                }
                let mut saw_null = false;
                for item in &items {
                    match l.compare(item)? {
                        Some(Ordering::Equal) => return Ok(Value::Bool(true)),
                        None => saw_null = true,
                        _ => {}
                    }
                }
                Ok(if saw_null {
                    Value::Null
                } else {
                    Value::Bool(false)
                })
            }
            Expr::Agg(..) => Err(Error::Plan(format!(
                "aggregate `{self}` used outside of a grouping"
            ))),
        }
    }

    /// Evaluates as a filter: only `true` passes.
    pub fn eval_filter(&self, row: &dyn Bindings, params: &Params) -> Result<bool> {
        Ok(truth(self.eval(row, params)?)? == Some(true))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            Expr::Cmp(..) | Expr::In(..) => 4,
            _ => 5,
        }
    }
}

fn truth(v: Value) -> Result<Option<bool>> {
    match v {
        Value::Bool(b) => Ok(Some(b)),
        Value::Null => Ok(None),
        other => Err(Error::TypeMismatch(format!(
            "expected Boolean, got {}",
            other.kind_name()
        ))),
    }
}

struct Child<'a>(&'a Expr, u8);

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Param(n) => write!(f, "${n}"),
            Expr::Var(a) => f.write_str(a),
            Expr::Prop(a, p) => write!(f, "{a}.{p}"),
            Expr::List(items) => {
                f.write_str("[")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str("]")
            }
            Expr::Cmp(op, l, r) => {
                write!(f, "{} {} {}", Child(l, p + 1), op.symbol(), Child(r, p + 1))
            }
            Expr::In(l, r) => write!(f, "{} IN {}", Child(l, p + 1), Child(r, p + 1)),
            Expr::And(l, r) => write!(f, "{} AND {}", Child(l, p), Child(r, p + 1)),
            Expr::Or(l, r) => write!(f, "{} OR {}", Child(l, p), Child(r, p + 1)),
            Expr::Not(x) => write!(f, "NOT {}", Child(x, p)),
            Expr::Agg(func, None) => write!(f, "{}(*)", func.name()),
            Expr::Agg(func, Some(arg)) => write!(f, "{}({arg})", func.name()),
        }
    }
}
