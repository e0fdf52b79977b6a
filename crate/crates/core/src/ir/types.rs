use std::collections::BTreeSet;
use std::fmt;

use crate::graph::{ETypeId, GraphSchema, VTypeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Basic,
    Union,
    All,
}

/// A set of admissible basic types for one pattern element.
///
/// Members are always explicit. `All` constraints remember that they were
/// declared without a label until they are narrowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeConstraint<T: Ord> {
    members: BTreeSet<T>,
    all: bool,
}

pub type VertexConstraint = TypeConstraint<VTypeId>;
pub type EdgeConstraint = TypeConstraint<ETypeId>;

impl<T: Ord + Copy> TypeConstraint<T> {
    pub fn basic(t: T) -> Self {
        TypeConstraint {
            members: BTreeSet::from([t]),
            all: false,
        }
    }

    pub fn of(members: impl IntoIterator<Item = T>) -> Self {
        TypeConstraint {
            members: members.into_iter().collect(),
            all: false,
        }
    }

    /// The unlabeled constraint over the given universe.
    pub fn all(universe: impl IntoIterator<Item = T>) -> Self {
        TypeConstraint {
            members: universe.into_iter().collect(),
            all: true,
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        if self.members.len() == 1 {
            ConstraintKind::Basic
        } else if self.all {
            ConstraintKind::All
        } else {
            ConstraintKind::Union
        }
    }

    pub fn is_all(&self) -> bool {
        self.all
    }

    pub fn members(&self) -> &BTreeSet<T> {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, t: T) -> bool {
        self.members.contains(&t)
    }

    pub fn single(&self) -> Option<T> {
        if self.members.len() == 1 {
            self.members.iter().next().copied()
        } else {
            None
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        TypeConstraint {
            members: self.members.intersection(&other.members).copied().collect(),
            all: self.all && other.all,
        }
    }

    /// Keeps members satisfying `keep`; returns whether anything was removed.
    pub fn retain(&mut self, mut keep: impl FnMut(T) -> bool) -> bool {
        let before = self.members.len();
        self.members.retain(|t| keep(*t));
        let changed = self.members.len() != before;
        if changed {
            self.all = false;
        }
        changed
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.is_subset(&other.members)
    }
}

impl VertexConstraint {
    pub fn any_vertex(schema: &GraphSchema) -> Self {
        Self::all(schema.vertex_type_ids())
    }

    pub fn display<'a>(&'a self, schema: &'a GraphSchema) -> impl fmt::Display + 'a {
        ConstraintDisplay {
            all: self.all,
            names: self
                .iter()
                .map(|t| schema.vertex_name(t).to_string())
                .collect(),
        }
    }
}

impl EdgeConstraint {
    pub fn any_edge(schema: &GraphSchema) -> Self {
        Self::all(schema.edge_type_ids())
    }

    pub fn display<'a>(&'a self, schema: &'a GraphSchema) -> impl fmt::Display + 'a {
        ConstraintDisplay {
            all: self.all,
            names: self
                .iter()
                .map(|t| schema.triplet_display(t).to_string())
                .collect(),
        }
    }
}

struct ConstraintDisplay {
    all: bool,
    names: Vec<String>,
}

impl fmt::Display for ConstraintDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.all && self.names.len() != 1 {
            return f.write_str("ALL");
        }
        if self.names.is_empty() {
            return f.write_str("{}");
        }
        f.write_str(&self.names.join("|"))
    }
}
