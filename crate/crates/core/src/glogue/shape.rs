use crate::graph::{ETypeId, GraphSchema, VTypeId};
use crate::ir::{EdgeDir, Pattern, VMask};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShapeEdge {
    pub src: usize,
    pub dst: usize,
    /// Sorted admissible triplets.
    pub types: Vec<ETypeId>,
    pub both: bool,
}

impl ShapeEdge {
    pub fn other(&self, v: usize) -> usize {
        if self.src == v {
            self.dst
        } else {
            self.src
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.src == v || self.dst == v
    }
}

/// A pattern reduced to its typed structure: no aliases, no predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Shape {
    /// Sorted admissible vertex types per vertex.
    pub vertices: Vec<Vec<VTypeId>>,
    pub edges: Vec<ShapeEdge>,
}

impl Shape {
    pub fn from_pattern(p: &Pattern) -> Shape {
        Shape::induced(p, p.full_mask())
    }

    /// Shape of the subpattern induced by `mask`; vertices keep index order.
    pub fn induced(p: &Pattern, mask: VMask) -> Shape {
        let mut remap = vec![usize::MAX; p.vertex_count()];
        let mut vertices = Vec::new();
        for (i, v) in p.vertices.iter().enumerate() {
            if mask & (1 << i) != 0 {
                remap[i] = vertices.len();
                vertices.push(v.types.iter().collect());
            }
        }
        let edges = p
            .edges_within(mask)
            .into_iter()
            .map(|e| {
                let pe = &p.edges[e];
                ShapeEdge {
                    src: remap[pe.src],
                    dst: remap[pe.dst],
                    types: pe.types.iter().collect(),
                    both: pe.dir == EdgeDir::Both,
                }
            })
            .collect();
        Shape { vertices, edges }
    }

    pub fn basic_vertex(t: VTypeId) -> Shape {
        Shape {
            vertices: vec![vec![t]],
            edges: vec![],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Every element has exactly one type and every edge is directed.
    pub fn is_basic(&self) -> bool {
        self.vertices.iter().all(|v| v.len() == 1)
            && self.edges.iter().all(|e| e.types.len() == 1 && !e.both)
    }

    /// At most one edge between any two vertices.
    pub fn is_simple(&self) -> bool {
        let mut pairs: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| (e.src.min(e.dst), e.src.max(e.dst)))
            .collect();
        let n = pairs.len();
        pairs.sort_unstable();
        pairs.dedup();
        pairs.len() == n && self.edges.iter().all(|e| e.src != e.dst)
    }

    pub fn incident(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].touches(v))
            .collect()
    }

    pub fn neighbor_mask(&self, v: usize) -> VMask {
        self.edges
            .iter()
            .filter(|e| e.touches(v))
            .fold(0, |m, e| m | (1 << e.other(v)))
    }

    pub fn full_mask(&self) -> VMask {
        if self.vertices.len() >= 64 {
            u64::MAX
        } else {
            (1u64 << self.vertices.len()) - 1
        }
    }

    pub fn is_connected_mask(&self, mask: VMask) -> bool {
        if mask == 0 {
            return false;
        }
        let start = mask.trailing_zeros() as usize;
        let mut seen: VMask = 1 << start;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let mut rest = self.neighbor_mask(v) & mask & !seen;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                seen |= 1 << u;
                stack.push(u);
            }
        }
        seen == mask
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_mask(self.full_mask())
    }

    /// Connected components as vertex masks, by lowest vertex.
    pub fn components(&self) -> Vec<VMask> {
        let mut left = self.full_mask();
        let mut out = Vec::new();
        while left != 0 {
            let start = left.trailing_zeros() as usize;
            let mut seen: VMask = 1 << start;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                let mut rest = self.neighbor_mask(v) & !seen;
                while rest != 0 {
                    let u = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    seen |= 1 << u;
                    stack.push(u);
                }
            }
            out.push(seen);
            left &= !seen;
        }
        out
    }

    /// Subshape induced by `mask`, vertices in index order.
    pub fn sub(&self, mask: VMask) -> Shape {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if mask & (1 << i) != 0 {
                remap[i] = vertices.len();
                vertices.push(v.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| mask & (1 << e.src) != 0 && mask & (1 << e.dst) != 0)
            .map(|e| ShapeEdge {
                src: remap[e.src],
                dst: remap[e.dst],
                types: e.types.clone(),
                both: e.both,
            })
            .collect();
        Shape { vertices, edges }
    }

    /// Relabels so that new vertex `i` is old vertex `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Shape {
        let mut pos = vec![0; order.len()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let vertices = order.iter().map(|&v| self.vertices[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| ShapeEdge {
                src: pos[e.src],
                dst: pos[e.dst],
                types: e.types.clone(),
                both: e.both,
            })
            .collect();
        Shape { vertices, edges }
    }

    /// Readable form like `(Person)-[Knows]->(Person)`, for diagnostics.
    pub fn describe(&self, schema: &GraphSchema) -> String {
        let vname = |v: usize| {
            self.vertices[v]
                .iter()
                .map(|t| schema.vertex_name(*t).to_string())
                .collect::<Vec<_>>()
                .join("|")
        };
        if self.edges.is_empty() {
            return (0..self.vertices.len())
                .map(|v| format!("({v}:{})", vname(v)))
                .collect::<Vec<_>>()
                .join(", ");
        }
        self.edges
            .iter()
            .map(|e| {
                let labels = e
                    .types
                    .iter()
                    .map(|t| schema.triplet(*t).label.clone())
                    .collect::<Vec<_>>()
                    .join("|");
                let arrow = if e.both { "-" } else { "->" };
                format!(
                    "({}:{})-[{labels}]{arrow}({}:{})",
                    e.src,
                    vname(e.src),
                    e.dst,
                    vname(e.dst)
                )
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}
