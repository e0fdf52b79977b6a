use crate::ir::{Pattern, VMask};

/// Largest subpattern for which binary-join splits are enumerated.
pub const MAX_JOIN_SPLIT_VERTICES: u32 = 12;

/// One way to build the subpattern on `mask` from smaller ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidate {
    /// Extend `source` by `vertex` through `edges` (all edges from `vertex`
    /// into `source`, ascending).
    Expand {
        source: VMask,
        vertex: usize,
        edges: Vec<usize>,
    },
    /// Join the induced subpatterns `left` and `right` on their overlap.
    Join { left: VMask, right: VMask },
}

/// Expand candidates: every non-cut vertex of the subpattern, with the
/// remainder as source.
pub fn expand_candidates(p: &Pattern, mask: VMask) -> Vec<Candidate> {
    if mask.count_ones() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut rest = mask;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let source = mask & !(1 << v);
        if p.is_connected_mask(source) {
            out.push(Candidate::Expand {
                source,
                vertex: v,
                edges: p.edges_between(v, source),
            });
        }
    }
    out
}

/// Binary join candidates: pairs of connected, overlapping, proper vertex
/// subsets whose induced subpatterns together cover every edge of `mask`.
/// Each unordered pair appears once, with `left < right`.
pub fn join_candidates(p: &Pattern, mask: VMask) -> Vec<Candidate> {
    let size = mask.count_ones();
    if !(3..=MAX_JOIN_SPLIT_VERTICES).contains(&size) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut left = (mask - 1) & mask;
    while left != 0 {
        if p.is_connected_mask(left) {
            let only_right = mask & !left;
            // Overlap is a nonempty proper-or-full subset of `left`.
            let mut overlap = left;
            while overlap != 0 {
                let right = only_right | overlap;
                if right != mask
                    && left < right
                    && only_right != 0
                    && p.is_connected_mask(right)
                    && covers(p, left, right)
                {
                    out.push(Candidate::Join { left, right });
                }
                overlap = (overlap - 1) & left;
            }
        }
        left = (left - 1) & mask;
    }
    out.sort_by_key(|c| match c {
        Candidate::Join { left, right } => (*left, *right),
        Candidate::Expand { .. } => unreachable!(),
    });
    out
}

/// No edge runs between the private parts of the two sides.
fn covers(p: &Pattern, left: VMask, right: VMask) -> bool {
    let a = left & !right;
    let b = right & !left;
    p.edges.iter().all(|e| {
        let (s, d) = (1u64 << e.src, 1u64 << e.dst);
        !((a & s != 0 && b & d != 0) || (a & d != 0 && b & s != 0))
    })
}

/// All candidates for `mask`: expands first, then joins.
pub fn get_candidates(p: &Pattern, mask: VMask) -> Vec<Candidate> {
    let mut out = expand_candidates(p, mask);
    out.extend(join_candidates(p, mask));
    out
}
