use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::executor::PatternPlan;
use crate::glogue::{get_candidates, Candidate};
use crate::ir::{Pattern, VMask};

/// Left-deep plan that scans `order[0]` and expands the remaining vertices
/// in the given order.
pub fn order_plan(p: &Pattern, order: &[usize]) -> Result<PatternPlan> {
    let (&first, rest) = order
        .split_first()
        .ok_or_else(|| Error::Plan("empty vertex order".into()))?;
    let mut mask: VMask = 1 << first;
    let mut plan = PatternPlan::scan(first);
    for &v in rest {
        let edges = p.edges_between(v, mask);
        if edges.is_empty() {
            return Err(Error::Plan(format!(
                "`{}` has no edge to the vertices before it",
                p.vertices[v].alias
            )));
        }
        plan = PatternPlan::expand(plan, v, edges);
        mask |= 1 << v;
    }
    plan.validate(p)?;
    Ok(plan)
}

/// Plan built top-down by picking a uniformly random candidate for every
/// subpattern.
pub fn random_plan<R: Rng + ?Sized>(p: &Pattern, rng: &mut R) -> PatternPlan {
    build(p, p.full_mask(), rng)
}

fn build<R: Rng + ?Sized>(p: &Pattern, mask: VMask, rng: &mut R) -> PatternPlan {
    if mask.count_ones() == 1 {
        return PatternPlan::scan(mask.trailing_zeros() as usize);
    }
    let cands = get_candidates(p, mask);
    match cands
        .choose(rng)
        .expect("connected subpattern has a candidate")
    {
        Candidate::Expand {
            source,
            vertex,
            edges,
        } => PatternPlan::expand(build(p, *source, rng), *vertex, edges.clone()),
        Candidate::Join { left, right } => {
            PatternPlan::join(build(p, *left, rng), build(p, *right, rng))
        }
    }
}

/// Distinct plan trees for the whole pattern in a fixed order, at most
/// `limit` of them.
pub fn all_plans(p: &Pattern, limit: usize) -> Vec<PatternPlan> {
    let mut memo = HashMap::new();
    enumerate(p, p.full_mask(), limit, &mut memo)
}

fn enumerate(
    p: &Pattern,
    mask: VMask,
    limit: usize,
    memo: &mut HashMap<VMask, Vec<PatternPlan>>,
) -> Vec<PatternPlan> {
    if let Some(v) = memo.get(&mask) {
        return v.clone();
    }
    let mut out = Vec::new();
    if mask.count_ones() == 1 {
        out.push(PatternPlan::scan(mask.trailing_zeros() as usize));
    }
    for c in get_candidates(p, mask) {
        if out.len() >= limit {
            break;
        }
        match c {
            Candidate::Expand {
                source,
                vertex,
                edges,
            } => {
                for sub in enumerate(p, source, limit, memo) {
                    out.push(PatternPlan::expand(sub, vertex, edges.clone()));
                    if out.len() >= limit {
                        break;
                    }
                }
            }
            Candidate::Join { left, right } => {
                let ls = enumerate(p, left, limit, memo);
                let rs = enumerate(p, right, limit, memo);
                'outer: for l in &ls {
                    for r in &rs {
                        out.push(PatternPlan::join(l.clone(), r.clone()));
                        if out.len() >= limit {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    memo.insert(mask, out.clone());
    out
}
