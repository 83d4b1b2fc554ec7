//! Exhaustive ground-truth distributions for tiny instances.
//!
//! Both enumerations here are brute force over complete state spaces and
//! share no code with the Monte Carlo paths they are used to validate. They
//! exist so that statistical tests elsewhere can compare simulated laws
//! against values that are exact up to floating-point rounding.

use crate::error::{Error, Result};

/// Largest vertex count for which all graphs can be enumerated.
pub const MAX_ENUM_VERTICES: usize = 5;

/// Largest offspring fanout supported by the tree enumeration.
pub const MAX_ENUM_FANOUT: u64 = 3;

/// Largest total progeny tracked exactly by the tree enumeration.
pub const MAX_ENUM_TREE_SIZE: u64 = 12;

/// Distribution of the largest component size of G(n, p) for n <= 5,
/// computed by walking all 2^(n choose 2) graphs. Entry k (1-based) of the
/// returned vector is P(L1 = k); entry 0 is unused and zero.
pub fn gnp_l1_distribution(n: usize, p: f64) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_ENUM_VERTICES {
        return Err(Error::ParamDomain(format!(
            "exhaustive graph enumeration supports 1..={MAX_ENUM_VERTICES} vertices, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParamDomain(format!(
            "edge probability must lie in [0, 1], got {p}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let m = pairs.len();
    let mut dist = vec![0.0; n + 1];
    for mask in 0u32..(1u32 << m) {
        let edges = mask.count_ones() as i32;
        let weight = p.powi(edges) * (1.0 - p).powi(m as i32 - edges);
        dist[largest_component(n, &pairs, mask)] += weight;
    }
    Ok(dist)
}

/// Component scan by flood fill over an edge bitmask; intentionally naive.
fn largest_component(n: usize, pairs: &[(usize, usize)], mask: u32) -> usize {
    let mut seen = [false; MAX_ENUM_VERTICES];
    let mut best = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for (e, &(a, b)) in pairs.iter().enumerate() {
                if mask & (1 << e) == 0 {
                    continue;
                }
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        best = best.max(size);
    }
    best
}

/// Exact law of the total progeny of a branching process with offspring
/// distribution Bi(fanout, prob), truncated at `max_size` individuals.
#[derive(Clone, Debug)]
pub struct TreeSizeDistribution {
    /// `probs[k]` is P(total = k) for k in 1..=max_size; index 0 unused.
    pub probs: Vec<f64>,
    /// Probability that the total exceeds `max_size`.
    pub tail: f64,
    pub max_size: u64,
}

impl TreeSizeDistribution {
    /// Cells suitable for goodness-of-fit tests: sizes 1..=max_size followed
    /// by one overflow cell.
    pub fn cells(&self) -> Vec<f64> {
        let mut cells: Vec<f64> = self.probs[1..].to_vec();
        cells.push(self.tail);
        cells
    }
}

/// Enumerates every offspring sequence of the branching process, pruning a
/// branch as soon as its total exceeds `max_size` (that mass is exactly the
/// truncation tail). Probabilities are products of at most a few dozen
/// binomial pmf factors, so f64 keeps ~1e-13 accuracy.
pub fn bp_size_distribution(fanout: u64, prob: f64, max_size: u64) -> Result<TreeSizeDistribution> {
    if fanout == 0 || fanout > MAX_ENUM_FANOUT {
        return Err(Error::ParamDomain(format!(
            "exhaustive tree enumeration supports fanout 1..={MAX_ENUM_FANOUT}, got {fanout}"
        )));
    }
    if max_size == 0 || max_size > MAX_ENUM_TREE_SIZE {
        return Err(Error::ParamDomain(format!(
            "exhaustive tree enumeration supports max size 1..={MAX_ENUM_TREE_SIZE}, got {max_size}"
        )));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::ParamDomain(format!(
            "offspring probability must lie in [0, 1], got {prob}"
        )));
    }
    // Offspring pmf of Bi(fanout, prob), fanout <= 3: tiny closed forms.
    let q = 1.0 - prob;
    let pmf: Vec<f64> = (0..=fanout)
        .map(|k| {
            let choose = match (fanout, k) {
                (_, 0) => 1.0,
                (f, k) if k == f => 1.0,
                (2, 1) => 2.0,
                (3, 1) | (3, 2) => 3.0,
                _ => unreachable!("fanout <= 3"),
            };
            choose * prob.powi(k as i32) * q.powi((fanout - k) as i32)
        })
        .collect();
    let mut out = TreeSizeDistribution {
        probs: vec![0.0; max_size as usize + 1],
        tail: 0.0,
        max_size,
    };
    walk(1, 1, 1.0, &pmf, &mut out);
    Ok(out)
}

/// Depth-first walk over (pending individuals, total born so far).
fn walk(pending: u64, total: u64, weight: f64, pmf: &[f64], out: &mut TreeSizeDistribution) {
    if total > out.max_size {
        out.tail += weight;
        return;
    }
    if pending == 0 {
        out.probs[total as usize] += weight;
        return;
    }
    for (children, w) in pmf.iter().enumerate() {
        walk(
            pending - 1 + children as u64,
            total + children as u64,
            weight * w,
            pmf,
            out,
        );
    }
}
