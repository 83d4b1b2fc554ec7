//! Couplings between component exploration and branching processes.
//!
//! Three constructions share one source of randomness between a graph
//! exploration and a branching process so that sandwich relations hold
//! sample by sample, not merely in distribution:
//!
//! * [`coupled_explore`]: every explored vertex tests all n potential
//!   neighbours; tests against unvisited real vertices grow the tree, and
//!   all n tests grow a Bi(n, p) process, so the tree is dominated
//!   generation by generation. Vertices invented to pad the candidate count
//!   to n are fictitious; they carry counts only and spawn only fictitious
//!   descendants.
//! * [`coupled_explore_lower`]: every step tests exactly n - k candidates,
//!   shared verbatim with a Bi(n - k, p) process, giving the dichotomy that
//!   either the component is at least the process total or both reached k.
//! * [`truncated_explore`]: a plain exploration halted at L vertices or at
//!   a capped number of reached-but-not-fully-explored boundary vertices,
//!   plus [`conditional_second_explore`] to grow a second component in the
//!   untouched remainder and test it against the boundary.

use crate::bp::{BpCaps, BpOutcome, BpStatus};
use crate::error::{Error, Result};
use crate::gnp::{ExplorationTree, GnpParams};
use crate::pool::UnvisitedPool;
use crate::rng::{sample_binomial, sample_geometric_skip, Substream};

/// How the two sides of a joint sample relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// The exploration tree is a subtree of the branching process.
    TreeSubsetBp,
    /// The component of the root is at least the process total (the
    /// process died before k vertices were reached).
    GraphAtLeastBp,
    /// Both the exploration and the process reached at least k vertices.
    BothAtLeastK,
}

/// One coupled run: the graph-side tree, the process-side outcome, and the
/// relation the construction guarantees between them.
#[derive(Clone, Debug)]
pub struct JointSample {
    pub graph_tree: ExplorationTree,
    pub bp_outcome: BpOutcome,
    /// Process generation sizes including fictitious members; generation 0
    /// is the root. A partially revealed final generation is included.
    pub bp_generation_sizes: Vec<u64>,
    pub relation: Relation,
    /// Threshold for the lower coupling; 0 when unused.
    pub k: u64,
}

/// Explores the component of `root` in a fresh G(n, p) sample while driving
/// a Bi(n, p) branching process from the same randomness.
///
/// Each parent tests its u unvisited candidates (a Bi(u, p) draw claimed
/// from the pool) and n - u fictitious ones (a Bi(n - u, p) draw), so its
/// process offspring is exactly Bi(n, p) while the tree keeps the real
/// subset. Fictitious parents test all n candidates fictitiously. The caps
/// apply to the process side with the same per-parent check order as
/// [`crate::bp::simulate_bp`], so the process marginal is identical to a
/// plain simulation; the tree at halt is whatever had been claimed.
///
/// The pool is reset on entry; afterwards it holds the unvisited remainder.
pub fn coupled_explore(
    params: &GnpParams,
    root: u32,
    caps: BpCaps,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<JointSample> {
    if pool.capacity() != params.n {
        return Err(Error::Input(format!(
            "pool capacity {} does not match n = {}",
            pool.capacity(),
            params.n
        )));
    }
    pool.reset();
    if !pool.remove(root) {
        return Err(Error::Input(format!("root {root} is not a vertex")));
    }
    let n = params.n as u64;
    let p = params.p;

    let mut order = vec![root];
    let mut parent_index = vec![u32::MAX];
    let mut tree_gen_sizes = vec![1u64];
    let mut bp_gen_sizes = vec![1u64];

    // Current process generation: real members occupy order[real_start..
    // real_end], plus `fict` fictitious members.
    let mut real_start = 0usize;
    let mut real_end = 1usize;
    let mut fict = 0u64;

    let mut total = 1u64;
    let mut width = 1u64;
    let mut generations = 0u64;

    let finish = |status: BpStatus,
                  total: u64,
                  width: u64,
                  generations: u64,
                  pending: u64,
                  order: Vec<u32>,
                  parent_index: Vec<u32>,
                  mut tree_gen_sizes: Vec<u64>,
                  mut bp_gen_sizes: Vec<u64>,
                  tree_partial: u64,
                  bp_partial: u64| {
        if tree_partial > 0 {
            tree_gen_sizes.push(tree_partial);
        }
        if bp_partial > 0 {
            bp_gen_sizes.push(bp_partial);
        }
        JointSample {
            graph_tree: ExplorationTree {
                order,
                parent_index,
                generation_sizes: tree_gen_sizes,
            },
            bp_outcome: BpOutcome {
                status,
                total_size: total,
                width,
                generations,
                pending,
                size_cap: caps.size_cap,
                width_cap: caps.width_cap,
            },
            bp_generation_sizes: bp_gen_sizes,
            relation: Relation::TreeSubsetBp,
            k: 0,
        }
    };

    while real_end > real_start || fict > 0 {
        let mut bp_next = 0u64;
        for idx in real_start..real_end {
            let u = pool.len() as u64;
            let real_children = sample_binomial(u, p, rng)?;
            for _ in 0..real_children {
                let child = pool.sample_remove(rng).expect("pool holds u vertices");
                order.push(child);
                parent_index.push(idx as u32);
            }
            let fict_children = sample_binomial(n - u, p, rng)?;
            let children = real_children + fict_children;
            bp_next += children;
            total += children;
            let halted = if children > 0 && total >= caps.size_cap {
                Some(BpStatus::CensoredSize)
            } else if bp_next >= caps.width_cap {
                Some(BpStatus::CensoredWidth)
            } else {
                None
            };
            if let Some(status) = halted {
                let remaining = (real_end - idx - 1) as u64 + fict;
                let tree_partial = (order.len() - real_end) as u64;
                return Ok(finish(
                    status,
                    total,
                    width.max(bp_next),
                    generations + 1,
                    remaining + bp_next,
                    order,
                    parent_index,
                    tree_gen_sizes,
                    bp_gen_sizes,
                    tree_partial,
                    bp_next,
                ));
            }
        }
        for j in 0..fict {
            let children = sample_binomial(n, p, rng)?;
            bp_next += children;
            total += children;
            let halted = if children > 0 && total >= caps.size_cap {
                Some(BpStatus::CensoredSize)
            } else if bp_next >= caps.width_cap {
                Some(BpStatus::CensoredWidth)
            } else {
                None
            };
            if let Some(status) = halted {
                let remaining = fict - j - 1;
                let tree_partial = (order.len() - real_end) as u64;
                return Ok(finish(
                    status,
                    total,
                    width.max(bp_next),
                    generations + 1,
                    remaining + bp_next,
                    order,
                    parent_index,
                    tree_gen_sizes,
                    bp_gen_sizes,
                    tree_partial,
                    bp_next,
                ));
            }
        }
        let tree_next = (order.len() - real_end) as u64;
        if bp_next > 0 {
            generations += 1;
            width = width.max(bp_next);
            bp_gen_sizes.push(bp_next);
        }
        if tree_next > 0 {
            tree_gen_sizes.push(tree_next);
        }
        real_start = real_end;
        real_end = order.len();
        fict = bp_next - tree_next;
    }

    Ok(finish(
        BpStatus::Extinct,
        total,
        width,
        generations,
        0,
        order,
        parent_index,
        tree_gen_sizes,
        bp_gen_sizes,
        0,
        0,
    ))
}

/// Lower coupling: while fewer than k vertices are reached, each parent
/// tests exactly n - k candidates, and the claims double as the offspring
/// of a Bi(n - k, p) process, so tree and process agree vertex for vertex
/// until the stop. Ends in the dichotomy [`Relation::GraphAtLeastBp`] (the
/// process died first; the true component contains the whole tree, which
/// equals the process) or [`Relation::BothAtLeastK`].
///
/// While reached < k the pool always holds more than n - k vertices, so
/// every tested candidate is real. The pool is reset on entry.
pub fn coupled_explore_lower(
    params: &GnpParams,
    root: u32,
    k: u64,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<JointSample> {
    let n = params.n as u64;
    if k == 0 || k >= n {
        return Err(Error::ParamDomain(format!(
            "threshold k must satisfy 1 <= k < n, got k = {k} at n = {n}"
        )));
    }
    if pool.capacity() != params.n {
        return Err(Error::Input(format!(
            "pool capacity {} does not match n = {}",
            pool.capacity(),
            params.n
        )));
    }
    pool.reset();
    if !pool.remove(root) {
        return Err(Error::Input(format!("root {root} is not a vertex")));
    }

    let mut order = vec![root];
    let mut parent_index = vec![u32::MAX];
    let mut gen_sizes = vec![1u64];
    let mut reached = 1u64;
    let mut width = 1u64;
    let mut generations = 0u64;

    let mut gen_start = 0usize;
    let mut gen_end = 1usize;
    // Index of the first unexplored vertex when the k threshold fired.
    let mut halt_idx: Option<usize> = None;

    'outer: while gen_start < gen_end {
        for idx in gen_start..gen_end {
            if reached >= k {
                halt_idx = Some(idx);
                break 'outer;
            }
            let children = sample_binomial(n - k, params.p, rng)?;
            for _ in 0..children {
                let child = pool
                    .sample_remove(rng)
                    .expect("reached < k leaves more than n - k unvisited");
                order.push(child);
                parent_index.push(idx as u32);
            }
            reached += children;
        }
        let next = (order.len() - gen_end) as u64;
        if next > 0 {
            generations += 1;
            width = width.max(next);
            gen_sizes.push(next);
        }
        gen_start = gen_end;
        gen_end = order.len();
    }

    if halt_idx.is_some() {
        // A partially revealed generation joins the bookkeeping.
        let partial = (order.len() - gen_end) as u64;
        if partial > 0 {
            generations += 1;
            width = width.max(partial);
            gen_sizes.push(partial);
        }
    }
    // Everything from the first unexplored vertex onward is still pending.
    let pending = halt_idx.map_or(0, |idx| (order.len() - idx) as u64);
    let bp_outcome = BpOutcome {
        status: if halt_idx.is_some() {
            BpStatus::CensoredSize
        } else {
            BpStatus::Extinct
        },
        total_size: reached,
        width,
        generations,
        pending,
        size_cap: k,
        width_cap: u64::MAX,
    };
    Ok(JointSample {
        bp_generation_sizes: gen_sizes.clone(),
        graph_tree: ExplorationTree {
            order,
            parent_index,
            generation_sizes: gen_sizes,
        },
        bp_outcome,
        relation: if halt_idx.is_some() {
            Relation::BothAtLeastK
        } else {
            Relation::GraphAtLeastBp
        },
        k,
    })
}

/// Why a truncated exploration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the size cap L.
    SizeCap,
    /// Accumulated the capped number of boundary vertices.
    BoundaryCap,
    /// Ran out of component: the exploration is complete.
    Exhausted,
}

/// A breadth-first exploration halted early, with its boundary.
#[derive(Clone, Debug)]
pub struct TruncatedExploration {
    /// The tree built so far; its order is the reached set.
    pub tree: ExplorationTree,
    /// Vertices reached but not fully explored at the stop: the queued
    /// vertices plus, if its candidate block was cut short, the parent
    /// being revealed. Empty iff the exploration exhausted the component.
    pub boundary: Vec<u32>,
    pub stopped_by: StopReason,
    /// The size cap L.
    pub size_cap: u64,
    /// The boundary cap, eps * L rounded up (never below 1).
    pub boundary_cap: u64,
}

impl TruncatedExploration {
    pub fn reached(&self) -> u64 {
        self.tree.size()
    }

    /// True when the run halted early rather than exhausting the component.
    pub fn capped(&self) -> bool {
        self.stopped_by != StopReason::Exhausted
    }
}

/// Truncated exploration with the boundary cap derived from the distance to
/// criticality: cap = ceil(eps * L). Needs eps * L >= 1 in the
/// supercritical regime it is meant for; at or below criticality the cap
/// floor of 1 applies and the run degenerates to (at most) one reveal
/// block, which keeps the p = 0 case well defined.
pub fn truncated_explore(
    params: &GnpParams,
    root: u32,
    size_cap: u64,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<TruncatedExploration> {
    let eps = params.eps();
    if size_cap == 0 {
        return Err(Error::ParamDomain("size cap must be positive".into()));
    }
    if eps > 0.0 && eps * (size_cap as f64) < 1.0 {
        return Err(Error::ParamDomain(format!(
            "size cap {size_cap} is below 1/eps = {}",
            1.0 / eps
        )));
    }
    let boundary_cap = if eps > 0.0 {
        (eps * size_cap as f64).ceil() as u64
    } else {
        1
    };
    truncated_explore_with_cap(params, root, size_cap, boundary_cap, pool, rng)
}

/// The truncated exploration core with an explicit boundary cap.
///
/// Candidates of one parent are examined in a uniform random order by
/// geometric skips, so each claimed child costs O(1) and the stop checks
/// run after every single claim: first the size cap, then the boundary
/// cap. Checking per claim (not per finished parent block) is what keeps
/// the boundary at most cap + 1 in every run, including star-like bursts.
/// The pool is reset on entry; at return it holds exactly the unreached
/// vertices, which is the state [`conditional_second_explore`] needs.
pub fn truncated_explore_with_cap(
    params: &GnpParams,
    root: u32,
    size_cap: u64,
    boundary_cap: u64,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<TruncatedExploration> {
    if size_cap == 0 || boundary_cap == 0 {
        return Err(Error::ParamDomain("caps must be positive".into()));
    }
    if pool.capacity() != params.n {
        return Err(Error::Input(format!(
            "pool capacity {} does not match n = {}",
            pool.capacity(),
            params.n
        )));
    }
    pool.reset();
    if !pool.remove(root) {
        return Err(Error::Input(format!("root {root} is not a vertex")));
    }
    let p = params.p;

    let mut order = vec![root];
    let mut parent_index = vec![u32::MAX];
    let mut gen_of = vec![0u32];
    let mut gen_sizes = vec![1u64];
    let mut reached = 1u64;

    let make = |order: Vec<u32>,
                parent_index: Vec<u32>,
                gen_sizes: Vec<u64>,
                boundary: Vec<u32>,
                stopped_by: StopReason| TruncatedExploration {
        tree: ExplorationTree {
            order,
            parent_index,
            generation_sizes: gen_sizes,
        },
        boundary,
        stopped_by,
        size_cap,
        boundary_cap,
    };

    if reached >= size_cap {
        // The root alone fills the size cap; it was never explored.
        let boundary = vec![root];
        return Ok(make(order, parent_index, gen_sizes, boundary, StopReason::SizeCap));
    }

    let mut explored = 0usize;
    while explored < order.len() {
        let parent_gen = gen_of[explored];
        let block = pool.len() as u64;
        let mut examined = 0u64;
        if p > 0.0 && block > 0 {
            loop {
                let skip = sample_geometric_skip(p, rng)?;
                examined = examined.saturating_add(skip);
                if examined > block {
                    break;
                }
                let child = pool
                    .sample_remove(rng)
                    .expect("claims within a block never exceed it");
                order.push(child);
                parent_index.push(explored as u32);
                let child_gen = parent_gen + 1;
                gen_of.push(child_gen);
                if gen_sizes.len() == child_gen as usize {
                    gen_sizes.push(0);
                }
                gen_sizes[child_gen as usize] += 1;
                reached += 1;

                let queue = order.len() - explored - 1;
                let parent_partial = examined < block;
                if reached >= size_cap || queue as u64 >= boundary_cap {
                    let mut boundary: Vec<u32> = order[explored + 1..].to_vec();
                    if parent_partial {
                        boundary.push(order[explored]);
                    }
                    let reason = if reached >= size_cap {
                        StopReason::SizeCap
                    } else {
                        StopReason::BoundaryCap
                    };
                    return Ok(make(order, parent_index, gen_sizes, boundary, reason));
                }
            }
        }
        explored += 1;
    }
    Ok(make(order, parent_index, gen_sizes, Vec::new(), StopReason::Exhausted))
}

/// Result of exploring a second component in the remainder graph.
#[derive(Clone, Copy, Debug)]
pub struct SecondExplore {
    /// Size of the component of w in the graph without the reached set.
    pub size: u64,
    /// Whether any of the size * |boundary| explicitly tested pairs between
    /// that component and the boundary carries an edge; such an edge is what
    /// would glue the two explorations into one component.
    pub touches_boundary: bool,
}

/// Explores the component of `w` in the part of the graph the truncated
/// exploration never reached, then tests every (component vertex, boundary
/// vertex) pair in one Bernoulli block.
///
/// Must be called with the pool exactly as [`truncated_explore`] left it;
/// `w` must still be unvisited.
pub fn conditional_second_explore(
    params: &GnpParams,
    state: &TruncatedExploration,
    w: u32,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<SecondExplore> {
    if !pool.contains(w) {
        return Err(Error::Input(format!(
            "vertex {w} is inside the reached set (or out of range)"
        )));
    }
    let tree = crate::gnp::explore_component(params, w, pool, rng)?;
    let size = tree.size();
    let pairs = size.saturating_mul(state.boundary.len() as u64);
    let touches_boundary = if pairs == 0 || params.p == 0.0 {
        false
    } else {
        sample_geometric_skip(params.p, rng)? <= pairs
    };
    Ok(SecondExplore {
        size,
        touches_boundary,
    })
}
