//! Sparse random graphs G(n, p): edge sampling, component censuses, and
//! neighborhood exploration.
//!
//! Two independent pipelines produce component sizes. The edge pipeline
//! samples the whole edge set by geometric skipping over the C(n, 2) vertex
//! pairs and runs union-find, costing O(n + p n^2). The lazy pipeline never
//! materializes edges: it explores one component at a time, revealing each
//! vertex's not-yet-visited neighbors as a binomial draw from the unvisited
//! pool. Both produce the same component size law, which the integration
//! tests check against each other and, at tiny n, against exhaustive
//! enumeration.

use crate::bp::BpParams;
use crate::error::{Error, Result};
use crate::pool::UnvisitedPool;
use crate::rng::{sample_binomial, sample_geometric_skip, Substream};
use serde::Serialize;

/// Graph parameters, kept in the sparse regime p = (1 + eps)/n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnpParams {
    pub n: u32,
    pub p: f64,
}

impl GnpParams {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParamDomain("vertex count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParamDomain(format!(
                "edge probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(GnpParams { n, p })
    }

    /// Builds parameters from the distance to criticality: p = (1 + eps)/n.
    pub fn from_eps(n: u32, eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= -1.0 {
            return Err(Error::ParamDomain(format!(
                "eps must be finite and above -1, got {eps}"
            )));
        }
        let p = (1.0 + eps) / n as f64;
        if p > 1.0 {
            return Err(Error::ParamDomain(format!(
                "eps {eps} needs p = {p} > 1 at n = {n}"
            )));
        }
        GnpParams::new(n, p)
    }

    /// Signed distance to the critical point: np - 1.
    pub fn eps(&self) -> f64 {
        self.n as f64 * self.p - 1.0
    }

    /// eps^3 n, the quantity whose growth separates the supercritical regime
    /// from the critical window.
    pub fn criticality(&self) -> f64 {
        let e = self.eps();
        e * e * e * self.n as f64
    }

    /// The branching process that dominates neighborhood growth: offspring
    /// distribution Bi(n, p).
    pub fn bp(&self) -> BpParams {
        BpParams {
            n: self.n as u64,
            p: self.p,
        }
    }

    /// Number of vertex pairs, C(n, 2).
    pub fn pair_count(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }
}

/// Streams the edges of one G(n, p) sample in lexicographic order.
///
/// Pairs (u, v), u < v, are ranked lexicographically; successive present
/// edges are found by geometric skips, so the cost is proportional to the
/// number of edges rather than the number of pairs.
pub struct EdgeSampler<'a> {
    n: u32,
    p: f64,
    total: u64,
    pos: u64,
    row: u32,
    row_start: u64,
    row_end: u64,
    done: bool,
    rng: &'a mut Substream,
}

impl<'a> EdgeSampler<'a> {
    pub fn new(params: &GnpParams, rng: &'a mut Substream) -> Self {
        let total = params.pair_count();
        EdgeSampler {
            n: params.n,
            p: params.p,
            total,
            pos: 0,
            row: 0,
            row_start: 0,
            row_end: params.n.saturating_sub(1) as u64,
            done: total == 0 || params.p == 0.0,
            rng,
        }
    }

    /// Walks the row pointers forward until the row covering `rank`.
    /// Ranks are visited in increasing order, so this is amortized O(1).
    fn advance_to(&mut self, rank: u64) {
        while rank >= self.row_end {
            self.row += 1;
            self.row_start = self.row_end;
            self.row_end += (self.n - 1 - self.row) as u64;
        }
    }
}

impl Iterator for EdgeSampler<'_> {
    type Item = (u32, u32);

    fn next(&mut self) -> Option<(u32, u32)> {
        if self.done {
            return None;
        }
        let skip = sample_geometric_skip(self.p, self.rng)
            .expect("edge probability was validated at construction");
        let rank = self.pos.saturating_add(skip - 1);
        if rank >= self.total {
            self.done = true;
            return None;
        }
        self.pos = rank + 1;
        self.advance_to(rank);
        let u = self.row;
        let v = self.row + 1 + (rank - self.row_start) as u32;
        Some((u, v))
    }
}

/// Component sizes of one graph sample, largest first.
#[derive(Clone, Debug, Serialize)]
pub struct Census {
    pub sizes: Vec<u32>,
}

impl Census {
    /// Largest component size.
    pub fn l1(&self) -> u32 {
        self.sizes.first().copied().unwrap_or(0)
    }

    /// Second largest component size; 0 when the graph is connected.
    pub fn l2(&self) -> u32 {
        self.sizes.get(1).copied().unwrap_or(0)
    }

    /// Number of components with at least `min_size` vertices.
    pub fn count_of_at_least(&self, min_size: u32) -> u64 {
        self.sizes.iter().take_while(|&&s| s >= min_size).count() as u64
    }

    /// Total vertices living in components of at least `min_size`.
    pub fn vertices_in_at_least(&self, min_size: u32) -> u64 {
        self.sizes
            .iter()
            .take_while(|&&s| s >= min_size)
            .map(|&s| s as u64)
            .sum()
    }
}

/// Computes the component census of an explicit edge list via union-find.
pub fn component_census(
    n: u32,
    edges: impl IntoIterator<Item = (u32, u32)>,
) -> Result<Census> {
    if n == 0 {
        return Err(Error::Input("vertex count must be positive".into()));
    }
    let mut uf = crate::union_find::UnionFind::new(n as usize);
    for (u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::Input(format!(
                "edge ({u}, {v}) leaves the vertex range 0..{n}"
            )));
        }
        if u == v {
            return Err(Error::Input(format!("self-loop at vertex {u}")));
        }
        uf.union(u, v);
    }
    let mut sizes = uf.component_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(Census { sizes })
}

/// The tree laid down by a breadth-first exploration of one component.
#[derive(Clone, Debug)]
pub struct ExplorationTree {
    /// Vertices in discovery order; the root is first.
    pub order: Vec<u32>,
    /// For each position in `order`, the position of its parent;
    /// `u32::MAX` marks the root.
    pub parent_index: Vec<u32>,
    /// Vertices discovered per generation; generation 0 is the root alone.
    pub generation_sizes: Vec<u64>,
}

impl ExplorationTree {
    pub fn root(&self) -> u32 {
        self.order[0]
    }

    pub fn size(&self) -> u64 {
        self.order.len() as u64
    }

    pub fn width(&self) -> u64 {
        self.generation_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn parent_of(&self, position: usize) -> Option<u32> {
        let idx = self.parent_index[position];
        if idx == u32::MAX {
            None
        } else {
            Some(self.order[idx as usize])
        }
    }
}

/// Breadth-first exploration with a pluggable neighbor reveal.
///
/// `reveal` is handed each parent in discovery order and must claim that
/// parent's new children out of the pool itself, returning them. The random
/// reveal draws Bi(pool, p); tests substitute deterministic adjacency.
pub fn explore_component_with<F>(
    root: u32,
    pool: &mut UnvisitedPool,
    mut reveal: F,
) -> Result<ExplorationTree>
where
    F: FnMut(u32, &mut UnvisitedPool) -> Result<Vec<u32>>,
{
    if !pool.remove(root) {
        return Err(Error::Input(format!("root {root} is not unvisited")));
    }
    let mut order = vec![root];
    let mut parent_index = vec![u32::MAX];
    let mut generation_sizes = vec![1u64];
    let mut gen_start = 0usize;
    let mut gen_end = 1usize;
    while gen_start < gen_end {
        for idx in gen_start..gen_end {
            let parent = order[idx];
            for child in reveal(parent, pool)? {
                order.push(child);
                parent_index.push(idx as u32);
            }
        }
        let next = order.len() - gen_end;
        if next > 0 {
            generation_sizes.push(next as u64);
        }
        gen_start = gen_end;
        gen_end = order.len();
    }
    Ok(ExplorationTree {
        order,
        parent_index,
        generation_sizes,
    })
}

/// Random reveal: the number of new neighbors of a parent among the u
/// unvisited vertices is Bi(u, p), and which ones they are is uniform, so
/// children are claimed by uniform draws from the pool.
pub fn explore_component(
    params: &GnpParams,
    root: u32,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<ExplorationTree> {
    let p = params.p;
    explore_component_with(root, pool, |_, pool| {
        let count = sample_binomial(pool.len() as u64, p, rng)?;
        let mut children = Vec::with_capacity(count as usize);
        for _ in 0..count {
            children.push(pool.sample_remove(rng).expect("pool holds enough"));
        }
        Ok(children)
    })
}

/// Lazy exploration that stops as soon as `target` vertices are reached.
///
/// Returns the number of vertices reached and whether the target was hit.
/// Stopping at the first crossing leaves the indicator {component >= target}
/// exact while skipping the rest of a large component's work. The pool is
/// reset on entry.
pub fn explore_component_at_least(
    params: &GnpParams,
    root: u32,
    target: u64,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<(u64, bool)> {
    if target == 0 {
        return Err(Error::ParamDomain("target must be positive".into()));
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
    let mut reached = 1u64;
    if reached >= target {
        return Ok((reached, true));
    }
    // Only counts matter here, so the queue is a plain backlog counter.
    let mut unexplored = 1u64;
    while unexplored > 0 {
        let children = sample_binomial(pool.len() as u64, params.p, rng)?;
        for _ in 0..children {
            pool.sample_remove(rng).expect("pool holds enough");
        }
        reached += children;
        if reached >= target {
            return Ok((reached, true));
        }
        unexplored += children;
        unexplored -= 1;
    }
    Ok((reached, false))
}

/// Full component census by repeated lazy exploration, no edge list ever
/// built. Roots are taken in ascending vertex order.
pub fn lazy_component_census(
    params: &GnpParams,
    pool: &mut UnvisitedPool,
    rng: &mut Substream,
) -> Result<Census> {
    if pool.capacity() != params.n {
        return Err(Error::Input(format!(
            "pool capacity {} does not match n = {}",
            pool.capacity(),
            params.n
        )));
    }
    pool.reset();
    let mut sizes = Vec::new();
    for v in 0..params.n {
        if pool.contains(v) {
            let tree = explore_component(params, v, pool, rng)?;
            sizes.push(tree.order.len() as u32);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(Census { sizes })
}
