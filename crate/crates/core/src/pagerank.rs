//! Trip-conditioned transition matrices over the dual graph and their
//! stationary distributions (weighted PageRank without teleportation).

use log::warn;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DualGraph;
use crate::trips::TripSet;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

// residual must stop improving for this many steps before lazy averaging kicks in
const STALL_LIMIT: usize = 10;
const PAR_ROWS: usize = 4096;

/// Row-stochastic transition matrix. Rows without stored entries are
/// dangling and behave as uniform rows over all states.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    tag: usize,
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    values: Vec<f64>,
    // (numerator per entry, denominator per row) when built from counts
    rational: Option<(Vec<u64>, Vec<u64>)>,
    dangling: Vec<usize>,
    // transpose: for each column, (source row, value)
    t_offsets: Vec<usize>,
    t_sources: Vec<usize>,
    t_values: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from explicit rows of `(target, probability)`. Each non-empty
    /// row must be non-negative and sum to 1 within `1e-12`.
    pub fn from_rows(tag: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut sum = 0.0;
            for &(j, p) in &row {
                if j >= n {
                    return Err(Error::Index {
                        what: "transition target",
                        index: j,
                        len: n,
                    });
                }
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::contract(format!("invalid probability {p} at ({i}, {j})")));
                }
                sum += p;
                targets.push(j);
                values.push(p);
            }
            if !row.is_empty() && (sum - 1.0).abs() > 1e-12 {
                return Err(Error::contract(format!("row {i} sums to {sum}, not 1")));
            }
            offsets.push(targets.len());
        }
        Ok(Self::assemble(tag, n, offsets, targets, values, None))
    }

    fn assemble(
        tag: usize,
        n: usize,
        offsets: Vec<usize>,
        targets: Vec<usize>,
        values: Vec<f64>,
        rational: Option<(Vec<u64>, Vec<u64>)>,
    ) -> Self {
        let dangling = (0..n).filter(|&i| offsets[i] == offsets[i + 1]).collect();
        let mut t_offsets = vec![0usize; n + 1];
        for &j in &targets {
            t_offsets[j + 1] += 1;
        }
        for i in 0..n {
            t_offsets[i + 1] += t_offsets[i];
        }
        let mut cursor = t_offsets.clone();
        let mut t_sources = vec![0; targets.len()];
        let mut t_values = vec![0.0; targets.len()];
        for i in 0..n {
            for e in offsets[i]..offsets[i + 1] {
                let j = targets[e];
                t_sources[cursor[j]] = i;
                t_values[cursor[j]] = values[e];
                cursor[j] += 1;
            }
        }
        TransitionMatrix {
            tag,
            n,
            offsets,
            targets,
            values,
            rational,
            dangling,
            t_offsets,
            t_sources,
            t_values,
        }
    }

    pub fn tag(&self) -> usize {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_dangling(&self, i: usize) -> bool {
        self.offsets[i] == self.offsets[i + 1]
    }

    pub fn dangling(&self) -> &[usize] {
        &self.dangling
    }

    /// Stored `(target, probability)` entries of a row (empty for dangling rows).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Probability of `i -> j`, including the uniform dangling repair.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.is_dangling(i) {
            return 1.0 / self.n as f64;
        }
        self.row(i).find(|&(t, _)| t == j).map_or(0.0, |(_, p)| p)
    }

    /// Probability stored for the `e`-th entry. For matrices built by
    /// [`dual_weights`] entry ids coincide with dual edge ids.
    pub fn entry(&self, e: usize) -> f64 {
        self.values[e]
    }

    /// Exact weight as `(numerator, denominator)` for count-built matrices.
    pub fn rational(&self, i: usize, j: usize) -> Option<(u64, u64)> {
        let (num, den) = self.rational.as_ref()?;
        if self.is_dangling(i) {
            return Some((1, self.n as u64));
        }
        let e = (self.offsets[i]..self.offsets[i + 1]).find(|&e| self.targets[e] == j)?;
        Some((num[e], den[i]))
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        if self.is_dangling(i) {
            1.0
        } else {
            self.row(i).map(|(_, p)| p).sum()
        }
    }

    /// `out = Mᵀ v`.
    pub fn mul_transpose(&self, v: &[f64], out: &mut [f64]) {
        let dangling_mass: f64 = self.dangling.iter().map(|&i| v[i]).sum::<f64>() / self.n as f64;
        let kernel = |(j, o): (usize, &mut f64)| {
            let r = self.t_offsets[j]..self.t_offsets[j + 1];
            *o = dangling_mass
                + self.t_sources[r.clone()]
                    .iter()
                    .zip(&self.t_values[r])
                    .map(|(&i, &p)| v[i] * p)
                    .sum::<f64>();
        };
        if self.n >= PAR_ROWS {
            out.par_iter_mut().enumerate().with_min_len(512).for_each(kernel);
        } else {
            out.iter_mut().enumerate().for_each(kernel);
        }
    }

    /// Groups of states that, once entered, are never left. Every state not
    /// listed is transient.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let has_dangling = !self.dangling.is_empty();
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n + 1, self.targets.len() + 2 * n);
        for _ in 0..n {
            g.add_node(());
        }
        for i in 0..n {
            for (j, p) in self.row(i) {
                if p > 0.0 {
                    g.add_edge(NodeIndex::new(i), NodeIndex::new(j), ());
                }
            }
        }
        if has_dangling {
            // a virtual hub stands in for the uniform dangling rows
            let hub = g.add_node(());
            for &i in &self.dangling {
                g.add_edge(NodeIndex::new(i), hub, ());
            }
            for j in 0..n {
                g.add_edge(hub, NodeIndex::new(j), ());
            }
        }
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0usize; g.node_count()];
        for (c, members) in sccs.iter().enumerate() {
            for v in members {
                comp[v.index()] = c;
            }
        }
        let mut closed = vec![true; sccs.len()];
        for e in g.raw_edges() {
            let (a, b) = (comp[e.source().index()], comp[e.target().index()]);
            if a != b {
                closed[a] = false;
            }
        }
        let mut out: Vec<Vec<usize>> = sccs
            .into_iter()
            .enumerate()
            .filter(|(c, _)| closed[*c])
            .map(|(_, members)| {
                let mut v: Vec<usize> = members.iter().map(|x| x.index()).filter(|&x| x < n).collect();
                v.sort_unstable();
                v
            })
            .filter(|v| !v.is_empty())
            .collect();
        out.sort();
        out
    }
}

/// Laplace-smoothed transition weights for one tag. Each consecutive pair of
/// records in a trip that forms a dual edge counts once (a trip passing the
/// same turn twice counts twice). A vertex `u` with out-set `OUT(u)` gets
/// `(count(u, v) + 1) / (sum over OUT(u) of count + |OUT(u)|)`.
pub fn dual_weights(dual: &DualGraph, trips: &TripSet, tag: usize) -> TransitionMatrix {
    let n = dual.num_vertices();
    let mut counts = vec![0u64; dual.num_edges()];
    for trip in trips {
        for pair in trip.records.windows(2) {
            let (u, v) = (pair[0].edge, pair[1].edge);
            if u < n && v < n {
                if let Some(e) = dual.find_edge(u, v) {
                    counts[e] += 1;
                }
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(dual.num_edges());
    let mut values = Vec::with_capacity(dual.num_edges());
    let mut numerators = Vec::with_capacity(dual.num_edges());
    let mut denominators = Vec::with_capacity(n);
    offsets.push(0);
    for u in 0..n {
        let ids = dual.out_edge_ids(u);
        let denom: u64 = ids.clone().map(|e| counts[e]).sum::<u64>() + ids.len() as u64;
        for e in ids {
            let num = counts[e] + 1;
            targets.push(dual.target(e));
            values.push(num as f64 / denom as f64);
            numerators.push(num);
        }
        denominators.push(denom);
        offsets.push(targets.len());
    }
    TransitionMatrix::assemble(tag, n, offsets, targets, values, Some((numerators, denominators)))
}

/// Stationary distribution of one tag's transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageRankVector {
    pub tag: usize,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Power iteration `v <- Mᵀ v` from the uniform vector, stopping once
/// `‖Mᵀv − v‖₁ ≤ tol`.
///
/// If the residual stops decreasing for several steps (a periodic chain),
/// iteration switches to the lazy chain `(I + Mᵀ)/2`, which shares the
/// stationary distribution. When the chain has more than one closed class,
/// each class is solved on its own and weighted by its size; transient
/// states get 0.
pub fn pagerank(m: &TransitionMatrix, tol: f64, max_iters: usize) -> Result<PageRankVector> {
    pagerank_damped(m, 1.0, tol, max_iters)
}

/// [`pagerank`] with a teleport probability of `1 - damping` to a uniform
/// state. Only `damping = 1` is used for annotation.
pub fn pagerank_damped(
    m: &TransitionMatrix,
    damping: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PageRankVector> {
    if !(0.0..=1.0).contains(&damping) {
        return Err(Error::contract(format!("damping {damping} outside [0, 1]")));
    }
    let n = m.dim();
    if n == 0 {
        return Ok(PageRankVector {
            tag: m.tag(),
            values: Vec::new(),
            iterations: 0,
            residual: 0.0,
        });
    }
    let classes = if damping < 1.0 {
        vec![(0..n).collect::<Vec<_>>()]
    } else {
        m.closed_classes()
    };
    let closed_total: usize = classes.iter().map(Vec::len).sum();
    if classes.len() > 1 || closed_total < n {
        let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
        warn!(
            "tag {}: transition graph is reducible: {} closed class(es) of sizes {:?}, {} transient state(s) get zero rank",
            m.tag(),
            classes.len(),
            sizes,
            n - closed_total
        );
    }

    let mut values = vec![0.0; n];
    let mut iterations = 0;
    for class in &classes {
        let mut start = vec![0.0; n];
        for &i in class {
            start[i] = 1.0 / class.len() as f64;
        }
        let (v, its) = power_iterate(m, damping, start, tol, max_iters)?;
        iterations = iterations.max(its);
        let share = class.len() as f64 / closed_total as f64;
        for &i in class {
            values[i] += share * v[i];
        }
    }
    let residual = residual(m, damping, &values);
    Ok(PageRankVector {
        tag: m.tag(),
        values,
        iterations,
        residual,
    })
}

fn step(m: &TransitionMatrix, damping: f64, v: &[f64], out: &mut [f64]) {
    m.mul_transpose(v, out);
    if damping < 1.0 {
        let teleport = (1.0 - damping) / v.len() as f64;
        out.iter_mut().for_each(|o| *o = damping * *o + teleport);
    }
}

fn residual(m: &TransitionMatrix, damping: f64, v: &[f64]) -> f64 {
    let mut y = vec![0.0; v.len()];
    step(m, damping, v, &mut y);
    y.iter().zip(v).map(|(a, b)| (a - b).abs()).sum()
}

fn power_iterate(
    m: &TransitionMatrix,
    damping: f64,
    mut v: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut y = vec![0.0; v.len()];
    let mut lazy = false;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut res = f64::INFINITY;
    for it in 0..max_iters {
        step(m, damping, &v, &mut y);
        res = y.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        if res <= tol {
            return Ok((v, it));
        }
        // a periodic chain cycles without ever beating its best residual
        if res < best {
            best = res;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if !lazy && stalled >= STALL_LIMIT {
            lazy = true;
        }
        if lazy {
            v.iter_mut().zip(&y).for_each(|(a, b)| *a = 0.5 * (*a + b));
        } else {
            std::mem::swap(&mut v, &mut y);
        }
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
    }
    Err(Error::Convergence {
        what: "pagerank",
        iterations: max_iters,
        residual: res,
    })
}

/// Distribution of normalized PageRank values over 100 buckets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageRankHistogram {
    /// `counts[b]` holds vertices whose normalized value lies in `(b, b + 1]`.
    pub counts: Vec<usize>,
    /// Percentages of vertices per bucket; sums to 100.
    pub percentages: Vec<f64>,
    pub max: f64,
}

/// Normalizes `y = 100 x / max(x)` and buckets `y` into `(b-1, b]` for `b = 1..=100`.
/// Zero values (transient states) are placed in the first bucket.
pub fn pagerank_stats(v: &PageRankVector) -> Result<PageRankHistogram> {
    let max = v.values.iter().fold(0.0f64, |m, &x| m.max(x));
    if v.values.is_empty() || !(max > 0.0) {
        return Err(Error::contract("pagerank vector is empty or all zero"));
    }
    let mut counts = vec![0usize; 100];
    for &x in &v.values {
        let y = 100.0 * x / max;
        let b = (y.ceil() as usize).clamp(1, 100);
        counts[b - 1] += 1;
    }
    let n = v.values.len() as f64;
    let percentages = counts.iter().map(|&c| 100.0 * c as f64 / n).collect();
    Ok(PageRankHistogram {
        counts,
        percentages,
        max,
    })
}

/// Degree statistics of a dual graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub vertices: usize,
    pub edges: usize,
    pub max_in: usize,
    pub max_out: usize,
    /// `|E'| / |V'|`.
    pub avg_degree: f64,
    /// Percentage of vertices per in-degree (index = degree).
    pub in_hist: Vec<f64>,
    pub out_hist: Vec<f64>,
}

pub fn degree_stats(dual: &DualGraph) -> DegreeStats {
    let n = dual.num_vertices();
    let ins: Vec<usize> = (0..n).map(|v| dual.in_degree(v)).collect();
    let outs: Vec<usize> = (0..n).map(|v| dual.out_degree(v)).collect();
    let max_in = ins.iter().copied().max().unwrap_or(0);
    let max_out = outs.iter().copied().max().unwrap_or(0);
    let hist = |degs: &[usize], max: usize| {
        let mut h = vec![0.0; max + 1];
        for &d in degs {
            h[d] += 100.0 / n as f64;
        }
        h
    };
    DegreeStats {
        vertices: n,
        edges: dual.num_edges(),
        max_in,
        max_out,
        avg_degree: average_degree(n, dual.num_edges()),
        in_hist: if n == 0 { Vec::new() } else { hist(&ins, max_in) },
        out_hist: if n == 0 { Vec::new() } else { hist(&outs, max_out) },
    }
}

/// `edges / vertices`, 0 for an empty graph.
pub fn average_degree(vertices: usize, edges: usize) -> f64 {
    if vertices == 0 {
        0.0
    } else {
        edges as f64 / vertices as f64
    }
}
