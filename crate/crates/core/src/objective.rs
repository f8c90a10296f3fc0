//! The regularized least-squares objective
//!
//! ```text
//! O(d) = ‖c − Qᵀd‖² + α·dᵀL_A d + β·dᵀL_B d + γ·‖d‖²
//! ```
//!
//! and its minimizer, the solution of `(QQᵀ + αL_A + βL_B + γI) d = Qc`.
//!
//! `Q` has one column per trip with the trip's length-times-tag-share
//! coefficients. `L_A` is the Laplacian of the block-diagonal PageRank
//! similarity matrix and `L_B` the Laplacian of the block-diagonal
//! directional adjacency matrix; both couple entries of the same tag only.
//! The quadratic form `dᵀLd` equals the sum of `S[i,j]·(d_i − d_j)²` over
//! unordered pairs `{i, j}`.
//!
//! The system operator is applied matrix-free, so `QQᵀ` is never formed.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CostLayout, CostVector, DualGraph, RoadGraph};
use crate::pagerank::{PageRankVector, TransitionMatrix};
use crate::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::trips::{tag_weight, TripSet};

pub use crate::sparse::laplacian;

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.95;
pub const DEFAULT_HIGHWAY_CUTOFF_KMH: f64 = 90.0;
/// Above this many edges the similarity blocks use the sorted sweep.
pub const DEFAULT_EXACT_SIMILARITY_MAX_EDGES: usize = 2000;

/// `Q`: one column per trip, one row per `(edge, tag)` entry.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    layout: CostLayout,
    // Qᵀ, rows = trips
    by_trip: CsrMatrix,
    // Q, rows = cost entries
    by_entry: CsrMatrix,
}

/// Builds `Q`. Entry `(flat(e, k), t)` is the sum over records of trip `t`
/// on edge `e` of `length(e) · tag_weight(record, k)`.
pub fn build_q(trips: &TripSet, graph: &RoadGraph) -> Result<DesignMatrix> {
    let layout = graph.layout();
    let schedule = graph.schedule();
    let mut trip_entries = Vec::new();
    for (t, trip) in trips.iter().enumerate() {
        for r in &trip.records {
            if r.edge >= graph.num_edges() {
                return Err(Error::Index {
                    what: "edge",
                    index: r.edge,
                    len: graph.num_edges(),
                });
            }
            let len = graph.length(r.edge);
            for k in 0..schedule.num_tags() {
                let w = tag_weight(r, k, schedule)?;
                if w != 0.0 {
                    trip_entries.push((t, layout.index(r.edge, k), len * w));
                }
            }
        }
    }
    let by_trip = CsrMatrix::from_triplets(trips.len(), layout.len(), trip_entries);
    let by_entry = by_trip.transpose();
    Ok(DesignMatrix {
        layout,
        by_trip,
        by_entry,
    })
}

impl DesignMatrix {
    pub fn layout(&self) -> CostLayout {
        self.layout
    }

    pub fn num_trips(&self) -> usize {
        self.by_trip.nrows()
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// `Q[entry, trip]`.
    pub fn get(&self, entry: usize, trip: usize) -> f64 {
        self.by_trip.get(trip, entry)
    }

    /// Nonzero `(entry, value)` pairs of one trip's column.
    pub fn column(&self, trip: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (cols, vals) = self.by_trip.row(trip);
        cols.iter().copied().zip(vals.iter().copied())
    }

    /// `Qᵀ d`: the modeled cost of every trip.
    pub fn qt_mul(&self, d: &[f64]) -> Vec<f64> {
        self.by_trip.mul_vec(d)
    }

    /// `Q c`.
    pub fn q_mul(&self, c: &[f64]) -> Vec<f64> {
        self.by_entry.mul_vec(c)
    }

    /// `diag(QQᵀ)`.
    pub fn gram_diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.by_entry.row(i).1.iter().map(|v| v * v).sum())
            .collect()
    }

    /// Entries that appear in at least one trip column.
    pub fn touched(&self) -> Vec<bool> {
        (0..self.dim()).map(|i| !self.by_entry.row(i).0.is_empty()).collect()
    }

    pub fn as_csr_by_entry(&self) -> &CsrMatrix {
        &self.by_entry
    }
}

/// PageRank similarity `min(p, q) / max(p, q)`.
pub fn similarity(pr_i: f64, pr_j: f64) -> Result<f64> {
    if !(pr_i > 0.0 && pr_j > 0.0) {
        return Err(Error::contract(format!(
            "similarity needs positive PageRank values, got {pr_i} and {pr_j}"
        )));
    }
    Ok(pr_i.min(pr_j) / pr_i.max(pr_j))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityOptions {
    pub threshold: f64,
    /// Edge count up to which every pair above the threshold is linked.
    pub exact_max_edges: usize,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        SimilarityOptions {
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
            exact_max_edges: DEFAULT_EXACT_SIMILARITY_MAX_EDGES,
        }
    }
}

/// Per-tag symmetric blocks and their block-diagonal assembly.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub blocks: Vec<CsrMatrix>,
    pub assembled: CsrMatrix,
}

impl BlockMatrix {
    fn from_blocks(blocks: Vec<CsrMatrix>) -> Self {
        let assembled = CsrMatrix::block_diagonal(&blocks);
        BlockMatrix { blocks, assembled }
    }

    pub fn laplacian(&self) -> Result<CsrMatrix> {
        laplacian(&self.assembled)
    }
}

/// Thresholded PageRank similarity blocks `A_k`, zero diagonal.
pub fn build_a(prs: &[PageRankVector], opts: SimilarityOptions) -> Result<BlockMatrix> {
    if !(opts.threshold > 0.0 && opts.threshold <= 1.0) {
        return Err(Error::contract(format!(
            "similarity threshold {} outside (0, 1]",
            opts.threshold
        )));
    }
    let blocks = prs
        .iter()
        .map(|pr| {
            if pr.values.len() <= opts.exact_max_edges {
                similarity_block_exact(&pr.values, opts.threshold)
            } else {
                similarity_block_sweep(&pr.values, opts.threshold)
            }
        })
        .collect();
    Ok(BlockMatrix::from_blocks(blocks))
}

// Indices with positive rank, sorted by descending rank (index breaks ties).
fn ranked(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Every pair `i != j` with similarity at or above `threshold`. In descending
/// order the scan from `i` stops at the first value below `threshold · pr_i`.
pub fn similarity_block_exact(values: &[f64], threshold: f64) -> CsrMatrix {
    let order = ranked(values);
    let mut trip = Vec::new();
    for (p, &i) in order.iter().enumerate() {
        for &j in &order[p + 1..] {
            let s = values[j] / values[i];
            if s < threshold {
                break;
            }
            trip.push((i, j, s));
            trip.push((j, i, s));
        }
    }
    CsrMatrix::from_triplets(values.len(), values.len(), trip)
}

/// Links only neighbours in rank order whose ratio clears `threshold`,
/// giving a chain per run of similar values.
pub fn similarity_block_sweep(values: &[f64], threshold: f64) -> CsrMatrix {
    let order = ranked(values);
    let mut trip = Vec::new();
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        let s = values[j] / values[i];
        if s >= threshold {
            trip.push((i, j, s));
            trip.push((j, i, s));
        }
    }
    CsrMatrix::from_triplets(values.len(), values.len(), trip)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Highway,
    Urban,
}

pub fn road_classes(graph: &RoadGraph, highway_cutoff_kmh: f64) -> Vec<RoadClass> {
    (0..graph.num_edges())
        .map(|e| {
            if graph.is_highway(e, highway_cutoff_kmh) {
                RoadClass::Highway
            } else {
                RoadClass::Urban
            }
        })
        .collect()
}

/// Directional adjacency blocks `B_k[i,j] = max(W'_k(i→j), W'_k(j→i))`, where
/// `W'` is the transition weight on existing dual edges that are not
/// u-turns. Pairs of different road classes are dropped.
pub fn build_b(
    transitions: &[TransitionMatrix],
    dual: &DualGraph,
    classes: &[RoadClass],
) -> Result<BlockMatrix> {
    let n = dual.num_vertices();
    if classes.len() != n {
        return Err(Error::contract(format!(
            "{} road classes for {} edges",
            classes.len(),
            n
        )));
    }
    let mut blocks = Vec::with_capacity(transitions.len());
    for m in transitions {
        if m.dim() != n {
            return Err(Error::contract("transition matrix does not match the dual graph"));
        }
        let mut best = std::collections::HashMap::new();
        for (e, (u, v)) in dual.edges().enumerate() {
            if dual.is_reverse_edge(e) || classes[u] != classes[v] {
                continue;
            }
            let w = m.entry(e);
            if w == 0.0 {
                continue;
            }
            let key = (u.min(v), u.max(v));
            let slot = best.entry(key).or_insert(0.0f64);
            *slot = slot.max(w);
        }
        let trip = best
            .into_iter()
            .flat_map(|((i, j), w)| [(i, j, w), (j, i, w)]);
        blocks.push(CsrMatrix::from_triplets(n, n, trip));
    }
    Ok(BlockMatrix::from_blocks(blocks))
}

/// `QQᵀ + αL_A + βL_B + γI`, applied without forming `QQᵀ`.
pub struct SystemOperator<'a> {
    pub q: &'a DesignMatrix,
    pub la: Option<&'a CsrMatrix>,
    pub lb: Option<&'a CsrMatrix>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SystemOperator<'_> {
    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let qtx = self.q.qt_mul(x);
        self.q.as_csr_by_entry().mul_vec_into(&qtx, y);
        for (l, w) in [(self.la, self.alpha), (self.lb, self.beta)] {
            if let Some(l) = l {
                if w != 0.0 {
                    axpy(w, &l.mul_vec(x), y);
                }
            }
        }
        axpy(self.gamma, x, y);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = self.q.gram_diagonal();
        for (l, w) in [(self.la, self.alpha), (self.lb, self.beta)] {
            if let Some(l) = l {
                if w != 0.0 {
                    axpy(w, &l.diagonal(), &mut diag);
                }
            }
        }
        diag.iter_mut().for_each(|v| *v += self.gamma);
        diag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgOptions {
    /// Relative residual `‖Md − Qc‖ / ‖Qc‖` to reach.
    pub tol: f64,
    /// Defaults to `10 · |d|`.
    pub max_iters: Option<usize>,
    /// Diagonal (Jacobi) preconditioning.
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-8,
            max_iters: None,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub d: CostVector,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Minimizes the objective by conjugate gradient from a zero start.
#[allow(clippy::too_many_arguments)]
pub fn solve(
    q: &DesignMatrix,
    c: &[f64],
    la: Option<&CsrMatrix>,
    lb: Option<&CsrMatrix>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    opts: CgOptions,
) -> Result<Solution> {
    if !(gamma > 0.0) {
        return Err(Error::contract(format!("gamma must be positive, got {gamma}")));
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::contract("alpha and beta must be non-negative"));
    }
    if c.len() != q.num_trips() {
        return Err(Error::contract(format!(
            "{} costs for {} trips",
            c.len(),
            q.num_trips()
        )));
    }
    let n = q.dim();
    for l in [la, lb].into_iter().flatten() {
        if l.nrows() != n || l.ncols() != n {
            return Err(Error::contract("laplacian dimension does not match the cost vector"));
        }
    }
    let op = SystemOperator {
        q,
        la,
        lb,
        alpha,
        beta,
        gamma,
    };
    let rhs = q.q_mul(c);
    let precond = opts.jacobi.then(|| op.diagonal());
    let max_iters = opts.max_iters.unwrap_or(10 * n.max(1));
    let (x, iterations, relative_residual) =
        conjugate_gradient(|x, y| op.apply(x, y), &rhs, precond.as_deref(), opts.tol, max_iters)?;
    Ok(Solution {
        d: CostVector::from_values(q.layout(), x)?,
        iterations,
        relative_residual,
    })
}

/// Preconditioned conjugate gradient for an SPD operator. Returns the
/// solution, the iteration count and the final relative residual.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    diag: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize, f64)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let precondition = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((zi, ri), di)| *zi = ri / di),
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 0..max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::contract(
                "system operator is not positive definite along a search direction",
            ));
        }
        let step = rz / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            return Ok((x, it + 1, rel));
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let ratio = rz_next / rz;
        rz = rz_next;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + ratio * *pi);
    }
    Err(Error::Convergence {
        what: "conjugate gradient",
        iterations: max_iters,
        residual: rel,
    })
}

/// Values of the objective terms at some `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveTerms {
    pub rss: f64,
    pub prtc: f64,
    pub datc: f64,
    pub l2: f64,
    pub total: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn objective_value(
    d: &[f64],
    q: &DesignMatrix,
    c: &[f64],
    la: Option<&CsrMatrix>,
    lb: Option<&CsrMatrix>,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> ObjectiveTerms {
    let est = q.qt_mul(d);
    let rss = c.iter().zip(&est).map(|(a, b)| (a - b).powi(2)).sum();
    let prtc = la.map_or(0.0, |l| l.quad_form(d));
    let datc = lb.map_or(0.0, |l| l.quad_form(d));
    let l2 = dot(d, d);
    ObjectiveTerms {
        rss,
        prtc,
        datc,
        l2,
        total: rss + alpha * prtc + beta * datc + gamma * l2,
    }
}

/// Entries reachable from a trip-touched entry through nonzero off-diagonal
/// couplings of the given symmetric matrices.
pub fn annotated_entries(q: &DesignMatrix, couplings: &[&CsrMatrix]) -> Vec<bool> {
    let mut seen = q.touched();
    let mut queue: VecDeque<usize> = (0..seen.len()).filter(|&i| seen[i]).collect();
    while let Some(i) = queue.pop_front() {
        for m in couplings {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && v != 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    seen
}

/// Objective variants: which topology terms join the residual and L2 terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Residual only.
    F1,
    /// Plus PageRank similarity.
    F2,
    /// Plus directional adjacency.
    F3,
    /// Plus both.
    F4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::F1, Variant::F2, Variant::F3, Variant::F4];

    pub fn uses_similarity(self) -> bool {
        matches!(self, Variant::F2 | Variant::F4)
    }

    pub fn uses_adjacency(self) -> bool {
        matches!(self, Variant::F3 | Variant::F4)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F1" => Ok(Variant::F1),
            "F2" => Ok(Variant::F2),
            "F3" => Ok(Variant::F3),
            "F4" => Ok(Variant::F4),
            other => Err(format!("unknown variant {other:?} (expected F1..F4)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dual, DayClass, Edge, TagSchedule};
    use crate::pagerank::dual_weights;
    use crate::trips::{trip_cost, LinkRecord, Trip};

    fn two_edge_graph(schedule: TagSchedule) -> RoadGraph {
        let edges = vec![
            Edge {
                id: "ab".into(),
                tail: 0,
                head: 1,
                length: 1.0,
                speed_limit: Some(50.0),
            },
            Edge {
                id: "bc".into(),
                tail: 1,
                head: 2,
                length: 100.0,
                speed_limit: Some(50.0),
            },
        ];
        RoadGraph::new(vec!["a".into(), "b".into(), "c".into()], edges, schedule).unwrap()
    }

    fn trip(records: Vec<LinkRecord>, cost: f64) -> Trip {
        Trip {
            id: "t".into(),
            records,
            cost,
        }
    }

    fn rec(edge: usize, enter: f64, exit: f64) -> LinkRecord {
        LinkRecord::new(edge, DayClass::Weekday, enter, exit).unwrap()
    }

    #[test]
    fn q_examples() {
        let g = two_edge_graph(TagSchedule::peak_offpeak_weekends());
        let set = TripSet::new(&g, vec![trip(vec![rec(1, 600.0, 601.0)], 0.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        assert_eq!(q.column(0).collect::<Vec<_>>(), vec![(1, 100.0)]);

        // straddling record: 10/15 OFFPEAK, 5/15 PEAK
        let set = TripSet::new(&g, vec![trip(vec![rec(1, 410.0, 425.0)], 0.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        let layout = g.layout();
        assert_eq!(q.get(layout.index(1, 0), 0), 100.0 * (10.0 / 15.0));
        assert_eq!(q.get(layout.index(1, 1), 0), 100.0 * (5.0 / 15.0));

        // the same edge twice accumulates
        let looped = trip(vec![rec(1, 600.0, 601.0), rec(1, 602.0, 603.0)], 0.0);
        let set = TripSet::new(&g, vec![looped.clone()]).unwrap();
        let q = build_q(&set, &g).unwrap();
        assert_eq!(q.get(1, 0), 200.0);
        let d = CostVector::from_values(layout, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let direct = trip_cost(&looped, &g, &d).unwrap();
        assert!((q.qt_mul(d.values())[0] - direct).abs() < 1e-12);
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(similarity(0.2, 0.1).unwrap(), 0.5);
        assert_eq!(similarity(0.1, 0.2).unwrap(), 0.5);
        assert!(similarity(0.0, 0.2).is_err());
        assert!(similarity(-1.0, 0.2).is_err());
    }

    fn pr(values: Vec<f64>) -> PageRankVector {
        PageRankVector {
            tag: 0,
            values,
            iterations: 0,
            residual: 0.0,
        }
    }

    #[test]
    fn a_examples() {
        let a = build_a(&[pr(vec![0.25; 4])], SimilarityOptions::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.blocks[0].get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
        let a = build_a(&[pr(vec![0.2, 0.1])], SimilarityOptions::default()).unwrap();
        assert_eq!(a.blocks[0].nnz(), 0);

        // brute force over all pairs
        let values = vec![1.00, 0.96, 0.50];
        let a = build_a(&[pr(values.clone())], SimilarityOptions::default()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i != j && similarity(values[i], values[j]).unwrap() >= 0.95 {
                    similarity(values[i], values[j]).unwrap()
                } else {
                    0.0
                };
                assert_eq!(a.blocks[0].get(i, j), expect);
            }
        }
        assert_eq!(a.blocks[0].get(0, 1), 0.96);
        assert_eq!(a.blocks[0].nnz(), 2);
    }

    #[test]
    fn sweep_links_neighbours_only() {
        let values = vec![1.0, 0.97, 0.95, 0.5];
        let s = similarity_block_sweep(&values, 0.95);
        assert!(s.get(0, 1) > 0.0 && s.get(1, 2) > 0.0);
        assert_eq!(s.get(0, 2), 0.0);
        assert_eq!(s.get(2, 3), 0.0);
        let e = similarity_block_exact(&values, 0.95);
        assert_eq!(e.get(0, 2), 0.95);
    }

    #[test]
    fn b_excludes_uturns_and_class_changes() {
        // three-way junction: AB, BA, BC, CB, BD
        let mk = |id: &str, t, h, sl| Edge {
            id: id.into(),
            tail: t,
            head: h,
            length: 100.0,
            speed_limit: Some(sl),
        };
        let g = RoadGraph::new(
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            vec![
                mk("AB", 0, 1, 50.0),
                mk("BA", 1, 0, 50.0),
                mk("BC", 1, 2, 50.0),
                mk("CB", 2, 1, 50.0),
                mk("BD", 1, 3, 110.0),
            ],
            TagSchedule::single("PEAK"),
        )
        .unwrap();
        let dual = build_dual(&g);
        let mut trips = Vec::new();
        for (next, n) in [(2usize, 30), (4, 10)] {
            for _ in 0..n {
                trips.push(trip(vec![rec(0, 430.0, 431.0), rec(next, 431.0, 432.0)], 1.0));
            }
        }
        let set = TripSet::new(&g, trips).unwrap();
        let m = dual_weights(&dual, &set, 0);
        let b = build_b(&[m], &dual, &road_classes(&g, 90.0)).unwrap();
        let blk = &b.blocks[0];
        assert_eq!(blk.get(0, 1), 0.0);
        assert_eq!(blk.get(0, 2), 31.0 / 43.0);
        assert_eq!(blk.get(2, 0), 31.0 / 43.0);
        // AB urban, BD highway
        assert_eq!(blk.get(0, 4), 0.0);
        assert!(blk.is_symmetric(0.0));
    }

    #[test]
    fn one_by_one_solve() {
        let g = two_edge_graph(TagSchedule::single("ALL"));
        let set = TripSet::new(&g, vec![trip(vec![rec(0, 10.0, 11.0)], 2.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        let sol = solve(&q, &set.costs(), None, None, 0.0, 0.0, 0.01, CgOptions::default()).unwrap();
        assert!((sol.d.get(0, 0) - 2.0 / 1.01).abs() < 1e-9);
        assert_eq!(sol.d.get(1, 0), 0.0);

        let zero = solve(&q, &[0.0], None, None, 0.0, 0.0, 0.01, CgOptions::default()).unwrap();
        assert!(zero.d.values().iter().all(|&x| x == 0.0));
        assert_eq!(zero.iterations, 0);
    }

    #[test]
    fn similarity_coupling_propagates() {
        let g = two_edge_graph(TagSchedule::single("ALL"));
        let set = TripSet::new(&g, vec![trip(vec![rec(0, 10.0, 11.0)], 1.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let la = laplacian(&a).unwrap();
        let opts = CgOptions {
            tol: 1e-12,
            ..CgOptions::default()
        };
        let sol = solve(&q, &set.costs(), Some(&la), None, 1e3, 0.0, 1e-6, opts).unwrap();
        assert!((sol.d.get(0, 0) - 1.0).abs() < 1e-3);
        assert!((sol.d.get(1, 0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn solve_contract_errors() {
        let g = two_edge_graph(TagSchedule::single("ALL"));
        let set = TripSet::new(&g, vec![trip(vec![rec(0, 10.0, 11.0)], 1.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        assert!(matches!(
            solve(&q, &[1.0], None, None, 0.0, 0.0, 0.0, CgOptions::default()),
            Err(Error::Contract(_))
        ));
        assert!(solve(&q, &[1.0, 2.0], None, None, 0.0, 0.0, 1.0, CgOptions::default()).is_err());
    }

    #[test]
    fn jacobi_matches_plain() {
        let g = two_edge_graph(TagSchedule::single("ALL"));
        let set = TripSet::new(
            &g,
            vec![
                trip(vec![rec(0, 10.0, 11.0), rec(1, 11.0, 12.0)], 5.0),
                trip(vec![rec(1, 20.0, 21.0)], 3.0),
            ],
        )
        .unwrap();
        let q = build_q(&set, &g).unwrap();
        let tight = CgOptions {
            tol: 1e-13,
            max_iters: None,
            jacobi: false,
        };
        let a = solve(&q, &set.costs(), None, None, 0.0, 0.0, 1e-3, tight).unwrap();
        let b = solve(&q, &set.costs(), None, None, 0.0, 0.0, 1e-3, CgOptions { jacobi: true, ..tight })
            .unwrap();
        for (x, y) in a.d.values().iter().zip(b.d.values()) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn perfect_fit_has_zero_objective() {
        let g = two_edge_graph(TagSchedule::single("ALL"));
        let set = TripSet::new(&g, vec![trip(vec![rec(1, 10.0, 11.0)], 5.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        let d = [0.0, 0.05];
        let t = objective_value(&d, &q, &set.costs(), None, None, 0.0, 0.0, 0.0);
        assert!(t.total.abs() < 1e-20);
        assert!(t.rss.abs() < 1e-20);
    }

    #[test]
    fn reachability() {
        let g = two_edge_graph(TagSchedule::single("ALL"));
        let set = TripSet::new(&g, vec![trip(vec![rec(0, 10.0, 11.0)], 1.0)]).unwrap();
        let q = build_q(&set, &g).unwrap();
        assert_eq!(annotated_entries(&q, &[]), vec![true, false]);
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 0.5), (1, 0, 0.5)]);
        assert_eq!(annotated_entries(&q, &[&a]), vec![true, true]);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("f3".parse::<Variant>().unwrap(), Variant::F3);
        assert!("F5".parse::<Variant>().is_err());
        assert!(Variant::F4.uses_similarity() && Variant::F4.uses_adjacency());
        assert!(!Variant::F1.uses_similarity() && !Variant::F1.uses_adjacency());
    }
}
