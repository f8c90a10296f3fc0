//! Training pipeline: from a training trip set to the assembled objective
//! structure, then one fit per objective variant.
//!
//! The structure (design matrix, transition matrices, PageRank, similarity
//! and adjacency Laplacians) depends only on the training trips, so it is
//! built once and shared by every variant and hyper-parameter setting.

use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::graph::{CostLayout, CostVector, DualGraph, RoadGraph};
use crate::objective::{
    annotated_entries, build_a, build_b, build_q, objective_value, road_classes, solve, BlockMatrix,
    CgOptions, DesignMatrix, ObjectiveTerms, SimilarityOptions, Variant,
};
use crate::pagerank::{dual_weights, pagerank, PageRankVector, TransitionMatrix};
use crate::sparse::CsrMatrix;
use crate::trips::{partition_by_tag, TripSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureOptions {
    pub similarity: SimilarityOptions,
    pub highway_cutoff_kmh: f64,
    pub pr_tol: f64,
    pub pr_max_iters: usize,
}

impl From<&RunConfig> for StructureOptions {
    fn from(c: &RunConfig) -> Self {
        StructureOptions {
            similarity: c.similarity(),
            highway_cutoff_kmh: c.highway_cutoff_kmh,
            pr_tol: c.pr_tol,
            pr_max_iters: c.pr_max_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyper {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl From<&RunConfig> for Hyper {
    fn from(c: &RunConfig) -> Self {
        Hyper {
            alpha: c.alpha,
            beta: c.beta,
            gamma: c.gamma,
        }
    }
}

impl Hyper {
    /// The weights actually used by `variant`: the unused terms are zeroed.
    pub fn for_variant(self, variant: Variant) -> Hyper {
        Hyper {
            alpha: if variant.uses_similarity() { self.alpha } else { 0.0 },
            beta: if variant.uses_adjacency() { self.beta } else { 0.0 },
            gamma: self.gamma,
        }
    }
}

/// Everything the objective needs that is fixed by the training trips.
#[derive(Debug, Clone)]
pub struct Model {
    pub q: DesignMatrix,
    pub costs: Vec<f64>,
    pub transitions: Vec<TransitionMatrix>,
    pub pageranks: Vec<PageRankVector>,
    pub a: BlockMatrix,
    pub b: BlockMatrix,
    pub la: CsrMatrix,
    pub lb: CsrMatrix,
}

/// A fitted cost vector for one variant.
#[derive(Debug, Clone)]
pub struct Fit {
    pub variant: Variant,
    pub hyper: Hyper,
    /// Unannotated entries are exactly zero.
    pub d: CostVector,
    pub annotated: Vec<bool>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub terms: ObjectiveTerms,
}

impl Model {
    pub fn build(
        graph: &RoadGraph,
        dual: &DualGraph,
        train: &TripSet,
        opts: &StructureOptions,
    ) -> Result<Model> {
        let q = build_q(train, graph)?;
        let parts = partition_by_tag(train, graph.schedule());
        let transitions: Vec<TransitionMatrix> = parts
            .iter()
            .enumerate()
            .map(|(k, part)| dual_weights(dual, part, k))
            .collect();
        let pageranks = transitions
            .iter()
            .map(|m| pagerank(m, opts.pr_tol, opts.pr_max_iters))
            .collect::<Result<Vec<_>>>()?;
        for pr in &pageranks {
            debug!(
                "tag {}: PageRank converged in {} iterations (residual {:e})",
                graph.schedule().tag_name(pr.tag),
                pr.iterations,
                pr.residual
            );
        }
        let a = build_a(&pageranks, opts.similarity)?;
        let b = build_b(&transitions, dual, &road_classes(graph, opts.highway_cutoff_kmh))?;
        let la = a.laplacian()?;
        let lb = b.laplacian()?;
        info!(
            "model: {} trips, {} unknowns, {} similarity links, {} adjacency links",
            train.len(),
            q.dim(),
            a.assembled.nnz() / 2,
            b.assembled.nnz() / 2
        );
        Ok(Model {
            q,
            costs: train.costs(),
            transitions,
            pageranks,
            a,
            b,
            la,
            lb,
        })
    }

    pub fn layout(&self) -> CostLayout {
        self.q.layout()
    }

    /// Entries that receive a weight under `variant`.
    pub fn annotated(&self, variant: Variant) -> Vec<bool> {
        let mut couplings = Vec::new();
        if variant.uses_similarity() {
            couplings.push(&self.a.assembled);
        }
        if variant.uses_adjacency() {
            couplings.push(&self.b.assembled);
        }
        annotated_entries(&self.q, &couplings)
    }

    pub fn fit(&self, variant: Variant, hyper: Hyper, cg: CgOptions) -> Result<Fit> {
        let h = hyper.for_variant(variant);
        let la = (h.alpha != 0.0).then_some(&self.la);
        let lb = (h.beta != 0.0).then_some(&self.lb);
        let sol = solve(&self.q, &self.costs, la, lb, h.alpha, h.beta, h.gamma, cg)?;
        let annotated = self.annotated(variant);
        let mut d = sol.d;
        for (v, &a) in d.values_mut().iter_mut().zip(&annotated) {
            if !a {
                *v = 0.0;
            }
        }
        let terms = objective_value(d.values(), &self.q, &self.costs, la, lb, h.alpha, h.beta, h.gamma);
        info!(
            "{variant}: {} CG iterations, relative residual {:e}, objective {:e}",
            sol.iterations, sol.relative_residual, terms.total
        );
        Ok(Fit {
            variant,
            hyper: h,
            d,
            annotated,
            iterations: sol.iterations,
            relative_residual: sol.relative_residual,
            terms,
        })
    }

    /// Fits several variants concurrently; results follow the input order.
    pub fn fit_all(&self, variants: &[Variant], hyper: Hyper, cg: CgOptions) -> Result<Vec<Fit>> {
        variants.par_iter().map(|&v| self.fit(v, hyper, cg)).collect()
    }
}
