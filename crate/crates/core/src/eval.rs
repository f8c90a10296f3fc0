//! Accuracy and coverage metrics, the F1–F4 comparison, speed-limit
//! baselines, the training-size sweep and cross-validated grid search.

use std::collections::BTreeMap;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::{CostLayout, CostVector, DualGraph, RoadGraph};
use crate::model::{Hyper, Model, StructureOptions};
use crate::objective::Variant;
use crate::trips::{split, subsample, trip_cost, Trip, TripSet};

/// Sum of squared differences between observed and modeled trip costs.
pub fn ssl(test: &TripSet, graph: &RoadGraph, d: &CostVector) -> Result<f64> {
    let mut total = 0.0;
    for t in test {
        total += (t.cost - trip_cost(t, graph, d)?).powi(2);
    }
    Ok(total)
}

/// `|estimated − actual| / actual` for one trip.
pub fn alr(trip: &Trip, graph: &RoadGraph, d: &CostVector) -> Result<f64> {
    if !(trip.cost > 0.0) {
        return Err(Error::contract(format!(
            "absolute loss ratio undefined for trip {} with cost {}",
            trip.id, trip.cost
        )));
    }
    Ok((trip_cost(trip, graph, d)? - trip.cost).abs() / trip.cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlrPoint {
    pub threshold_pct: u32,
    pub fraction: f64,
}

/// Fraction of test trips with ALR at or below each integer percentage
/// from 1 to 100.
pub fn alr_curve(test: &TripSet, graph: &RoadGraph, d: &CostVector) -> Result<Vec<AlrPoint>> {
    let ratios = test
        .iter()
        .map(|t| alr(t, graph, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(alr_curve_from(&ratios))
}

pub fn alr_curve_from(ratios: &[f64]) -> Vec<AlrPoint> {
    let n = ratios.len();
    (1..=100u32)
        .map(|p| {
            let limit = p as f64 / 100.0;
            let hits = ratios.iter().filter(|&&r| r <= limit).count();
            AlrPoint {
                threshold_pct: p,
                fraction: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
            }
        })
        .collect()
}

/// Fraction of edges with at least one annotated tag entry.
pub fn coverage(layout: CostLayout, annotated: &[bool]) -> Result<f64> {
    if annotated.len() != layout.len() {
        return Err(Error::contract(format!(
            "{} annotation flags for {} entries",
            annotated.len(),
            layout.len()
        )));
    }
    if layout.num_edges == 0 {
        return Ok(0.0);
    }
    let covered = (0..layout.num_edges)
        .filter(|&e| (0..layout.num_tags).any(|k| annotated[layout.index(e, k)]))
        .count();
    Ok(covered as f64 / layout.num_edges as f64)
}

/// Travel-time weights in seconds per meter from speed limits: `3.6 / limit`
/// on highways, `λ · 3.6 / limit` on urban edges. Missing limits use
/// `default_kmh`. The same value is used for every tag.
pub fn speed_limit_baseline(
    graph: &RoadGraph,
    lambda: f64,
    default_kmh: f64,
    highway_cutoff_kmh: f64,
) -> Result<CostVector> {
    if !(lambda >= 1.0) {
        return Err(Error::contract(format!("lambda must be >= 1, got {lambda}")));
    }
    if !(default_kmh > 0.0) {
        return Err(Error::contract(format!(
            "default speed must be positive, got {default_kmh}"
        )));
    }
    let mut d = CostVector::zeros(graph.layout());
    for e in 0..graph.num_edges() {
        let limit = graph.edge(e).speed_limit.unwrap_or(default_kmh);
        let factor = if graph.is_highway(e, highway_cutoff_kmh) {
            1.0
        } else {
            lambda
        };
        for k in 0..graph.num_tags() {
            d.set(e, k, factor * 3.6 / limit);
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub ssl: f64,
    /// `ssl / ssl(F1)`.
    pub ratio: f64,
    pub coverage: f64,
    pub cg_iterations: usize,
    pub cg_relative_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineResult {
    pub lambda: f64,
    pub ssl: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub train_trips: usize,
    pub test_trips: usize,
    pub variants: BTreeMap<Variant, VariantResult>,
    /// Curve of the configured variant.
    pub alr_variant: Variant,
    pub alr_curve: Vec<AlrPoint>,
    pub baselines: Vec<BaselineResult>,
}

impl EvalReport {
    pub fn ssl(&self, v: Variant) -> f64 {
        self.variants[&v].ssl
    }

    pub fn coverage(&self, v: Variant) -> f64 {
        self.variants[&v].coverage
    }

    pub fn ratio(&self, v: Variant) -> f64 {
        self.variants[&v].ratio
    }
}

/// Fits all four variants on `train` and scores them on `test`.
pub fn run_comparison(
    train: &TripSet,
    test: &TripSet,
    graph: &RoadGraph,
    dual: &DualGraph,
    config: &RunConfig,
) -> Result<EvalReport> {
    let model = Model::build(graph, dual, train, &StructureOptions::from(config))?;
    let fits = model.fit_all(&Variant::ALL, Hyper::from(config), config.cg())?;
    let mut ssls = BTreeMap::new();
    for f in &fits {
        ssls.insert(f.variant, ssl(test, graph, &f.d)?);
    }
    let base = ssls[&Variant::F1];
    let mut variants = BTreeMap::new();
    for f in &fits {
        let s = ssls[&f.variant];
        variants.insert(
            f.variant,
            VariantResult {
                ssl: s,
                ratio: s / base,
                coverage: coverage(graph.layout(), &f.annotated)?,
                cg_iterations: f.iterations,
                cg_relative_residual: f.relative_residual,
            },
        );
    }
    let chosen = fits
        .iter()
        .find(|f| f.variant == config.variant)
        .expect("all variants fitted");
    let alr_curve = alr_curve(test, graph, &chosen.d)?;
    let baselines = config
        .baseline_lambdas
        .iter()
        .map(|&lambda| {
            let d = speed_limit_baseline(graph, lambda, config.default_speed_kmh, config.highway_cutoff_kmh)?;
            let s = ssl(test, graph, &d)?;
            Ok(BaselineResult {
                lambda,
                ssl: s,
                ratio: ssls[&config.variant] / s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        train_trips: train.len(),
        test_trips: test.len(),
        variants,
        alr_variant: config.variant,
        alr_curve,
        baselines,
    })
}

pub const SWEEP_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub fraction: f64,
    pub train_trips: usize,
    pub ssl: f64,
}

/// Training-size sweep: for each seed, split the trips into a training pool
/// and a test set by `config.train_fraction`, then fit `config.variant` on
/// nested subsamples of the pool at each fraction and score on the test set.
pub fn training_size_sweep(
    trips: &TripSet,
    graph: &RoadGraph,
    dual: &DualGraph,
    config: &RunConfig,
    fractions: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(u64, f64)> = seeds
        .iter()
        .flat_map(|&s| fractions.iter().map(move |&f| (s, f)))
        .collect();
    let opts = StructureOptions::from(config);
    jobs.par_iter()
        .map(|&(seed, fraction)| {
            let (pool, test) = split(trips, config.train_fraction, seed)?;
            let train = subsample(&pool, fraction, seed)?;
            let model = Model::build(graph, dual, &train, &opts)?;
            let fit = model.fit(config.variant, Hyper::from(config), config.cg())?;
            let s = ssl(&test, graph, &fit.d)?;
            info!("sweep seed {seed} fraction {fraction}: {} trips, SSL {s:e}", train.len());
            Ok(SweepRow {
                seed,
                fraction,
                train_trips: train.len(),
                ssl: s,
            })
        })
        .collect()
}

/// Median of the sweep's SSL per fraction, in `fractions` order.
pub fn sweep_medians(rows: &[SweepRow], fractions: &[f64]) -> Vec<f64> {
    fractions
        .iter()
        .map(|&f| {
            let v: Vec<f64> = rows.iter().filter(|r| r.fraction == f).map(|r| r.ssl).collect();
            median(&v)
        })
        .collect()
}

/// Median; the mean of the two middle values for even lengths, NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub hyper: Hyper,
    /// Validation SSL summed over folds.
    pub validation_ssl: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSearch {
    pub variant: Variant,
    pub folds: usize,
    pub points: Vec<GridPoint>,
    pub best: Hyper,
}

/// `folds`-fold cross-validated grid search over `(α, β, γ)` for one variant.
/// The structure is built once per fold; the earliest grid point wins ties.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    trips: &TripSet,
    graph: &RoadGraph,
    dual: &DualGraph,
    config: &RunConfig,
    variant: Variant,
    grid: &[Hyper],
    folds: usize,
    seed: u64,
) -> Result<GridSearch> {
    if folds < 2 || folds > trips.len() {
        return Err(Error::contract(format!(
            "cannot run {folds}-fold validation on {} trips",
            trips.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::contract("empty hyper-parameter grid"));
    }
    let mut order: Vec<usize> = (0..trips.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let opts = StructureOptions::from(config);
    let mut totals = vec![0.0; grid.len()];
    for fold in 0..folds {
        let (mut val, mut train) = (Vec::new(), Vec::new());
        for (p, &i) in order.iter().enumerate() {
            if p % folds == fold {
                val.push(i)
            } else {
                train.push(i)
            }
        }
        val.sort_unstable();
        train.sort_unstable();
        let (val, train) = (trips.select(&val), trips.select(&train));
        let model = Model::build(graph, dual, &train, &opts)?;
        let scores = grid
            .par_iter()
            .map(|&h| {
                let fit = model.fit(variant, h, config.cg())?;
                ssl(&val, graph, &fit.d)
            })
            .collect::<Result<Vec<_>>>()?;
        for (t, s) in totals.iter_mut().zip(scores) {
            *t += s;
        }
    }
    let points: Vec<GridPoint> = grid
        .iter()
        .zip(&totals)
        .map(|(&hyper, &validation_ssl)| GridPoint {
            hyper,
            validation_ssl,
        })
        .collect();
    let best = points
        .iter()
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.validation_ssl <= p.validation_ssl => Some(b),
            _ => Some(p),
        })
        .map(|p| p.hyper)
        .expect("grid is non-empty");
    Ok(GridSearch {
        variant,
        folds,
        points,
        best,
    })
}

/// Cartesian product of the three axes, α outermost.
pub fn hyper_grid(alphas: &[f64], betas: &[f64], gammas: &[f64]) -> Vec<Hyper> {
    let mut out = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            for &gamma in gammas {
                out.push(Hyper { alpha, beta, gamma });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DayClass, Edge, TagSchedule};
    use crate::trips::LinkRecord;

    fn graph() -> RoadGraph {
        let mk = |id: &str, t, h, len, sl| Edge {
            id: id.into(),
            tail: t,
            head: h,
            length: len,
            speed_limit: sl,
        };
        RoadGraph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                mk("ab", 0, 1, 100.0, Some(50.0)),
                mk("bc", 1, 2, 100.0, None),
                mk("cb", 2, 1, 1000.0, Some(110.0)),
            ],
            TagSchedule::peak_offpeak_weekends(),
        )
        .unwrap()
    }

    fn trip(edge: usize, cost: f64) -> Trip {
        Trip {
            id: format!("t{edge}"),
            records: vec![LinkRecord::new(edge, DayClass::Weekday, 600.0, 601.0).unwrap()],
            cost,
        }
    }

    #[test]
    fn ssl_examples() {
        let g = graph();
        let mut d = CostVector::zeros(g.layout());
        d.set(0, 0, 0.07);
        let set = TripSet::new(&g, vec![trip(0, 10.0)]).unwrap();
        assert!((ssl(&set, &g, &d).unwrap() - 9.0).abs() < 1e-12);
        d.set(1, 0, 0.03);
        let set = TripSet::new(&g, vec![trip(0, 8.0), trip(1, 5.0)]).unwrap();
        assert!((ssl(&set, &g, &d).unwrap() - 5.0).abs() < 1e-12);
        let perfect = TripSet::new(&g, vec![trip(0, 7.0), trip(1, 3.0)]).unwrap();
        assert!(ssl(&perfect, &g, &d).unwrap() < 1e-24);
    }

    #[test]
    fn alr_examples() {
        let g = graph();
        let mut d = CostVector::zeros(g.layout());
        d.set(0, 0, 1.3);
        assert!((alr(&trip(0, 100.0), &g, &d).unwrap() - 0.3).abs() < 1e-12);
        d.set(0, 0, 0.5);
        assert!((alr(&trip(0, 100.0), &g, &d).unwrap() - 0.5).abs() < 1e-12);
        d.set(0, 0, 1.0);
        assert_eq!(alr(&trip(0, 100.0), &g, &d).unwrap(), 0.0);
        assert!(alr(&trip(0, 0.0), &g, &d).is_err());
    }

    #[test]
    fn alr_curve_is_a_cdf() {
        let c = alr_curve_from(&[0.0, 0.05, 0.3, 2.0]);
        assert_eq!(c.len(), 100);
        assert_eq!(c[0].fraction, 0.25);
        assert_eq!(c[4].fraction, 0.5);
        assert_eq!(c[29].fraction, 0.75);
        assert_eq!(c[99].fraction, 0.75);
        assert!(c.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        let all = alr_curve_from(&[0.1, 0.99]);
        assert_eq!(all[99].fraction, 1.0);
    }

    #[test]
    fn coverage_counts_edges() {
        let layout = CostLayout::new(40, 2);
        let mut flags = vec![false; 80];
        for e in 0..10 {
            flags[layout.index(e, e % 2)] = true;
        }
        assert_eq!(coverage(layout, &flags).unwrap(), 0.25);
        assert_eq!(coverage(layout, &[true; 80]).unwrap(), 1.0);
        assert!(coverage(layout, &flags[..3]).is_err());
    }

    #[test]
    fn baseline_examples() {
        let g = graph();
        let d1 = speed_limit_baseline(&g, 1.0, 50.0, 90.0).unwrap();
        let d2 = speed_limit_baseline(&g, 2.0, 50.0, 90.0).unwrap();
        for k in 0..3 {
            assert!((d1.get(0, k) * 100.0 - 7.2).abs() < 1e-12);
            assert!((d2.get(0, k) * 100.0 - 14.4).abs() < 1e-12);
            // missing limit falls back to the default
            assert_eq!(d1.get(1, k), d1.get(0, k));
            // highways ignore lambda
            assert_eq!(d1.get(2, k), d2.get(2, k));
            assert!((d1.get(2, k) - 3.6 / 110.0).abs() < 1e-15);
        }
        assert!(speed_limit_baseline(&g, 0.5, 50.0, 90.0).is_err());
        assert!(speed_limit_baseline(&g, 1.0, 0.0, 90.0).is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn grid_order() {
        let g = hyper_grid(&[1.0, 2.0], &[3.0], &[0.1, 0.2]);
        assert_eq!(g.len(), 4);
        assert_eq!((g[1].alpha, g[1].gamma), (1.0, 0.2));
        assert_eq!(g[2].alpha, 2.0);
    }
}
