use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roadweights::config::RunConfig;
use roadweights::error::Error;
use roadweights::graph::{build_dual, CostVector};
use roadweights::model::{Hyper, Model, StructureOptions};
use roadweights::objective::{solve, CgOptions, Variant};
use roadweights::pagerank::{pagerank, TransitionMatrix};
use roadweights::sparse::norm2;
use roadweights::synth::{generate_synthetic, SyntheticData, SyntheticSpec};
use roadweights::trips::trip_cost;

fn small_data(seed: u64, noise: f64) -> SyntheticData {
    let spec = SyntheticSpec {
        rows: 4,
        cols: 5,
        trip_count: 60,
        noise,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec, seed).unwrap()
}

fn model_of(data: &SyntheticData, cfg: &RunConfig) -> Model {
    let dual = build_dual(&data.graph);
    Model::build(&data.graph, &dual, &data.trips, &StructureOptions::from(cfg)).unwrap()
}

/// `QQᵀ + αL_A + βL_B + γI` and `Qc` as dense nalgebra objects.
fn dense_system(model: &Model, h: Hyper) -> (DMatrix<f64>, DVector<f64>) {
    let n = model.q.dim();
    let m = model.q.num_trips();
    let q = DMatrix::from_fn(n, m, |i, t| model.q.get(i, t));
    let la = DMatrix::from_fn(n, n, |i, j| model.la.get(i, j));
    let lb = DMatrix::from_fn(n, n, |i, j| model.lb.get(i, j));
    let sys = &q * q.transpose() + la * h.alpha + lb * h.beta + DMatrix::identity(n, n) * h.gamma;
    let rhs = &q * DVector::from_column_slice(&model.costs);
    (sys, rhs)
}

#[test]
fn cg_matches_a_dense_solve_for_every_variant() {
    for seed in 0..4 {
        let data = small_data(seed, 0.1);
        let cfg = RunConfig {
            similarity_threshold: 0.6,
            ..RunConfig::default()
        };
        let model = model_of(&data, &cfg);
        let hyper = Hyper {
            alpha: 3.0,
            beta: 50.0,
            gamma: 1e-2,
        };
        for v in Variant::ALL {
            let h = hyper.for_variant(v);
            let (sys, rhs) = dense_system(&model, h);
            let expect = sys.clone().cholesky().expect("system is SPD").solve(&rhs);
            let opts = CgOptions {
                tol: 1e-12,
                ..CgOptions::default()
            };
            let la = (h.alpha != 0.0).then_some(&model.la);
            let lb = (h.beta != 0.0).then_some(&model.lb);
            let sol = solve(&model.q, &model.costs, la, lb, h.alpha, h.beta, h.gamma, opts).unwrap();
            let got = DVector::from_column_slice(sol.d.values());
            let residual = (&sys * &got - &rhs).norm() / rhs.norm();
            assert!(residual <= 1e-11, "seed {seed} {v}: residual {residual:e}");
            // forward error is bounded by condition number times residual
            let eig = sys.clone().symmetric_eigenvalues();
            let kappa = eig.max() / eig.min();
            let err = (got - &expect).norm() / expect.norm();
            assert!(err <= 10.0 * kappa * 1e-12, "seed {seed} {v}: error {err:e}, condition {kappa:e}");
        }
    }
}

#[test]
fn jacobi_preconditioning_reaches_the_same_solution() {
    let data = small_data(7, 0.1);
    let model = model_of(&data, &RunConfig::default());
    let hyper = Hyper::from(&RunConfig::default());
    for v in Variant::ALL {
        let tight = |jacobi| CgOptions {
            tol: 1e-12,
            max_iters: None,
            jacobi,
        };
        let plain = model.fit(v, hyper, tight(false)).unwrap();
        let pre = model.fit(v, hyper, tight(true)).unwrap();
        // weakly determined entries may differ. Each objective is within
        // ‖r‖²/γ of the minimum, where r is the final residual.
        let qc = norm2(&model.q.q_mul(&model.costs));
        let excess = |r: f64| (r * qc).powi(2) / hyper.gamma;
        let bound = excess(plain.relative_residual) + excess(pre.relative_residual);
        let gap = (plain.terms.total - pre.terms.total).abs();
        assert!(gap <= bound + 1e-12 * plain.terms.total, "{v}: objective gap {gap:e}, bound {bound:e}");
        let (a, b) = (model.q.qt_mul(plain.d.values()), model.q.qt_mul(pre.d.values()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-5 * (1.0 + y.abs()), "{v}: trip cost {x} vs {y}");
        }
        assert_eq!(plain.annotated, pre.annotated);
    }
}

#[test]
fn too_few_iterations_is_a_convergence_error() {
    let data = small_data(1, 0.1);
    let model = model_of(&data, &RunConfig::default());
    let opts = CgOptions {
        tol: 1e-14,
        max_iters: Some(1),
        jacobi: false,
    };
    let err = model.fit(Variant::F4, Hyper::from(&RunConfig::default()), opts).unwrap_err();
    assert!(matches!(err, Error::Convergence { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn invalid_weights_are_rejected() {
    let data = small_data(1, 0.1);
    let model = model_of(&data, &RunConfig::default());
    let opts = CgOptions::default();
    assert!(solve(&model.q, &model.costs, None, None, 0.0, 0.0, 0.0, opts).is_err());
    assert!(solve(&model.q, &model.costs, Some(&model.la), None, -1.0, 0.0, 1.0, opts).is_err());
    assert!(solve(&model.q, &model.costs[1..], None, None, 0.0, 0.0, 1.0, opts).is_err());
}

#[test]
fn unannotated_entries_are_zero() {
    let data = small_data(3, 0.1);
    let model = model_of(&data, &RunConfig::default());
    for fit in model.fit_all(&Variant::ALL, Hyper::from(&RunConfig::default()), CgOptions::default()).unwrap() {
        for (v, &a) in fit.d.values().iter().zip(&fit.annotated) {
            if !a {
                assert_eq!(*v, 0.0, "{}", fit.variant);
            }
        }
    }
}

#[test]
fn noise_free_trips_are_reproduced() {
    let spec = SyntheticSpec {
        rows: 5,
        cols: 5,
        trip_count: 2000,
        noise: 0.0,
        ..SyntheticSpec::default()
    };
    let data = generate_synthetic(&spec, 11).unwrap();
    for t in data.trips.iter() {
        let c = trip_cost(t, &data.graph, &data.truth).unwrap();
        assert!((c - t.cost).abs() <= 1e-9 * t.cost, "{}: {c} vs {}", t.id, t.cost);
    }
    let model = model_of(&data, &RunConfig::default());
    let opts = CgOptions {
        tol: 1e-13,
        max_iters: None,
        jacobi: true,
    };
    let hyper = Hyper {
        alpha: 0.0,
        beta: 0.0,
        gamma: 1e-10,
    };
    let fit = model.fit(Variant::F1, hyper, opts).unwrap();
    let fitted = model.q.qt_mul(fit.d.values());
    for (f, c) in fitted.iter().zip(&model.costs) {
        assert!((f - c).abs() <= 1e-6 * c, "{f} vs {c}");
    }
}

#[test]
fn long_trips_stay_within_one_day() {
    let spec = SyntheticSpec {
        rows: 6,
        cols: 6,
        trip_count: 3000,
        records_per_trip: (20, 60),
        ..SyntheticSpec::default()
    };
    for seed in 0..5 {
        let data = generate_synthetic(&spec, seed).unwrap();
        for t in data.trips.iter() {
            assert!(t.records.iter().all(|r| r.enter >= 0.0 && r.exit <= 1440.0));
            let d = CostVector::zeros(data.graph.layout());
            assert_eq!(trip_cost(t, &data.graph, &d).unwrap(), 0.0);
        }
    }
}

#[test]
fn period_three_chain_converges() {
    // cycles 0-1-2-0 and 0-1-3-0 both have length 3
    let m = TransitionMatrix::from_rows(
        0,
        vec![vec![(1, 1.0)], vec![(2, 0.5), (3, 0.5)], vec![(0, 1.0)], vec![(0, 1.0)]],
    )
    .unwrap();
    let pr = pagerank(&m, 1e-12, 100_000).unwrap();
    let expect = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
    for (a, b) in pr.values.iter().zip(expect) {
        assert!((a - b).abs() <= 1e-10, "{:?}", pr.values);
    }
}

#[test]
fn random_periodic_cycles_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let period = rng.random_range(2..=6usize);
        let width = rng.random_range(1..=3usize);
        // layered ring: every state in layer k links to random states in layer k+1
        let n = period * width;
        let rows = (0..n)
            .map(|i| {
                let next = (i / width + 1) % period;
                let mut row: Vec<(usize, f64)> = (0..width)
                    .filter(|_| rng.random_bool(0.7))
                    .map(|j| (next * width + j, 0.0))
                    .collect();
                if row.is_empty() {
                    row.push((next * width, 0.0));
                }
                let p = 1.0 / row.len() as f64;
                row.iter_mut().for_each(|e| e.1 = p);
                row
            })
            .collect();
        let m = TransitionMatrix::from_rows(0, rows).unwrap();
        let pr = pagerank(&m, 1e-11, 100_000).unwrap();
        assert!(pr.residual <= 1e-9, "period {period}: residual {}", pr.residual);
    }
}
