//! Oracle checks for assembly, gradients and solving, plus the fit
//! invariants as property tests.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbf_lsq::assembly::{assemble, build_design, residual_and_gradient, NormalSystem};
use rbf_lsq::fit::{fit, fit_design, solve_normal};
use rbf_lsq::pointgen::halton_points;
use rbf_lsq::{
    Domain2, FitOptions, KernelKind, KernelSpec, Method, Point2, PointSet, ScatteredData,
    SolverPath,
};

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
    PointSet::external(
        (0..n)
            .map(|_| Point2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect(),
    )
    .unwrap()
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
) -> (ScatteredData, PointSet, KernelSpec) {
    let sites = random_points(rng, n);
    let values = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let centers = random_points(rng, m);
    let kind = KernelKind::ALL[rng.random_range(0..3usize)];
    let kernel = KernelSpec::new(kind, rng.random_range(0.5..3.0)).unwrap();
    (ScatteredData::new(sites, values).unwrap(), centers, kernel)
}

/// Entry-by-entry sums over data sites, one loop per printed entry.
fn brute_force(
    data: &ScatteredData,
    centers: &PointSet,
    kernel: &KernelSpec,
) -> (DMatrix<f64>, DVector<f64>) {
    let m = centers.len();
    let phi = |i: usize, j: usize| {
        kernel
            .eval(data.points().points[i].distance(&centers.points[j]))
            .unwrap()
    };
    let poly = |i: usize, l: usize| {
        let p = data.points().points[i];
        [p.x, p.y, 1.0][l]
    };
    let n = data.len();
    let mut b = DMatrix::zeros(m + 3, m + 3);
    let mut f = DVector::zeros(m + 3);
    for r in 0..m {
        for s in 0..m {
            for i in 0..n {
                b[(r, s)] += phi(i, r) * phi(i, s);
            }
        }
        for l in 0..3 {
            for i in 0..n {
                b[(r, m + l)] += phi(i, r) * poly(i, l);
                b[(m + l, r)] += poly(i, l) * phi(i, r);
            }
        }
        for i in 0..n {
            f[r] += phi(i, r) * data.values()[i];
        }
    }
    for l in 0..3 {
        for q in 0..3 {
            for i in 0..n {
                b[(m + l, m + q)] += poly(i, l) * poly(i, q);
            }
        }
        for i in 0..n {
            f[m + l] += poly(i, l) * data.values()[i];
        }
    }
    (b, f)
}

fn rel_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol * b.amax().max(1e-300)
}

#[test]
fn brute_force_assembly_matches_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(1..=3usize);
        let (data, centers, kernel) = random_instance(&mut rng, n, m);
        let d = build_design(&data, &centers, &kernel).unwrap();
        let (b, f) = brute_force(&data, &centers, &kernel);
        let prop = assemble(&d, Method::Proposed).unwrap();
        assert!(rel_close(prop.b(), &b, 1e-12));
        let fm = DMatrix::from_column_slice(f.len(), 1, f.as_slice());
        let pm = DMatrix::from_column_slice(f.len(), 1, prop.f().as_slice());
        assert!(rel_close(&pm, &fm, 1e-12));

        // the original system differs by ΞᵀΞ in the RBF block only
        let orig = assemble(&d, Method::Original).unwrap();
        let diff = orig.b() - prop.b();
        let xi_gram = d.xi.transpose() * &d.xi;
        for r in 0..m + 3 {
            for s in 0..m + 3 {
                if r < m && s < m {
                    assert!((diff[(r, s)] - xi_gram[(r, s)]).abs() <= 1e-12 * orig.b().amax());
                } else {
                    assert_eq!(diff[(r, s)], 0.0);
                }
            }
        }
        assert_eq!(orig.f(), prop.f());
    }
}

#[test]
fn normal_matrix_is_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let (data, centers, kernel) = random_instance(&mut rng, 12, 4);
        let d = build_design(&data, &centers, &kernel).unwrap();
        for method in [Method::Original, Method::Proposed] {
            let b = assemble(&d, method).unwrap().b().clone();
            let eig = b.symmetric_eigenvalues();
            let scale = eig.amax();
            assert!(eig.iter().all(|&e| e >= -1e-12 * scale), "{eig}");
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.random_range(1..=10usize);
        let m = rng.random_range(1..=3usize);
        let (data, centers, kernel) = random_instance(&mut rng, n, m);
        let d = build_design(&data, &centers, &kernel).unwrap();
        let c = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
        let k = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let rg = residual_and_gradient(&d, &c, &k).unwrap();
        let r2 = |c: &DVector<f64>, k: &DVector<f64>| residual_and_gradient(&d, c, k).unwrap().r2;
        let h = 1e-5;
        let mut fd = DVector::zeros(m + 3);
        for j in 0..m + 3 {
            let (mut cp, mut kp, mut cm, mut km) = (c.clone(), k.clone(), c.clone(), k.clone());
            if j < m {
                cp[j] += h;
                cm[j] -= h;
            } else {
                kp[j - m] += h;
                km[j - m] -= h;
            }
            fd[j] = (r2(&cp, &kp) - r2(&cm, &km)) / (2.0 * h);
        }
        let analytic =
            DVector::from_iterator(m + 3, rg.grad_c.iter().chain(rg.grad_k.iter()).copied());
        let err = (&fd - &analytic).norm();
        assert!(
            err <= 1e-5 * analytic.norm().max(1e-8),
            "{fd} vs {analytic}"
        );
    }
}

#[test]
fn construct_then_solve_random_spd() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let g = DMatrix::from_fn(14, 10, |_, _| rng.random_range(-1.0..1.0));
        let b = g.transpose() * &g;
        let truth = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
        let f = &b * &truth;
        let sys = NormalSystem::from_parts(b, f, 7, Method::Proposed).unwrap();
        let sol = solve_normal(&sys, &FitOptions::default()).unwrap();
        assert!((&sol.lambda - &truth).norm() <= 1e-8 * truth.norm());
        assert_eq!(sol.ridge_used, 0.0);
    }
}

fn linear(p: &Point2) -> f64 {
    2.0 * p.x + 3.0 * p.y + 1.0
}

#[test]
fn linear_data_is_reproduced_by_every_kernel() {
    let domain = Domain2::new(0.0, 10.0, 0.0, 5.0).unwrap();
    let sites = halton_points(50, 1, &domain).unwrap();
    let h: Vec<f64> = sites.iter().map(linear).collect();
    let data = ScatteredData::new(sites, h.clone()).unwrap();
    let centers = halton_points(9, 101, &domain).unwrap();
    for kind in KernelKind::ALL {
        let kernel = KernelSpec::new(kind, 0.3).unwrap();
        let model = fit(
            &data,
            &centers,
            &kernel,
            Method::Proposed,
            &FitOptions::default(),
        )
        .unwrap();
        let hmax = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (p, v) in data.points().iter().zip(&h) {
            assert!((model.evaluate(p) - v).abs() <= 1e-8 * hmax, "{kind}");
        }
        if model.diagnostics.ridge_used == 0.0 {
            assert!(
                model.weights.iter().all(|c| c.abs() < 1e-6),
                "{kind}: {:?}",
                model.weights
            );
            assert!((model.a[0] - 2.0).abs() < 1e-6 && (model.a[1] - 3.0).abs() < 1e-6);
            assert!((model.a0 - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn single_kernel_is_recovered() {
    let domain = Domain2::new(0.0, 4.0, 0.0, 4.0).unwrap();
    let center = Point2::new(1.5, 2.0);
    let kernel = KernelSpec::new(KernelKind::Gauss, 0.7).unwrap();
    let sites = halton_points(60, 1, &domain).unwrap();
    let h = sites
        .iter()
        .map(|p| kernel.eval(p.distance(&center)).unwrap())
        .collect();
    let data = ScatteredData::new(sites, h).unwrap();
    let centers = PointSet::external(vec![center]).unwrap();
    let model = fit(
        &data,
        &centers,
        &kernel,
        Method::Proposed,
        &FitOptions::default(),
    )
    .unwrap();
    assert!((model.weights[0] - 1.0).abs() < 1e-8);
    assert!(model.a.iter().chain([&model.a0]).all(|v| v.abs() < 1e-8));
}

#[test]
fn interpolation_limit() {
    // M = N centers on the data sites: as many RBF weights as equations
    let domain = Domain2::new(0.0, 1.0, 0.0, 1.0).unwrap();
    let sites = halton_points(20, 1, &domain).unwrap();
    let h: Vec<f64> = sites.iter().map(|p| (3.0 * p.x).sin() * p.y).collect();
    let data = ScatteredData::new(sites.clone(), h.clone()).unwrap();
    let kernel = KernelSpec::new(KernelKind::InverseQuadric, 2.0).unwrap();
    let model = fit(
        &data,
        &sites,
        &kernel,
        Method::Proposed,
        &FitOptions::default(),
    )
    .unwrap();
    assert!(model.diagnostics.underdetermined);
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (p, v) in sites.iter().zip(&h) {
        assert!((model.evaluate(p) - v).abs() <= 1e-6 * scale);
    }
}

#[test]
fn model_round_trip_and_residual_recomputation() {
    let domain = Domain2::new(0.0, 1000.0, 0.0, 500.0).unwrap();
    let sites = halton_points(150, 1, &domain).unwrap();
    let field = rbf_lsq::Field::Sinc2d;
    let data = field.sample(&sites).unwrap();
    let centers = halton_points(16, 1, &domain).unwrap();
    let kernel = KernelSpec::new(KernelKind::Gauss, 0.002).unwrap();
    let model = fit(
        &data,
        &centers,
        &kernel,
        Method::Original,
        &FitOptions::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    rbf_lsq::fit::save_model(&model, &path).unwrap();
    let back = rbf_lsq::fit::load_model(&path).unwrap();
    assert_eq!(back, model);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let p = Point2::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..500.0));
        let (a, b) = (model.evaluate(&p), back.evaluate(&p));
        assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
    }
    let r = back.residual_norm(&data).unwrap();
    assert!((r - model.diagnostics.residual_norm).abs() <= 1e-12 * r.max(1e-300));
}

/// A well-conditioned random fitting problem.
fn moderate_problem(seed: u64) -> (ScatteredData, PointSet, KernelSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(30..80usize);
    let sites = random_points(&mut rng, n);
    let h = sites
        .iter()
        .map(|p| (4.0 * p.x).cos() + p.y * p.y + rng.random_range(-0.05..0.05))
        .collect();
    let centers = halton_points(
        rng.random_range(3..12usize),
        rng.random_range(1..50u64),
        &Domain2::UNIT,
    )
    .unwrap();
    let kind = KernelKind::ALL[rng.random_range(0..3usize)];
    let kernel = KernelSpec::new(kind, rng.random_range(1.0..4.0)).unwrap();
    (ScatteredData::new(sites, h).unwrap(), centers, kernel)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stationarity_and_optimality(seed in 0u64..10_000) {
        let (data, centers, kernel) = moderate_problem(seed);
        let d = build_design(&data, &centers, &kernel).unwrap();
        let opts = FitOptions::default();
        let model = fit_design(&d, &centers, &kernel, Method::Proposed, &opts).unwrap();
        let lambda = model.coefficients();
        let m = centers.len();
        let c = lambda.rows(0, m).into_owned();
        let k = lambda.rows(m, 3).into_owned();
        let rg = residual_and_gradient(&d, &c, &k).unwrap();
        let aty = d.stacked().transpose() * &d.h;
        let grad = rg.grad_c.norm_squared() + rg.grad_k.norm_squared();
        prop_assert!(grad.sqrt() <= opts.tolerance * aty.norm());

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let radius = 1e-3 * lambda.norm();
        for _ in 0..50 {
            let dir = DVector::from_fn(m + 3, |_, _| rng.random_range(-1.0..1.0));
            let delta = dir.normalize() * radius * rng.random_range(0.0..1.0);
            let pc = &c + delta.rows(0, m);
            let pk = &k + delta.rows(m, 3);
            let r2 = residual_and_gradient(&d, &pc, &pk).unwrap().r2;
            prop_assert!(r2 >= rg.r2 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn solver_paths_agree(seed in 0u64..10_000) {
        let (data, centers, kernel) = moderate_problem(seed);
        let d = build_design(&data, &centers, &kernel).unwrap();
        let normal = fit_design(&d, &centers, &kernel, Method::Proposed, &FitOptions::default()).unwrap();
        prop_assume!(normal.diagnostics.condition_estimate < 1e10);
        let qr = fit_design(
            &d, &centers, &kernel, Method::Proposed,
            &FitOptions::default().with_solver(SolverPath::StackedQr),
        ).unwrap();
        let scale = data.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for p in data.points().iter() {
            prop_assert!((normal.evaluate(p) - qr.evaluate(p)).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn fits_are_deterministic(seed in 0u64..10_000) {
        let (data, centers, kernel) = moderate_problem(seed);
        for method in [Method::Original, Method::Proposed] {
            let a = fit(&data, &centers, &kernel, method, &FitOptions::default()).unwrap();
            let b = fit(&data, &centers, &kernel, method, &FitOptions::default()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
