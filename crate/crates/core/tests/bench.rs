use rbf_lsq::bench::{
    compare, error_grid, error_report, error_stats, read_sweep_csv, sweep_alpha, sweep_csv_string,
    AlphaSpec, EvalSet, ExperimentConfig, FieldSource, PointKind, PointSpec, SweepPlan, Truth,
};
use rbf_lsq::fit::fit;
use rbf_lsq::{Domain2, Field, FitOptions, KernelKind, KernelSpec, Method, PointSet};

fn small_sinc() -> ExperimentConfig {
    ExperimentConfig {
        data: PointSpec::new(PointKind::Halton, 300),
        centers: PointSpec::new(PointKind::Halton, 25),
        alphas: AlphaSpec::single(0.003),
        ..ExperimentConfig::sinc_gauss()
    }
}

#[test]
fn same_method_twice_gives_unit_ratio() {
    let cfg = ExperimentConfig {
        methods: vec![Method::Proposed, Method::Proposed],
        ..small_sinc()
    };
    let cmp = compare(&cfg).unwrap();
    assert_eq!(cmp.ratio, 1.0);
    assert_eq!(cmp.reports[0], cmp.reports[1]);
}

#[test]
fn linear_data_flags_infinite_ratio() {
    let domain = Domain2::new(0.0, 4.0, 0.0, 2.0).unwrap();
    let cfg = ExperimentConfig {
        field: FieldSource::Analytic {
            field: Field::Linear {
                ax: 0.0,
                ay: 0.0,
                a0: 0.5,
                domain,
            },
        },
        kernel: KernelKind::InverseQuadric,
        alphas: AlphaSpec::single(0.8),
        eval: Some(EvalSet::Grid { nx: 5, ny: 5 }),
        ..small_sinc()
    };
    let cmp = compare(&cfg).unwrap();
    // a constant is reproduced exactly, so the denominator vanishes
    if cmp.reports[1].mean_abs == 0.0 {
        assert!(cmp.ratio_infinite && cmp.ratio.is_infinite());
    } else {
        assert!(cmp.reports[1].mean_abs < 1e-12);
    }
}

#[test]
fn ratio_is_scale_invariant() {
    let base = small_sinc();
    let scaled = ExperimentConfig {
        field: FieldSource::Analytic {
            field: Field::Scaled {
                factor: -7.5,
                inner: Box::new(Field::Sinc2d),
            },
        },
        ..base.clone()
    };
    let a = compare(&base).unwrap();
    let b = compare(&scaled).unwrap();
    assert!((a.ratio - b.ratio).abs() <= 1e-10 * a.ratio);
    for i in 0..2 {
        let expect = 7.5 * a.reports[i].mean_abs;
        assert!((b.reports[i].mean_abs - expect).abs() <= 1e-10 * expect);
    }
}

#[test]
fn report_consistency() {
    let cmp = compare(&small_sinc()).unwrap();
    for r in cmp.reports {
        assert!(0.0 <= r.mean_abs && r.mean_abs <= r.max_abs);
        assert!(r.rms >= r.mean_abs * (1.0 - 1e-12));
        assert_eq!(r.count, 101 * 51);
    }
    let approx = [0.5, -1.0, 2.0];
    let truth = [0.0, 0.0, 0.0];
    let r = error_stats(&approx, &truth, EvalSet::Training).unwrap();
    let mean_sq = (0.25 + 1.0 + 4.0) / 3.0;
    assert!((r.rms * r.rms - mean_sq).abs() <= 1e-12 * mean_sq);
}

#[test]
fn training_point_errors() {
    let cfg = ExperimentConfig {
        eval: Some(EvalSet::Training),
        ..small_sinc()
    };
    let cmp = compare(&cfg).unwrap();
    assert_eq!(cmp.reports[0].count, 300);
    let data = cfg.load_data().unwrap();
    assert!(error_report(
        &cmp.models[0],
        Truth::Data(&data),
        EvalSet::Grid { nx: 3, ny: 3 }
    )
    .is_err());
}

#[test]
fn error_grid_corners_and_exact_model() {
    let domain = Domain2::new(-1.0, 1.0, 2.0, 3.0).unwrap();
    let field = Field::Constant { value: 2.5, domain };
    let sites = rbf_lsq::pointgen::halton_points(30, 1, &domain).unwrap();
    let data = field.sample(&sites).unwrap();
    let centers = PointSet::external(vec![rbf_lsq::Point2::new(0.0, 2.5)]).unwrap();
    let kernel = KernelSpec::new(KernelKind::ThinPlateSpline, 1.0).unwrap();
    let model = fit(
        &data,
        &centers,
        &kernel,
        Method::Proposed,
        &FitOptions::default(),
    )
    .unwrap();
    let g = error_grid(&model, &field, 2, 2).unwrap();
    let corners: Vec<(f64, f64)> = g.iter().map(|s| (s.x, s.y)).collect();
    assert_eq!(corners, [(-1.0, 2.0), (1.0, 2.0), (-1.0, 3.0), (1.0, 3.0)]);
    assert!(g.iter().all(|s| s.abs_error < 1e-13 && s.truth == 2.5));
}

fn tiny_plan() -> SweepPlan {
    SweepPlan {
        base: ExperimentConfig {
            data: PointSpec::new(PointKind::Halton, 200),
            centers: PointSpec::new(PointKind::Halton, 16).with_seed(3),
            ..ExperimentConfig::sinc_gauss()
        },
        kernels: vec![
            (
                KernelKind::ThinPlateSpline,
                AlphaSpec::List(vec![0.5, 0.5, 2.0]),
            ),
            (
                KernelKind::Gauss,
                AlphaSpec::LogRange {
                    min: 1e-3,
                    max: 4e-3,
                    count: 3,
                },
            ),
        ],
        distributions: vec![PointKind::Epsilon, PointKind::Grid],
    }
}

#[test]
fn sweep_order_duplicates_and_round_trip() {
    let rows = tiny_plan().run().unwrap();
    assert_eq!(rows.len(), 12);
    let keys: Vec<(KernelKind, PointKind)> = rows
        .iter()
        .map(|r| (r.kernel, r.center_distribution))
        .collect();
    assert_eq!(keys[0], (KernelKind::ThinPlateSpline, PointKind::Epsilon));
    assert_eq!(keys[3], (KernelKind::ThinPlateSpline, PointKind::Grid));
    assert_eq!(keys[6], (KernelKind::Gauss, PointKind::Epsilon));
    assert_eq!(rows[0].ratio, rows[1].ratio);
    assert!(rows.iter().all(|r| r.center_seed == 3 && r.error.is_none()));

    let text = sweep_csv_string(&rows);
    let back = read_sweep_csv(&text).unwrap();
    assert_eq!(back, rows);
    assert_eq!(sweep_csv_string(&back), text);
}

#[test]
fn sweep_is_deterministic() {
    let a = sweep_csv_string(&tiny_plan().run().unwrap());
    let b = sweep_csv_string(&tiny_plan().run().unwrap());
    assert_eq!(a, b);
}

#[test]
fn failed_fits_become_error_rows() {
    let cfg = ExperimentConfig {
        alphas: AlphaSpec::List(vec![0.003, 0.004]),
        fit: FitOptions {
            tolerance: 1e-300,
            ..FitOptions::default()
        },
        ..small_sinc()
    };
    let rows = sweep_alpha(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.error.is_some() && r.ratio.is_nan()));
    let back = read_sweep_csv(&sweep_csv_string(&rows)).unwrap();
    assert_eq!(back[0].error, rows[0].error);
}

#[test]
fn too_few_data_points_rejected() {
    let cfg = ExperimentConfig {
        data: PointSpec::new(PointKind::Halton, 20),
        ..small_sinc()
    };
    assert!(matches!(compare(&cfg), Err(rbf_lsq::Error::Contract(_))));
}
