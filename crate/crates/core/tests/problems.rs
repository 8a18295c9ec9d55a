use fracrbf::kernels::RadialKernel;
use fracrbf::nodes::chebyshev_nodes;
use fracrbf::params::{FractionalParams, MarketCoefficients};
use fracrbf::problems::{example1, example2, manufactured_defect};
use fracrbf::solver::{analytic_error, run, SolverOptions};

fn grid(k: usize) -> f64 {
    (k as f64 + 0.5) / 20.0
}

#[test]
fn example1_source_matches_exact_solution() {
    for market in [
        MarketCoefficients::default(),
        MarketCoefficients::new(0.6, 0.11),
    ] {
        let p = example1(market);
        let mut worst = 0.0f64;
        for i in 0..20 {
            for k in 0..20 {
                let d = manufactured_defect(&p, market, &[grid(i)], k as f64 / 19.0).unwrap();
                worst = worst.max(d.abs());
            }
        }
        assert!(worst <= 1e-8, "defect {worst:e}");
    }
}

#[test]
fn example2_source_matches_exact_solution() {
    for market in [
        MarketCoefficients::default(),
        MarketCoefficients::new(0.6, 0.11),
    ] {
        let p = example2(market);
        let mut worst = 0.0f64;
        for i in 0..20 {
            for j in 0..20 {
                for t in [0.0, 0.35, 1.0] {
                    let d = manufactured_defect(&p, market, &[grid(i), grid(j)], t).unwrap();
                    worst = worst.max(d.abs());
                }
            }
        }
        assert!(worst <= 1e-6, "defect {worst:e}");
    }
}

#[test]
fn defect_detects_a_wrong_source() {
    let market = MarketCoefficients::default();
    let mut p = example1(market);
    let good = p.source.clone();
    p.source = std::sync::Arc::new(move |x, t| good(x, t) * (1.0 + 1e-4));
    let d = manufactured_defect(&p, market, &[0.5], 0.5).unwrap();
    assert!(d.abs() > 1e-6);
}

#[test]
fn defect_needs_exact_solution_and_nonzero_radius() {
    let market = MarketCoefficients::default();
    assert!(manufactured_defect(&example2(market), market, &[0.0, 0.0], 0.0).is_none());
    let mut p = example1(market);
    p.analytic = None;
    assert!(manufactured_defect(&p, market, &[0.5], 0.0).is_none());
}

#[test]
fn example2_edges_are_restrictions_of_exact_solution() {
    let p = example2(MarketCoefficients::default());
    let exact = p.analytic.clone().unwrap();
    for k in 0..100 {
        let s = k as f64 / 99.0;
        for t in [0.0, 0.4, 1.0] {
            for x in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
                let (b, e) = (p.boundary(&x, t), exact(&x, t));
                assert!((b - e).abs() <= 1e-12, "{x:?} t={t}: {b} vs {e}");
            }
        }
    }
}

#[test]
fn example2_corners_agree_between_edges() {
    let p = example2(MarketCoefficients::default());
    let (b, t) = (p.boundary.clone(), 0.7);
    let edge_x0 = |y: f64| b(&[0.0, y], t);
    let edge_x1 = |y: f64| b(&[1.0, y], t);
    // The shared corner is reached through each edge formula in turn.
    let corners = [
        (edge_x0(0.0), b(&[1e-300, 0.0], t)),
        (edge_x0(1.0), b(&[1e-300, 1.0], t)),
        (edge_x1(0.0), b(&[1.0 - 1e-16, 0.0], t)),
        (edge_x1(1.0), b(&[1.0 - 1e-16, 1.0], t)),
    ];
    for (a, c) in corners {
        assert!((a - c).abs() <= 1e-12, "{a} vs {c}");
    }
}

#[test]
fn initial_data_is_compatible_with_boundary() {
    let market = MarketCoefficients::default();
    let p1 = example1(market);
    for x in [[0.0], [1.0]] {
        assert!((p1.initial(&x) - p1.boundary(&x, 0.0)).abs() <= 1e-12);
    }
    let p2 = example2(market);
    for k in 0..=20 {
        let s = k as f64 / 20.0;
        for x in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
            assert!((p2.initial(&x) - p2.boundary(&x, 0.0)).abs() <= 1e-12);
        }
    }
}

#[test]
fn example1_error_falls_with_time_step() {
    let market = MarketCoefficients::default();
    let problem = example1(market);
    let nodes = chebyshev_nodes(36, 0.0, 1.0).unwrap();
    let exact = problem.analytic.clone().unwrap();
    let final_error = |steps: usize| {
        let params = FractionalParams::new(1.0, 1.0, market, 1.0 / steps as f64, 0.0).unwrap();
        let h = run(
            &problem,
            &nodes,
            &RadialKernel::default(),
            &params,
            steps,
            &SolverOptions::default(),
        )
        .unwrap();
        analytic_error(&h, |x, t| exact(x, t)).last().unwrap().max
    };
    let errors: Vec<f64> = [10, 20, 40].into_iter().map(final_error).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    // Roughly first order: halving dt about halves the error.
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((0.7..1.3).contains(&order), "{errors:?}");
    }
}
