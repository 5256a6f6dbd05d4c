use popfare::line::{
    pass_density, InspectorDensity, LineDemandDensity, LineModel, LineStrategy, PassProfile, QuadratureConfig,
};
use popfare::MonitoringTechnology;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn logit(a: f64) -> f64 {
    (a / (1.0 - a)).ln()
}

fn unit_model(inspectors: &InspectorDensity, tech: &MonitoringTechnology, nodes: usize) -> LineModel {
    let quad = QuadratureConfig::new(nodes, 1e-6).unwrap();
    LineModel::new(&LineDemandDensity::constant(1.0).unwrap(), inspectors, tech, &quad).unwrap()
}

// Unit demand in both directions crosses point a with density 2 a (1 - a).

#[test]
fn unit_demand_probability_has_closed_form() {
    let model = unit_model(&InspectorDensity::uniform(1.0).unwrap(), &MonitoringTechnology::identity(), 2048);
    let q = model.inspection_probability(0.25, 0.75).unwrap();
    assert!((q - 3f64.ln()).abs() < 1e-6, "{q}");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let x: f64 = rng.random_range(0.05..0.95);
        let y = rng.random_range(0.05..0.95);
        let exact = 0.5 * (logit(x.max(y)) - logit(x.min(y)));
        let q = model.inspection_probability(x, y).unwrap();
        assert!((q - exact).abs() < 1e-5, "({x}, {y}): {q} vs {exact}");
    }
}

#[test]
fn linear_inspectors_closed_form() {
    // lambda(a) = c0 + c1 a, so q = int (c0 + c1 a) / (2 a (1 - a)) da.
    let (c0, c1) = (0.4, 1.2);
    let model = unit_model(&InspectorDensity::linear(c0, c1).unwrap(), &MonitoringTechnology::identity(), 4096);
    let antiderivative = |a: f64| 0.5 * c0 * logit(a) - 0.5 * c1 * (1.0 - a).ln();
    for (x, y) in [(0.1, 0.9), (0.3, 0.35), (0.5, 0.8), (0.02, 0.2)] {
        let exact = antiderivative(y) - antiderivative(x);
        let q = model.inspection_probability(x, y).unwrap();
        assert!((q - exact).abs() < 1e-5 * exact.max(1.0), "({x}, {y}): {q} vs {exact}");
    }
}

#[test]
fn separable_pass_density_matches_closed_form() {
    // d(x, y) = (1 + x)(2 - y); F and G are the antiderivatives from 0.
    let d = LineDemandDensity::separable(vec![1.0, 1.0], vec![2.0, -1.0]).unwrap();
    let f_int = |a: f64| a + a * a / 2.0;
    let g_int = |a: f64| 2.0 * a - a * a / 2.0;
    let exact = |a: f64| f_int(a) * (g_int(1.0) - g_int(a)) + g_int(a) * (f_int(1.0) - f_int(a));
    let quad = QuadratureConfig::new(512, 1e-6).unwrap();
    for a in [0.1, 0.25, 0.5, 0.73, 0.9] {
        let got = pass_density(&d, a, &quad).unwrap();
        assert!((got - exact(a)).abs() < 1e-5, "a = {a}: {got} vs {}", exact(a));
    }
    let profile = PassProfile::new(&d, &quad).unwrap();
    for k in [3, 100, 256, 400, 508] {
        let a = profile.midpoint(k);
        assert!((profile.at_cell(k) - exact(a)).abs() < 1e-5, "cell {k}");
    }
}

#[test]
fn revenue_equals_alpha_times_technology_integral() {
    let alpha = 3.5;
    for (lam, tech, expected) in [
        (InspectorDensity::uniform(2.0).unwrap(), MonitoringTechnology::identity(), 2.0),
        (InspectorDensity::uniform(4.0).unwrap(), MonitoringTechnology::power(0.5).unwrap(), 2.0),
        (InspectorDensity::linear(1.0, 2.0).unwrap(), MonitoringTechnology::linear(1.5).unwrap(), 3.0),
    ] {
        let model = unit_model(&lam, &tech, 512);
        let direct = model.revenue(alpha).unwrap();
        let reordered = model.revenue_reordered(alpha);
        assert!((direct - reordered).abs() <= 1e-9 * reordered, "{direct} vs {reordered}");
        assert!((reordered - alpha * expected).abs() <= 1e-9, "{reordered} vs {}", alpha * expected);
    }
}

#[test]
fn revenue_orders_agree_on_grid_demand() {
    let size = 9;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let values = (0..size * size).map(|_| rng.random_range(0.2..3.0)).collect();
    let d = LineDemandDensity::grid(size, values).unwrap();
    let quad = QuadratureConfig::new(256, 1e-6).unwrap();
    let lam = InspectorDensity::from_samples(&[1.0, 3.0, 2.0, 0.5], 1.0).unwrap();
    let model = LineModel::new(&d, &lam, &MonitoringTechnology::power(0.7).unwrap(), &quad).unwrap();
    let direct = model.revenue(2.0).unwrap();
    let reordered = model.revenue_reordered(2.0);
    assert!((direct - reordered).abs() <= 1e-9 * reordered);
}

#[test]
fn probability_converges_under_refinement() {
    let lam = InspectorDensity::linear(0.5, 1.0).unwrap();
    let tech = MonitoringTechnology::identity();
    let errors: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&n| {
            let coarse = unit_model(&lam, &tech, n).inspection_probability(0.2, 0.7).unwrap();
            let fine = unit_model(&lam, &tech, 2 * n).inspection_probability(0.2, 0.7).unwrap();
            (coarse - fine).abs()
        })
        .collect();
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
    assert!(errors[2] < 1e-6);
}

#[test]
fn probability_is_symmetric_and_additive() {
    let lam = InspectorDensity::from_samples(&[2.0, 1.0, 0.5, 1.5], 1.0).unwrap();
    let model = unit_model(&lam, &MonitoringTechnology::power(0.5).unwrap(), 1024);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let mut p: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..0.99)).collect();
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |a, b| model.inspection_probability(a, b).unwrap();
        assert_eq!(q(p[0], p[2]), q(p[2], p[0]));
        assert!((q(p[0], p[2]) - q(p[0], p[1]) - q(p[1], p[2])).abs() < 1e-12);
    }
}

#[test]
fn no_strategy_undercuts_the_full_ticket() {
    let lam = InspectorDensity::linear(2.0, -1.5).unwrap();
    let model = unit_model(&lam, &MonitoringTechnology::identity(), 1024);
    let alpha = 12.0;
    let price = |a: f64, b: f64| model.ic_price(a, b, alpha).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let a = rng.random_range(0.01..0.99);
        let b = rng.random_range(0.01..0.99);
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        let mut cuts: Vec<f64> = (0..rng.random_range(1..6)).map(|_| rng.random_range(x..y)).collect();
        cuts.extend([x, y]);
        cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
        cuts.dedup();
        let segments = cuts.windows(2).filter(|_| rng.random_bool(0.5)).map(|w| (w[0], w[1])).collect();
        let s = LineStrategy::new(x, y, segments).unwrap();
        let full = price(x, y);
        assert!(model.strategy_cost(&s, alpha, &price).unwrap() >= full - 1e-9);
        let none = model.strategy_cost(&LineStrategy::no_ticket(x, y), alpha, &price).unwrap();
        assert!((none - full).abs() < 1e-12);
    }
}

#[test]
fn end_points_outside_the_margin_are_rejected() {
    let model = unit_model(&InspectorDensity::uniform(1.0).unwrap(), &MonitoringTechnology::identity(), 64);
    assert!(model.inspection_probability(0.0, 0.5).is_err());
    assert!(model.inspection_probability(0.5, 1.2).is_err());
    assert!(LineStrategy::new(0.2, 0.6, vec![(0.1, 0.3)]).is_err());
    assert!(LineStrategy::new(0.2, 0.6, vec![(0.3, 0.5), (0.4, 0.55)]).is_err());
}
