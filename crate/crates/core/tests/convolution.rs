//! The convolved simulator against a quadrature of exact fixed-h curves.

use ranktraffic_core::hit_simulator::{convolved_traffic, exact_traffic};
use ranktraffic_core::{HitSetDistribution, SimulationConfig, TrafficCurve};

#[test]
fn convolution_matches_quadrature_over_exact_curves() {
    let (n, alpha) = (1000, 1.63);
    let dist = HitSetDistribution::for_index(1.1, n).unwrap();

    // Trapezoid rule in ln h on 200 log-spaced points; the weights are
    // renormalized so the discretized density integrates to one.
    let points = 200;
    let (a, b) = (dist.h_min().ln(), dist.h_max().ln());
    let step = (b - a) / (points - 1) as f64;
    let mut total = vec![0.0; n];
    let mut weight_sum = 0.0;
    for i in 0..points {
        let h = (a + i as f64 * step).exp();
        let w = dist.density(h) * h * if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
        weight_sum += w;
        for (acc, t) in total.iter_mut().zip(exact_traffic(n, h, alpha).unwrap()) {
            *acc += w * t;
        }
    }
    total.iter_mut().for_each(|v| *v /= weight_sum);

    let cfg = SimulationConfig::new(n, alpha, 1_000_000, 23);
    let mc = convolved_traffic(&cfg, &dist).unwrap().binned(10).unwrap();
    let mut reference = TrafficCurve::exact(n, 0.5, alpha).unwrap();
    reference.t = total;
    let quad = reference.binned(10).unwrap();
    assert_eq!(mc.len(), quad.len());
    for (m, q) in mc.bins.iter().zip(&quad.bins) {
        let rel = (m.y_mean / q.y_mean - 1.0).abs();
        // 3%, unless the bin is too sparse for that: the last one holds the
        // single rank N and carries about 4% Monte Carlo error.
        let tol = 0.03f64.max(3.0 * m.y_stderr / m.y_mean);
        assert!(rel < tol, "bin at {}: {} vs {} ({rel:.4} > {tol:.4})", m.x, m.y_mean, q.y_mean);
    }
}
