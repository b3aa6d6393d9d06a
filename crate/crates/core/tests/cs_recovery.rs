use amplab_core::amp::{amp_run_cs, dt_curve, NoClock, ThresholdSchedule};
use amplab_core::ensembles::{sample_rectangular, RectEnsembleSpec};
use amplab_core::moments::ScalarLaw;
use amplab_core::rng::seeded;

#[test]
fn gaussian_sensing_recovers_below_the_curve() {
    let (n, delta, rho) = (4096, 0.64, 0.25);
    let m = (delta * n as f64).round() as usize;
    let (rho_dt, alpha) = dt_curve(delta).unwrap();
    assert!(rho < rho_dt);
    let law = ScalarLaw::BernoulliGaussian { p: rho * delta };
    let trials = 20;
    let successes = (0..trials)
        .filter(|&t| {
            let op = sample_rectangular(&RectEnsembleSpec::GaussianWhiteNoise, m, n, 500 + t)
                .unwrap()
                .op
                .scaled((n as f64 / m as f64).sqrt());
            let mut rng = seeded(900 + t, 1);
            let x: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
            let y = op.apply(&x, false).unwrap();
            let tr = amp_run_cs(&op, &y, &ThresholdSchedule::Adaptive { alpha }, 60, Some(&x), &NoClock).unwrap();
            tr.final_relative_error().unwrap() <= 1e-3
        })
        .count();
    assert!(successes as f64 >= 0.9 * trials as f64, "{successes} of {trials}");
}
