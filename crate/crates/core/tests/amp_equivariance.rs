use amplab_core::amp::{amp_run_rect, amp_run_sym, AmpConfig, CoefficientMode, NoClock};
use amplab_core::diagnostics::{default_panel, rows_from_sym, w2_gaussian_1d, EmpiricalRows};
use amplab_core::ensembles::{sample_rectangular, sample_symmetric, RectEnsembleSpec, SymEnsembleSpec};
use amplab_core::linalg::Mat;
use amplab_core::nonlin::Nonlin;
use amplab_core::operator::MatrixOperator;
use amplab_core::rng::{fill_normal, permutation, seeded};
use amplab_core::stateevo::DerivativeMode;
use proptest::prelude::*;

fn empirical() -> CoefficientMode {
    CoefficientMode::Empirical {
        derivative: DerivativeMode::ClosedForm,
    }
}

fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    fill_normal(&mut seeded(seed, 9), &mut v);
    v
}

fn permuted(x: &[f64], p: &[usize]) -> Vec<f64> {
    p.iter().map(|&i| x[i]).collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_amp_commutes_with_permutations(seed in any::<u64>(), n in 8usize..48) {
        let w = sample_symmetric(&SymEnsembleSpec::Goe, n, seed).unwrap().op.materialize_dense(usize::MAX).unwrap();
        let p = permutation(&mut seeded(seed, 1), n);
        let wp = Mat::from_fn(n, n, |i, j| w[(p[i], p[j])]);
        let u1 = gaussian(seed, n);
        let f = gaussian(seed ^ 7, n);
        let run = |op: &MatrixOperator, u1: Vec<f64>, f: Vec<f64>| {
            let cfg = AmpConfig {
                op,
                u1,
                side: vec![f],
                side_v: vec![],
                u: vec![Nonlin::TanhShift { side_weight: 0.5 }; 4],
                v: vec![],
                coefficients: empirical(),
                horizon: 4,
            };
            amp_run_sym(&cfg, &NoClock).unwrap()
        };
        let a = run(&MatrixOperator::dense(w), u1.clone(), f.clone());
        let b = run(&MatrixOperator::dense(wp), permuted(&u1, &p), permuted(&f, &p));
        for t in 0..4 {
            prop_assert!(close(&b.z[t], &permuted(&a.z[t], &p), 1e-10));
        }
        // Empirical coefficients are permutation-invariant averages.
        prop_assert!(a.b.max_abs_diff(&b.b) <= 1e-12);
    }

    #[test]
    fn rectangular_amp_commutes_with_permutations(seed in any::<u64>(), m in 6usize..30, n in 6usize..30) {
        let w = sample_rectangular(&RectEnsembleSpec::GaussianWhiteNoise, m, n, seed).unwrap().op.materialize_dense(usize::MAX).unwrap();
        let p = permutation(&mut seeded(seed, 1), m);
        let q = permutation(&mut seeded(seed, 2), n);
        let wp = Mat::from_fn(m, n, |i, j| w[(p[i], q[j])]);
        let u1 = gaussian(seed, m);
        let run = |op: &MatrixOperator, u1: Vec<f64>| {
            let cfg = AmpConfig {
                op,
                u1,
                side: vec![],
                side_v: vec![],
                u: vec![Nonlin::Tanh; 3],
                v: vec![Nonlin::Tanh; 3],
                coefficients: empirical(),
                horizon: 3,
            };
            amp_run_rect(&cfg, &NoClock).unwrap()
        };
        let a = run(&MatrixOperator::dense(w), u1.clone());
        let b = run(&MatrixOperator::dense(wp), permuted(&u1, &p));
        for t in 0..3 {
            prop_assert!(close(&b.z[t], &permuted(&a.z[t], &q), 1e-10));
            prop_assert!(close(&b.y[t], &permuted(&a.y[t], &p), 1e-10));
        }
    }

    #[test]
    fn w2_is_scale_equivariant(seed in any::<u64>(), c in 0.1f64..10.0, var in 0.2f64..4.0) {
        let x = gaussian(seed, 257);
        let base = w2_gaussian_1d(&x, var).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let s = w2_gaussian_1d(&scaled, c * c * var).unwrap();
        prop_assert!((s - c * base).abs() <= 1e-9 * (1.0 + s));
    }

    #[test]
    fn row_permutation_leaves_panels_unchanged(seed in any::<u64>()) {
        let n = 64;
        let op = sample_symmetric(&SymEnsembleSpec::Goe, n, seed).unwrap().op;
        let cfg = AmpConfig {
            op: &op,
            u1: gaussian(seed, n),
            side: vec![],
            side_v: vec![],
            u: vec![Nonlin::Tanh; 3],
            v: vec![],
            coefficients: empirical(),
            horizon: 3,
        };
        let tr = amp_run_sym(&cfg, &NoClock).unwrap();
        let rows = rows_from_sym(&tr, &[]).unwrap();
        let p = permutation(&mut seeded(seed, 3), n);
        let shuffled = rows.permute_rows(&p);
        let panel = default_panel(rows.ncols());
        let groups = |r: &EmpiricalRows| vec![("a".to_string(), vec![r.clone(), r.clone()]), ("b".to_string(), vec![r.clone(), r.clone()])];
        let x = amplab_core::diagnostics::cross_ensemble_report(&groups(&rows), &panel).unwrap();
        let y = amplab_core::diagnostics::cross_ensemble_report(&groups(&shuffled), &panel).unwrap();
        // Sorted summation makes the averages exactly invariant.
        prop_assert_eq!(x.groups, y.groups);
    }
}
