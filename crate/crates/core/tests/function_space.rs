use std::f64::consts::PI;

use itwlab::rng::aux_rng;
use itwlab::space::{log_spaced, smoothing_check, sobolev_embedding_probe, GridField};
use itwlab::stats::fit_line;
use itwlab::Error;
use rand::Rng;

fn bump(sigma: f64, m: usize) -> GridField {
    GridField::from_fn(1, m, 2.0 * PI, -PI, |y| (-y[0] * y[0] / (2.0 * sigma * sigma)).exp()).unwrap()
}

#[test]
fn heat_on_a_gaussian_bump_is_exact() {
    let f = bump(0.3, 1024);
    for tau in [1e-3, 0.05, 0.2] {
        let v = 0.09 + tau;
        let heated = f.heat_apply(tau).unwrap();
        for (a, x) in heated.values().iter().zip(f.coordinates()) {
            let exact = 0.3 / v.sqrt() * (-x * x / (2.0 * v)).exp();
            assert!((a - exact).abs() < 1e-6 * 0.3 / v.sqrt());
        }
    }
}

#[test]
fn single_mode_does_not_blow_up() {
    let f = GridField::from_fn(1, 256, 2.0 * PI, 0.0, |y| (3.0 * y[0]).sin()).unwrap();
    let fit = smoothing_check(&f, 1.0, 1.0, 2.0, &log_spaced(1e-4, 1e-2, 6)).unwrap();
    assert!(fit.slope.abs() < 0.01, "{fit:?}");
    assert!(fit.constant.is_finite());
}

#[test]
fn narrow_bump_rate() {
    let fit = smoothing_check(&bump(0.01, 1024), 1.0, 1.0, 2.0, &log_spaced(1e-6, 1.0, 8)).unwrap();
    assert!(fit.slope >= -0.6, "{fit:?}");
    assert!(fit.constant.is_finite() && fit.constant > 0.0);
}

#[test]
fn white_noise_like_field_matches_its_spectral_sum() {
    // random-phase unit modes k = 1..256: ||P_tau f||_{H^m}^2 is proportional
    // to sum_k (1 + k^2)^m e^{-k^2 tau}
    let mut rng = aux_rng(12, 0);
    let phases: Vec<f64> = (0..256).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let f = GridField::from_fn(1, 1024, 2.0 * PI, 0.0, |y| {
        phases.iter().enumerate().map(|(k, p)| ((k + 1) as f64 * y[0] + p).cos()).sum()
    })
    .unwrap();
    let taus = log_spaced(1e-4, 1e-1, 8);
    let m = 1.5;
    let fit = smoothing_check(&f, 2.0, m, 2.0, &taus).unwrap();
    let oracle: Vec<f64> = taus
        .iter()
        .map(|t| {
            (1..=256)
                .map(|k| (1.0 + (k * k) as f64).powf(m) * (-((k * k) as f64) * t).exp())
                .sum::<f64>()
                .sqrt()
                .ln()
        })
        .collect();
    let log_taus: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let expected = fit_line(&log_taus, &oracle).unwrap().slope;
    assert!((fit.slope - expected).abs() < 1e-8, "{} vs {expected}", fit.slope);
    assert!((fit.slope + 1.0).abs() <= 0.15, "{fit:?}");
    assert!(fit.constant.is_finite());
}

#[test]
fn embedding_ratio_is_bounded_over_bumps() {
    let ratios: Vec<f64> = [0.5, 0.1, 0.02]
        .iter()
        .map(|&s| sobolev_embedding_probe(&bump(s, 1024), 2.0, 0.2, 0.1).unwrap())
        .collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 10.0, "{ratios:?}");
    assert!(matches!(
        sobolev_embedding_probe(&bump(0.5, 64), 2.0, 0.1, 0.2),
        Err(Error::EmbeddingExponent { .. })
    ));
}

#[test]
fn smoothing_check_errors() {
    let f = bump(0.3, 64);
    assert!(matches!(smoothing_check(&f, 1.0, 1.0, 2.0, &[0.1, 0.2]), Err(Error::InsufficientScales { .. })));
    let zero = GridField::new(1, 64, 2.0 * PI, 0.0, vec![0.0; 64]).unwrap();
    assert!(matches!(
        smoothing_check(&zero, 1.0, 1.0, 2.0, &log_spaced(1e-3, 1.0, 6)),
        Err(Error::DegenerateFit(_))
    ));
}
