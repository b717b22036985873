//! Moment-exponent scan of the averaging operator for the Peano drift and a
//! truncated white-noise series, plus the roughness stress test.
//!
//! cargo run --release --example regularity_scan -- [n_paths]

use itwlab::averaging::{regularity_moment_scan, roughness_stress_test, ScanConfig, StressConfig, TimeRuleKind};
use itwlab::fbm::LatticeConfig;
use itwlab::field::FieldSpec;
use itwlab::space::SpaceGrid;

fn main() -> itwlab::Result<()> {
    let n_paths: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let lattice = LatticeConfig::new(1, 1.0 / 1024.0, 50.0, 1.0)?;
    let base = ScanConfig {
        hurst: 0.25,
        ell: 4.0,
        gamma: 0.05,
        n_paths,
        lattice,
        space: SpaceGrid::window(-1.0, 1.0, 129),
        gaps: vec![2, 4, 8, 16, 32, 64],
        windows: 8,
        rule: TimeRuleKind::Trapezoid,
        seed: 20,
        bootstrap_reps: 200,
    };
    let peano = FieldSpec::from_id("peano", 1)?;
    let r = regularity_moment_scan(&peano, &base)?;
    println!(
        "peano       slope {:.3} CI [{:.3}, {:.3}] pathwise {:.3} threshold {:.3}",
        r.fit.slope, r.slope_ci.0, r.slope_ci.1, r.pathwise_slope_median, r.threshold
    );
    let noise = FieldSpec::from_id("fourier:K=256:decay=0:seed=1", 1)?;
    for rule in [TimeRuleKind::Subgrid, TimeRuleKind::Trapezoid] {
        let cfg = ScanConfig {
            space: SpaceGrid::periodic(1024, 2.0 * std::f64::consts::PI),
            rule,
            ..base.clone()
        };
        let r = regularity_moment_scan(&noise, &cfg)?;
        println!(
            "white noise slope {:.3} CI [{:.3}, {:.3}] pathwise {:.3} threshold {:.3} ({rule:?})",
            r.fit.slope, r.slope_ci.0, r.slope_ci.1, r.pathwise_slope_median, r.threshold
        );
    }
    let stress = StressConfig {
        hurst: 0.25,
        n_paths: 50,
        lattice,
        cutoffs: vec![1, 2, 4, 8, 16, 32, 64, 128, 256],
        points: 1024,
        rule: TimeRuleKind::Subgrid,
        seed: 21,
        ratio_pair: (32, 256),
    };
    let s = roughness_stress_test(&noise, &stress)?;
    println!("{:>5} {:>12} {:>12} {:>12}", "K", "noise", "trapezoid", "control");
    for row in &s.rows {
        println!("{:>5} {:>12.4} {:>12.4} {:>12.4}", row.cutoff, row.noise, row.noise_trapezoid, row.control);
    }
    println!(
        "ratios K=32->256: noise {:.2}, trapezoid {:.2}, control {:.2}",
        s.noise_ratio, s.noise_trapezoid_ratio, s.control_ratio
    );
    Ok(())
}
