//! Averaging operator `A_u(x) = int_0^u b(x + W_s) ds` for `b = cos(k y)`:
//! Monte Carlo mean of `A_1(0)` against the Gaussian characteristic function.
//!
//! cargo run --example averaging_operator -- [n_paths]

use itwlab::averaging::{compute_averaged, TimeRule};
use itwlab::fbm::{sample_lattice, variance_constant, FbmGenerator, LatticeConfig};
use itwlab::field::FieldSpec;
use itwlab::space::SpaceGrid;
use itwlab::stats::RunningStats;

fn main() -> itwlab::Result<()> {
    let n_paths: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    let (hurst, k) = (0.3, 2.0);
    let cfg = LatticeConfig::new(1, 1.0 / 512.0, 50.0, 1.0)?;
    let generator = FbmGenerator::full_grid(&cfg, hurst)?;
    let b = FieldSpec::from_id("cos:freq=2:omega=0", 1)?;
    let grid = SpaceGrid::periodic(64, 2.0 * std::f64::consts::PI);
    let mut at_zero = RunningStats::default();
    for p in 0..n_paths {
        let path = generator.generate(&sample_lattice(&cfg, 9, p)?)?;
        let a = compute_averaged(&b, &path, &grid, 1, TimeRule::Trapezoid)?;
        at_zero.push(a.eval(a.n_times() - 1, 0.0)?);
    }
    // E cos(k W_s) = exp(-k^2 c_H s^{2H} / 2), integrated by the midpoint rule
    let c_h = variance_constant(hurst);
    let m = 100_000;
    let oracle: f64 = (0..m)
        .map(|i| {
            let s = (i as f64 + 0.5) / m as f64;
            (-0.5 * k * k * c_h * s.powf(2.0 * hurst)).exp()
        })
        .sum::<f64>()
        / m as f64;
    let se = (at_zero.variance() / n_paths as f64).sqrt();
    println!("E A_1(0) = {:.4} +- {se:.4}, oracle {oracle:.4} ({n_paths} paths)", at_zero.mean);
    Ok(())
}
