//! Sample fBm paths from one Brownian lattice and check the variance law
//! and the split `W = W1 + W2` at a fixed conditioning time.
//!
//! cargo run --example simulate_fbm -- [hurst] [n_paths]

use itwlab::fbm::{sample_lattice, truncation_variance, variance_constant, FbmGenerator, LatticeConfig};
use itwlab::stats::RunningStats;

fn main() -> itwlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let hurst: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let n_paths: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cfg = LatticeConfig::new(1, 1.0 / 1024.0, 50.0, 1.0)?;
    let generator = FbmGenerator::full_grid(&cfg, hurst)?;

    let mut end = RunningStats::default();
    let mut split_error = 0.0f64;
    for p in 0..n_paths {
        let path = generator.generate(&sample_lattice(&cfg, 7, p)?)?;
        let w = path.value_at(1.0)?[0];
        end.push(w * w);
        // conditioning at t = 0.5, evaluation at 1
        let (w1, w2) = (path.w1(0.5, 1.0)?[0], path.w2(0.5, 1.0)?[0]);
        split_error = split_error.max((w1 + w2 - w).abs());
    }
    let c_h = variance_constant(hurst);
    println!("H = {hurst}, {n_paths} paths, step 2^-10, left 50");
    println!("E[W(1)^2]   {:.4} +- {:.4}", end.mean, (end.variance() / n_paths as f64).sqrt());
    println!("c_H         {c_h:.4}");
    println!("truncated   {:.4}", c_h - truncation_variance(hurst, 50.0, 1.0));
    println!("max |W1(0.5,1) + W2(0.5,1) - W(1)| = {split_error:.2e}");
    Ok(())
}
