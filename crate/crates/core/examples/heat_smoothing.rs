//! Spectral heat semigroup on a periodic grid: exactness on a Gaussian bump
//! and the `tau^{-gamma/2}` blow-up of Sobolev norms for a narrow bump.
//!
//! cargo run --example heat_smoothing

use std::f64::consts::PI;

use itwlab::space::{log_spaced, smoothing_check, GridField};

fn bump(sigma: f64) -> itwlab::Result<GridField> {
    GridField::from_fn(1, 1024, 2.0 * PI, -PI, |y| (-y[0] * y[0] / (2.0 * sigma * sigma)).exp())
}

fn main() -> itwlab::Result<()> {
    let f = bump(0.3)?;
    for tau in [0.01, 0.1, 0.5] {
        let v = 0.09 + tau;
        let err = f
            .heat_apply(tau)?
            .values()
            .iter()
            .zip(f.coordinates())
            .map(|(a, x)| (a - 0.3 / v.sqrt() * (-x * x / (2.0 * v)).exp()).abs())
            .fold(0.0, f64::max);
        println!("tau {tau:<5} sup |P_tau f - exact| = {err:.2e}");
    }
    println!("W^(1,2) norm {:.4}, mean {:.4}", f.sobolev_norm(1.0, 2.0)?.value, f.mean());

    let narrow = bump(0.01)?;
    let fit = smoothing_check(&narrow, 1.0, 1.0, 2.0, &log_spaced(1e-6, 1.0, 8))?;
    println!("narrow bump: slope of log ||P_tau f||_(W^(1,2)) in log tau = {:.3} +- {:.3}", fit.slope, fit.slope_se);
    for (t, n) in fit.taus.iter().zip(&fit.norms) {
        println!("  tau {t:.1e}  norm {n:.4e}");
    }
    Ok(())
}
