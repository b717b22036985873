//! Clark-Ocone representation `F = E F + int E_u[D_u F] dB_u` checked by
//! Monte Carlo over a dyadic ladder for the three catalog functionals.
//!
//! cargo run --example clark_ocone -- [n_paths]

use itwlab::verifier::{clark_ocone_check, ClarkOconeConfig, Functional};

fn main() -> itwlab::Result<()> {
    let n_paths: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4000);
    for functional in [Functional::B, Functional::B2, Functional::Exp] {
        let r = clark_ocone_check(&ClarkOconeConfig {
            functional,
            t1: 1.0,
            n_paths,
            steps: vec![1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0],
            seed: 3,
        })?;
        println!("{}", functional.id());
        for l in &r.levels {
            println!(
                "  step {:.2e}  residual RMS {:.3e}  relative {}",
                l.step,
                l.residual_rms,
                l.relative_rms.map_or("-".into(), |v| format!("{v:.3e}"))
            );
        }
        if let Some(o) = r.order {
            println!("  order {:.3} +- {:.3}", o.slope, o.slope_se);
        }
    }
    Ok(())
}
