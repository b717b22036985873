//! Young-ODE solution mapped back to `X = Y + W` against an Euler scheme
//! for `dX = b(X) dt + dW`, on one fBm path.
//!
//! cargo run --example euler_crosscheck -- [drift] [hurst]

use itwlab::fbm::{sample_lattice, FbmGenerator, LatticeConfig};
use itwlab::field::FieldSpec;
use itwlab::young::euler_crosscheck;

fn main() -> itwlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id = args.first().map_or("poly:c=0,-1", |s| s.as_str());
    let hurst: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.7);
    let b = FieldSpec::from_id(id, 1)?;
    for k in [8, 10, 12] {
        let cfg = LatticeConfig::new(1, 1.0 / f64::from(1u32 << k), 50.0, 1.0)?;
        let path = FbmGenerator::full_grid(&cfg, hurst)?.generate(&sample_lattice(&cfg, 5, 0)?)?;
        let c = euler_crosscheck(&b, &path, 1.0)?;
        let (t, young, euler) = *c.rows.last().unwrap();
        println!("step 2^-{k}: sup |Young - Euler| = {:.3e}, X({t}) = {young:.6} vs {euler:.6}", c.sup_difference);
    }
    Ok(())
}
