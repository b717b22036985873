//! Run a TOML experiment config through the library, as `itwlab run` does.
//!
//! cargo run --example run_config -- configs/itw_const.toml

use itwlab::experiment::{run_experiment, ExperimentConfig};

fn main() -> itwlab::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/itw_const.toml".into());
    let cfg = ExperimentConfig::from_path(path.as_ref())?;
    println!("{} ({}), regime {:?}", cfg.name.as_deref().unwrap_or("-"), cfg.kind.name(), cfg.regime()?);
    let out = run_experiment(&cfg)?;
    println!("{}: {}", if out.passed { "PASS" } else { "FAIL" }, out.summary);
    for f in &out.files {
        println!("  {}", out.output.join(f).display());
    }
    Ok(())
}
