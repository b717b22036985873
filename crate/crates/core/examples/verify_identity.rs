//! Residual of the four-term identity over a dyadic ladder.
//!
//! `cargo run --example verify_identity -- [field] [hurst] [n_paths]`

use std::time::Instant;

use itwlab::field::FieldSpec;
use itwlab::verifier::{verify_identity, TermOptions, VerifyConfig};

fn main() -> itwlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id = args.first().map_or("sin:omega=1", |s| s.as_str());
    let hurst: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let n_paths: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let f = FieldSpec::from_id(id, 1)?;
    let cfg = VerifyConfig {
        hurst,
        dims: 1,
        n_paths,
        horizon: 1.0,
        left: 50.0,
        steps: vec![1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0],
        probes: vec![vec![0.0], vec![0.7]],
        options: TermOptions::default(),
        seed: 1,
        tolerance: 0.02,
        absolute_tolerance: 1e-8,
        require_decay: true,
        dump_terms: false,
    };
    let start = Instant::now();
    let r = verify_identity(&f, &cfg)?;
    println!("field {id}, H = {hurst}, {n_paths} paths, {:.1?}", start.elapsed());
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "step", "rms(lhs)", "rel(w2)", "rel(lit)", "rel(disp)");
    for l in &r.levels {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
        println!(
            "{:>10.2e} {:>12.4e} {:>12} {:>12} {:>12}",
            l.step,
            l.lhs_rms,
            show(l.relative_rms),
            show(l.relative_literal_rms),
            show(l.relative_displayed_rms)
        );
    }
    println!(
        "decay slope {:?}, literal {:?}, passed {}",
        r.decay.map(|d| d.slope),
        r.decay_literal.map(|d| d.slope),
        r.passed
    );
    Ok(())
}
