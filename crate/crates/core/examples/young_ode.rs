//! Nonlinear Young ODEs `dY = A(dt, Y)`: a linear table that integrates to
//! `e`, the Peano drift without noise (non-uniqueness) and with fBm noise.
//!
//! cargo run --example young_ode

use itwlab::averaging::{compute_averaged, AveragedField, TimeRule};
use itwlab::fbm::{sample_lattice, FbmGenerator, LatticeConfig};
use itwlab::field::FieldSpec;
use itwlab::space::SpaceGrid;
use itwlab::young::{peano_witness, solve_yode, PathIncrements, solve_yode_with, SolverOptions};

fn main() -> itwlab::Result<()> {
    let n = 1usize << 12;
    let times = (0..=n).map(|i| i as f64 / n as f64).collect();
    let linear = AveragedField::from_fn(times, SpaceGrid::window(-1.0, 4.0, 101), |t, x| t * x)?;
    let sol = solve_yode(&linear, 1.0, &SolverOptions::default())?;
    println!(
        "A(t, x) = t x:  Y(1) = {:.6} (e = {:.6}), Richardson order {:?}",
        sol.values.last().unwrap(),
        std::f64::consts::E,
        sol.diagnostics.richardson_order
    );

    let w = peano_witness(1.0 / 1024.0, 1.0, 1e-12)?;
    println!(
        "Peano, no noise: zero solution stays at 0: {}, +-eps starts reach {:+.4} / {:+.4} (envelope {:.4})",
        w.zero_stays_zero,
        w.from_plus.last().unwrap(),
        w.from_minus.last().unwrap(),
        w.envelope.last().unwrap()
    );

    let cfg = LatticeConfig::new(1, 1.0 / 4096.0, 50.0, 1.0)?;
    let path = FbmGenerator::full_grid(&cfg, 0.25)?.generate(&sample_lattice(&cfg, 11, 0)?)?;
    let peano = FieldSpec::from_id("peano", 1)?;
    let inc = PathIncrements::from_path(&peano, &path)?;
    for y0 in [-1e-6, 0.0, 1e-6] {
        let s = solve_yode_with(&inc, y0, &SolverOptions::default())?;
        println!("Peano with fBm noise (H = 0.25), Y(0) = {y0:+.0e}: Y(1) = {:+.6}", s.values.last().unwrap());
    }

    let sin = FieldSpec::from_id("sin:omega=0", 1)?;
    let a = compute_averaged(&sin, &path, &SpaceGrid::periodic(256, 2.0 * std::f64::consts::PI), 1, TimeRule::Trapezoid)?;
    let s = solve_yode(&a, 0.5, &SolverOptions::default())?;
    println!(
        "b = sin from the tabulated A: Y(1) = {:.6}, fitted beta {:?}, Young condition {:?}",
        s.values.last().unwrap(),
        s.diagnostics.fitted_beta,
        s.diagnostics.young_condition
    );
    Ok(())
}
