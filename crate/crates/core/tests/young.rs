use itwlab::averaging::{compute_averaged, AveragedField, TimeRule};
use itwlab::fbm::{sample_lattice, FbmGenerator, FbmPath, LatticeConfig};
use itwlab::field::FieldSpec;
use itwlab::rng::aux_rng;
use itwlab::space::{holder_exponent_fit, holder_two_param_norm, SpaceGrid};
use itwlab::young::*;
use itwlab::Error;

fn fbm(hurst: f64, step: f64, seed: u64) -> FbmPath {
    let cfg = LatticeConfig::with_default_left(1, step, 1.0).unwrap();
    let lat = sample_lattice(&cfg, seed, 0).unwrap();
    FbmGenerator::full_grid(&cfg, hurst).unwrap().generate(&lat).unwrap()
}

fn linear_table(n: usize) -> AveragedField {
    let times = (0..=n).map(|i| i as f64 / n as f64).collect();
    AveragedField::from_fn(times, SpaceGrid::window(-1.0, 4.0, 101), |t, x| t * x).unwrap()
}

#[test]
fn integral_of_identity_against_linear_field() {
    let a = ClosedForm::new(1.0, 16, |u, x| u * x);
    let tol = 1e-4;
    let r = young_integral(&a, |r| r, 0, 1 << 16, tol).unwrap();
    assert!((r.value - 0.5).abs() <= tol, "{r:?}");
}

#[test]
fn constant_path_telescopes() {
    let a = ClosedForm::new(1.0, 10, |u, x| (3.0 * u).sin() * x.cos() + u * u);
    let exact = a.delta(0, 1 << 10, 0.4).unwrap();
    for level in 0..=10 {
        let p = Partition::dyadic(0, 1 << 10, level).unwrap();
        let s = p.riemann_sum(&a, &|_| 0.4).unwrap();
        assert!((s - exact).abs() < 1e-13);
    }
    assert!(Partition::dyadic(0, 12, 3).is_err());
}

#[test]
fn additivity_on_a_rough_drift() {
    let path = fbm(0.25, 1.0 / 4096.0, 3);
    let b = FieldSpec::from_id("fourier:K=32:decay=0:seed=2", 1).unwrap();
    let grid = SpaceGrid::periodic(128, 2.0 * std::f64::consts::PI);
    let a = compute_averaged(&b, &path, &grid, 1, TimeRule::Trapezoid).unwrap();
    let y = |r: f64| 0.5 * (3.0 * r).sin();
    let tol = 1e-3;
    let n = a.n_times() - 1;
    let whole = young_integral(&a, y, 0, n, tol).unwrap();
    let left = young_integral(&a, y, 0, n / 2, tol).unwrap();
    let right = young_integral(&a, y, n / 2, n, tol).unwrap();
    assert!((whole.value - left.value - right.value).abs() <= 2.0 * tol);
}

#[test]
fn non_convergence_is_reported() {
    let a = ClosedForm::new(1.0, 3, |u, x| u * x);
    match young_integral(&a, |r| r, 0, 8, 1e-12) {
        Err(Error::YoungNonConvergence { depth, residual }) => {
            assert_eq!(depth, 3);
            assert!(residual > 0.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn partition_independence_within_sewing_envelope() {
    let path = fbm(0.25, 1.0 / 2048.0, 8);
    let b = FieldSpec::from_id("fourier:K=32:decay=0:seed=5", 1).unwrap();
    let grid = SpaceGrid::periodic(128, 2.0 * std::f64::consts::PI);
    let a = compute_averaged(&b, &path, &grid, 1, TimeRule::Trapezoid).unwrap();
    let beta = 0.5;
    let constants = SewingConstants {
        beta,
        gamma: 1.0,
        rho: 1.0,
        a_norm: holder_two_param_norm(&a, beta, 1.0).value,
        y_seminorm: 1.5,
    };
    let mut rng = aux_rng(4, 1);
    for mesh in [8, 32, 128] {
        let c = partition_independence(&a, |r| 0.5 * (3.0 * r).sin(), 0, 2048, mesh, &constants, &mut rng).unwrap();
        assert!(c.holds, "{c:?}");
        assert!(c.meshes.0 <= mesh as f64 / 2048.0 + 1e-12);
    }
}

#[test]
fn linear_ode_reproduces_e() {
    let a = linear_table(1 << 12);
    let sol = solve_yode(&a, 1.0, &SolverOptions::default()).unwrap();
    assert!((sol.values.last().unwrap() - std::f64::consts::E).abs() < 1e-3);
    assert_eq!(sol.values[0], 1.0);
    let beta = sol.diagnostics.fitted_beta.unwrap();
    assert!((beta - 1.0).abs() < 1e-6);
    assert!(sol.diagnostics.richardson_order.unwrap() > 0.9);
}

#[test]
fn zero_field_keeps_start() {
    let times = (0..=64).map(|i| i as f64 / 64.0).collect();
    let a = AveragedField::from_fn(times, SpaceGrid::window(-1.0, 1.0, 9), |_, _| 0.0).unwrap();
    let sol = solve_yode(&a, 0.3, &SolverOptions::default()).unwrap();
    assert!(sol.values.iter().all(|&y| y == 0.3));
}

#[test]
fn leaving_the_window_aborts_with_position() {
    let a = linear_table(256);
    match solve_yode(&a, 3.9, &SolverOptions::default()) {
        Err(Error::LeftWindow { t, y, hi, .. }) => {
            assert!(t > 0.0 && y > hi);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn peano_non_uniqueness_witness() {
    let w = peano_witness(1.0 / 4096.0, 1.0, 1e-8).unwrap();
    assert!(w.zero_stays_zero);
    assert!(w.late_relative_deviation < 0.02, "{}", w.late_relative_deviation);
    let last = w.times.len() - 1;
    assert!(w.from_plus[last] > 0.45 && w.from_minus[last] < -0.45);
}

#[test]
fn reconstruction_without_drift_is_the_noise() {
    let path = fbm(0.3, 1.0 / 256.0, 1);
    let zero = FieldSpec::from_id("poly:c=0", 1).unwrap();
    let inc = PathIncrements::from_path(&zero, &path).unwrap();
    let sol = solve_yode_with(&inc, 0.7, &SolverOptions::default()).unwrap();
    let x = sde_reconstruct(&sol, &path).unwrap();
    assert_eq!(x.len(), 257);
    for (t, y, xv) in &x {
        let w = if *t == 0.0 { 0.0 } else { path.value_at(*t).unwrap()[0] };
        assert_eq!(*y, 0.7);
        assert_eq!(*xv, 0.7 + w);
    }
    let other = fbm(0.3, 1.0 / 128.0, 1);
    assert!(matches!(sde_reconstruct(&sol, &other), Err(Error::GridMismatch(_))));
}

#[test]
fn euler_crosscheck_for_linear_restoring_drift() {
    let path = fbm(0.7, 1.0 / 4096.0, 12);
    let b = FieldSpec::from_id("poly:c=0,-1", 1).unwrap();
    let c = euler_crosscheck(&b, &path, 1.0).unwrap();
    assert!(c.sup_difference < 1e-3, "{}", c.sup_difference);
    assert_eq!(c.steps, 4096);
}

#[test]
fn gronwall_envelope_for_smooth_drift() {
    let path = fbm(0.3, 1.0 / 1024.0, 2);
    let b = FieldSpec::from_id("sin:freq=1", 1).unwrap();
    let inc = PathIncrements::from_path(&b, &path).unwrap();
    let g = gronwall_probe(&inc, 0.2, 1e-6, 1.0).unwrap();
    assert!(g.holds, "{g:?}");
    assert!(g.max_gap <= 1e-4 * 1f64.exp());
}

#[test]
fn local_order_on_smooth_drift() {
    let path = fbm(0.7, 1.0 / 4096.0, 6);
    let b = FieldSpec::from_id("sin:freq=1", 1).unwrap();
    let grid = SpaceGrid::window(-4.0, 4.0, 161);
    let a = compute_averaged(&b, &path, &grid, 1, TimeRule::Trapezoid).unwrap();
    let gamma = 1.0;
    let beta = holder_exponent_fit(&a, gamma).unwrap().fit.slope;
    let inc = PathIncrements::from_path(&b, &path).unwrap();
    let (order, rows) = local_order(&inc, 0.3, 8, 4).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(order >= beta * (1.0 + gamma) - 0.15, "order {order}, beta {beta}");
}

#[test]
fn apriori_bound_shape_is_stable() {
    let path = fbm(0.3, 1.0 / 1024.0, 4);
    let b = FieldSpec::from_id("sin:freq=1", 1).unwrap();
    let inc = PathIncrements::from_path(&b, &path).unwrap();
    let ratios = apriori_ratios(&inc, &[0.0, 1.0, 10.0], 0.5).unwrap();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(hi / lo < 3.0, "{ratios:?}");
}
