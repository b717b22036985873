use itwlab::fbm::{sample_lattice, BrownianLattice, LatticeConfig};
use itwlab::field::{FieldSpec, MomentRoute};
use itwlab::verifier::*;
use itwlab::Error;

fn config(hurst: f64, n_paths: usize, steps: &[f64], probes: &[f64]) -> VerifyConfig {
    VerifyConfig {
        hurst,
        dims: 1,
        n_paths,
        horizon: 1.0,
        left: 4.0,
        steps: steps.to_vec(),
        probes: probes.iter().map(|&x| vec![x]).collect(),
        options: TermOptions::default(),
        seed: 17,
        tolerance: 0.05,
        absolute_tolerance: 1e-8,
        require_decay: true,
        dump_terms: false,
    }
}

const LADDER: [f64; 3] = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];

fn single(f: &FieldSpec, hurst: f64, step: f64, seed: u64, x: f64) -> IdentityTerms {
    let cfg = LatticeConfig::new(1, step, 4.0, 1.0).unwrap();
    let cache = LevelCache::new(f, hurst, &cfg).unwrap();
    let path = VerifierPath::new(sample_lattice(&cfg, seed, 0).unwrap(), &cache).unwrap();
    compute_terms(f, &path, &cache, 1.0, &[vec![x]], &TermOptions::default())
        .unwrap()
        .remove(0)
}

#[test]
fn constant_field_is_heat_invariant() {
    let f = FieldSpec::from_id("const", 1).unwrap();
    let r = verify_identity(&f, &config(0.3, 8, &LADDER, &[0.0, 0.7])).unwrap();
    assert!(r.passed);
    for l in &r.levels {
        assert!(l.residual_rms < 1e-12);
        assert!((l.terms.lhs.mean - 1.0).abs() < 1e-12 && (l.terms.t1.mean - 1.0).abs() < 1e-12);
        assert_eq!(l.terms.t2.mean, 0.0);
        assert_eq!(l.terms.t3.mean, 0.0);
        assert_eq!(l.terms.t4.mean, 0.0);
    }
    let (chosen, res, _) = resolve_t1_reading(&f, &config(0.3, 8, &LADDER, &[0.0])).unwrap();
    assert!(res.coincide);
    assert_eq!(chosen, T1Reading::W2);
}

#[test]
fn linear_field_cancels_exactly_under_the_adapted_reading() {
    let f = FieldSpec::from_id("linear", 1).unwrap();
    for hurst in [0.3, 0.7] {
        let t = single(&f, hurst, 1.0 / 128.0, 3, 0.0);
        assert!(t.residual_for(T1Reading::W2).abs() < 1e-8, "{t:?}");
        assert!(t.residual_for(T1Reading::Literal).abs() > 1e-3, "{t:?}");
        assert_eq!(t.milstein, 0.0);
    }
}

#[test]
fn deterministic_fields_have_no_malliavin_terms() {
    let f = FieldSpec::from_id("sin:omega=1", 1).unwrap();
    let t = single(&f, 0.3, 1.0 / 64.0, 5, 0.7);
    assert_eq!(t.t3, 0.0);
    assert_eq!(t.t4, 0.0);
    assert_eq!(t.t4_displayed, 0.0);
    assert!(t.t2 != 0.0 && t.lhs != 0.0);
}

fn rerandomize_after(lat: &BrownianLattice, c: usize, seed: u64) -> BrownianLattice {
    let cfg = *lat.config();
    let other = sample_lattice(&cfg, seed, 99).unwrap();
    let nl = cfg.n_left();
    let inc = (0..cfg.dims)
        .map(|j| {
            let mut v = lat.increments(j).to_vec();
            v[nl + c..].copy_from_slice(&other.increments(j)[nl + c..]);
            v
        })
        .collect();
    BrownianLattice::from_increments(cfg, inc).unwrap()
}

#[test]
fn integrand_weights_are_adapted() {
    let cfg = LatticeConfig::new(1, 1.0 / 32.0, 4.0, 1.0).unwrap();
    for id in ["sin:omega=1", "product:cos:tau=0.5:k=1", "anchor-pair:g1=0.3:g2=0.7"] {
        let f = FieldSpec::from_id(id, 1).unwrap();
        let cache = LevelCache::new(&f, 0.3, &cfg).unwrap();
        let lat = sample_lattice(&cfg, 8, 1).unwrap();
        for c in [0, 5, 13, 20, 31] {
            let a = VerifierPath::new(lat.clone(), &cache).unwrap();
            let b = VerifierPath::new(rerandomize_after(&lat, c, 77), &cache).unwrap();
            let wa = integrand_weights(&f, &a, &cache, 1.0, &[0.3], c, MomentRoute::Analytic).unwrap();
            let wb = integrand_weights(&f, &b, &cache, 1.0, &[0.3], c, MomentRoute::Analytic).unwrap();
            assert_eq!(wa, wb, "{id} at cell {c}");
        }
    }
}

#[test]
fn malliavin_support_ends_at_the_anchor() {
    let cfg = LatticeConfig::new(1, 1.0 / 40.0, 4.0, 1.0).unwrap();
    let f = FieldSpec::from_id("product:cos:tau=0.4:k=1", 1).unwrap();
    let cache = LevelCache::new(&f, 0.7, &cfg).unwrap();
    let path = VerifierPath::new(sample_lattice(&cfg, 4, 0).unwrap(), &cache).unwrap();
    for c in 0..40 {
        let w = integrand_weights(&f, &path, &cache, 1.0, &[0.2], c, MomentRoute::Analytic).unwrap();
        if c >= 16 {
            assert_eq!(w[0].1, 0.0, "cell {c}");
        } else {
            assert!(w[0].1 != 0.0, "cell {c}");
        }
    }
}

#[test]
fn all_terms_live_on_the_product_field_and_sign_flip_breaks_it() {
    let f = FieldSpec::from_id("product:cos:tau=0.5:k=1", 1).unwrap();
    let mut cfg = config(0.7, 64, &LADDER, &[0.0]);
    cfg.dump_terms = true;
    let r = verify_identity(&f, &cfg).unwrap();
    let fine = r.levels.last().unwrap();
    for s in [fine.terms.t1_literal, fine.terms.t2, fine.terms.t3, fine.terms.t4] {
        assert!(s.variance() > 0.0);
    }
    // f^a(r, 0, .) = cos * E[B(0.5 ^ r) | F_0] = 0
    assert_eq!(fine.terms.t1.mean, 0.0);
    assert_eq!(fine.terms.t1.variance(), 0.0);
    let flipped: f64 = r
        .rows
        .iter()
        .filter(|row| row.step == 1.0 / 64.0)
        .map(|row| {
            let t = &row.terms;
            (t.lhs - (t.t1 + t.t2 + t.milstein + t.t3 + t.t4)).powi(2)
        })
        .sum::<f64>()
        / 64.0;
    assert!(flipped.sqrt() > 5.0 * fine.residual_rms, "{} vs {}", flipped.sqrt(), fine.residual_rms);
}

#[test]
fn runs_are_independent_of_the_thread_count() {
    let f = FieldSpec::from_id("product:cos:tau=0.5:k=1", 1).unwrap();
    let cfg = config(0.3, 24, &LADDER, &[0.0, 0.7]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| serde_json::to_string(&verify_identity(&f, &cfg).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn bad_ladders_and_times_are_rejected() {
    let f = FieldSpec::from_id("sin:omega=1", 1).unwrap();
    assert!(matches!(
        verify_identity(&f, &config(0.3, 2, &LADDER[..2], &[0.0])),
        Err(Error::ShortLadder(2))
    ));
    assert!(verify_identity(&f, &config(0.3, 2, &[0.25, 0.1, 0.05], &[0.0])).is_err());
    let cfg = LatticeConfig::new(1, 0.125, 4.0, 1.0).unwrap();
    let cache = LevelCache::new(&f, 0.3, &cfg).unwrap();
    let path = VerifierPath::new(sample_lattice(&cfg, 1, 0).unwrap(), &cache).unwrap();
    assert!(matches!(
        compute_terms(&f, &path, &cache, 0.3, &[vec![0.0]], &TermOptions::default()),
        Err(Error::NotOnLattice(_))
    ));
}

#[test]
fn regime_validator() {
    assert!(regime_check(0.3, 1.0, 4.0, None).in_regime);
    // alpha = 1 - (-0.5) = 1.5: 1/2 - 0.45 - 1/4 < 0
    let r = regime_check(0.3, 1.0, 4.0, Some(-0.5));
    assert!(!r.in_regime && (r.margin + 0.2).abs() < 1e-12);
    assert!(regime_check(0.1, 1.0, 10.0, Some(-0.5)).in_regime);
}

fn co(functional: &str, n_paths: usize) -> ClarkOconeReport {
    clark_ocone_check(&ClarkOconeConfig {
        functional: Functional::from_id(functional).unwrap(),
        t1: 1.0,
        n_paths,
        steps: vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
        seed: 3,
    })
    .unwrap()
}

#[test]
fn clark_ocone_on_the_functional_catalog() {
    for l in &co("b", 50).levels {
        assert_eq!(l.residual_rms, 0.0);
    }
    let sq = co("functional:b2", 2000);
    for l in &sq.levels {
        assert!(l.quadratic_variation_gap.unwrap() < 1e-12);
        // E[(sum dB^2 - 1)^2] = 2 step
        let expected = (2.0 * l.step).sqrt();
        assert!((l.residual_rms / expected - 1.0).abs() < 0.1, "{} vs {expected}", l.residual_rms);
    }
    assert!((sq.order.unwrap().slope - 0.5).abs() < 0.1);
    let e = co("exp", 2000);
    assert!(e.levels.last().unwrap().relative_rms.unwrap() < 0.05);
    assert!(e.order.unwrap().slope > 0.3);
    assert!(matches!(Functional::from_id("b3"), Err(Error::UnknownFunctional(_))));
}
