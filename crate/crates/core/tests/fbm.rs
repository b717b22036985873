use itwlab::fbm::{cholesky_fbm, fbm_from_lattice, sample_lattice, variance_constant, BrownianLattice, FbmGenerator, LatticeConfig};
use itwlab::rng::aux_rng;
use itwlab::stats::{fit_line, variance_with_se, RunningStats};

fn z(stats: &RunningStats, oracle: f64) -> f64 {
    (stats.mean - oracle) / (stats.variance() / stats.count as f64).sqrt()
}

#[test]
fn lattice_cells_have_the_brownian_law() {
    let cfg = LatticeConfig::new(1, 0.5, 1.0, 1.0).unwrap();
    let (mut mean, mut square) = (RunningStats::default(), RunningStats::default());
    for p in 0..100_000 {
        let x = sample_lattice(&cfg, 7, p).unwrap().increments(0)[0];
        mean.push(x);
        square.push(x * x);
    }
    assert!(z(&mean, 0.0).abs() < 3.0);
    assert!(z(&square, 0.5).abs() < 3.0);
}

#[test]
fn independent_part_variance_and_stationarity() {
    // Var W1(u, u + h) = h^{2H} / (2H), whatever u is
    let cfg = LatticeConfig::new(1, 1.0 / 64.0, 4.0, 1.0).unwrap();
    for h in [0.3, 0.7] {
        let generator = FbmGenerator::full_grid(&cfg, h).unwrap();
        let mut windows = [RunningStats::default(), RunningStats::default(), RunningStats::default()];
        for p in 0..4000 {
            let path = generator.generate(&sample_lattice(&cfg, 21, p).unwrap()).unwrap();
            for (s, u) in windows.iter_mut().zip([0.0, 0.25, 0.5]) {
                s.push(path.w1(u, u + 0.5).unwrap()[0].powi(2));
            }
        }
        let oracle = 0.5f64.powf(2.0 * h) / (2.0 * h);
        for s in &windows {
            assert!(z(s, oracle).abs() < 3.0, "H={h}: {} vs {oracle}", s.mean);
        }
    }
}

#[test]
fn independent_part_ignores_the_past() {
    let cfg = LatticeConfig::new(1, 1.0 / 32.0, 2.0, 1.0).unwrap();
    let lat = sample_lattice(&cfg, 5, 0).unwrap();
    let mut past = lat.increments(0).to_vec();
    let split = cfg.n_left() + 16;
    for x in &mut past[..split] {
        *x = -3.0 * *x + 0.1;
    }
    let other = BrownianLattice::from_increments(cfg, vec![past]).unwrap();
    let generator = FbmGenerator::full_grid(&cfg, 0.3).unwrap();
    let (a, b) = (generator.generate(&lat).unwrap(), generator.generate(&other).unwrap());
    for r in [0.5, 0.75, 1.0] {
        assert_eq!(a.w1(0.5, r).unwrap(), b.w1(0.5, r).unwrap());
        assert_ne!(a.w2(0.5, r).unwrap(), b.w2(0.5, r).unwrap());
    }

    // empirical correlation with a past increment
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in 0..4000 {
        let lat = sample_lattice(&cfg, 6, p).unwrap();
        let path = generator.generate(&lat).unwrap();
        xs.push(path.w1(0.5, 1.0).unwrap()[0]);
        ys.push(lat.increments(0)[split - 1]);
    }
    let n = xs.len() as f64;
    let (sx, sy) = (variance_with_se(&xs).0.sqrt(), variance_with_se(&ys).0.sqrt());
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let corr = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0) / (sx * sy);
    assert!(corr.abs() < 3.0 / n.sqrt(), "{corr}");
}

#[test]
fn adapted_increments_follow_the_fractional_bound() {
    // E|W2(u,s) - W2(v,s)|^2 = ((s-u)^{2H} - (s-v)^{2H}) / (2H) <= |u-v|^{min(2H,1)} / min(2H,1) for s <= 1
    let cfg = LatticeConfig::new(1, 1.0 / 64.0, 4.0, 1.0).unwrap();
    for h in [0.3, 0.7] {
        let generator = FbmGenerator::full_grid(&cfg, h).unwrap();
        let pairs = [(0.0, 0.125), (0.25, 0.5), (0.5, 0.5625)];
        let mut stats = vec![RunningStats::default(); pairs.len()];
        for p in 0..4000 {
            let path = generator.generate(&sample_lattice(&cfg, 31, p).unwrap()).unwrap();
            for (st, &(u, v)) in stats.iter_mut().zip(&pairs) {
                let d = path.w2(u, 1.0).unwrap()[0] - path.w2(v, 1.0).unwrap()[0];
                st.push(d * d);
            }
        }
        for (st, &(u, v)) in stats.iter().zip(&pairs) {
            let exact = ((1.0f64 - u).powf(2.0 * h) - (1.0f64 - v).powf(2.0 * h)) / (2.0 * h);
            assert!(z(st, exact).abs() < 3.0, "H={h} ({u},{v}): {} vs {exact}", st.mean);
            assert!(exact <= (v - u).powf((2.0 * h).min(1.0)) / (2.0 * h).min(1.0));
        }
    }
}

#[test]
fn refining_the_lattice_converges() {
    // same Brownian path at steps 2^-k, compared through cell coarsening
    let fine = LatticeConfig::new(1, 1.0 / 1024.0, 4.0, 1.0).unwrap();
    for h in [0.3, 0.7] {
        let mut gaps = Vec::new();
        let mut steps = Vec::new();
        for factor in [2usize, 4, 8, 16] {
            let mut acc = 0.0;
            for p in 0..200 {
                let lat = sample_lattice(&fine, 41, p).unwrap();
                let coarse = lat.coarsen(factor).unwrap();
                let half = lat.coarsen(factor / 2).unwrap();
                let a = fbm_from_lattice(&coarse, h, &[1.0]).unwrap().values(0)[0];
                let b = fbm_from_lattice(&half, h, &[1.0]).unwrap().values(0)[0];
                acc += (a - b).powi(2);
            }
            gaps.push((acc / 200.0).sqrt().ln());
            steps.push((factor as f64 / 1024.0).ln());
        }
        let fit = fit_line(&steps, &gaps).unwrap();
        assert!(fit.slope > 0.0, "H={h}: {fit:?}");
    }
}

#[test]
fn exact_covariance_sampler_agrees_in_law() {
    let times = [0.25, 0.5, 1.0];
    let mut rng = aux_rng(3, 0);
    let mut ends = RunningStats::default();
    for _ in 0..20_000 {
        let w = cholesky_fbm(0.7, &times, &mut rng).unwrap();
        ends.push(w[2] * w[2]);
    }
    assert!(z(&ends, variance_constant(0.7)).abs() < 3.0);
    assert!(cholesky_fbm(0.5, &times, &mut rng).is_err());
}
