//! Statistical and structural tests of the forcing: stationary variance of
//! the exact Ornstein–Uhlenbeck transition against the closed-form law,
//! Kolmogorov–Smirnov test of the Gaussian marginals, determinism, prefix
//! stability (causality), and truncation behaviour.

use ndarray::IxDyn;
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

use shearjet::spectral::{divergence, GridSpec, SpectralField};
use shearjet::stochastic::{
    ergodic_average, ou_evolve, sample_increment, stationary_variance, truncate_z, z_at,
    CovarianceSpec, NoiseKey,
};

const SEED: u64 = 0x5eed_0001;

fn cov8() -> CovarianceSpec {
    let grid = GridSpec::new(3, 8).expect("valid grid");
    CovarianceSpec::new(grid, 1.0, 4.0, 0.5).expect("valid covariance")
}

/// Coefficient of `z` at signed mode `n`, projected on a real unit vector.
fn mode_component(z: &SpectralField, n: [i64; 3], dir: [f64; 3]) -> Complex64 {
    let npts = z.grid().points_per_axis() as i64;
    let idx: Vec<usize> = n.iter().map(|&f| if f >= 0 { f } else { npts + f } as usize).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, &d) in dir.iter().enumerate() {
        acc += z.comp(c)[IxDyn(&idx)] * d;
    }
    acc
}

/// Five test modes with a fixed divergence-free direction each.
fn test_modes() -> Vec<([i64; 3], [f64; 3])> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        ([1, 0, 0], [0.0, 1.0, 0.0]),
        ([0, 1, 0], [0.0, 0.0, 1.0]),
        ([0, 0, 2], [1.0, 0.0, 0.0]),
        ([1, 1, 0], [s, -s, 0.0]),
        ([0, 2, 1], [1.0, 0.0, 0.0]),
    ]
}

/// Evolve to effective stationarity: the exact transition has relaxation
/// rate 1 + |n|² ≥ 2, so 8 unit steps leave a bias below e⁻³² ≈ 1e−14.
fn stationary_sample(cov: &CovarianceSpec, path_id: u64) -> SpectralField {
    let path = ou_evolve(cov, SEED, path_id, 0.0, 1.0, 8);
    path.z.snaps.last().expect("nonempty").clone()
}

#[test]
fn stationary_variance_within_four_standard_errors() {
    let cov = cov8();
    let m = 10_000usize;
    let modes = test_modes();
    let mut sums = vec![0.0f64; modes.len()];
    for p in 0..m {
        let z = stationary_sample(&cov, p as u64);
        for (k, &(n, dir)) in modes.iter().enumerate() {
            sums[k] += mode_component(&z, n, dir).norm_sqr();
        }
    }
    for (k, &(n, dir)) in modes.iter().enumerate() {
        let v = stationary_variance(&cov, &n);
        let mean = sums[k] / m as f64;
        // |ẑ·u|² is exponential with mean v, so SE of the sample mean is
        // v/√m.
        let se = v / (m as f64).sqrt();
        assert!(
            (mean - v).abs() <= 4.0 * se,
            "mode {n:?} dir {dir:?}: sample variance {mean} vs {v} (4 SE = {})",
            4.0 * se
        );
    }
}

#[test]
fn gaussian_marginals_pass_kolmogorov_smirnov_at_one_percent() {
    let cov = cov8();
    let m = 10_000usize;
    let modes = &test_modes()[..3];
    let normal = Normal::new(0.0, 1.0).expect("valid");
    for &(n, dir) in modes {
        let v = stationary_variance(&cov, &n);
        let sd_re = (v / 2.0).sqrt(); // per real part of the complex mode
        let mut xs: Vec<f64> = (0..m)
            .map(|p| mode_component(&stationary_sample(&cov, 20_000 + p as u64), n, dir).re / sd_re)
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let cdf = normal.cdf(x);
            d = d.max((cdf - i as f64 / m as f64).abs());
            d = d.max(((i + 1) as f64 / m as f64 - cdf).abs());
        }
        // Asymptotic critical value at α = 0.01: 1.628/√m.
        let crit = 1.628 / (m as f64).sqrt();
        assert!(d <= crit, "mode {n:?}: KS statistic {d} exceeds 1% critical value {crit}");
    }
}

#[test]
fn paths_are_deterministic_given_the_key() {
    let cov = cov8();
    let a = ou_evolve(&cov, SEED, 3, 0.0, 0.125, 16);
    let b = ou_evolve(&cov, SEED, 3, 0.0, 0.125, 16);
    for (x, y) in a.z.snaps.iter().zip(&b.z.snaps) {
        assert!(x.sub(y).expect("same grid").max_coeff() == 0.0, "snapshots must be bit-identical");
    }
    // A different path id decorrelates.
    let c = ou_evolve(&cov, SEED, 4, 0.0, 0.125, 16);
    assert!(c.z.snaps[8].sub(&a.z.snaps[8]).expect("same grid").max_coeff() > 0.0);
}

#[test]
fn extending_a_path_preserves_the_prefix_bitwise() {
    let cov = cov8();
    let short = ou_evolve(&cov, SEED, 9, 0.0, 0.25, 8);
    let long = ou_evolve(&cov, SEED, 9, 0.0, 0.25, 24);
    for i in 0..short.z.len() {
        let diff = long.z.snaps[i].sub(&short.z.snaps[i]).expect("same grid").max_coeff();
        assert!(diff == 0.0, "prefix snapshot {i} changed under extension");
    }
    for i in 0..short.increments.len() {
        let diff =
            long.increments.snaps[i].sub(&short.increments.snaps[i]).expect("same grid").max_coeff();
        assert!(diff == 0.0, "prefix increment {i} changed under extension");
    }
}

#[test]
fn path_structure_invariants() {
    let cov = cov8();
    let path = ou_evolve(&cov, SEED, 1, 0.0, 0.125, 12);
    // z(0) = 0 and one more snapshot than increments.
    assert!(path.z.snaps[0].max_coeff() == 0.0);
    assert_eq!(path.z.len(), path.increments.len() + 1);
    // Snapshots are mean-free and divergence-free.
    for z in &path.z.snaps {
        assert!(z.mean().iter().all(|v| v.norm() <= 1e-14));
        assert!(divergence(z).max_coeff() <= 1e-12 * z.max_coeff().max(1e-30));
    }
    // Frozen extension before the start.
    let early = z_at(&path, -1.0).expect("frozen");
    assert!(early.max_coeff() == 0.0);
}

#[test]
fn increment_variance_matches_brownian_law() {
    let cov = cov8();
    let dt = 0.5;
    let n = [1i64, 0, 0];
    let dir = [0.0, 1.0, 0.0];
    let m = 10_000usize;
    let mut sum = 0.0;
    for p in 0..m {
        let db = sample_increment(&cov, dt, NoiseKey { seed: SEED, path_id: 40_000 + p as u64, step: 0 });
        sum += mode_component(&db, n, dir).norm_sqr();
    }
    let mean = sum / m as f64;
    let v = cov.weight(&n) * dt;
    let se = v / (m as f64).sqrt();
    assert!((mean - v).abs() <= 4.0 * se, "increment variance {mean} vs {v}");
}

#[test]
fn truncation_is_a_sharp_low_pass_on_the_plateau() {
    let cov = cov8();
    let path = ou_evolve(&cov, SEED, 2, 0.0, 0.25, 4);
    let z = &path.z.snaps[4];
    let zt = truncate_z(z, 2.0).expect("valid cutoff");
    // |n| ≤ 1 exactly preserved, |n| ≥ 2 exactly annihilated.
    let kept = mode_component(&zt, [0, 1, 0], [1.0, 0.0, 0.0]);
    let orig = mode_component(z, [0, 1, 0], [1.0, 0.0, 0.0]);
    assert!((kept - orig).norm() <= 1e-15 * orig.norm().max(1e-30));
    let killed = mode_component(&zt, [0, 2, 0], [1.0, 0.0, 0.0]);
    assert!(killed.norm() == 0.0);
}

#[test]
fn ergodic_average_is_trapezoid_in_time() {
    let cov = cov8();
    let path = ou_evolve(&cov, SEED, 5, 0.0, 0.25, 8);
    let obs = |z: &SpectralField| shearjet::spectral::l2_norm_parseval(z).powi(2);
    let got = ergodic_average(&path.z, obs, 2.0).expect("aligned");
    let vals: Vec<f64> = path.z.snaps.iter().map(obs).collect();
    let mut oracle = 0.0;
    for w in vals.windows(2) {
        oracle += 0.5 * (w[0] + w[1]) * 0.25;
    }
    oracle /= 2.0;
    assert!((got - oracle).abs() <= 1e-12 * oracle.max(1e-30));
}

#[test]
fn covariance_spec_rejects_slow_decay() {
    let grid = GridSpec::new(3, 8).expect("valid grid");
    // Needs r > d/2 + 2σ = 2.5.
    assert!(CovarianceSpec::new(grid, 1.0, 2.5, 0.5).is_err());
    assert!(CovarianceSpec::new(grid, 1.0, 2.6, 0.5).is_ok());
    assert!(CovarianceSpec::new(grid, -1.0, 4.0, 0.5).is_err());
}
