//! Tests of causal space-time mollification: normalisation, strict
//! causality, the exact lattice commutation of the derivative weights with
//! centered time differences, and the Gaussian spatial multiplier.

use ndarray::{ArrayD, IxDyn};
use proptest::prelude::*;

use shearjet::scheme::{spatial_mollify, Mollifier};
use shearjet::spectral::{GridSpec, SpectralField, Trajectory};

const EXACT_TOL: f64 = 1e-13;

fn scalar_traj(vals: Vec<f64>, dt: f64) -> Trajectory<f64> {
    Trajectory::new(0.0, dt, vals)
}

#[test]
fn weights_are_normalised_and_causal() {
    let m = Mollifier::new(1.0 / 64.0, 1.0 / 1024.0).expect("valid scales");
    assert_eq!(m.past_depth(), 16);
    let sum: f64 = m.weights.iter().sum();
    assert!((sum - 1.0).abs() <= EXACT_TOL);
    let dsum: f64 = m.dweights.iter().sum();
    assert!(dsum.abs() <= EXACT_TOL / m.dt);
    // Strictly past-only: no weight on the current snapshot or at lag ℓ.
    assert_eq!(m.weights[0], 0.0);
    assert_eq!(*m.weights.last().expect("nonempty"), 0.0);
    // Positive in the open interior.
    assert!(m.weights[1..m.past_depth()].iter().all(|&w| w > 0.0));
}

#[test]
fn constants_are_reproduced_with_zero_rate() {
    let m = Mollifier::new(1.0 / 8.0, 1.0 / 64.0).expect("valid");
    let traj = scalar_traj(vec![2.5; 64], 1.0 / 64.0);
    let t = 32.0 / 64.0;
    assert!((m.mollify_scalar(&traj, t, false).expect("in window") - 2.5).abs() <= EXACT_TOL);
    assert!(m.ddt_scalar(&traj, t, false).expect("in window").abs() <= EXACT_TOL * 64.0);
}

#[test]
fn derivative_weights_commute_with_centered_differences() {
    // The defining lattice identity: ddt at t equals the centered difference
    // of mollified values, exactly (not up to truncation error), for any
    // trajectory — the kernel shape never enters.
    let dt = 1.0 / 128.0;
    let m = Mollifier::new(1.0 / 16.0, dt).expect("valid");
    let mut state = 0x1234_5678_9abc_def0u64;
    let vals: Vec<f64> = (0..128)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let traj = scalar_traj(vals, dt);
    for i in [10usize, 33, 64, 100] {
        let t = i as f64 * dt;
        let ddt = m.ddt_scalar(&traj, t, false).expect("in window");
        let plus = m.mollify_scalar(&traj, t + dt, false).expect("in window");
        let minus = m.mollify_scalar(&traj, t - dt, false).expect("in window");
        let centered = (plus - minus) / (2.0 * dt);
        assert!(
            (ddt - centered).abs() <= 1e-10 * centered.abs().max(1.0),
            "commutation broken at i = {i}: {ddt} vs {centered}"
        );
    }
}

#[test]
fn derivative_is_second_order_accurate_on_smooth_data() {
    // For a smooth trajectory the rate converges to (ρ * f')(t); check the
    // error drops by ~4 when dt halves at fixed ℓ/dt ratio... the kernel
    // changes with n, so instead fix the kernel (n = 16) and halve dt with ℓ.
    let f = |t: f64| (3.0 * t).sin();
    let mut errs = Vec::new();
    for k in [0u32, 1, 2] {
        let dt = 1.0 / (256.0 * 2f64.powi(k as i32));
        let ell = 16.0 * dt;
        let m = Mollifier::new(ell, dt).expect("valid");
        let len = 64 + 16;
        let traj = scalar_traj((0..len).map(|i| f(i as f64 * dt)).collect(), dt);
        let t = 40.0 * dt + 16.0 * dt;
        let got = m.ddt_scalar(&traj, t, false).expect("in window");
        // Oracle: the same quadrature applied to the analytic derivative —
        // as ℓ → 0 both approach f'(t); their gap is the measured error.
        let exact: f64 = m
            .weights
            .iter()
            .enumerate()
            .map(|(j, &w)| w * 3.0 * (3.0 * (t - j as f64 * dt)).cos())
            .sum();
        errs.push((got - exact).abs());
    }
    assert!(
        errs[2] <= errs[0] / 8.0,
        "no second-order decrease: {errs:?}"
    );
}

#[test]
fn frozen_past_clamps_to_the_first_snapshot() {
    let dt = 1.0 / 64.0;
    let m = Mollifier::new(1.0 / 8.0, dt).expect("valid");
    let mut vals = vec![7.0; 9];
    vals.extend((0..55).map(|i| 7.0 + i as f64));
    let traj = scalar_traj(vals.clone(), dt);
    // Early time: without freezing it is an error, with freezing the window
    // is padded by vals[0].
    assert!(m.mollify_scalar(&traj, 2.0 * dt, false).is_err());
    let frozen = m.mollify_scalar(&traj, 2.0 * dt, true).expect("frozen");
    // Oracle: pad the lattice below t0 with vals[0] and apply the weights.
    let oracle: f64 = m
        .weights
        .iter()
        .enumerate()
        .map(|(j, &w)| w * vals[(2i64 - j as i64).max(0) as usize])
        .sum();
    assert!((frozen - oracle).abs() <= EXACT_TOL * oracle.abs().max(1.0));
}

#[test]
fn field_and_scalar_paths_agree() {
    let grid = GridSpec::new(3, 8).expect("valid");
    let dt = 1.0 / 64.0;
    let m = Mollifier::new(1.0 / 8.0, dt).expect("valid");
    // A trajectory of constant-in-space fields mirrors a scalar trajectory.
    let scalars: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).cos()).collect();
    let fields: Vec<SpectralField> = scalars
        .iter()
        .map(|&s| {
            let vals = ArrayD::<f64>::from_elem(IxDyn(&grid.shape()), s);
            SpectralField::from_grid(grid, &[vals]).expect("valid")
        })
        .collect();
    let ftraj = Trajectory::new(0.0, dt, fields);
    let straj = scalar_traj(scalars, dt);
    let t = 20.0 * dt;
    let mf = m.mollify_field(&ftraj, t, false).expect("in window");
    let ms = m.mollify_scalar(&straj, t, false).expect("in window");
    assert!((mf.mean()[0].re - ms).abs() <= EXACT_TOL * ms.abs().max(1.0));
}

#[test]
fn spatial_mollifier_is_the_gaussian_multiplier() {
    let grid = GridSpec::new(3, 16).expect("valid");
    let npts = grid.points_per_axis();
    let mut vals = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                vals[[i, j, k]] = (grid.coord(i)).sin() + (2.0 * grid.coord(j)).cos();
            }
        }
    }
    let u = SpectralField::from_grid(grid, &[vals]).expect("valid");
    let ell = 0.25;
    let smoothed = spatial_mollify(&u, ell);
    let vals_s = smoothed.to_grid();
    let f1 = (-0.5 * ell * ell).exp();
    let f2 = (-0.5 * ell * ell * 4.0).exp();
    let mut err = 0.0f64;
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                let oracle = f1 * (grid.coord(i)).sin() + f2 * (2.0 * grid.coord(j)).cos();
                err = err.max((vals_s[0][[i, j, k]] - oracle).abs());
            }
        }
    }
    assert!(err <= 1e-12, "Gaussian multiplier error {err}");
}

#[test]
fn rejects_bad_scales() {
    assert!(Mollifier::new(0.0, 0.1).is_err());
    assert!(Mollifier::new(1.0 / 64.0, 1.0 / 100.0).is_err()); // non-integer ratio
    assert!(Mollifier::new(1.0 / 64.0, 1.0 / 256.0).is_err()); // ratio 4 < 8
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Lattice commutation holds for arbitrary data and window positions.
    #[test]
    fn prop_commutation(seed in 0u64..1u64 << 32, i in 17usize..110) {
        let dt = 1.0 / 128.0;
        let m = Mollifier::new(1.0 / 8.0, dt).unwrap();
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let vals: Vec<f64> = (0..128).map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).collect();
        let traj = scalar_traj(vals, dt);
        let t = i as f64 * dt;
        let ddt = m.ddt_scalar(&traj, t, false).unwrap();
        let centered = (m.mollify_scalar(&traj, t + dt, false).unwrap()
            - m.mollify_scalar(&traj, t - dt, false).unwrap()) / (2.0 * dt);
        prop_assert!((ddt - centered).abs() <= 1e-9 * centered.abs().max(1.0));
    }
}
