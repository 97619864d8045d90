//! Oracle tests of the tensor calculus: the antidivergence right inverse,
//! the bilinear antidivergence identity, the nonlinear stress operator
//! against a pointwise matrix oracle, and the energy functionals against
//! hand quadrature.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::{ArrayD, IxDyn};
use proptest::prelude::*;

use shearjet::calculus::{
    antidivergence, bilinear_antidivergence, dissipation_rate, energy_functionals, matvec,
    nn_tensor, outer_product, strain, EnergyProfile, Rheology,
};
use shearjet::spectral::{
    divergence_tensor, fourier_cutoff, l2_norm_parseval, project_leray, CutoffMode, GridSpec,
    SpectralField, TensorField, Trajectory,
};

const RIGHT_INVERSE_TOL: f64 = 1e-10;
const BILINEAR_TOL: f64 = 1e-8;
const POINTWISE_TOL: f64 = 1e-10;

fn grid3(n: usize) -> GridSpec {
    GridSpec::new(3, n).expect("valid grid")
}

fn random_values(grid: &GridSpec, seed: u64) -> ArrayD<f64> {
    let shape = grid.shape();
    let mut vals = ArrayD::<f64>::zeros(IxDyn(&shape));
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    for v in vals.iter_mut() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        *v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    }
    vals
}

fn random_field(grid: GridSpec, ncomp: usize, seed: u64) -> SpectralField {
    let vals: Vec<ArrayD<f64>> =
        (0..ncomp).map(|c| random_values(&grid, seed.wrapping_add(1 + c as u64))).collect();
    let mut u = SpectralField::from_grid(grid, &vals).expect("valid values");
    u.make_mean_free();
    u
}

/// Random band-limited field with all active frequencies below `kappa`
/// (smooth plateau of the cut-off, so the band is cut exactly).
fn random_banded_field(grid: GridSpec, ncomp: usize, seed: u64, kappa: f64) -> SpectralField {
    let u = random_field(grid, ncomp, seed);
    fourier_cutoff(&u, kappa, CutoffMode::Low).expect("valid cutoff")
}

#[test]
fn antidivergence_is_right_inverse() {
    let grid = grid3(32);
    for seed in 0..10u64 {
        let u = random_field(grid, 3, seed);
        let r = antidivergence(&u).expect("mean-free input");
        assert!(r.symmetric && r.traceless);
        assert!(r.trace().max_coeff() <= 1e-13 * u.max_coeff());
        let err = divergence_tensor(&r).sub(&u).expect("same grid").max_coeff();
        assert!(
            err <= RIGHT_INVERSE_TOL * u.max_coeff(),
            "div∘R − id error {err} at seed {seed}"
        );
    }
}

#[test]
fn antidivergence_rejects_nonzero_mean() {
    let grid = grid3(8);
    let vals: Vec<ArrayD<f64>> = (0..3)
        .map(|c| {
            let mut v = random_values(&grid, 100 + c);
            v += 1.0;
            v
        })
        .collect();
    let u = SpectralField::from_grid(grid, &vals).expect("valid");
    assert!(antidivergence(&u).is_err(), "a non-mean-free field must be rejected");
}

#[test]
fn antidivergence_of_laplacian_is_twice_strain() {
    // For mean-free divergence-free v: div(2Dv) = Δv, and both sides are
    // symmetric traceless, so R(Δv) must reproduce 2Dv.
    let grid = grid3(16);
    let mut v = project_leray(&random_field(grid, 3, 7));
    v.make_mean_free();
    let lap = shearjet::spectral::laplacian(&v);
    let r = antidivergence(&lap).expect("mean-free");
    let mut two_d = strain(&v);
    two_d.scale(2.0);
    let err = r.sub(&two_d).expect("same grid").max_coeff();
    assert!(err <= 1e-11 * two_d.max_coeff(), "R(Δv) − 2Dv error {err}");
}

#[test]
fn bilinear_antidivergence_identity() {
    let grid = grid3(32);
    // 2/3 band margin: active bands of A and u jointly below the grid band.
    let band = grid.band_limit() as f64 * 2.0 / 3.0;
    for seed in 0..5u64 {
        // A general (non-symmetric) tensor with mean-free rows, assembled
        // from the grid values of band-limited random rows (exact roundtrip).
        let mut vals = Vec::new();
        for i in 0..3 {
            vals.extend(random_banded_field(grid, 3, 1000 * seed + i, band / 2.0).to_grid());
        }
        let a = TensorField::from_grid(grid, &vals).expect("valid values");
        let u = random_banded_field(grid, 3, 5000 + seed, band / 2.0);

        let b = bilinear_antidivergence(&a, &u).expect("valid inputs");
        let div_b = divergence_tensor(&b);
        // Oracle: P_{≠0}(Aᵀ u) assembled independently on the grid.
        let mut oracle = matvec(&a, &u, true).expect("same grid");
        oracle.make_mean_free();
        let err = div_b.sub(&oracle).expect("same grid").max_coeff();
        let scale = oracle.max_coeff().max(1e-30);
        assert!(err <= BILINEAR_TOL * scale, "div B − P≠0(Aᵀu) rel error {}", err / scale);
    }
}

#[test]
fn strain_is_traceless_for_divergence_free_fields() {
    let grid = grid3(16);
    let v = project_leray(&random_field(grid, 3, 13));
    let d = strain(&v);
    assert!(d.symmetric && d.traceless);
    assert!(d.trace().max_coeff() <= 1e-12 * v.max_coeff());
}

#[test]
fn newtonian_stress_is_identity_on_strains() {
    let grid = grid3(16);
    let v = project_leray(&random_field(grid, 3, 17));
    let d = strain(&v);
    let rh = Rheology::newtonian();
    let a = nn_tensor(&d, &rh);
    let err = a.sub(&d).expect("same grid").max_coeff();
    assert!(err <= 1e-12 * d.max_coeff(), "Newtonian A(Q) ≠ Q, error {err}");
}

#[test]
fn shear_thinning_stress_matches_matrix_oracle() {
    let grid = grid3(24);
    let rh = Rheology::shear_thinning(0.5, 1.0, 11.0 / 10.0, 3).expect("valid");
    // A strain with norm bounded away from zero keeps the power-law factor
    // analytic, so grid products are alias-clean at this resolution.
    let npts = grid.points_per_axis();
    let mut vals = vec![ArrayD::<f64>::zeros(IxDyn(&grid.shape())); 9];
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                let x = grid.coord(i);
                let s = 0.05 * (x.sin());
                // Constant traceless part plus a small single-mode ripple.
                let m = [[1.0 + s, s, 0.0], [s, -0.5, 0.0], [0.0, 0.0, -0.5 - s]];
                for (r, row) in m.iter().enumerate() {
                    for (c, &e) in row.iter().enumerate() {
                        vals[r * 3 + c][[i, j, k]] = e;
                    }
                }
            }
        }
    }
    let q = TensorField::from_grid(grid, &vals).expect("valid");
    let a = nn_tensor(&q, &rh);
    let av = a.to_grid();
    let mut max_err = 0.0f64;
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                let mut qm = DMatrix::<f64>::zeros(3, 3);
                for r in 0..3 {
                    for c in 0..3 {
                        qm[(r, c)] = vals[r * 3 + c][[i, j, k]];
                    }
                }
                let oracle = rh.nn_matrix(&qm);
                for r in 0..3 {
                    for c in 0..3 {
                        max_err = max_err.max((av[r * 3 + c][[i, j, k]] - oracle[(r, c)]).abs());
                    }
                }
            }
        }
    }
    assert!(max_err <= POINTWISE_TOL, "pointwise stress error {max_err}");
}

#[test]
fn dissipation_rate_single_mode_oracle() {
    // u = (0, sin x₁, 0): Du has entries (1,2) = (2,1) = cos(x₁)/2, so for
    // the Newtonian law ∫ A(Du):Du = ∫ cos²(x₁)/2 = (2π)³/4.
    let grid = grid3(16);
    let npts = grid.points_per_axis();
    let mut vals = vec![ArrayD::<f64>::zeros(IxDyn(&grid.shape())); 3];
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                vals[1][[i, j, k]] = grid.coord(i).sin();
            }
        }
    }
    let u = SpectralField::from_grid(grid, &vals).expect("valid");
    let rate = dissipation_rate(&u, &Rheology::newtonian());
    let oracle = (2.0 * PI).powi(3) / 4.0;
    assert!((rate - oracle).abs() <= 1e-10 * oracle, "rate {rate} vs {oracle}");
}

#[test]
fn energy_functionals_match_hand_quadrature() {
    let grid = grid3(16);
    let npts = grid.points_per_axis();
    let mut vals = vec![ArrayD::<f64>::zeros(IxDyn(&grid.shape())); 3];
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                vals[1][[i, j, k]] = grid.coord(i).sin();
            }
        }
    }
    let u = SpectralField::from_grid(grid, &vals).expect("valid");
    let kin = l2_norm_parseval(&u).powi(2); // (2π)³/2 for a unit sine mode
    let diss = (2.0 * PI).powi(3) / 4.0;
    let traj = Trajectory::new(0.0, 0.25, vec![u.clone(), u.clone(), u]);
    let t = 0.5;
    let trace_g = 0.125;
    let (e, h) = energy_functionals(&[traj], &Rheology::newtonian(), trace_g, t).expect("aligned");
    // Constant-in-time integrand: trapezoid is exact.
    let e_oracle = kin + 2.0 * diss * t - trace_g * t;
    let h_oracle = kin + 6.0 / (t + 3.0) * diss * t;
    assert!((e - e_oracle).abs() <= 1e-10 * e_oracle.abs());
    assert!((h - h_oracle).abs() <= 1e-10 * h_oracle.abs());
}

#[test]
fn energy_profile_validates_bounds() {
    assert!(EnergyProfile::new(0.0, 0.25, vec![1.0, 1.1, 1.2], 0.5, 4.0, 1.0).is_ok());
    // Value escaping [e_lo, e_hi] is rejected.
    assert!(EnergyProfile::new(0.0, 0.25, vec![1.0, 5.0], 0.5, 4.0, 1.0).is_err());
    // Slope above e_dot_max is rejected.
    assert!(EnergyProfile::new(0.0, 0.25, vec![1.0, 2.0], 0.5, 4.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// div(R u) = u for random mean-free fields on a small grid.
    #[test]
    fn prop_antidivergence_right_inverse(seed in 0u64..1u64 << 32) {
        let grid = grid3(8);
        let u = random_field(grid, 3, seed);
        let r = antidivergence(&u).unwrap();
        let err = divergence_tensor(&r).sub(&u).unwrap().max_coeff();
        prop_assert!(err <= RIGHT_INVERSE_TOL * u.max_coeff().max(1e-30));
    }

    /// tr(u ⊗ u) equals |u|² as a grid product, exactly when the product
    /// fits the band (otherwise the discarded Nyquist plane perturbs it).
    #[test]
    fn prop_outer_product_trace(seed in 0u64..1u64 << 32) {
        let grid = grid3(8);
        let u = random_banded_field(grid, 3, seed, 2.0);
        let uu = outer_product(&u, &u).unwrap();
        let tr = uu.trace().to_grid();
        let vals = u.to_grid();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for (p, t) in tr[0].iter().enumerate() {
            let sq: f64 = vals.iter().map(|c| {
                let v = c.as_slice().unwrap()[p];
                v * v
            }).sum();
            err = err.max((t - sq).abs());
            scale = scale.max(sq);
        }
        prop_assert!(err <= 1e-10 * scale.max(1e-30));
    }
}
