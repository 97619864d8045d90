//! Tests of the intermittent-jet machinery: the dyad decomposition of
//! symmetric matrices near the identity, unit normalisation and product
//! structure of the jets, disjoint tube supports, the incompressibility of
//! the corrected jets, and the transport identity.

use nalgebra::Matrix3;
use ndarray::ArrayD;

use shearjet::calculus::{matvec, scalar_multiply};
use shearjet::jets::{
    build_direction_set, build_profiles, eval_jet, factorization_check, gamma_coeffs,
    gamma_gradients, improved_holder_check, jet_grid_mass, psi2_phi2, transport_identity_check,
    DirectionSet, FactorSpec, JetParams, Profiles,
};
use shearjet::spectral::{divergence, divergence_tensor_cols, gradient, GridSpec, SpectralField};

const RECONSTRUCTION_TOL: f64 = 1e-10;
const NORMALISATION_TOL: f64 = 1e-4;
const FACTORISATION_TOL: f64 = 1e-6;
const DIVERGENCE_TOL: f64 = 1e-8;
const TRANSPORT_TOL: f64 = 1e-6;

/// Jet scales of the desk tuple (λ = 4, r_⊥ = 1/4, r_∥ = 1/2, μ = 1/2).
fn desk_jets() -> JetParams {
    JetParams::new(4.0, 0.25, 0.5, 0.5).expect("valid scales")
}

fn setup() -> (JetParams, DirectionSet, Profiles, GridSpec) {
    let jp = desk_jets();
    let ds = build_direction_set(&jp).expect("admissible set");
    let profiles = build_profiles(2048).expect("valid resolution");
    let grid = GridSpec::new(3, 64).expect("valid grid");
    (jp, ds, profiles, grid)
}

/// Deterministic symmetric matrix in the closed half-ball around the
/// identity, ‖S − Id‖_F ≤ 1/2.
fn halfball_matrix(seed: u64) -> Matrix3<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut s = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let v = next();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let norm = s.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let radius = 0.5 * next().abs() * 2.0; // uniform in [0, 1/2]
    if norm > 0.0 {
        s *= radius / norm;
    }
    Matrix3::identity() + s
}

#[test]
fn dyads_reconstruct_the_halfball() {
    let jp = desk_jets();
    let ds = build_direction_set(&jp).expect("admissible");
    for seed in 0..100u64 {
        let r = halfball_matrix(seed);
        let gammas = gamma_coeffs(&ds, &r).expect("admissible matrix");
        let mut recon = Matrix3::zeros();
        for (k, dir) in ds.dirs.iter().enumerate() {
            let xi = dir.xi();
            for i in 0..3 {
                for j in 0..3 {
                    recon[(i, j)] += gammas[k] * gammas[k] * xi[i] * xi[j];
                }
            }
        }
        let err = (recon - r).iter().map(|&x| x * x).sum::<f64>().sqrt();
        let scale = r.iter().map(|&x| x * x).sum::<f64>().sqrt();
        assert!(
            err <= RECONSTRUCTION_TOL * scale,
            "reconstruction error {} at seed {seed}",
            err / scale
        );
    }
}

#[test]
fn dyad_coefficients_positive_on_dense_sample() {
    let jp = desk_jets();
    let ds = build_direction_set(&jp).expect("admissible");
    for seed in 0..10_000u64 {
        let r = halfball_matrix(seed.wrapping_add(777));
        // gamma_coeffs errors when any coefficient is nonpositive.
        let gammas = gamma_coeffs(&ds, &r).expect("positivity inside the half-ball");
        assert!(gammas.iter().all(|&g| g > 0.0));
    }
}

#[test]
fn dyad_gradients_match_finite_differences() {
    let jp = desk_jets();
    let ds = build_direction_set(&jp).expect("admissible");
    let r = halfball_matrix(42);
    let grads = gamma_gradients(&ds, &r).expect("admissible");
    let h = 1e-6;
    for i in 0..3 {
        for j in 0..3 {
            let mut plus = r;
            let mut minus = r;
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            let gp = gamma_coeffs(&ds, &plus).expect("still admissible");
            let gm = gamma_coeffs(&ds, &minus).expect("still admissible");
            for (k, grad) in grads.iter().enumerate() {
                let fd = (gp[k] - gm[k]) / (2.0 * h);
                assert!(
                    (grad[(i, j)] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                    "entry ({i},{j}) dir {k}: analytic {} vs FD {fd}",
                    grad[(i, j)]
                );
            }
        }
    }
}

#[test]
fn jets_have_unit_l2_norm_and_dyad_mean() {
    let jp = desk_jets();
    let ds = build_direction_set(&jp).expect("admissible");
    let profiles = build_profiles(2048).expect("valid resolution");
    // The continuum statement ‖W_(ξ)‖_{L²} = 1: the raw quadrature mass on a
    // grid that genuinely resolves the tubes must already be 1 to within the
    // normalisation tolerance, before any grid renormalisation.
    let fine = GridSpec::new(3, 256).expect("valid grid");
    for k in 0..ds.dirs.len() {
        let mass = jet_grid_mass(&ds, k, &jp, &profiles, 0.3, fine).expect("resolved");
        let n = mass.sqrt();
        assert!((n - 1.0).abs() <= NORMALISATION_TOL, "‖W‖ = {n} for direction {k}");
    }
    // On the working grid the renormalised samples make the quadrature norm
    // and the dyad mean vol·⨍ W⊗W = ξ⊗ξ exact grid algebra.
    let grid = GridSpec::new(3, 64).expect("valid grid");
    let vol = grid.volume();
    for k in 0..ds.dirs.len() {
        let p2 = psi2_phi2(&ds, k, &jp, &profiles, 0.3, grid).expect("resolved");
        let mean = p2.iter().sum::<f64>() / p2.len() as f64;
        assert!(
            (mean * vol - 1.0).abs() <= 1e-12,
            "direction {k}: renormalised mass {}",
            mean * vol
        );
        // |W|² = ψ²φ² and W⊗W = ψ²φ² ξ⊗ξ sample for sample, so the dyad
        // mean follows from the mass with the exact rational ξ.
        let xi = ds.dirs[k].xi();
        for i in 0..3 {
            for j in 0..3 {
                let oracle = xi[i] * xi[j] / vol;
                let got = mean * xi[i] * xi[j];
                assert!((got - oracle).abs() <= 1e-12, "direction {k} entry ({i},{j})");
            }
        }
    }
}

#[test]
fn jet_supports_are_pairwise_disjoint() {
    let (jp, ds, profiles, grid) = setup();
    // Raw per-point magnitudes ψ²φ²: exactly zero off the tube supports
    // (the spectral representation would ring globally and mask this).
    let mags: Vec<ArrayD<f64>> = (0..ds.dirs.len())
        .map(|k| psi2_phi2(&ds, k, &jp, &profiles, 0.3, grid).expect("resolved"))
        .collect();
    for a in 0..mags.len() {
        for b in a + 1..mags.len() {
            let overlap = mags[a]
                .iter()
                .zip(mags[b].iter())
                .map(|(&x, &y)| x * y)
                .fold(0.0, f64::max);
            assert!(overlap == 0.0, "directions {a} and {b} overlap: {overlap}");
        }
    }
}

#[test]
fn corrected_jet_is_exactly_divergence_free() {
    let (jp, ds, profiles, grid) = setup();
    for k in 0..ds.dirs.len() {
        let jf = eval_jet(&ds, k, &jp, &profiles, 0.15, grid).expect("resolved");
        // W + W^c = div_cols(V) with V skew, so the divergence vanishes
        // coefficientwise, not just to quadrature accuracy.
        let mut total = jf.w.clone();
        total.add_assign(&jf.w_c).expect("same grid");
        let div = divergence(&total);
        assert!(
            div.max_coeff() <= 1e-12 * total.max_coeff(),
            "direction {k}: div = {}",
            div.max_coeff()
        );
        // And the potential identity itself.
        let recon = divergence_tensor_cols(&jf.v);
        let err = recon.sub(&total).expect("same grid").max_coeff();
        assert!(err <= 1e-12 * total.max_coeff());
    }
}

#[test]
fn amplitude_weighted_jet_divergence_is_alias_small() {
    let (jp, ds, profiles, grid) = setup();
    let npts = grid.points_per_axis();
    // A smooth low-band amplitude; the perturbation recipe
    // a W + V ∇a + a W^c = div(a V) row-wise is divergence-free up to the
    // aliasing of the grid product a·V.
    let mut avals = ArrayD::<f64>::zeros(ndarray::IxDyn(&grid.shape()));
    for i in 0..npts {
        for j in 0..npts {
            for k in 0..npts {
                avals[[i, j, k]] =
                    1.0 + 0.3 * (grid.coord(i) + grid.coord(j)).sin() + 0.2 * (grid.coord(k)).cos();
            }
        }
    }
    let a = SpectralField::from_grid(grid, std::slice::from_ref(&avals)).expect("valid");
    let ga = gradient(&a);
    let mut sup_w = 0.0f64;
    let mut sup_div = 0.0f64;
    for k in 0..ds.dirs.len() {
        let jf = eval_jet(&ds, k, &jp, &profiles, 0.4, grid).expect("resolved");
        let mut w = scalar_multiply(&a, &jf.w).expect("same grid");
        w.add_assign(&matvec(&jf.v, &ga, false).expect("same grid")).expect("same grid");
        w.add_assign(&scalar_multiply(&a, &jf.w_c).expect("same grid")).expect("same grid");
        sup_w = sup_w.max(w.max_coeff());
        sup_div = sup_div.max(divergence(&w).max_coeff());
    }
    assert!(
        sup_div <= DIVERGENCE_TOL * sup_w * jp.lambda,
        "div(w^p + w^c) = {sup_div} vs scale {sup_w}"
    );
}

#[test]
fn transport_identity_holds() {
    let (jp, ds, profiles, grid) = setup();
    for k in 0..ds.dirs.len() {
        let (err, scale) = transport_identity_check(&ds, k, &jp, &profiles, 0.2, grid)
            .expect("resolved");
        assert!(
            err <= TRANSPORT_TOL * scale.max(1e-30),
            "direction {k}: transport error {} of scale {scale}",
            err
        );
    }
}

#[test]
fn product_factorisation_in_lp() {
    let (jp, ds, profiles, _) = setup();
    // The factorisation is a quadrature statement about the continuum
    // profiles, so it needs a grid that resolves the tubes well.
    let grid = GridSpec::new(3, 200).expect("valid grid");
    let cases = [
        FactorSpec { dpsi_axis: None, dt_order: 0, n: 2, m: 2, p: 2.0 },
        FactorSpec { dpsi_axis: Some(0), dt_order: 0, n: 1, m: 3, p: 51.0 / 50.0 },
        FactorSpec { dpsi_axis: None, dt_order: 1, n: 2, m: 1, p: 3.0 },
    ];
    for (ci, spec) in cases.iter().enumerate() {
        let (lhs, rhs) = factorization_check(&ds, 0, &jp, &profiles, spec, 0.35, grid)
            .expect("resolved");
        assert!(
            (lhs - rhs).abs() <= FACTORISATION_TOL * rhs.max(1e-30),
            "case {ci}: lhs {lhs} vs rhs {rhs}"
        );
    }
}

#[test]
fn improved_holder_inequality_is_satisfied() {
    let grid = GridSpec::new(3, 48).expect("valid");
    let f = |x: &[f64; 3]| 2.0 + (x[0]).sin() * (x[1]).cos();
    let g = |x: &[f64; 3]| (3.0 * x[0]).sin() + 0.5 * (x[2]).cos();
    for kappa in [4u32, 8, 16] {
        let report = improved_holder_check(f, g, kappa, 2.0, grid).expect("valid");
        assert!(
            report.ratio <= 1.0 + 1e-10,
            "κ = {kappa}: ratio {} exceeds 1",
            report.ratio
        );
    }
}

#[test]
fn under_resolved_grids_are_rejected() {
    let jp = desk_jets();
    let ds = build_direction_set(&jp).expect("admissible");
    let profiles = build_profiles(2048).expect("valid");
    let coarse = GridSpec::new(3, 32).expect("valid grid");
    assert!(eval_jet(&ds, 0, &jp, &profiles, 0.0, coarse).is_err());
}
