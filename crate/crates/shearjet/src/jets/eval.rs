//! Grid evaluation of the intermittent jets `W_(ξ)`, their
//! incompressibility correctors, and the temporal profile `ψ²φ²`.
//!
//! All evaluation is by direct sampling of the periodized profiles: the
//! arguments `n_* r_⊥ λ (x−α_ξ)·A^i` and `n_* r_⊥ λ (x·ξ + μt)` are reduced
//! to `[−π, π)` componentwise, which selects the single periodic image whose
//! rescaled profile support (radius < π in the reduced variable) can
//! contribute.

use ndarray::{ArrayD, IxDyn};
use rayon::prelude::*;

use super::directions::{Direction, DirectionSet};
use super::profiles::Profiles;
use super::{JetError, JetParams};
use crate::spectral::{divergence_tensor_cols, GridSpec, SpectralField, TensorField};

/// One jet family evaluated at a fixed time: the jet `W_(ξ)`, its
/// incompressibility corrector `W^c_(ξ)`, and the skew potential `V_(ξ)`
/// with `W + W^c = div V` (contraction over the second index of `V`).
///
/// All fields are renormalised by the measured grid mass so that the
/// sampled jet has exactly unit `L²` quadrature norm: the oscillation
/// cancellation `Σ a_ξ² ⨍(W⊗W) = ρId − R̊_ℓ` is then exact grid algebra
/// rather than holding only up to the quadrature error of `∫ψ²φ²`.
#[derive(Clone, Debug)]
pub struct JetFields {
    pub w: SpectralField,
    pub w_c: SpectralField,
    pub v: TensorField,
    /// Raw quadrature mass `vol·mean(ψ²φ²)` of the analytic jet before
    /// renormalisation; its distance from 1 is the quadrature error of the
    /// grid at this jet's scales.
    pub grid_mass: f64,
}

/// Reduce to the fundamental domain `[−π, π)`.
pub(crate) fn wrap_pi(y: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    y - two_pi * (y / two_pi).round()
}

/// Rescaled parallel argument `s` with `ψ_(ξ) = r_∥^{-1/2} ψ(s)`.
pub(crate) fn psi_arg(dir: &Direction, jp: &JetParams, t: f64, x: &[f64; 3]) -> f64 {
    let xi = dir.xi();
    let factor = jp.n_star as f64 * jp.r_perp * jp.lambda;
    let y = factor * (x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2] + jp.mu * t);
    wrap_pi(y) / jp.r_par
}

/// Rescaled transverse arguments `(z_1, z_2)/(c r_⊥)` and their radius
/// `ρ`, with `φ_(ξ) = (c r_⊥)^{-1} φ(ρ)` and `c` the support fraction
/// (shrinking the tube inside its lattice cell buys the packing margin).
pub(crate) fn phi_args(dir: &Direction, jp: &JetParams, x: &[f64; 3]) -> ([f64; 2], f64) {
    let factor = jp.n_star as f64 * jp.r_perp * jp.lambda;
    let width = jp.support * jp.r_perp;
    let mut arg = [0.0f64; 2];
    for (i, slot) in arg.iter_mut().enumerate() {
        let a = dir.frame(i);
        let proj = (0..3).map(|c| (x[c] - dir.shift[c]) * a[c]).sum::<f64>();
        *slot = wrap_pi(factor * proj) / width;
    }
    let rho = (arg[0] * arg[0] + arg[1] * arg[1]).sqrt();
    (arg, rho)
}

/// Evaluate `nfields` point functions over the full grid in parallel slabs
/// along the first axis (deterministic assembly order).
fn sample_grid<F>(grid: &GridSpec, nfields: usize, f: F) -> Vec<ArrayD<f64>>
where
    F: Fn(&[f64; 3], &mut [f64]) + Sync,
{
    let n = grid.points_per_axis();
    let coords: Vec<f64> = (0..n).map(|j| grid.coord(j)).collect();
    let slabs: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![vec![0.0f64; n * n]; nfields];
            let mut buf = vec![0.0f64; nfields];
            for j in 0..n {
                for k in 0..n {
                    let x = [coords[i], coords[j], coords[k]];
                    buf.fill(0.0);
                    f(&x, &mut buf);
                    for (c, v) in buf.iter().enumerate() {
                        out[c][j * n + k] = *v;
                    }
                }
            }
            out
        })
        .collect();
    let mut flats: Vec<Vec<f64>> = (0..nfields).map(|_| vec![0.0; grid.point_count()]).collect();
    for (i, slab) in slabs.into_iter().enumerate() {
        for (c, plane) in slab.into_iter().enumerate() {
            flats[c][i * n * n..(i + 1) * n * n].copy_from_slice(&plane);
        }
    }
    flats
        .into_iter()
        .map(|v| ArrayD::from_shape_vec(IxDyn(&grid.shape()), v).expect("flat length matches grid"))
        .collect()
}

fn check_resolution(jp: &JetParams, grid: &GridSpec) -> Result<(), JetError> {
    if grid.dim() != 3 {
        return Err(JetError::BadDimension(grid.dim()));
    }
    let need = jp.min_grid();
    let got = grid.points_per_axis();
    if got < need {
        return Err(JetError::UnderResolved { need, got });
    }
    Ok(())
}

/// Evaluate one jet family at time `t` on the grid.
///
/// Per point: `W = ξ ψ_(ξ) φ_(ξ)` and
/// `V = (n_*λ)^{-2} (∇Φ_(ξ) ⊗ ξ − ξ ⊗ ∇Φ_(ξ)) ψ_(ξ)`, with
/// `∇Φ_(ξ) = (n_*λ/r_⊥) Φ'(ρ) Σ_i (z_i/(r_⊥ρ)) A^i`. The corrector is then
/// formed spectrally as `W^c = div V − W` so that `W + W^c` is exactly
/// divergence-free in coefficients.
pub fn eval_jet(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: GridSpec,
) -> Result<JetFields, JetError> {
    check_resolution(jp, &grid)?;
    let dir = &ds.dirs[dir_index];
    let xi = dir.xi();
    let a1 = dir.frame(0);
    let a2 = dir.frame(1);
    let n_lambda = jp.n_star as f64 * jp.lambda;
    let psi_amp = 1.0 / jp.r_par.sqrt();
    let phi_amp = 1.0 / (jp.support * jp.r_perp);
    // Fields per point: W_0..W_2, then the independent skew entries
    // V_01, V_02, V_12.
    let vals = sample_grid(&grid, 6, |x, out| {
        let (arg, rho) = phi_args(dir, jp, x);
        if rho >= 1.0 {
            return;
        }
        let s = psi_arg(dir, jp, t, x);
        if s.abs() >= 1.0 {
            return;
        }
        let psi = psi_amp * profiles.psi(s);
        let phi = phi_amp * profiles.phi(rho);
        for c in 0..3 {
            out[c] = xi[c] * psi * phi;
        }
        // ∇Φ_(ξ): Φ'(ρ)/ρ extends smoothly through ρ = 0.
        let slope = profiles.cap_phi_d1_over_rho(rho) / jp.r_perp;
        let mut g = [0.0f64; 3];
        for c in 0..3 {
            g[c] = n_lambda * slope * (arg[0] * a1[c] + arg[1] * a2[c]);
        }
        let vscale = psi / (n_lambda * n_lambda);
        out[3] = vscale * (g[0] * xi[1] - xi[0] * g[1]);
        out[4] = vscale * (g[0] * xi[2] - xi[0] * g[2]);
        out[5] = vscale * (g[1] * xi[2] - xi[1] * g[2]);
    });
    // Grid mass of the raw samples: |W|² = ψ²φ² since |ξ| = 1.
    let mut mass = 0.0f64;
    for c in 0..3 {
        mass += vals[c].iter().map(|&x| x * x).sum::<f64>();
    }
    let grid_mass = mass * grid.cell_volume();
    let scale = 1.0 / grid_mass.sqrt();
    let mut vals = vals;
    for c in &mut vals {
        c.mapv_inplace(|x| x * scale);
    }
    let w = SpectralField::from_grid(grid, &vals[0..3])?;
    let zero = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
    let v_grid = vec![
        zero.clone(),
        vals[3].clone(),
        vals[4].clone(),
        vals[3].mapv(|v| -v),
        zero.clone(),
        vals[5].clone(),
        vals[4].mapv(|v| -v),
        vals[5].mapv(|v| -v),
        zero,
    ];
    let v = TensorField::from_grid(grid, &v_grid)?;
    let w_c = divergence_tensor_cols(&v).sub(&w)?;
    Ok(JetFields { w, w_c, v, grid_mass })
}

/// Time derivatives of one jet family: `Ẇ = ξ ψ̇_(ξ) φ_(ξ)` and
/// `V̇ = (n_*λ)^{-2} (∇Φ_(ξ) ⊗ ξ − ξ ⊗ ∇Φ_(ξ)) ψ̇_(ξ)`, where the fast phase
/// contributes `ψ̇_(ξ) = r_∥^{-1/2} ψ'(s) · n_* r_⊥ λ μ / r_∥`.
#[derive(Clone, Debug)]
pub struct JetRates {
    pub w_dot: SpectralField,
    pub v_dot: TensorField,
    /// Raw quadrature mass of `ψ²φ²` at this time, matching the
    /// normalisation used by `eval_jet` so that the rates share the jet's
    /// scale.  The (slow, quadrature-level) time variation of that scale is
    /// not differentiated; it lands in the reported commutator residuals.
    pub grid_mass: f64,
}

/// Evaluate the time derivative of one jet family at time `t`. Together
/// with the amplitude's own rate this gives
/// `∂_t(a V) = ȧ V + a V̇`, whose column divergence is `∂_t(a W + a W^c)`.
pub fn eval_jet_dt(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: GridSpec,
) -> Result<JetRates, JetError> {
    check_resolution(jp, &grid)?;
    let dir = &ds.dirs[dir_index];
    let xi = dir.xi();
    let a1 = dir.frame(0);
    let a2 = dir.frame(1);
    let n_lambda = jp.n_star as f64 * jp.lambda;
    let chain = jp.n_star as f64 * jp.r_perp * jp.lambda * jp.mu / jp.r_par;
    let psi_amp = 1.0 / jp.r_par.sqrt();
    let phi_amp = 1.0 / (jp.support * jp.r_perp);
    // Field 6 carries ψ²φ² so the pass measures the same grid mass that
    // `eval_jet` normalises by at this time.
    let vals = sample_grid(&grid, 7, |x, out| {
        let (arg, rho) = phi_args(dir, jp, x);
        if rho >= 1.0 {
            return;
        }
        let s = psi_arg(dir, jp, t, x);
        if s.abs() >= 1.0 {
            return;
        }
        let psi = psi_amp * profiles.psi(s);
        let psi_dot = psi_amp * profiles.psi_d1(s) * chain;
        let phi = phi_amp * profiles.phi(rho);
        for c in 0..3 {
            out[c] = xi[c] * psi_dot * phi;
        }
        let slope = profiles.cap_phi_d1_over_rho(rho) / jp.r_perp;
        let mut g = [0.0f64; 3];
        for c in 0..3 {
            g[c] = n_lambda * slope * (arg[0] * a1[c] + arg[1] * a2[c]);
        }
        let vscale = psi_dot / (n_lambda * n_lambda);
        out[3] = vscale * (g[0] * xi[1] - xi[0] * g[1]);
        out[4] = vscale * (g[0] * xi[2] - xi[0] * g[2]);
        out[5] = vscale * (g[1] * xi[2] - xi[1] * g[2]);
        out[6] = psi * psi * phi * phi;
    });
    let grid_mass = vals[6].iter().sum::<f64>() * grid.cell_volume();
    let scale = 1.0 / grid_mass.sqrt();
    let mut vals = vals;
    for c in vals.iter_mut().take(6) {
        c.mapv_inplace(|x| x * scale);
    }
    let w_dot = SpectralField::from_grid(grid, &vals[0..3])?;
    let zero = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
    let v_grid = vec![
        zero.clone(),
        vals[3].clone(),
        vals[4].clone(),
        vals[3].mapv(|v| -v),
        zero.clone(),
        vals[5].clone(),
        vals[4].mapv(|v| -v),
        vals[5].mapv(|v| -v),
        zero,
    ];
    let v_dot = TensorField::from_grid(grid, &v_grid)?;
    Ok(JetRates { w_dot, v_dot, grid_mass })
}

/// `(ψ_(ξ) φ_(ξ))²` sampled on the grid, carrying the same grid-mass
/// renormalisation as `eval_jet` (so it equals `|W_(ξ)|²` sample for
/// sample, and its grid mean times the volume is exactly 1).
pub fn psi2_phi2(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: GridSpec,
) -> Result<ArrayD<f64>, JetError> {
    check_resolution(jp, &grid)?;
    let dir = &ds.dirs[dir_index];
    let psi_amp2 = 1.0 / jp.r_par;
    let phi_amp2 = 1.0 / (jp.support * jp.r_perp).powi(2);
    let mut vals = sample_grid(&grid, 1, |x, out| {
        let (_, rho) = phi_args(dir, jp, x);
        if rho >= 1.0 {
            return;
        }
        let s = psi_arg(dir, jp, t, x);
        if s.abs() >= 1.0 {
            return;
        }
        let psi = profiles.psi(s);
        let phi = profiles.phi(rho);
        out[0] = psi_amp2 * psi * psi * phi_amp2 * phi * phi;
    });
    let mut arr = vals.remove(0);
    let grid_mass = arr.iter().sum::<f64>() * grid.cell_volume();
    arr.mapv_inplace(|x| x / grid_mass);
    Ok(arr)
}

/// Raw quadrature mass `vol·mean(ψ²φ²)` of one jet family at time `t` —
/// the quantity `eval_jet` divides out.  Its distance from 1 measures how
/// well the grid resolves the tubes (it is a scalar pass, so it stays
/// cheap on grids too large for the full tensor evaluation).
pub fn jet_grid_mass(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: GridSpec,
) -> Result<f64, JetError> {
    check_resolution(jp, &grid)?;
    let dir = &ds.dirs[dir_index];
    let psi_amp2 = 1.0 / jp.r_par;
    let phi_amp2 = 1.0 / (jp.support * jp.r_perp).powi(2);
    let vals = sample_grid(&grid, 1, |x, out| {
        let (_, rho) = phi_args(dir, jp, x);
        if rho >= 1.0 {
            return;
        }
        let s = psi_arg(dir, jp, t, x);
        if s.abs() >= 1.0 {
            return;
        }
        let psi = profiles.psi(s);
        let phi = profiles.phi(rho);
        out[0] = psi_amp2 * psi * psi * phi_amp2 * phi * phi;
    });
    Ok(vals[0].iter().sum::<f64>() * grid.cell_volume())
}

/// `∂_t (ψ_(ξ) φ_(ξ))² = 2 ψ_(ξ) ψ̇_(ξ) φ_(ξ)²` sampled on the grid; the
/// time derivative carries the chain factor `n_* r_⊥ λ μ / r_∥`, and the
/// samples are scaled by the same grid mass as `psi2_phi2` at this time.
pub fn ddt_psi2_phi2(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: GridSpec,
) -> Result<ArrayD<f64>, JetError> {
    check_resolution(jp, &grid)?;
    let dir = &ds.dirs[dir_index];
    let chain = jp.n_star as f64 * jp.r_perp * jp.lambda * jp.mu / jp.r_par;
    let psi_amp2 = 1.0 / jp.r_par;
    let phi_amp2 = 1.0 / (jp.support * jp.r_perp).powi(2);
    let mut vals = sample_grid(&grid, 2, |x, out| {
        let (_, rho) = phi_args(dir, jp, x);
        if rho >= 1.0 {
            return;
        }
        let s = psi_arg(dir, jp, t, x);
        if s.abs() >= 1.0 {
            return;
        }
        let psi = profiles.psi(s);
        let dpsi = profiles.psi_d1(s) * chain;
        let phi = profiles.phi(rho);
        out[0] = 2.0 * psi_amp2 * psi * dpsi * phi_amp2 * phi * phi;
        out[1] = psi_amp2 * psi * psi * phi_amp2 * phi * phi;
    });
    let mass = vals[1].iter().sum::<f64>() * grid.cell_volume();
    let mut arr = vals.remove(0);
    arr.mapv_inplace(|x| x / mass);
    Ok(arr)
}

/// Physical distance from `x` to the nearest tube axis of one jet family
/// (axes sit where both transverse lattice coordinates vanish mod the tube
/// spacing). Used as the independent oracle for support disjointness.
pub fn transverse_distance(ds: &DirectionSet, dir_index: usize, jp: &JetParams, x: &[f64; 3]) -> f64 {
    let dir = &ds.dirs[dir_index];
    let spacing = jp.tube_spacing();
    let mut sum = 0.0;
    for i in 0..2 {
        let a = dir.frame(i);
        let proj = (0..3).map(|c| (x[c] - dir.shift[c]) * a[c]).sum::<f64>();
        let delta = proj - spacing * (proj / spacing).round();
        sum += delta * delta;
    }
    sum.sqrt()
}
