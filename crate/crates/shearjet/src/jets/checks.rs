//! Quadrature checks of the jet product structure: the `L^p` factorization
//! of mixed `ψ`/`φ` products and the improved Hölder inequality for
//! products of slow and fast functions.

use ndarray::ArrayD;

use super::directions::DirectionSet;
use super::eval::{phi_args, psi_arg, wrap_pi};
use super::profiles::Profiles;
use super::{JetError, JetParams};
use crate::spectral::GridSpec;

/// One product-factorization test case: the torus function
/// `D_axis ∂_t^N (ψ_(ξ)^n) · φ_(ξ)^m` and the `L^p` exponent. At most one
/// first-order derivative (spatial or temporal) on the `ψ` factor.
#[derive(Clone, Copy, Debug)]
pub struct FactorSpec {
    /// Spatial axis of a single first derivative on the `ψ` factor.
    pub dpsi_axis: Option<usize>,
    /// Time-derivative order on the `ψ` factor (0 or 1).
    pub dt_order: usize,
    pub n: u32,
    pub m: u32,
    pub p: f64,
}

fn lp_from_power_sum(sum_abs_p: f64, cell: f64, p: f64) -> f64 {
    (sum_abs_p * cell).powf(1.0 / p)
}

/// Verify `‖F·G‖_{L^p} = (2π)^{-d/p} ‖F‖_{L^p} ‖G‖_{L^p}` for the two jet
/// factors `F = D ∂_t^N ψ_(ξ)^n` and `G = φ_(ξ)^m`, which depend on
/// complementary linear coordinates. Both sides are evaluated by grid
/// quadrature from the analytic profiles; returns `(lhs, rhs)`.
pub fn factorization_check(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    spec: &FactorSpec,
    t: f64,
    grid: GridSpec,
) -> Result<(f64, f64), JetError> {
    if grid.dim() != 3 {
        return Err(JetError::BadDimension(grid.dim()));
    }
    if spec.n == 0 || spec.m == 0 {
        return Err(JetError::BadParams("factor powers must be ≥ 1".into()));
    }
    if !(spec.p >= 1.0 && spec.p.is_finite()) {
        return Err(JetError::BadParams(format!("L^p exponent must be finite and ≥ 1, got {}", spec.p)));
    }
    if spec.dt_order > 1 || (spec.dt_order > 0 && spec.dpsi_axis.is_some()) {
        return Err(JetError::BadParams(
            "at most one first-order derivative (spatial or temporal) is supported".into(),
        ));
    }
    let need = jp.min_grid();
    if grid.points_per_axis() < need {
        return Err(JetError::UnderResolved { need, got: grid.points_per_axis() });
    }
    let dir = &ds.dirs[dir_index];
    let xi = dir.xi();
    let factor = jp.n_star as f64 * jp.r_perp * jp.lambda;
    let psi_amp = 1.0 / jp.r_par.sqrt();
    let phi_amp = 1.0 / (jp.support * jp.r_perp);
    // Chain factor of the single derivative in the rescaled argument `s`.
    let chain = match (spec.dpsi_axis, spec.dt_order) {
        (Some(ax), _) => Some(factor * xi[ax] / jp.r_par),
        (None, 1) => Some(factor * jp.mu / jp.r_par),
        (None, _) => None,
    };
    let n = grid.points_per_axis();
    let coords: Vec<f64> = (0..n).map(|j| grid.coord(j)).collect();
    let (mut sum_fg, mut sum_f, mut sum_g) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [coords[i], coords[j], coords[k]];
                let s = psi_arg(dir, jp, t, &x);
                let psi = psi_amp * profiles.psi(s);
                let f = match chain {
                    None => psi.powi(spec.n as i32),
                    Some(c) => {
                        spec.n as f64
                            * psi.powi(spec.n as i32 - 1)
                            * psi_amp
                            * profiles.psi_d1(s)
                            * c
                    }
                };
                let (_, rho) = phi_args(dir, jp, &x);
                let g = (phi_amp * profiles.phi(rho)).powi(spec.m as i32);
                sum_fg += (f * g).abs().powf(spec.p);
                sum_f += f.abs().powf(spec.p);
                sum_g += g.abs().powf(spec.p);
            }
        }
    }
    let cell = grid.cell_volume();
    let lhs = lp_from_power_sum(sum_fg, cell, spec.p);
    let norm_f = lp_from_power_sum(sum_f, cell, spec.p);
    let norm_g = lp_from_power_sum(sum_g, cell, spec.p);
    let rhs = grid.volume().powf(-1.0 / spec.p) * norm_f * norm_g;
    Ok((lhs, rhs))
}

/// Verify the transport identity `div(W_(ξ) ⊗ W_(ξ)) = μ^{-1} ∂_t(ψ_(ξ)²φ_(ξ)²) ξ`
/// by pointwise evaluation on the grid. The left side is assembled by the
/// generic product rule `∂_j(ξ_iξ_j ψ²φ²)` from the analytic profile
/// derivatives, including the transverse `∇φ` contribution whose
/// cancellation against `ξ` is what the identity asserts; returns
/// `(sup |lhs − rhs|, sup |rhs|)` over the grid.
pub fn transport_identity_check(
    ds: &DirectionSet,
    dir_index: usize,
    jp: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: GridSpec,
) -> Result<(f64, f64), JetError> {
    if grid.dim() != 3 {
        return Err(JetError::BadDimension(grid.dim()));
    }
    let need = jp.min_grid();
    if grid.points_per_axis() < need {
        return Err(JetError::UnderResolved { need, got: grid.points_per_axis() });
    }
    let dir = &ds.dirs[dir_index];
    let xi = dir.xi();
    let a1 = dir.frame(0);
    let a2 = dir.frame(1);
    let factor = jp.n_star as f64 * jp.r_perp * jp.lambda;
    let psi_amp = 1.0 / jp.r_par.sqrt();
    let phi_amp = 1.0 / (jp.support * jp.r_perp);
    let n = grid.points_per_axis();
    let coords: Vec<f64> = (0..n).map(|j| grid.coord(j)).collect();
    let (mut max_err, mut max_rhs) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [coords[i], coords[j], coords[k]];
                let (arg, rho) = phi_args(dir, jp, &x);
                if rho >= 1.0 {
                    continue;
                }
                let s = psi_arg(dir, jp, t, &x);
                if s.abs() >= 1.0 {
                    continue;
                }
                let psi = psi_amp * profiles.psi(s);
                let dpsi_ds = psi_amp * profiles.psi_d1(s);
                let phi = phi_amp * profiles.phi(rho);
                let dphi_drho = phi_amp * profiles.phi_d1(rho);
                // ∇ρ = (factor/r_⊥) (z₁A¹ + z₂A²)/ρ; smooth limit not needed
                // because φ' vanishes at the axis.
                let mut grad_p = [0.0f64; 3];
                let par = 2.0 * psi * dpsi_ds * factor / jp.r_par * phi * phi;
                for c in 0..3 {
                    grad_p[c] = par * xi[c];
                    if rho > 1e-12 {
                        let drho = factor / (jp.support * jp.r_perp)
                            * (arg[0] * a1[c] + arg[1] * a2[c])
                            / rho;
                        grad_p[c] += psi * psi * 2.0 * phi * dphi_drho * drho;
                    }
                }
                let xi_dot_grad: f64 = (0..3).map(|c| xi[c] * grad_p[c]).sum();
                let ddt_p = 2.0 * psi * dpsi_ds * factor * jp.mu / jp.r_par * phi * phi;
                for c in 0..3 {
                    let lhs = xi[c] * xi_dot_grad;
                    let rhs = xi[c] * ddt_p / jp.mu;
                    max_err = max_err.max((lhs - rhs).abs());
                    max_rhs = max_rhs.max(rhs.abs());
                }
            }
        }
    }
    Ok((max_err, max_rhs))
}

/// Result of one improved-Hölder measurement: `lhs = ‖f · g(κ·)‖_{L^p}`,
/// `rhs = (‖f‖_{L^p} + κ^{-1/p} ‖f‖_{C¹}) ‖g‖_{L^p}`, and their ratio.
#[derive(Clone, Copy, Debug)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Measure the improved Hölder inequality for a slow factor `f` and a fast
/// factor `g(κ·)` by grid quadrature; `‖f‖_{C¹}` is estimated as
/// `max|f| + max|∇f|` via centered differences.
pub fn improved_holder_check<F, G>(
    f: F,
    g: G,
    kappa: u32,
    p: f64,
    grid: GridSpec,
) -> Result<HolderReport, JetError>
where
    F: Fn(&[f64; 3]) -> f64,
    G: Fn(&[f64; 3]) -> f64,
{
    if grid.dim() != 3 {
        return Err(JetError::BadDimension(grid.dim()));
    }
    if kappa == 0 {
        return Err(JetError::BadParams("rescaling frequency κ must be ≥ 1".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(JetError::BadParams(format!("L^p exponent must be finite and ≥ 1, got {p}")));
    }
    let n = grid.points_per_axis();
    let coords: Vec<f64> = (0..n).map(|j| grid.coord(j)).collect();
    let shape = grid.shape();
    let mut f_vals = ArrayD::<f64>::zeros(ndarray::IxDyn(&shape));
    let (mut sum_fg, mut sum_f, mut sum_g) = (0.0f64, 0.0f64, 0.0f64);
    let mut max_f = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = [coords[i], coords[j], coords[k]];
                let fv = f(&x);
                f_vals[[i, j, k]] = fv;
                let fast = [
                    wrap_pi(kappa as f64 * x[0]),
                    wrap_pi(kappa as f64 * x[1]),
                    wrap_pi(kappa as f64 * x[2]),
                ];
                let gv_fast = g(&fast);
                let gv = g(&x);
                sum_fg += (fv * gv_fast).abs().powf(p);
                sum_f += fv.abs().powf(p);
                sum_g += gv.abs().powf(p);
                max_f = max_f.max(fv.abs());
            }
        }
    }
    // Gradient bound from centered differences of the sampled slow factor.
    let h = grid.spacing();
    let mut max_grad = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut g2 = 0.0;
                for ax in 0..3 {
                    let mut up = [i, j, k];
                    let mut dn = [i, j, k];
                    up[ax] = (up[ax] + 1) % n;
                    dn[ax] = (dn[ax] + n - 1) % n;
                    let d = (f_vals[up] - f_vals[dn]) / (2.0 * h);
                    g2 += d * d;
                }
                max_grad = max_grad.max(g2.sqrt());
            }
        }
    }
    let cell = grid.cell_volume();
    let lhs = lp_from_power_sum(sum_fg, cell, p);
    let norm_f = lp_from_power_sum(sum_f, cell, p);
    let norm_g = lp_from_power_sum(sum_g, cell, p);
    let c1 = max_f + max_grad;
    let rhs = (norm_f + (kappa as f64).powf(-1.0 / p) * c1) * norm_g;
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HolderReport { lhs, rhs, ratio })
}
