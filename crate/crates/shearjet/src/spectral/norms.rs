//! Norm evaluation on grid quadrature: Lebesgue, Bessel-potential, spatial
//! `C^N`, and time-Hölder seminorms of trajectories.

use ndarray::ArrayD;

use super::field::{SpectralField, TensorField, Trajectory};
use super::ops::{derivative, fractional_multiplier, FracKind};
use super::SpectralError;

/// Function space selector for [`norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Space {
    /// `L^p` with `1 ≤ p ≤ ∞` (`f64::INFINITY` for the sup norm).
    Lp(f64),
    /// Bessel-potential `W^{s,p}`: apply `(Id−Δ)^{s/2}`, then `L^p`.
    Wsp(f64, f64),
    /// Spatial `C^N`: sum of sup norms of all derivatives `|α| ≤ N`.
    CN(usize),
}

/// Pointwise Euclidean magnitude of a vector field on the grid.
fn magnitude(values: &[ArrayD<f64>]) -> ArrayD<f64> {
    let mut mag = values[0].mapv(|v| v * v);
    for comp in &values[1..] {
        mag = mag + comp.mapv(|v| v * v);
    }
    mag.mapv(f64::sqrt)
}

fn lp_of_magnitude(mag: &ArrayD<f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        mag.iter().cloned().fold(0.0, f64::max)
    } else {
        (mag.iter().map(|&v| v.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// `L^p` norm of a vector field by grid quadrature.
pub fn lp_norm(u: &SpectralField, p: f64) -> Result<f64, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::BadExponent(p));
    }
    let mag = magnitude(&u.to_grid());
    Ok(lp_of_magnitude(&mag, p, u.grid().cell_volume()))
}

/// `L^p` norm of a tensor field (pointwise Frobenius magnitude).
pub fn tensor_lp_norm(t: &TensorField, p: f64) -> Result<f64, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::BadExponent(p));
    }
    let mag = magnitude(&t.to_grid());
    Ok(lp_of_magnitude(&mag, p, t.grid().cell_volume()))
}

/// Enumerate all multi-indices over `d` axes with total order ≤ `max_order`.
fn multi_indices(d: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    for _ in 0..max_order {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for alpha in &out {
            let total: usize = alpha.iter().sum();
            if total < max_order {
                for ax in 0..d {
                    let mut a = alpha.clone();
                    a[ax] += 1;
                    if !next.contains(&a) {
                        next.push(a);
                    }
                }
            }
        }
        for a in next {
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    out
}

/// Norm of a vector field in the selected space.
pub fn norm(u: &SpectralField, space: Space) -> Result<f64, SpectralError> {
    match space {
        Space::Lp(p) => lp_norm(u, p),
        Space::Wsp(s, p) => {
            let bessel = fractional_multiplier(u, s, FracKind::Bessel)?;
            lp_norm(&bessel, p)
        }
        Space::CN(n) => {
            let mut total = 0.0;
            for alpha in multi_indices(u.grid().dim(), n) {
                let du = derivative(u, &alpha);
                total += lp_norm(&du, f64::INFINITY)?;
            }
            Ok(total)
        }
    }
}

/// Time-Hölder seminorm of a trajectory: the maximal difference quotient
/// `‖u(t_i) − u(t_j)‖_{L²} / |t_i − t_j|^γ` over snapshot pairs. This is a
/// lower bound of the continuum seminorm (quotients are only sampled).
pub fn holder_time_seminorm(
    traj: &Trajectory<SpectralField>,
    gamma: f64,
) -> Result<f64, SpectralError> {
    if traj.len() < 2 {
        return Err(SpectralError::TooFewSnapshots {
            need: 2,
            got: traj.len(),
        });
    }
    let mut best: f64 = 0.0;
    for i in 0..traj.len() {
        for j in (i + 1)..traj.len() {
            let diff = traj.snaps[j].sub(&traj.snaps[i])?;
            let dtau = (traj.time(j) - traj.time(i)).abs();
            best = best.max(lp_norm(&diff, 2.0)? / dtau.powf(gamma));
        }
    }
    Ok(best)
}

/// `L²` norm straight from coefficients via Parseval:
/// `‖u‖² = (2π)^d Σ_n |û_n|²`.
pub fn l2_norm_parseval(u: &SpectralField) -> f64 {
    let vol = u.grid().volume();
    let sum: f64 = u
        .comps()
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v.norm_sqr())
        .sum();
    (vol * sum).sqrt()
}
