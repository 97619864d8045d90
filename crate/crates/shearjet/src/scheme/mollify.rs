//! Causal space-time mollification.
//!
//! Time mollification is a strictly past-only quadrature of a smooth kernel
//! supported in `(0, ℓ)`: the mollified trajectory at time `t` is a fixed
//! weighted combination of the snapshots `t − j·dt`, `j = 1..n−1`, with
//! `n = ℓ/dt`. The derivative kernel is taken as the centered difference of
//! the value kernel's samples. That choice is a second-order-consistent
//! discretisation of convolution with the kernel's time derivative, and it
//! makes the centered time difference of a mollified trajectory agree
//! *exactly* with the mollification of the centered time difference on the
//! snapshot lattice — the property the residual closure relies on.
//!
//! Spatial mollification is a Gaussian Fourier multiplier `e^{−ℓ²|n|²/2}`
//! (a positive smoothing kernel; its exact shape never enters any identity,
//! only the same multiplier must be applied to every field of one level).

use ndarray::ArrayD;
use num_complex::Complex64;

use crate::scheme::SchemeError;
use crate::spectral::{GridSpec, SpectralField, TensorField, Trajectory};

/// Smooth kernel shape on `(0, 1)`: the classic bump `exp(−1/(u(1−u)))`,
/// vanishing to all orders at both endpoints.
fn kernel(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

/// Discrete causal mollifier at scale `ℓ` on a snapshot lattice of spacing
/// `dt`, with `n = ℓ/dt ∈ N`.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub ell: f64,
    pub dt: f64,
    /// Value weights for samples at `t − j·dt`, index `j = 0..=n`;
    /// `weights[0] = weights[n] = 0` and the sum is exactly renormalised
    /// to 1, so constants are reproduced.
    pub weights: Vec<f64>,
    /// Derivative weights `(weights[j+1] − weights[j−1])/(2dt)` (zero-padded
    /// at the ends); they sum to 0, so constants have zero derivative.
    pub dweights: Vec<f64>,
}

impl Mollifier {
    pub fn new(ell: f64, dt: f64) -> Result<Self, SchemeError> {
        if !(ell > 0.0 && dt > 0.0) {
            return Err(SchemeError::BadParams(format!(
                "mollifier needs positive scales, got ℓ = {ell}, dt = {dt}"
            )));
        }
        let ratio = ell / dt;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 || n < 8.0 {
            return Err(SchemeError::BadParams(format!(
                "ℓ/dt must be an integer ≥ 8, got {ratio}"
            )));
        }
        let n = n as usize;
        let mut weights: Vec<f64> = (0..=n).map(|j| kernel(j as f64 / n as f64)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let at = |j: i64| -> f64 {
            if j < 0 || j as usize > n {
                0.0
            } else {
                weights[j as usize]
            }
        };
        let dweights: Vec<f64> =
            (0..=n as i64).map(|j| (at(j + 1) - at(j - 1)) / (2.0 * dt)).collect();
        Ok(Self { ell, dt, weights, dweights })
    }

    /// Number of strictly-past snapshots the value weights reach back to.
    pub fn past_depth(&self) -> usize {
        self.weights.len() - 1
    }

    /// Gather the snapshots `t − j·dt` for `j = 0..=n` from a trajectory.
    /// With `frozen_past` the window is extended below `t0` by the first
    /// snapshot (fields are frozen at their initial value); otherwise an
    /// insufficient window is an error.
    pub(crate) fn sample_indices<T>(
        &self,
        traj: &Trajectory<T>,
        t: f64,
        frozen_past: bool,
    ) -> Result<Vec<usize>, SchemeError> {
        if (traj.dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(SchemeError::BadParams(format!(
                "trajectory spacing {} does not match mollifier spacing {}",
                traj.dt, self.dt
            )));
        }
        let n = self.past_depth();
        let pos = (t - traj.t0) / traj.dt;
        let i_t = pos.round();
        if (pos - i_t).abs() > 1e-9 || i_t < -0.5 || i_t as usize >= traj.len() {
            return Err(SchemeError::BadParams(format!(
                "time {t} is not a snapshot of the trajectory"
            )));
        }
        let i_t = i_t as i64;
        if !frozen_past && i_t < n as i64 {
            return Err(SchemeError::WindowTooShort { need: n, have: i_t.max(0) as usize });
        }
        Ok((0..=n as i64).map(|j| (i_t - j).max(0) as usize).collect())
    }

    fn combine_fields(
        samples: &[&SpectralField],
        coeffs: &[f64],
    ) -> Result<SpectralField, SchemeError> {
        let first = samples[0];
        let mut out = SpectralField::zeros(first.grid(), first.ncomp());
        out.mean_free = true;
        out.div_free = true;
        for (s, &c) in samples.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            first.check_same_grid(s)?;
            for (o, a) in out.comps_mut().iter_mut().zip(s.comps()) {
                o.zip_mut_with(a, |x, &y| *x += c * y);
            }
            out.mean_free &= s.mean_free;
            out.div_free &= s.div_free;
        }
        Ok(out)
    }

    fn combine_tensors(
        samples: &[&TensorField],
        coeffs: &[f64],
    ) -> Result<TensorField, SchemeError> {
        let first = samples[0];
        let mut out = TensorField::zeros(first.grid());
        out.symmetric = true;
        out.traceless = true;
        for (s, &c) in samples.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            first.check_same_grid(s)?;
            for (o, a) in out.comps_mut().iter_mut().zip(s.comps()) {
                o.zip_mut_with(a, |x, &y| *x += c * y);
            }
            out.symmetric &= s.symmetric;
            out.traceless &= s.traceless;
        }
        Ok(out)
    }

    /// Time-mollified vector field at snapshot time `t`.
    pub fn mollify_field(
        &self,
        traj: &Trajectory<SpectralField>,
        t: f64,
        frozen_past: bool,
    ) -> Result<SpectralField, SchemeError> {
        let idx = self.sample_indices(traj, t, frozen_past)?;
        let samples: Vec<&SpectralField> = idx.iter().map(|&i| &traj.snaps[i]).collect();
        Self::combine_fields(&samples, &self.weights)
    }

    /// Discrete time derivative of the mollified vector field at `t`.
    pub fn ddt_field(
        &self,
        traj: &Trajectory<SpectralField>,
        t: f64,
        frozen_past: bool,
    ) -> Result<SpectralField, SchemeError> {
        let idx = self.sample_indices(traj, t, frozen_past)?;
        let samples: Vec<&SpectralField> = idx.iter().map(|&i| &traj.snaps[i]).collect();
        Self::combine_fields(&samples, &self.dweights)
    }

    /// Time-mollified tensor field at snapshot time `t`.
    pub fn mollify_tensor(
        &self,
        traj: &Trajectory<TensorField>,
        t: f64,
        frozen_past: bool,
    ) -> Result<TensorField, SchemeError> {
        let idx = self.sample_indices(traj, t, frozen_past)?;
        let samples: Vec<&TensorField> = idx.iter().map(|&i| &traj.snaps[i]).collect();
        Self::combine_tensors(&samples, &self.weights)
    }

    /// Discrete time derivative of the mollified tensor field at `t`.
    pub fn ddt_tensor(
        &self,
        traj: &Trajectory<TensorField>,
        t: f64,
        frozen_past: bool,
    ) -> Result<TensorField, SchemeError> {
        let idx = self.sample_indices(traj, t, frozen_past)?;
        let samples: Vec<&TensorField> = idx.iter().map(|&i| &traj.snaps[i]).collect();
        Self::combine_tensors(&samples, &self.dweights)
    }

    /// Time-mollified scalar sequence at `t` (e.g. the energy gap).
    pub fn mollify_scalar(
        &self,
        traj: &Trajectory<f64>,
        t: f64,
        frozen_past: bool,
    ) -> Result<f64, SchemeError> {
        let idx = self.sample_indices(traj, t, frozen_past)?;
        Ok(idx.iter().zip(&self.weights).map(|(&i, &w)| w * traj.snaps[i]).sum())
    }

    /// Discrete time derivative of the mollified scalar at `t`.
    pub fn ddt_scalar(
        &self,
        traj: &Trajectory<f64>,
        t: f64,
        frozen_past: bool,
    ) -> Result<f64, SchemeError> {
        let idx = self.sample_indices(traj, t, frozen_past)?;
        Ok(idx.iter().zip(&self.dweights).map(|(&i, &w)| w * traj.snaps[i]).sum())
    }
}

fn gaussian_multiplier(grid: &GridSpec, comp: &mut ArrayD<Complex64>, ell: f64) {
    crate::spectral::ops::apply_multiplier(grid, comp, |freqs| {
        let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
        Complex64::new((-0.5 * ell * ell * n2).exp(), 0.0)
    });
}

/// Spatial mollification of a vector field: Gaussian multiplier at scale `ℓ`.
pub fn spatial_mollify(u: &SpectralField, ell: f64) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    for c in out.comps_mut() {
        gaussian_multiplier(&grid, c, ell);
    }
    out
}

/// Spatial mollification of a tensor field.
pub fn spatial_mollify_tensor(t: &TensorField, ell: f64) -> TensorField {
    let grid = t.grid();
    let mut out = t.clone();
    for c in out.comps_mut() {
        gaussian_multiplier(&grid, c, ell);
    }
    out
}
