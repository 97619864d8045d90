//! Grid specification and the spectral vector / tensor field containers.

use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::SpectralError;

/// Uniform grid on the torus `[-π, π]^d` with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
}

impl GridSpec {
    /// A `d`-dimensional grid with `n` points per axis; `n` even and ≥ 8,
    /// `d ≥ 3`.
    pub fn new(d: usize, n: usize) -> Result<Self, SpectralError> {
        if d < 3 {
            return Err(SpectralError::BadDimension(d));
        }
        if n < 8 || n % 2 != 0 {
            return Err(SpectralError::BadGrid(n));
        }
        Ok(Self { d, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Largest representable frequency magnitude, `n/2 − 1`.
    pub fn band_limit(&self) -> usize {
        self.n / 2 - 1
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    /// Signed frequency of DFT index `idx` along one axis.
    pub fn freq(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Grid coordinate `x_j = -π + 2π j / n`.
    pub fn coord(&self, j: usize) -> f64 {
        -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / self.n as f64
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// Quadrature weight of one grid cell, `(2π/n)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Torus volume `(2π)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.d as i32)
    }

    pub fn point_count(&self) -> usize {
        self.n.pow(self.d as u32)
    }
}

/// Enforce exact Hermitian symmetry `â(-n) = conj(â(n))` on one component.
fn hermitianize(a: &mut ArrayD<Complex64>) {
    let shape: Vec<usize> = a.shape().to_vec();
    let src = a.clone();
    let mut mirror = vec![0usize; shape.len()];
    for (idx, v) in a.indexed_iter_mut() {
        for (m, (&i, &n)) in mirror.iter_mut().zip(idx.slice().iter().zip(&shape)) {
            *m = (n - i) % n;
        }
        let conj = src[IxDyn(&mirror)].conj();
        *v = 0.5 * (*v + conj);
    }
}

/// Zero the Nyquist plane (index `n/2`), which has no signed frequency.
fn zero_nyquist(a: &mut ArrayD<Complex64>, n: usize) {
    let ny = n / 2;
    for (idx, v) in a.indexed_iter_mut() {
        if idx.slice().iter().any(|&i| i == ny) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
}

fn forward_component(grid: &GridSpec, values: &ArrayD<f64>) -> ArrayD<Complex64> {
    let mut c = values.mapv(|x| Complex64::new(x, 0.0));
    fft::dft_all_axes(&mut c, false);
    let scale = 1.0 / grid.point_count() as f64;
    c.mapv_inplace(|v| v * scale);
    fft::apply_origin_phase(&mut c);
    zero_nyquist(&mut c, grid.points_per_axis());
    hermitianize(&mut c);
    c
}

fn inverse_component(grid: &GridSpec, coeffs: &ArrayD<Complex64>) -> ArrayD<f64> {
    let mut c = coeffs.clone();
    fft::apply_origin_phase(&mut c);
    fft::dft_all_axes(&mut c, true);
    let _ = grid;
    c.mapv(|v| v.re)
}

/// Band-limited real vector field stored as Fourier coefficients.
///
/// `comps.len()` is the number of components (`d` for velocities, 1 for
/// scalars such as the pressure). The optional `mean_free` / `div_free`
/// flags record structure that operators preserve; setting them projects.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: GridSpec,
    comps: Vec<ArrayD<Complex64>>,
    pub mean_free: bool,
    pub div_free: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, ncomp: usize) -> Self {
        let comps = (0..ncomp)
            .map(|_| ArrayD::zeros(IxDyn(&grid.shape())))
            .collect();
        Self {
            grid,
            comps,
            mean_free: false,
            div_free: false,
        }
    }

    /// Wrap raw coefficient arrays (already band-limited and Hermitian).
    pub fn from_coeffs(grid: GridSpec, comps: Vec<ArrayD<Complex64>>) -> Result<Self, SpectralError> {
        for c in &comps {
            if c.shape() != grid.shape().as_slice() {
                return Err(SpectralError::ShapeMismatch {
                    expected: grid.shape(),
                    got: c.shape().to_vec(),
                });
            }
        }
        Ok(Self {
            grid,
            comps,
            mean_free: false,
            div_free: false,
        })
    }

    /// Transform real grid values to Fourier coefficients.
    pub fn from_grid(grid: GridSpec, values: &[ArrayD<f64>]) -> Result<Self, SpectralError> {
        for v in values {
            if v.shape() != grid.shape().as_slice() {
                return Err(SpectralError::ShapeMismatch {
                    expected: grid.shape(),
                    got: v.shape().to_vec(),
                });
            }
        }
        let comps = values.iter().map(|v| forward_component(&grid, v)).collect();
        Ok(Self {
            grid,
            comps,
            mean_free: false,
            div_free: false,
        })
    }

    /// Transform back to real grid values.
    pub fn to_grid(&self) -> Vec<ArrayD<f64>> {
        self.comps
            .iter()
            .map(|c| inverse_component(&self.grid, c))
            .collect()
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, i: usize) -> &ArrayD<Complex64> {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut ArrayD<Complex64> {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[ArrayD<Complex64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [ArrayD<Complex64>] {
        &mut self.comps
    }

    /// Zero the `n = 0` mode of every component and set the flag.
    pub fn make_mean_free(&mut self) {
        let zero = IxDyn(&vec![0; self.grid.dim()]);
        for c in &mut self.comps {
            c[zero.clone()] = Complex64::new(0.0, 0.0);
        }
        self.mean_free = true;
    }

    pub fn mean(&self) -> Vec<Complex64> {
        let zero = IxDyn(&vec![0; self.grid.dim()]);
        self.comps.iter().map(|c| c[zero.clone()]).collect()
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), SpectralError> {
        if self.grid != other.grid || self.ncomp() != other.ncomp() {
            return Err(SpectralError::GridMismatch);
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), SpectralError> {
        self.check_same_grid(other)?;
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            *a += b;
        }
        self.mean_free &= other.mean_free;
        self.div_free &= other.div_free;
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.check_same_grid(other)?;
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            *a -= b;
        }
        out.mean_free = self.mean_free && other.mean_free;
        out.div_free = self.div_free && other.div_free;
        Ok(out)
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            c.mapv_inplace(|v| v * s);
        }
    }
}

/// Band-limited real matrix field (`d×d` components, row-major).
#[derive(Clone, Debug)]
pub struct TensorField {
    grid: GridSpec,
    comps: Vec<ArrayD<Complex64>>,
    pub symmetric: bool,
    pub traceless: bool,
}

impl TensorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let d = grid.dim();
        let comps = (0..d * d)
            .map(|_| ArrayD::zeros(IxDyn(&grid.shape())))
            .collect();
        Self {
            grid,
            comps,
            symmetric: false,
            traceless: false,
        }
    }

    pub fn from_grid(grid: GridSpec, values: &[ArrayD<f64>]) -> Result<Self, SpectralError> {
        let d = grid.dim();
        if values.len() != d * d {
            return Err(SpectralError::ComponentMismatch {
                expected: d * d,
                got: values.len(),
            });
        }
        let f = SpectralField::from_grid(grid, values)?;
        Ok(Self {
            grid,
            comps: f.comps,
            symmetric: false,
            traceless: false,
        })
    }

    pub fn to_grid(&self) -> Vec<ArrayD<f64>> {
        self.comps
            .iter()
            .map(|c| inverse_component(&self.grid, c))
            .collect()
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Flat index of entry `(i, j)`.
    pub fn entry_index(&self, i: usize, j: usize) -> usize {
        i * self.grid.dim() + j
    }

    pub fn comp(&self, i: usize, j: usize) -> &ArrayD<Complex64> {
        &self.comps[self.entry_index(i, j)]
    }

    pub fn comp_mut(&mut self, i: usize, j: usize) -> &mut ArrayD<Complex64> {
        let k = self.entry_index(i, j);
        &mut self.comps[k]
    }

    pub fn comps(&self) -> &[ArrayD<Complex64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [ArrayD<Complex64>] {
        &mut self.comps
    }

    /// Row `i` as a vector field (clones the coefficients).
    pub fn row(&self, i: usize) -> SpectralField {
        let d = self.grid.dim();
        let comps = (0..d)
            .map(|j| self.comp(i, j).clone())
            .collect();
        SpectralField::from_coeffs(self.grid, comps).expect("row shares the grid")
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), SpectralError> {
        self.check_same_grid(other)?;
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            *a += b;
        }
        self.symmetric &= other.symmetric;
        self.traceless &= other.traceless;
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.check_same_grid(other)?;
        let mut out = self.clone();
        for (a, b) in out.comps.iter_mut().zip(&other.comps) {
            *a -= b;
        }
        out.symmetric = self.symmetric && other.symmetric;
        out.traceless = self.traceless && other.traceless;
        Ok(out)
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            c.mapv_inplace(|v| v * s);
        }
    }

    /// Trace as a scalar spectral field (one component).
    pub fn trace(&self) -> SpectralField {
        let d = self.grid.dim();
        let mut t = ArrayD::zeros(IxDyn(&self.grid.shape()));
        for i in 0..d {
            t += self.comp(i, i);
        }
        SpectralField::from_coeffs(self.grid, vec![t]).expect("trace shares the grid")
    }

    /// Remove the pointwise trace: `T − (tr T / d) Id`.
    pub fn make_traceless(&mut self) {
        let d = self.grid.dim();
        let tr = self.trace();
        let scale = 1.0 / d as f64;
        for i in 0..d {
            let k = self.entry_index(i, i);
            self.comps[k] = &self.comps[k] - &tr.comp(0).mapv(|v| v * scale);
        }
        self.traceless = true;
    }

    pub fn max_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Uniformly time-stamped sequence of snapshots sharing one grid.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub t0: f64,
    pub dt: f64,
    pub snaps: Vec<T>,
}

impl<T> Trajectory<T> {
    pub fn new(t0: f64, dt: f64, snaps: Vec<T>) -> Self {
        Self { t0, dt, snaps }
    }

    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }

    /// Time stamp of snapshot `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    /// End of the covered window.
    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Index of the snapshot closest to `t`, if `t` is inside the window.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let k = ((t - self.t0) / self.dt).round();
        if k < -0.5 || k as usize >= self.len() {
            return None;
        }
        let i = k.max(0.0) as usize;
        (((t - self.time(i)) / self.dt).abs() < 1e-9).then_some(i)
    }
}
