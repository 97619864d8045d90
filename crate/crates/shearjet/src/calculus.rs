//! Vector-calculus and rheology operators: strain, the power-law stress
//! tensor, antidivergence operators, and energy functionals.
//!
//! Nonlinear pointwise maps (the stress tensor, field products) are
//! evaluated on the grid and re-band-limited. The induced aliasing vanishes
//! when the inputs jointly occupy at most the full band; callers should keep
//! each factor within 2/3 of the band limit (see [`max_active_freq`]).

use nalgebra::DMatrix;
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::ops::for_each_mode;
use crate::spectral::{
    fourier_cutoff_tensor, gradient_vector, l2_norm_parseval, CutoffMode, SpectralError,
    SpectralField, TensorField, Trajectory,
};

/// Relative zero-mode magnitude below which a field counts as mean-free.
pub const MEAN_FREE_TOL: f64 = 1e-12;

/// Relative coefficient magnitude below which a mode counts as inactive
/// when measuring band occupancy.
pub const ACTIVE_COEFF_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum CalculusError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("bad rheology: {0}")]
    BadRheology(String),
    #[error("antidivergence undefined on means (zero mode is nonzero)")]
    NonzeroMean,
    #[error("time {t} outside trajectory window [{t0}, {t_end}]")]
    TimeOutsideWindow { t: f64, t0: f64, t_end: f64 },
    #[error("time {0} does not land on a snapshot")]
    NotSnapshotAligned(f64),
    #[error("ensemble must contain at least one trajectory")]
    EmptyEnsemble,
}

/// Power-law stress parameters: `A(Q) = (ν0 + ν1 ‖Q‖_F)^{ι−2} Q`.
///
/// `ι = 2` is the Newtonian reduction `A(Q) = Q`; the shear-thinning regime
/// of interest is `ι ∈ (1, 2d/(d+2))`. The `c_*` fields hold measured sample
/// constants for the growth inequalities (they are existential in theory, so
/// they are calibrated, not postulated).
#[derive(Clone, Copy, Debug)]
pub struct Rheology {
    pub nu0: f64,
    pub nu1: f64,
    pub iota: f64,
    /// Lipschitz constant of `A` when `ν0 > 0`.
    pub c_nu0: f64,
    /// Hölder-gap constant `‖A(Q)−A(R)‖ ≤ C ‖Q−R‖^{ι−1}` when `ν0 = 0`.
    pub c_nu1: f64,
    /// Growth constant of `‖A(Q)‖` in `‖Q‖^{ι−1}`.
    pub c_growth: f64,
}

impl Rheology {
    /// General power-law tensor with `ι ∈ (1, 2]` and `ν0 + ν1 > 0`.
    pub fn new(nu0: f64, nu1: f64, iota: f64) -> Result<Self, CalculusError> {
        if !(nu0 >= 0.0 && nu1 >= 0.0 && nu0 + nu1 > 0.0) {
            return Err(CalculusError::BadRheology(format!(
                "need ν0, ν1 ≥ 0 with ν0 + ν1 > 0, got ({nu0}, {nu1})"
            )));
        }
        if !(iota > 1.0 && iota <= 2.0) {
            return Err(CalculusError::BadRheology(format!(
                "power index must lie in (1, 2], got {iota}"
            )));
        }
        Ok(Self {
            nu0,
            nu1,
            iota,
            c_nu0: 1.0,
            c_nu1: 1.0,
            c_growth: 1.0,
        })
    }

    /// Shear-thinning constructor: additionally requires `ι < 2d/(d+2)`.
    pub fn shear_thinning(nu0: f64, nu1: f64, iota: f64, d: usize) -> Result<Self, CalculusError> {
        let upper = 2.0 * d as f64 / (d as f64 + 2.0);
        if iota >= upper {
            return Err(CalculusError::BadRheology(format!(
                "shear-thinning requires ι < 2d/(d+2) = {upper}, got {iota}"
            )));
        }
        Self::new(nu0, nu1, iota)
    }

    /// Newtonian reduction: at `ι = 2` the prefactor is 1 and `A(Q) = Q`.
    pub fn newtonian() -> Self {
        Self::new(1.0, 0.0, 2.0).expect("valid parameters")
    }

    /// Scalar prefactor `(ν0 + ν1 q)^{ι−2}` at Frobenius magnitude `q ≥ 0`,
    /// with the continuous extension `A(0) = 0` when `ν0 = 0`.
    pub fn stress_factor(&self, q: f64) -> f64 {
        if self.iota == 2.0 {
            return 1.0;
        }
        let base = self.nu0 + self.nu1 * q;
        if base == 0.0 {
            // ι < 2 and ν0 = 0: the factor diverges but factor·Q → 0.
            0.0
        } else {
            base.powf(self.iota - 2.0)
        }
    }

    /// Apply the stress map to a plain matrix (used by samplers and tests).
    pub fn nn_matrix(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        q * self.stress_factor(q.norm())
    }
}

/// Smooth prescribed energy profile sampled on a uniform time grid,
/// extended constantly to earlier times and interpolated linearly between
/// samples.
#[derive(Clone, Debug)]
pub struct EnergyProfile {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    pub e_lo: f64,
    pub e_hi: f64,
    pub e_dot_max: f64,
}

impl EnergyProfile {
    pub fn new(
        t0: f64,
        dt: f64,
        values: Vec<f64>,
        e_lo: f64,
        e_hi: f64,
        e_dot_max: f64,
    ) -> Result<Self, CalculusError> {
        if values.is_empty() || dt <= 0.0 {
            return Err(CalculusError::BadRheology(
                "energy profile needs samples and dt > 0".into(),
            ));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(e_lo <= v && v <= e_hi) {
                return Err(CalculusError::BadRheology(format!(
                    "energy sample {i} = {v} outside [{e_lo}, {e_hi}]"
                )));
            }
        }
        for w in values.windows(2) {
            let slope = (w[1] - w[0]).abs() / dt;
            if slope > e_dot_max * (1.0 + 1e-12) {
                return Err(CalculusError::BadRheology(format!(
                    "energy slope {slope} exceeds bound {e_dot_max}"
                )));
            }
        }
        Ok(Self {
            t0,
            dt,
            values,
            e_lo,
            e_hi,
            e_dot_max,
        })
    }

    /// Constant profile `e(t) ≡ e0`.
    pub fn constant(e0: f64) -> Self {
        Self::new(0.0, 1.0, vec![e0, e0], e0, e0, 0.0).expect("constant profile is valid")
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    /// Evaluate at `t`: constant before `t0`, constant after the last
    /// sample, linear in between.
    pub fn eval(&self, t: f64) -> f64 {
        let pos = (t - self.t0) / self.dt;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Largest active `|n|_∞` over all components, for band-margin bookkeeping:
/// a product of fields is alias-free iff the sum of their active
/// frequencies stays within the band limit.
pub fn max_active_freq(comps: &[ArrayD<Complex64>], grid: &crate::spectral::GridSpec) -> usize {
    let scale = comps
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut best = 0usize;
    for c in comps {
        let slice = c.as_slice().expect("contiguous");
        for_each_mode(grid, |flat, freqs| {
            if slice[flat].norm() > ACTIVE_COEFF_TOL * scale {
                let linf = freqs.iter().map(|&k| k.unsigned_abs() as usize).max().unwrap_or(0);
                best = best.max(linf);
            }
        });
    }
    best
}

fn require_mean_free(comps: &[ArrayD<Complex64>], d: usize) -> Result<(), CalculusError> {
    let zero = IxDyn(&vec![0; d]);
    let scale = comps
        .iter()
        .flat_map(|c| c.iter())
        .map(|v| v.norm())
        .fold(1.0, f64::max);
    for c in comps {
        if c[zero.clone()].norm() > MEAN_FREE_TOL * scale {
            return Err(CalculusError::NonzeroMean);
        }
    }
    Ok(())
}

/// Strain-rate tensor `Du = ½(∇u + ∇uᵀ)`; traceless iff `u` is
/// divergence-free.
pub fn strain(u: &SpectralField) -> TensorField {
    let grad = gradient_vector(u);
    let grid = u.grid();
    let d = grid.dim();
    let mut out = TensorField::zeros(grid);
    for i in 0..d {
        for j in i..d {
            let sym = (grad.comp(i, j) + grad.comp(j, i)).mapv(|v| v * 0.5);
            *out.comp_mut(i, j) = sym.clone();
            if i != j {
                *out.comp_mut(j, i) = sym;
            }
        }
    }
    out.symmetric = true;
    out.traceless = u.div_free;
    out
}

/// Power-law stress `A(Q) = (ν0 + ν1‖Q‖_F)^{ι−2} Q`, evaluated pointwise on
/// the grid and re-band-limited.
pub fn nn_tensor(q: &TensorField, rh: &Rheology) -> TensorField {
    let grid = q.grid();
    let vals = q.to_grid();
    let mut frob = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
    for v in &vals {
        frob = frob + v.mapv(|x| x * x);
    }
    frob.mapv_inplace(f64::sqrt);
    let out_vals: Vec<ArrayD<f64>> = vals
        .iter()
        .map(|v| {
            let mut o = v.clone();
            o.zip_mut_with(&frob, |x, &f| *x *= rh.stress_factor(f));
            o
        })
        .collect();
    let mut out = TensorField::from_grid(grid, &out_vals).expect("shapes match");
    out.symmetric = q.symmetric;
    out
}

/// Right inverse of the divergence on mean-free fields:
///
/// `(Ru)_{ij} = ∂_iΔ^{-1}u_j + ∂_jΔ^{-1}u_i
///             − (1/(d−1)) ((d−2)∂_i∂_jΔ^{-1} + δ_{ij}) Δ^{-1} div u`,
///
/// realised per mode. Output is symmetric and traceless, and
/// `div(Ru) = u` holds coefficientwise.
pub fn antidivergence(u: &SpectralField) -> Result<TensorField, CalculusError> {
    let grid = u.grid();
    let d = grid.dim();
    require_mean_free(u.comps(), d)?;
    let mut out = TensorField::zeros(grid);
    {
        let u_slices: Vec<&[Complex64]> = u
            .comps()
            .iter()
            .map(|c| c.as_slice().expect("contiguous"))
            .collect();
        let mut o_slices: Vec<&mut [Complex64]> = out
            .comps_mut()
            .iter_mut()
            .map(|c| c.as_slice_mut().expect("contiguous"))
            .collect();
        let dm1 = (d - 1) as f64;
        let dm2 = (d - 2) as f64;
        for_each_mode(&grid, |flat, freqs| {
            let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
            if n2 == 0.0 {
                return;
            }
            // s = Δ^{-1} div u at this mode.
            let mut div = Complex64::new(0.0, 0.0);
            for (c, slice) in u_slices.iter().enumerate() {
                div += Complex64::new(0.0, freqs[c] as f64) * slice[flat];
            }
            let s = div * (-1.0 / n2);
            for i in 0..d {
                let ni = freqs[i] as f64;
                for j in i..d {
                    let nj = freqs[j] as f64;
                    let mut v = Complex64::new(0.0, -ni / n2) * u_slices[j][flat]
                        + Complex64::new(0.0, -nj / n2) * u_slices[i][flat];
                    let delta = if i == j { 1.0 } else { 0.0 };
                    v -= s * ((dm2 * ni * nj / n2 + delta) / dm1);
                    o_slices[i * d + j][flat] = v;
                    if i != j {
                        o_slices[j * d + i][flat] = v;
                    }
                }
            }
        });
    }
    out.symmetric = true;
    out.traceless = true;
    Ok(out)
}

/// Pointwise grid product of two coefficient-space components.
fn grid_values(f: &SpectralField) -> Vec<ArrayD<f64>> {
    f.to_grid()
}

/// Bilinear antidivergence: a potential `B(A, u)` with
/// `div B(A, u) = P_{≠0}(Aᵀu)` and decay in the lowest active frequency of
/// `A`.
///
/// Construction: let `T_ℓ := R(A_{ℓ,·})` be the antidivergence of row `ℓ`.
/// With `M_{ij} = Σ_ℓ u_ℓ (T_ℓ)_{ij}` and `g_j = Σ_{ℓ,i} (∂_i u_ℓ)(T_ℓ)_{ij}`
/// the product rule gives `div M = g + Aᵀu`, hence
/// `B = P_{≠0} M − R(P_{≠0} g)` has the required divergence. Products are
/// taken on the grid, so inputs must jointly respect the band limit.
pub fn bilinear_antidivergence(
    a: &TensorField,
    u: &SpectralField,
) -> Result<TensorField, CalculusError> {
    let grid = a.grid();
    let d = grid.dim();
    require_mean_free(a.comps(), d)?;
    let rows: Vec<TensorField> = (0..d)
        .map(|l| antidivergence(&a.row(l)))
        .collect::<Result<_, _>>()?;
    let row_vals: Vec<Vec<ArrayD<f64>>> = rows.iter().map(|t| t.to_grid()).collect();
    let u_vals = grid_values(u);
    let du_vals = gradient_vector(u).to_grid(); // index i*d+ℓ is ∂_i u_ℓ

    let shape = IxDyn(&grid.shape());
    let mut m_vals: Vec<ArrayD<f64>> = (0..d * d).map(|_| ArrayD::zeros(shape.clone())).collect();
    let mut g_vals: Vec<ArrayD<f64>> = (0..d).map(|_| ArrayD::zeros(shape.clone())).collect();
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                let t_ij = &row_vals[l][i * d + j];
                m_vals[i * d + j].zip_mut_with(&(&u_vals[l] * t_ij), |acc, &v| *acc += v);
                g_vals[j].zip_mut_with(&(&du_vals[i * d + l] * t_ij), |acc, &v| *acc += v);
            }
        }
    }
    let m = TensorField::from_grid(grid, &m_vals)?;
    let m = fourier_cutoff_tensor(&m, 1.0, CutoffMode::MeanFree)?;
    let mut g = SpectralField::from_grid(grid, &g_vals)?;
    g.make_mean_free();
    let rg = antidivergence(&g)?;
    let mut out = m.sub(&rg)?;
    out.symmetric = true;
    out.traceless = true;
    Ok(out)
}

/// Dissipation rate `∫ A(Du):Du dx` by grid quadrature.
pub fn dissipation_rate(u: &SpectralField, rh: &Rheology) -> f64 {
    let du = strain(u);
    let a = nn_tensor(&du, rh);
    let du_vals = du.to_grid();
    let a_vals = a.to_grid();
    let mut total = 0.0;
    for (x, y) in a_vals.iter().zip(&du_vals) {
        total += x.iter().zip(y.iter()).map(|(&p, &q)| p * q).sum::<f64>();
    }
    total * u.grid().cell_volume()
}

fn locate(traj: &Trajectory<SpectralField>, t: f64) -> Result<usize, CalculusError> {
    if t < traj.t0 - 1e-12 || t > traj.t_end() + 1e-12 {
        return Err(CalculusError::TimeOutsideWindow {
            t,
            t0: traj.t0,
            t_end: traj.t_end(),
        });
    }
    traj.index_of(t).ok_or(CalculusError::NotSnapshotAligned(t))
}

/// Kinetic-plus-dissipation energy functionals at time `t ≥ 0`, averaged
/// over an ensemble of trajectories:
///
/// - `E{u}(t) = E‖u(t)‖²_{L²} + 2 E∫₀ᵗ∫ A(Du):Du − tr(G)·t`
/// - `H{u}(t) = E‖u(t)‖²_{L²} + (6/(t+3)) E∫₀ᵗ∫ A(Du):Du`
///
/// The time integral is a trapezoid over the snapshots between 0 and `t`;
/// both endpoints must land on snapshots.
pub fn energy_functionals(
    ensemble: &[Trajectory<SpectralField>],
    rh: &Rheology,
    trace_g: f64,
    t: f64,
) -> Result<(f64, f64), CalculusError> {
    if ensemble.is_empty() {
        return Err(CalculusError::EmptyEnsemble);
    }
    let mut kin_sum = 0.0;
    let mut diss_sum = 0.0;
    for traj in ensemble {
        let i0 = locate(traj, 0.0)?;
        let it = locate(traj, t)?;
        let nrm = l2_norm_parseval(&traj.snaps[it]);
        kin_sum += nrm * nrm;
        let mut integral = 0.0;
        if it > i0 {
            let rates: Vec<f64> = (i0..=it)
                .map(|i| dissipation_rate(&traj.snaps[i], rh))
                .collect();
            for w in rates.windows(2) {
                integral += 0.5 * (w[0] + w[1]) * traj.dt;
            }
        }
        diss_sum += integral;
    }
    let m = ensemble.len() as f64;
    let kin = kin_sum / m;
    let diss = diss_sum / m;
    let e_val = kin + 2.0 * diss - trace_g * t;
    let h_val = kin + 6.0 / (t + 3.0) * diss;
    Ok((e_val, h_val))
}

/// Grid outer product `u ⊗ v` re-band-limited; alias-free when the active
/// bands of `u` and `v` jointly fit the band limit.
pub fn outer_product(u: &SpectralField, v: &SpectralField) -> Result<TensorField, CalculusError> {
    u.check_same_grid(v)?;
    let grid = u.grid();
    let d = grid.dim();
    let uv = grid_values(u);
    let vv = grid_values(v);
    let vals: Vec<ArrayD<f64>> = (0..d * d).map(|k| &uv[k / d] * &vv[k % d]).collect();
    Ok(TensorField::from_grid(grid, &vals)?)
}

/// Grid product of a scalar field with a vector field.
pub fn scalar_multiply(s: &SpectralField, u: &SpectralField) -> Result<SpectralField, CalculusError> {
    let grid = u.grid();
    let sv = &grid_values(s)[0];
    let vals: Vec<ArrayD<f64>> = grid_values(u).iter().map(|c| c * sv).collect();
    Ok(SpectralField::from_grid(grid, &vals)?)
}

/// Grid product `Aᵀu` (or `Au` with `transpose = false`).
pub fn matvec(
    a: &TensorField,
    u: &SpectralField,
    transpose: bool,
) -> Result<SpectralField, CalculusError> {
    let grid = a.grid();
    let d = grid.dim();
    let av = a.to_grid();
    let uv = grid_values(u);
    let shape = IxDyn(&grid.shape());
    let mut vals: Vec<ArrayD<f64>> = (0..d).map(|_| ArrayD::zeros(shape.clone())).collect();
    for j in 0..d {
        for i in 0..d {
            let entry = if transpose { &av[i * d + j] } else { &av[j * d + i] };
            vals[j].zip_mut_with(&(entry * &uv[i]), |acc, &v| *acc += v);
        }
    }
    Ok(SpectralField::from_grid(grid, &vals)?)
}

/// Grid Frobenius contraction `A : B` as a scalar field.
pub fn frobenius_contract(a: &TensorField, b: &TensorField) -> Result<SpectralField, CalculusError> {
    a.check_same_grid(b)?;
    let grid = a.grid();
    let av = a.to_grid();
    let bv = b.to_grid();
    let mut acc = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
    for (x, y) in av.iter().zip(&bv) {
        acc.zip_mut_with(&(x * y), |p, &v| *p += v);
    }
    Ok(SpectralField::from_grid(grid, &[acc])?)
}
