//! Trace-class Wiener forcing, the exact Ornstein–Uhlenbeck solution of the
//! stochastic heat equation `dz + (Id − Δ)z dt = dB_t`, frequency
//! truncations of `z`, and ergodic-average diagnostics.
//!
//! Everything is sampled per Fourier mode from exact Gaussian transition
//! laws — there is no Euler–Maruyama bias. The Brownian increments and the
//! stochastic convolution over one step are drawn *jointly* from their exact
//! bivariate law, so `z` and `B` stay consistent pathwise.

mod rng;

pub use rng::CounterRng;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::ops::for_each_mode;
use crate::spectral::{
    fourier_cutoff, CutoffMode, GridSpec, SpectralError, SpectralField, Trajectory,
};

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("bad covariance: {0}")]
    BadCovariance(String),
    #[error("averaging window {t} exceeds trajectory length {len}")]
    WindowTooLong { t: f64, len: f64 },
    #[error("time {0} does not land on a snapshot")]
    NotSnapshotAligned(f64),
}

/// Diagonal trace-class covariance over the divergence-free Fourier modes:
/// per-mode weight `g_n = c (1 + |n|²)^{-r}` for `n ≠ 0`, `g_0 = 0`, each
/// weight acting on the `d−1` divergence-free complex directions at mode
/// `n`.
#[derive(Clone, Copy, Debug)]
pub struct CovarianceSpec {
    pub grid: GridSpec,
    /// Overall amplitude `c ≥ 0` (zero gives deterministic dynamics).
    pub amplitude: f64,
    /// Spectral decay exponent `r`; needs `r > d/2 + 2σ` so that the
    /// `2σ`-weighted trace converges under grid refinement.
    pub decay: f64,
    /// Regularity exponent `σ ∈ (0, 1)`.
    pub sigma: f64,
}

impl CovarianceSpec {
    pub fn new(grid: GridSpec, amplitude: f64, decay: f64, sigma: f64) -> Result<Self, StochasticError> {
        if amplitude < 0.0 {
            return Err(StochasticError::BadCovariance(format!(
                "amplitude must be ≥ 0, got {amplitude}"
            )));
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(StochasticError::BadCovariance(format!(
                "σ must lie in (0, 1), got {sigma}"
            )));
        }
        let min_decay = grid.dim() as f64 / 2.0 + 2.0 * sigma;
        if decay <= min_decay {
            return Err(StochasticError::BadCovariance(format!(
                "decay r = {decay} must exceed d/2 + 2σ = {min_decay}"
            )));
        }
        Ok(Self {
            grid,
            amplitude,
            decay,
            sigma,
        })
    }

    /// Per-mode weight `g_n`.
    pub fn weight(&self, freqs: &[i64]) -> f64 {
        let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
        if n2 == 0.0 {
            0.0
        } else {
            self.amplitude * (1.0 + n2).powf(-self.decay)
        }
    }

    /// Trace of the covariance on `L²`: with `‖u‖² = (2π)^d Σ_n |û_n|²` and
    /// `d−1` retained directions per mode, `tr G = (2π)^d (d−1) Σ_{n≠0} g_n`.
    pub fn trace(&self) -> f64 {
        self.weighted_trace(0.0)
    }

    /// `tr((Id−Δ)^{2σ} G)`, reported as the finiteness diagnostic.
    pub fn trace_2sigma(&self) -> f64 {
        self.weighted_trace(2.0 * self.sigma)
    }

    fn weighted_trace(&self, power: f64) -> f64 {
        let mut sum = 0.0;
        let ny = self.grid.points_per_axis() / 2;
        for_each_mode(&self.grid, |_, freqs| {
            if freqs.iter().any(|&k| k.unsigned_abs() as usize >= ny) {
                return;
            }
            let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
            sum += self.weight(freqs) * (1.0 + n2).powf(power);
        });
        self.grid.volume() * (self.grid.dim() as f64 - 1.0) * sum
    }
}

/// Identifies the random source of a sampled field: all draws are pure
/// functions of `(seed, path_id, mode, step)`.
#[derive(Clone, Copy, Debug)]
pub struct NoiseKey {
    pub seed: u64,
    pub path_id: u64,
    pub step: u64,
}

/// One realised noise path: per-step Brownian increments and the matched
/// exact Ornstein–Uhlenbeck snapshots `z`, with `z(0) = 0`.
#[derive(Clone, Debug)]
pub struct NoisePath {
    pub seed: u64,
    pub path_id: u64,
    /// Increment `i` covers `[t0 + i·dt, t0 + (i+1)·dt)`.
    pub increments: Trajectory<SpectralField>,
    /// Snapshot `i` is `z(t0 + i·dt)`; one more entry than `increments`.
    pub z: Trajectory<SpectralField>,
}

/// True when `n` is the canonical representative of the conjugate pair
/// `{n, −n}`: its first nonzero signed frequency is positive.
fn is_canonical(freqs: &[i64]) -> bool {
    for &k in freqs {
        if k > 0 {
            return true;
        }
        if k < 0 {
            return false;
        }
    }
    false // zero mode: never sampled
}

/// Flat index of `−n` given the signed frequencies of `n`.
fn mirror_flat(grid: &GridSpec, freqs: &[i64]) -> usize {
    let n = grid.points_per_axis() as i64;
    let mut flat = 0usize;
    for &k in freqs {
        let idx = if k > 0 { n - k } else { -k };
        flat = flat * n as usize + idx as usize;
    }
    flat
}

/// Mode index used in the RNG key: the flat index of the canonical
/// representative, stable across grids of the same size.
fn mode_key(grid: &GridSpec, freqs: &[i64]) -> u64 {
    let n = grid.points_per_axis() as i64;
    let mut flat = 0u64;
    for &k in freqs {
        let idx = if k >= 0 { k } else { k + n };
        flat = flat * n as u64 + idx as u64;
    }
    flat
}

/// Per-mode joint draw of a Brownian increment and the OU convolution over
/// one step, for the `d` raw components before the divergence-free
/// projection.
struct ModeDraw {
    db: Vec<Complex64>,
    conv: Vec<Complex64>,
}

fn draw_mode(
    rng: &mut CounterRng,
    d: usize,
    g: f64,
    a: f64,
    dt: f64,
) -> ModeDraw {
    // Per complex component: Var ΔB = g dt, Var I = g(1−e^{−2a dt})/(2a),
    // Cov(ΔB, I) = g(1−e^{−a dt})/a. The conditional draw
    // I = (cov/varB) ΔB + sqrt(varI − cov²/varB) ζ realises the exact joint
    // law; the residual variance is nonnegative because
    // (1−e^{−x})²/(1−e^{−2x}) = tanh(x/2) ≤ x/2.
    let var_b = g * dt;
    let var_i = g * (1.0 - (-2.0 * a * dt).exp()) / (2.0 * a);
    let cov = g * (1.0 - (-a * dt).exp()) / a;
    let (alpha, beta) = if var_b > 0.0 {
        (cov / var_b, (var_i - cov * cov / var_b).max(0.0).sqrt())
    } else {
        (0.0, 0.0)
    };
    let sd_b = var_b.sqrt();
    let mut db = Vec::with_capacity(d);
    let mut conv = Vec::with_capacity(d);
    for _ in 0..d {
        let (re, im) = rng.complex_normal();
        db.push(Complex64::new(re * sd_b, im * sd_b));
    }
    for item in db.iter().take(d) {
        let (re, im) = rng.complex_normal();
        conv.push(item * alpha + Complex64::new(re * beta, im * beta));
    }
    ModeDraw { db, conv }
}

/// Project a per-mode coefficient vector onto the divergence-free
/// directions: `v − n (n·v)/|n|²`.
fn leray_mode(freqs: &[i64], v: &mut [Complex64]) {
    let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
    if n2 == 0.0 {
        return;
    }
    let mut dot = Complex64::new(0.0, 0.0);
    for (c, &k) in freqs.iter().enumerate() {
        dot += v[c] * k as f64;
    }
    let proj = dot / n2;
    for (c, &k) in freqs.iter().enumerate() {
        v[c] -= proj * k as f64;
    }
}

/// Sample both a Brownian increment over `dt` and the matched OU
/// convolution, as two divergence-free mean-free fields.
fn sample_step(
    cov: &CovarianceSpec,
    dt: f64,
    key: NoiseKey,
) -> (SpectralField, SpectralField) {
    let grid = cov.grid;
    let d = grid.dim();
    let ny = grid.points_per_axis() / 2;
    let mut db = SpectralField::zeros(grid, d);
    let mut conv = SpectralField::zeros(grid, d);
    {
        let mut db_slices: Vec<&mut [Complex64]> = db
            .comps_mut()
            .iter_mut()
            .map(|c| c.as_slice_mut().expect("contiguous"))
            .collect();
        let mut conv_slices: Vec<&mut [Complex64]> = conv
            .comps_mut()
            .iter_mut()
            .map(|c| c.as_slice_mut().expect("contiguous"))
            .collect();
        for_each_mode(&grid, |flat, freqs| {
            if !is_canonical(freqs) || freqs.iter().any(|&k| k.unsigned_abs() as usize >= ny) {
                return;
            }
            let g = cov.weight(freqs);
            if g == 0.0 {
                return;
            }
            let a = 1.0 + freqs.iter().map(|&k| (k * k) as f64).sum::<f64>();
            let mut rng = CounterRng::new(key.seed, key.path_id, mode_key(&grid, freqs), key.step);
            let mut draw = draw_mode(&mut rng, d, g, a, dt);
            leray_mode(freqs, &mut draw.db);
            leray_mode(freqs, &mut draw.conv);
            let mflat = mirror_flat(&grid, freqs);
            for c in 0..d {
                db_slices[c][flat] = draw.db[c];
                db_slices[c][mflat] = draw.db[c].conj();
                conv_slices[c][flat] = draw.conv[c];
                conv_slices[c][mflat] = draw.conv[c].conj();
            }
        });
    }
    db.mean_free = true;
    db.div_free = true;
    conv.mean_free = true;
    conv.div_free = true;
    (db, conv)
}

/// One Brownian increment of the `G`-Wiener process over `dt`: per mode a
/// complex Gaussian with covariance `dt·g_n`, projected divergence-free,
/// with Hermitian symmetry exact by construction.
pub fn sample_increment(cov: &CovarianceSpec, dt: f64, key: NoiseKey) -> SpectralField {
    sample_step(cov, dt, key).0
}

/// Simulate the path from `t0` over `steps` uniform steps of size `dt`,
/// using the exact per-mode OU transition
/// `ẑ(t+dt) = e^{−(1+|n|²)dt} ẑ(t) + ∫ e^{−(1+|n|²)(t+dt−r)} dB̂(r)`.
///
/// Step `s` (0-based) draws from the RNG stream keyed with
/// `step = s`, so extending a path re-uses identical randomness for the
/// shared prefix.
pub fn ou_evolve(
    cov: &CovarianceSpec,
    seed: u64,
    path_id: u64,
    t0: f64,
    dt: f64,
    steps: usize,
) -> NoisePath {
    let grid = cov.grid;
    let d = grid.dim();
    let mut z = SpectralField::zeros(grid, d);
    z.mean_free = true;
    z.div_free = true;
    let mut z_snaps = vec![z.clone()];
    let mut increments = Vec::with_capacity(steps);
    for s in 0..steps {
        let key = NoiseKey {
            seed,
            path_id,
            step: s as u64,
        };
        let (db, conv) = sample_step(cov, dt, key);
        let mut next = z.clone();
        for c in next.comps_mut() {
            crate::spectral::ops::apply_multiplier(&grid, c, |freqs| {
                let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
                Complex64::new((-(1.0 + n2) * dt).exp(), 0.0)
            });
        }
        next.add_assign(&conv).expect("same grid");
        next.mean_free = true;
        next.div_free = true;
        z = next;
        z_snaps.push(z.clone());
        increments.push(db);
    }
    NoisePath {
        seed,
        path_id,
        increments: Trajectory::new(t0, dt, increments),
        z: Trajectory::new(t0, dt, z_snaps),
    }
}

/// Stationary variance of one complex component of `ẑ_n` (post-projection
/// directions): `g_n / (2(1+|n|²))`.
pub fn stationary_variance(cov: &CovarianceSpec, freqs: &[i64]) -> f64 {
    let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
    cov.weight(freqs) / (2.0 * (1.0 + n2))
}

/// Low-pass truncation `z_q = P_{≤κ} z`; the admissible choice of `κ = f(q)`
/// is a parameter-cascade concern and is validated there.
pub fn truncate_z(z: &SpectralField, kappa: f64) -> Result<SpectralField, StochasticError> {
    Ok(fourier_cutoff(z, kappa, CutoffMode::Low)?)
}

/// Ergodic average `(1/T)∫₀ᵀ F(u(t0 + s)) ds` by trapezoid over snapshots;
/// `T` must be snapshot-aligned and within the trajectory window.
pub fn ergodic_average(
    traj: &Trajectory<SpectralField>,
    observable: impl Fn(&SpectralField) -> f64,
    t_avg: f64,
) -> Result<f64, StochasticError> {
    let len = traj.t_end() - traj.t0;
    if t_avg <= 0.0 || t_avg > len + 1e-12 {
        return Err(StochasticError::WindowTooLong { t: t_avg, len });
    }
    let k = (t_avg / traj.dt).round();
    if ((t_avg - k * traj.dt) / traj.dt).abs() > 1e-9 {
        return Err(StochasticError::NotSnapshotAligned(t_avg));
    }
    let k = k as usize;
    let vals: Vec<f64> = traj.snaps[..=k].iter().map(&observable).collect();
    let mut integral = 0.0;
    for w in vals.windows(2) {
        integral += 0.5 * (w[0] + w[1]) * traj.dt;
    }
    Ok(integral / t_avg)
}

/// Value of `z` at time `t` with the frozen extension to times before the
/// path start (`z` and `B` are constant on `(−∞, t0]`).
pub fn z_at(path: &NoisePath, t: f64) -> Result<&SpectralField, StochasticError> {
    if t <= path.z.t0 {
        return Ok(&path.z.snaps[0]);
    }
    path.z
        .index_of(t)
        .map(|i| &path.z.snaps[i])
        .ok_or(StochasticError::NotSnapshotAligned(t))
}
