//! Fourier-multiplier operators: smooth cut-offs, Leray projection,
//! fractional Laplacian/Bessel powers, and spectral derivatives.

use std::sync::OnceLock;

use ndarray::ArrayD;
use num_complex::Complex64;

use super::field::{GridSpec, SpectralField, TensorField};
use super::SpectralError;

/// Iterate all modes in row-major order, passing the flat index and the
/// signed frequency vector. All coefficient arrays are standard-layout, so
/// the flat index addresses their slices directly.
pub(crate) fn for_each_mode(grid: &GridSpec, mut f: impl FnMut(usize, &[i64])) {
    let d = grid.dim();
    let n = grid.points_per_axis();
    let mut idx = vec![0usize; d];
    let mut freqs = vec![0i64; d];
    for flat in 0..grid.point_count() {
        f(flat, &freqs);
        for ax in (0..d).rev() {
            idx[ax] += 1;
            if idx[ax] == n {
                idx[ax] = 0;
                freqs[ax] = 0;
            } else {
                freqs[ax] = grid.freq(idx[ax]);
                break;
            }
        }
    }
}

/// Multiply every mode of one component by a scalar multiplier `m(n)`.
pub(crate) fn apply_multiplier(
    grid: &GridSpec,
    comp: &mut ArrayD<Complex64>,
    m: impl Fn(&[i64]) -> Complex64,
) {
    let slice = comp.as_slice_mut().expect("coefficients are contiguous");
    for_each_mode(grid, |flat, freqs| {
        slice[flat] *= m(freqs);
    });
}

const CHI_INTERVALS: usize = 1 << 13;

/// Cumulative integral table of the bump `exp(-1/(1-s²))` over `[-1, 1]`,
/// normalised to end at 1 (composite Simpson per interval).
fn chi_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let bump = |s: f64| {
            let r = 1.0 - s * s;
            if r <= 0.0 {
                0.0
            } else {
                (-1.0 / r).exp()
            }
        };
        let m = CHI_INTERVALS;
        let h = 2.0 / m as f64;
        let mut cum = vec![0.0; m + 1];
        for i in 0..m {
            let a = -1.0 + i as f64 * h;
            let b = a + h;
            let mid = 0.5 * (a + b);
            cum[i + 1] = cum[i] + h / 6.0 * (bump(a) + 4.0 * bump(mid) + bump(b));
        }
        let total = cum[m];
        for v in &mut cum {
            *v /= total;
        }
        cum
    })
}

/// Smooth radial cut-off profile: exactly 1 for `|t| ≤ 1/2`, exactly 0 for
/// `|t| ≥ 1`, and a normalised bump-integral transition in between.
pub fn chi(t: f64) -> f64 {
    let t = t.abs();
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = 4.0 * t - 3.0; // maps (1/2, 1) to (-1, 1)
        let table = chi_table();
        let pos = (s + 1.0) / 2.0 * CHI_INTERVALS as f64;
        let i = (pos.floor() as usize).min(CHI_INTERVALS - 1);
        let frac = pos - i as f64;
        let f = table[i] * (1.0 - frac) + table[i + 1] * frac;
        1.0 - f
    }
}

/// Which part of the spectrum a cut-off keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffMode {
    /// `P_{≤κ}`: multiply by `χ(|n|/κ)`.
    Low,
    /// `P_{≥κ}`: multiply by `1 − χ(|n|/κ)`.
    High,
    /// `P_{≠0}`: zero the `n = 0` mode.
    MeanFree,
}

fn cutoff_factor(freqs: &[i64], kappa: f64, mode: CutoffMode) -> f64 {
    match mode {
        CutoffMode::Low | CutoffMode::High => {
            let norm = (freqs.iter().map(|&k| (k * k) as f64).sum::<f64>()).sqrt();
            let c = chi(norm / kappa);
            if mode == CutoffMode::Low {
                c
            } else {
                1.0 - c
            }
        }
        CutoffMode::MeanFree => {
            if freqs.iter().all(|&k| k == 0) {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Smooth Fourier cut-off on a vector field.
pub fn fourier_cutoff(
    u: &SpectralField,
    kappa: f64,
    mode: CutoffMode,
) -> Result<SpectralField, SpectralError> {
    if kappa <= 0.0 {
        return Err(SpectralError::BadCutoff(kappa));
    }
    let grid = u.grid();
    let mut out = u.clone();
    for c in out.comps_mut() {
        apply_multiplier(&grid, c, |freqs| {
            Complex64::new(cutoff_factor(freqs, kappa, mode), 0.0)
        });
    }
    if mode != CutoffMode::Low {
        out.mean_free = true;
    }
    Ok(out)
}

/// Smooth Fourier cut-off on a tensor field.
pub fn fourier_cutoff_tensor(
    t: &TensorField,
    kappa: f64,
    mode: CutoffMode,
) -> Result<TensorField, SpectralError> {
    if kappa <= 0.0 {
        return Err(SpectralError::BadCutoff(kappa));
    }
    let grid = t.grid();
    let mut out = t.clone();
    for c in out.comps_mut() {
        apply_multiplier(&grid, c, |freqs| {
            Complex64::new(cutoff_factor(freqs, kappa, mode), 0.0)
        });
    }
    Ok(out)
}

/// Kind of fractional power multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracKind {
    /// `(−Δ)^{s/2}`: multiply by `|n|^s`.
    Laplacian,
    /// `(Id−Δ)^{s/2}`: multiply by `(1+|n|²)^{s/2}`.
    Bessel,
}

/// Fractional Laplacian or Bessel power applied per mode.
pub fn fractional_multiplier(
    u: &SpectralField,
    s: f64,
    kind: FracKind,
) -> Result<SpectralField, SpectralError> {
    let grid = u.grid();
    if kind == FracKind::Laplacian && s < 0.0 {
        let scale = u.max_coeff().max(1.0);
        if u.mean().iter().any(|m| m.norm() > 1e-12 * scale) {
            return Err(SpectralError::NonintegrableZeroMode);
        }
    }
    let mut out = u.clone();
    for c in out.comps_mut() {
        apply_multiplier(&grid, c, |freqs| {
            let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
            let factor = match kind {
                FracKind::Laplacian => {
                    if s == 0.0 {
                        1.0
                    } else if n2 == 0.0 {
                        0.0
                    } else {
                        n2.powf(s / 2.0)
                    }
                }
                FracKind::Bessel => (1.0 + n2).powf(s / 2.0),
            };
            Complex64::new(factor, 0.0)
        });
    }
    Ok(out)
}

/// Leray projection `P = Id − ∇Δ^{-1}div`, applied per mode; the `n = 0`
/// mode is left untouched (compose with a mean-free cut-off to annihilate).
pub fn project_leray(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    {
        let comps = out.comps_mut();
        let mut slices: Vec<&mut [Complex64]> = comps
            .iter_mut()
            .map(|c| c.as_slice_mut().expect("contiguous"))
            .collect();
        for_each_mode(&grid, |flat, freqs| {
            let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
            if n2 == 0.0 {
                return;
            }
            let mut dot = Complex64::new(0.0, 0.0);
            for (c, slice) in slices.iter().enumerate() {
                dot += slice[flat] * freqs[c] as f64;
            }
            let proj = dot / n2;
            for (c, slice) in slices.iter_mut().enumerate() {
                slice[flat] -= proj * freqs[c] as f64;
            }
        });
    }
    out.div_free = true;
    out
}

/// Embed a field into a finer grid by copying coefficients at equal signed
/// frequency (zero-padding the new high modes). Exact: the embedded field
/// samples the same trigonometric polynomial.
pub fn embed_field(u: &SpectralField, target: GridSpec) -> Result<SpectralField, SpectralError> {
    let src = u.grid();
    if target.dim() != src.dim() || target.points_per_axis() < src.points_per_axis() {
        return Err(SpectralError::BadGrid(target.points_per_axis()));
    }
    let d = src.dim();
    let tn = target.points_per_axis() as i64;
    // Row-major strides of the target array.
    let mut strides = vec![1usize; d];
    for ax in (0..d.saturating_sub(1)).rev() {
        strides[ax] = strides[ax + 1] * tn as usize;
    }
    let mut out = SpectralField::zeros(target, u.ncomp());
    for (s, o) in u.comps().iter().zip(out.comps_mut()) {
        let s_slice = s.as_slice().expect("contiguous");
        let o_slice = o.as_slice_mut().expect("contiguous");
        for_each_mode(&src, |flat, freqs| {
            let mut tflat = 0usize;
            for (ax, &f) in freqs.iter().enumerate() {
                let idx = if f >= 0 { f } else { tn + f } as usize;
                tflat += idx * strides[ax];
            }
            o_slice[tflat] = s_slice[flat];
        });
    }
    out.mean_free = u.mean_free;
    out.div_free = u.div_free;
    Ok(out)
}

/// Embed a tensor field into a finer grid (see [`embed_field`]).
pub fn embed_tensor(t: &TensorField, target: GridSpec) -> Result<TensorField, SpectralError> {
    let d = t.grid().dim();
    let mut out = TensorField::zeros(target);
    for i in 0..d * d {
        let comps = vec![t.comps()[i].clone()];
        let f = SpectralField::from_coeffs(t.grid(), comps)?;
        let e = embed_field(&f, target)?;
        out.comps_mut()[i] = e.comps()[0].clone();
    }
    out.symmetric = t.symmetric;
    out.traceless = t.traceless;
    Ok(out)
}

/// Spectral partial derivative `∂_{x_axis}` of one coefficient array.
pub(crate) fn derive_component(grid: &GridSpec, comp: &ArrayD<Complex64>, axis: usize) -> ArrayD<Complex64> {
    let mut out = comp.clone();
    apply_multiplier(grid, &mut out, |freqs| Complex64::new(0.0, freqs[axis] as f64));
    out
}

/// Divergence of a vector field as a scalar field.
pub fn divergence(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let d = grid.dim();
    let mut acc = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&grid.shape()));
    for c in 0..d {
        acc += &derive_component(&grid, u.comp(c), c);
    }
    let mut out = SpectralField::from_coeffs(grid, vec![acc]).expect("same grid");
    out.mean_free = true;
    out
}

/// Row-wise divergence of a tensor field: `(div T)_j = Σ_i ∂_i T_{ij}`.
pub fn divergence_tensor(t: &TensorField) -> SpectralField {
    let grid = t.grid();
    let d = grid.dim();
    let mut comps = Vec::with_capacity(d);
    for j in 0..d {
        let mut acc = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&grid.shape()));
        for i in 0..d {
            acc += &derive_component(&grid, t.comp(i, j), i);
        }
        comps.push(acc);
    }
    let mut out = SpectralField::from_coeffs(grid, comps).expect("same grid");
    out.mean_free = true;
    out
}

/// Column-wise divergence of a tensor field: `(div T)_i = Σ_j ∂_j T_{ij}`
/// (contraction over the second index).
pub fn divergence_tensor_cols(t: &TensorField) -> SpectralField {
    let grid = t.grid();
    let d = grid.dim();
    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let mut acc = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&grid.shape()));
        for j in 0..d {
            acc += &derive_component(&grid, t.comp(i, j), j);
        }
        comps.push(acc);
    }
    let mut out = SpectralField::from_coeffs(grid, comps).expect("same grid");
    out.mean_free = true;
    out
}

/// Gradient of a scalar field as a vector field.
pub fn gradient(p: &SpectralField) -> SpectralField {
    let grid = p.grid();
    let d = grid.dim();
    let comps = (0..d)
        .map(|ax| derive_component(&grid, p.comp(0), ax))
        .collect();
    let mut out = SpectralField::from_coeffs(grid, comps).expect("same grid");
    out.mean_free = true;
    out
}

/// Full gradient of a vector field: `(∇u)_{ij} = ∂_{x_i} u_j`.
pub fn gradient_vector(u: &SpectralField) -> TensorField {
    let grid = u.grid();
    let d = grid.dim();
    let mut out = TensorField::zeros(grid);
    for i in 0..d {
        for j in 0..d {
            *out.comp_mut(i, j) = derive_component(&grid, u.comp(j), i);
        }
    }
    out
}

/// Componentwise Laplacian of a vector field.
pub fn laplacian(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    for c in out.comps_mut() {
        apply_multiplier(&grid, c, |freqs| {
            let n2: f64 = freqs.iter().map(|&k| (k * k) as f64).sum();
            Complex64::new(-n2, 0.0)
        });
    }
    out
}

/// Mixed derivative `D^α` with multi-index `alpha` (one order per axis).
pub fn derivative(u: &SpectralField, alpha: &[usize]) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    for c in out.comps_mut() {
        apply_multiplier(&grid, c, |freqs| {
            let mut m = Complex64::new(1.0, 0.0);
            for (ax, &ord) in alpha.iter().enumerate() {
                for _ in 0..ord {
                    m *= Complex64::new(0.0, freqs[ax] as f64);
                }
            }
            m
        });
    }
    out
}
