//! Building-block profiles: a radial potential `Φ` on `R²` with
//! `φ = −ΔΦ`, and a mean-zero 1-D profile `ψ`, all compactly supported in
//! the unit ball and normalised to unit `L²` mass.
//!
//! The unit normalisation `∫_{R^{d−1}} φ² = 1`, `∫_R ψ² = 1` is exactly the
//! one that makes the periodized jets satisfy `‖W_(ξ)‖_{L²} = 1` and the
//! oscillation cancellation `Σ_ξ a_ξ² ⨍ W⊗W = ρId − R̊_ℓ`.
//!
//! The base kernel is `K(s) = F(y)/F(y₀)` with `y = β²(1−s²)/4`,
//! `y₀ = β²/4`, and `F(y) = I₀(β√(1−s²)) − 1 − y − y²/4 = Σ_{m≥3} y^m/(m!)²`
//! — a concentrated window (raising β squeezes it away from the support
//! edge) with its first three Taylor terms removed so that `F ~ y³` at the
//! edge.  That makes `ψ ∝ K'` vanish to second order and `φ = −ΔK` vanish
//! to first order there; the sampled jets are then C¹ on the torus, which
//! is what keeps their energy off the zeroed Nyquist planes of the
//! spectral representation.  All derivatives are evaluated through the
//! entire series `Σ_{j≥j₀} y^j/(j!(j+a)!)`, so every evaluator below is an
//! exact closed form — no finite differences anywhere (difference noise of
//! even 1e−6 relative size visibly corrupts the oscillatory quadratures
//! downstream).

use super::JetError;

/// Shape parameter β of the base kernel.  Larger values concentrate the
/// profile away from the support edge, which sharply improves the
/// Fourier-tail decay and hence the accuracy of every grid quadrature and
/// band-limited identity.
pub const PROFILE_SHARPNESS: f64 = 10.0;

/// Entire series `Σ_{j≥j0} y^j / (j!(j+a)!)`.  Starting the sum at the
/// first genuinely nonzero index (instead of subtracting low-order terms
/// from the full Bessel series) avoids catastrophic cancellation near the
/// support edge where `y → 0`.
fn series(y: f64, a: u32, j0: u32) -> f64 {
    let mut term = 1.0;
    for k in 1..=j0 {
        term *= y / k as f64;
    }
    for k in 1..=(j0 + a) {
        term /= k as f64;
    }
    let mut sum = term;
    for j in (j0 + 1)..(j0 + 200) {
        term *= y / (j as f64 * (j + a) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `F` and its first three derivatives at `y`:
/// `F(y) = Σ_{m≥3} y^m/(m!)²`, `F' = Σ_{j≥2} y^j/(j!(j+1)!)`,
/// `F'' = Σ_{j≥1} y^j/(j!(j+2)!)`, `F''' = Σ_{j≥0} y^j/(j!(j+3)!)`.
fn f0(y: f64) -> f64 {
    series(y, 0, 3)
}
fn f1(y: f64) -> f64 {
    series(y, 1, 2)
}
fn f2(y: f64) -> f64 {
    series(y, 2, 1)
}
fn f3(y: f64) -> f64 {
    series(y, 3, 0)
}

/// Normalised building-block profiles with analytic evaluators.
#[derive(Clone, Debug)]
pub struct Profiles {
    /// Scale of `Φ` (and hence of `φ = −ΔΦ`): `∫_{R²} φ² = 1`.
    pub phi_scale: f64,
    /// Scale of `ψ = scale · K'`: `∫_R ψ² = 1`.
    pub psi_scale: f64,
    /// Radial resolution used for the normalisation quadrature.
    pub resolution: usize,
    /// Center value `F(β²/4)` of the kernel numerator.
    den: f64,
}

/// `y = β²(1−s²)/4`, the series argument; nonpositive outside the support.
fn series_arg(s: f64) -> f64 {
    let b = PROFILE_SHARPNESS;
    0.25 * b * b * (1.0 - s * s)
}

impl Profiles {
    /// Potential `Φ(ρ)` (the kernel itself, scaled).
    pub fn cap_phi(&self, rho: f64) -> f64 {
        let y = series_arg(rho);
        if y <= 0.0 {
            0.0
        } else {
            self.phi_scale * f0(y) / self.den
        }
    }

    /// Radial derivative `Φ'(ρ)`.
    pub fn cap_phi_d1(&self, rho: f64) -> f64 {
        self.cap_phi_d1_over_rho(rho) * rho
    }

    /// `Φ'(ρ)/ρ = −(β²/2)F'(y)/F(y₀)` (scaled), smooth through the origin.
    pub fn cap_phi_d1_over_rho(&self, rho: f64) -> f64 {
        let y = series_arg(rho);
        if y <= 0.0 {
            return 0.0;
        }
        let b2 = PROFILE_SHARPNESS * PROFILE_SHARPNESS;
        -self.phi_scale * 0.5 * b2 * f1(y) / self.den
    }

    /// `φ(ρ) = −ΔΦ = [β²F'(y) − (β⁴ρ²/4)F''(y)]/F(y₀)` (2-D radial
    /// Laplacian, scaled).
    pub fn phi(&self, rho: f64) -> f64 {
        let y = series_arg(rho);
        if y <= 0.0 {
            return 0.0;
        }
        let b2 = PROFILE_SHARPNESS * PROFILE_SHARPNESS;
        self.phi_scale * b2 * (f1(y) - 0.25 * b2 * rho * rho * f2(y)) / self.den
    }

    /// `φ'(ρ) = [−β⁴ρF''(y) + (β⁶ρ³/8)F'''(y)]/F(y₀)`; odd, vanishing at
    /// the origin.
    pub fn phi_d1(&self, rho: f64) -> f64 {
        let y = series_arg(rho);
        if y <= 0.0 {
            return 0.0;
        }
        let b2 = PROFILE_SHARPNESS * PROFILE_SHARPNESS;
        self.phi_scale * b2 * b2 * rho * (0.125 * b2 * rho * rho * f3(y) - f2(y)) / self.den
    }

    /// `ψ(s) = scale·K'(s) = −scale·(β²s/2)F'(y)/F(y₀)`; odd and mean-zero
    /// (it is the exact derivative of a kernel vanishing at both
    /// endpoints), with a second-order zero at the support edge.
    pub fn psi(&self, s: f64) -> f64 {
        let y = series_arg(s);
        if y <= 0.0 {
            return 0.0;
        }
        let b2 = PROFILE_SHARPNESS * PROFILE_SHARPNESS;
        -self.psi_scale * 0.5 * b2 * s * f1(y) / self.den
    }

    /// `ψ'(s) = scale·[(β⁴s²/4)F''(y) − (β²/2)F'(y)]/F(y₀)`.
    pub fn psi_d1(&self, s: f64) -> f64 {
        let y = series_arg(s);
        if y <= 0.0 {
            return 0.0;
        }
        let b2 = PROFILE_SHARPNESS * PROFILE_SHARPNESS;
        self.psi_scale * b2 * (0.25 * b2 * s * s * f2(y) - 0.5 * f1(y)) / self.den
    }
}

/// Composite-Simpson integral of `f` over `[0, 1]` with `m` panels.
fn simpson(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        let a = i as f64 * h;
        let b = a + h;
        total += h / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    total
}

/// Construct the profiles, fixing the two scales by radial quadrature at
/// the requested resolution (at least 1024 points).
pub fn build_profiles(resolution: usize) -> Result<Profiles, JetError> {
    if resolution < 1024 {
        return Err(JetError::BadParams(format!(
            "profile quadrature needs ≥ 1024 radial points, got {resolution}"
        )));
    }
    let b2 = PROFILE_SHARPNESS * PROFILE_SHARPNESS;
    let den = f0(0.25 * b2);
    let raw = Profiles {
        phi_scale: 1.0,
        psi_scale: 1.0,
        resolution,
        den,
    };
    // ∫_{R²} φ_raw² = 2π ∫₀¹ φ_raw(ρ)² ρ dρ.
    let i_phi = 2.0 * std::f64::consts::PI * simpson(|r| raw.phi(r).powi(2) * r, resolution);
    // ∫_R ψ_raw² = 2 ∫₀¹ by evenness of the square.
    let i_psi = 2.0 * simpson(|s| raw.psi(s).powi(2), resolution);
    Ok(Profiles {
        phi_scale: 1.0 / i_phi.sqrt(),
        psi_scale: 1.0 / i_psi.sqrt(),
        resolution,
        den,
    })
}
