//! Desk-scale spectral toolkit for a convex-integration construction of
//! stochastic power-law (shear-thinning) flows on the torus `[-π, π]^d`.
//!
//! The crate is organised around six modules:
//!
//! - [`spectral`]: band-limited real fields stored as Fourier coefficients,
//!   with multiplier operators (Leray projection, smooth cut-offs, fractional
//!   Laplacian/Bessel powers) and norm evaluation.
//! - [`calculus`]: strain, the non-Newtonian stress tensor, the antidivergence
//!   operators, and the energy functionals.
//! - [`stochastic`]: trace-class Wiener forcing, the exact Ornstein–Uhlenbeck
//!   heat-equation solution, frequency truncations, and ergodic averages.
//! - [`jets`]: rational direction sets, building-block profiles, and the
//!   intermittent jets with their incompressibility/temporal correctors.
//! - [`scheme`]: the parameter cascade with an exact rational validator, and
//!   the iteration step with its seven-part stress decomposition.
//! - [`cli`]: batch front-end (config, subcommands, reproducible artifacts).
//!
//! Design split: algebraic *identities* of the construction hold on the grid
//! and are asserted by the test suite; the asymptotic *inequalities* of the
//! underlying analysis are computed and reported, never asserted, because the
//! desk-scale parameters deliberately sit outside the asymptotic regime.

pub mod calculus;
pub mod jets;
pub mod scheme;
pub mod spectral;
pub mod stochastic;
