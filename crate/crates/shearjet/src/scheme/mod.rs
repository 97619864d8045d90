//! The iteration scheme: parameter cascade, causal mollification, amplitude
//! fields, perturbation assembly, stress decomposition, and the residual
//! closure oracle.

mod mollify;
mod params;
mod step;

pub use mollify::{spatial_mollify, spatial_mollify_tensor, Mollifier};
pub use params::{
    certified_tuple, derive_parameters, desk_tuple, fi, fr, validate_cascade, CascadeReport,
    CascadeRow, Frac, ParameterSet, RawParams, Rel, RowValues,
};
pub use step::{
    amplitude_fields, build_perturbation, initial_state, iterate, iterate_at, key_bound_report,
    residual_closure, reynolds_decompose, velocity_at, AmplitudeFields, Decomposition,
    InitialLevel, IterateOutput, LevelFields, Perturbation, ResidualReport, SchemeConfig,
    StoredLevel,
};

use thiserror::Error;

use crate::calculus::CalculusError;
use crate::jets::JetError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("bad scheme parameters: {0}")]
    BadParams(String),
    #[error("energy gap negative at t = {t}: η = {eta}")]
    EnergyGapNegative { t: f64, eta: f64 },
    #[error("time window too short for mollification: need {need} past snapshots, have {have}")]
    WindowTooShort { need: usize, have: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Jet(#[from] JetError),
}
