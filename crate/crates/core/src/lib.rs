//! Local function approximation (LFA): post-hoc explanations as local surrogate fits.
//!
//! One engine fits a linear surrogate `g` to a black box `f` over a perturbation
//! neighborhood of `x0` under a chosen loss. Eight classic attribution methods
//! are configurations of that engine (see [`engine::registry`]); the
//! [`reference`] module re-implements each method directly as an oracle, and
//! [`analysis`] turns the framework's claims into executable checks.

pub mod analysis;
pub mod dataio;
pub mod engine;
pub mod error;
pub mod math;
pub mod models;
pub mod neighborhood;
pub mod reference;

pub use dataio::Dataset;
pub use engine::{
    explain, fit_closed_form, fit_iterative, registry, Explanation, FitConfig, LfaInstance,
    LossSpec, Method, MethodParams, Scale, SurrogateParam,
};
pub use error::{Error, Result};
pub use math::{RandomStream, VectorD};
pub use models::{Model, PredictiveModel};
pub use neighborhood::{
    sample_perturbations, CombineOp, NeighborhoodSpec, NoiseFamily, PerturbationSet, WeightKernel,
};
