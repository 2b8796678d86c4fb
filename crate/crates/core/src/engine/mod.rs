//! The generic fitter: losses, method registry, closed-form and iterative solvers.

mod explain;
mod fit;
mod instance;
mod iterative;
mod loss;

pub use explain::{evaluate_loss, explain, explain_instance, sparse_smoothgrad, Solver};
pub use fit::{fit_closed_form, Diagnostics, Explanation, SolverKind};
pub use instance::{
    registry, InterceptRule, LfaInstance, Method, MethodParams, RegressionTarget, Scale,
    SurrogateParam, DEFAULT_SIGMA, GRAD_X_INPUT_LOW, VANILLA_SIGMA,
};
pub use iterative::{fit_closed_form_on, fit_iterative, fit_iterative_on, FitConfig, PsetSplit};
pub use loss::{loss_is_valid_check, LossSpec, Penalty, ValidityReport};
