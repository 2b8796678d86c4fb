//! Executable checks: model recovery, the no-free-lunch construction,
//! method equivalence matrices and perturbation tests.

mod equivalence;
mod nfl;
mod perturb;
mod recovery;

pub use equivalence::{equivalence_matrix, EquivalenceConfig, EquivalenceMatrix};
pub use nfl::{
    estimate_class_distance, nfl_construct, ClassDistance, Domain, NflConfig, NflReport,
    SearchConfig,
};
pub use perturb::{
    bottom_k, crossover_sign_test, perturbation_delta, perturbation_test, PerturbCurve,
    PerturbNoise, SignTest,
};
pub use recovery::{check_recovery, reparam_recovery_check, RecoveryReport, RecoveryTarget};
