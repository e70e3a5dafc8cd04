//! Closed-form detection analysis.
//!
//! Steady-state quantities (deflection coefficient, blinding condition,
//! optimal weights, ROC) and the transient Gaussian-mixture description of a
//! node's statistic after a finite number of consensus iterations.

pub mod moments;
pub mod qfunc;
pub mod roc;
pub mod transient;
pub mod weights;

pub use moments::{
    alpha_blind, blinding_residual, deflection_coefficient, global_moments, Blindness,
    GlobalStatisticMoments, HomogeneousAttack,
};
pub use qfunc::{normal_cdf, q_function};
pub use roc::{
    auc, default_lambda_grid, pd_at_pf, roc_closed_form, roc_on_pf_grid, steady_state_mixtures,
    RocPoint,
};
pub use transient::{
    mixture_for_coefficients, transient_mixture, transient_pd_pf, vectorized_exceedance,
    vectorized_pd, TransientMixture, ENUMERATION_CAP,
};
pub use weights::{
    conventional_weights, conventional_weights_for, effective_conventional_weights,
    equal_gain_weights, exclusion_weights, optimal_weights, WeightAssignment, WeightProvenance,
    WeightShift,
};
