//! Factor-graph label model over labeling-function votes.
//!
//! Each beat has a latent class `y ∈ {-1, +1}` and each LF `k` contributes
//! an accuracy factor `1{λ_k = y}` with weight `theta_acc[k]` and a
//! propensity factor `1{λ_k ≠ 0}` with weight `theta_lab[k]`. LFs are
//! conditionally independent given `y`, so the per-beat partition function
//! factorizes and everything here is exact: no sampling, no approximation.

mod fit;
mod model;
mod posterior;

pub use fit::{fit, fit_pooled, FitConfig};
pub use model::{
    log_partition, nll, nll_gradient, nll_gradient_with, nll_with, FitMeta, Gradient,
    LabelModelParams,
};
pub use posterior::{
    majority_vote, posterior, posterior_row, posterior_row_shifted, prob_labels_csv, HardLabel,
    ProbLabel,
};
