//! Tuning rules, restricted-eigenvalue searches, spikiness, error metrics and
//! the empirical curvature probe.

mod curvature;
mod metrics;
mod re;
mod tuning;

pub use curvature::{curvature_slack, restricted_curvature};
pub use metrics::{error_metrics, Coefficients, ErrorMetrics, RankStats, SupportStats};
pub use metrics::spikiness;
pub use re::{empirical_mre, empirical_re, MreConfig, ReConfig, ReEstimate};
pub use tuning::{
    tuning_completion, tuning_lasso, tuning_matrix_cs, CompletionVariant, DiagnosticsReport, RadiusKind,
    TheoremConstants, TheoremInputs,
};
