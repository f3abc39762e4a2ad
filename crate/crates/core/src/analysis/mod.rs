//! Verification instruments: distributional distance, idle-time metric,
//! ranking-error bounds, pathwise dominance, structural audits and policy
//! comparison.

mod audit;
mod compare;
mod dominance;
mod idle;
mod ks;
mod concentration;

pub use audit::{invariant_audit, CheckResult, InvariantReport};
pub use compare::{difference, policy_comparison, MeanCi, PolicySummary, Z95};
pub use dominance::{
    default_delta, dominance_audit, DominanceAudit, DominanceOptions, DominanceViolation,
};
pub use idle::{idle_metric, ClassPartition};
pub use ks::{ks_critical_05, ks_distance, ks_p_value};
pub use concentration::{
    concentration_bounds, concentration_bounds_log_n, concentration_mc, monotone_from, ConcentrationBounds, ConcentrationConfig,
    ConcentrationEstimate,
};
