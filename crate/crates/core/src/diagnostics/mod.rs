//! Continuation-criterion quantities and audits of the explicit constants
//! and inequalities that enter the criterion.
//!
//! Every audit returns an [`AuditFinding`]; none of them aborts a run.

mod barrier;
mod blowup;
mod calc;
mod criterion;
mod cylinder;
pub mod finding;
mod interpolation;
mod moser;
mod scaling;

pub use barrier::{
    barrier_margin, barrier_params, crossing_sign_audit, trace_identity, BarrierEnvelope,
    BarrierInputs, MarginReport, MuBranch, StructuralConstants,
};
pub use blowup::{blowup_detector, blowup_from_series, DEFAULT_GROWTH_THRESHOLD};
pub use calc::{calc_inequality_audit, calc_sides, calc_unrestricted_region, UnrestrictedRegion};
pub use criterion::{criterion_report, CriterionReport};
pub use cylinder::cylinder_norms;
pub use finding::{AuditFinding, FindingsDocument, Verdict};
pub use interpolation::{
    energy_interpolation_check, exponent_identity_residual, interpolation_exponent,
    InterpolationExponents,
};
pub use moser::{
    moser_constants_audit, moser_partial_sums, MOSER_LIMITS, MOSER_RATIO, MOSER_TERMS, SIGMA,
};
pub use scaling::{
    rescale, scaled_grid, scaling_covariance_residual, ScalingResidual, ScalingTransform,
};
