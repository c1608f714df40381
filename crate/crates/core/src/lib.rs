//! Partial identification and inference for the accuracy of a diagnostic
//! test evaluated against an imperfect reference test.
//!
//! The pipeline runs from raw 2×2 counts of (index test, reference test)
//! outcomes to:
//!
//! * sharp identified sets for sensitivity and specificity ([`identification`]),
//! * bounds on prevalence and predictive values ([`derived`]),
//! * the moment-inequality representation of those sets ([`moments`]),
//! * bootstrap confidence sets by test inversion ([`inference`]),
//! * report assembly, fixtures and plots ([`report`]).

pub mod derived;
pub mod error;
pub mod exec;
pub mod identification;
pub mod inference;
pub mod io;
pub mod moments;
pub mod probability;
pub mod report;
pub mod svg;

pub use error::{Assumption, Error, Result};
pub use exec::Execution;
pub use derived::{
    predictive_value_bounds, prevalence_bounds_rect, prevalence_bounds_segment, prevalence_bounds_union,
    PredictiveBounds, PretestRange, PrevalenceBounds, PrevalenceUnion, ScreeningInput,
};
pub use identification::{
    frechet_comparator, project, sharp_segment, sharp_union, sharp_union_with, DependenceAssumption,
    IdentifiedSet, Interval, ThetaSegment,
};
pub use inference::{
    clopper_pearson, confidence_set, confidence_set_with, coverage_simulation, rsw2_test, BetaPreset,
    ConfidenceSet, TestConfig, TestOutcome,
};
pub use moments::{build_moment_system, moment_stats, param_space_box, variance_floor, MomentStats, MomentSystem, ThetaPoint};
pub use probability::{
    apparent_measures, derived_joint_ry, derived_prevalence, estimate_joint, validate_assumptions,
    CellCounts, DerivedRY, JointTR, RefPerf, SRegion, ValidationReport,
};
pub use report::{emit_prevalence_curve, run_analysis, run_sensitivity, ReportBundle, StudyConfig};
