//! Saturation estimates for sequential qualitative interviews.
//!
//! Interviews are ingested as an [`ElicitationMatrix`] (which codes were
//! elicited at which interview) or as published per-block counts
//! ([`GroupedCounts`]). From there the crate derives:
//!
//! * a Kaplan-Meier curve of the probability that saturation has not yet
//!   been reached, with Greenwood confidence limits and straight-line
//!   extrapolation to zero ([`survival`]);
//! * per-interview capture-recapture estimates of the total number of codes
//!   ([`crc`]);
//! * stopping-rule decisions, their Type I error against the observed data,
//!   grouped-count imputation and what-if scenario evaluation ([`planner`]).
//!
//! Every computation is a pure function over immutable values.

pub mod crc;
pub mod dataset;
pub mod export;
pub mod planner;
pub mod survival;

pub use crc::{CaptureCounts, CrcEstimate};
pub use dataset::{
    CodeFrequencyTable, DatasetError, DescriptiveStats, ElicitationMatrix, Group, GroupedCounts,
    Interview, InterviewSequence,
};
pub use planner::{ProjectionMethod, ScenarioRow, Seed, StopDecision, StoppingRule, Type1Report};
pub use survival::{
    CiTransform, ConfidenceInterval, EventCoding, KmCurve, KmOptions, KmPoint, SaturationSummary,
};
