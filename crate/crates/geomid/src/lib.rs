//! Characteristic-function algebra of geometric infinite divisibility.
//!
//! An ID law with c.f. exp{-g(t)} corresponds one-to-one to its geometric
//! version with c.f. 1/(1+g(t)); geometric random sums converge to geometric
//! versions the way deterministic sums converge to ID laws. This crate holds
//! the exact c.f. algebra ([`cf`]), seeded samplers for every law involved
//! ([`samplers`]), c.f./CDF numerics ([`numerics`]), executable forms of the
//! attraction and partial-attraction theorems ([`attraction`]), and renewal
//! p-thinning ([`thinning`]).

pub mod attraction;
pub mod cf;
pub mod error;
pub mod grid;
pub mod numerics;
pub mod report;
pub mod samplers;
pub mod thinning;

pub use attraction::{AttractionSchedule, MonteCarlo, ScheduleKind};
pub use cf::{CharFn, ExponentDescriptor, ExponentKind};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use numerics::{DistanceReport, Quadrature, RateFit, RateFitMode};
pub use report::{ExperimentReport, ReportRow, Verdict};
pub use samplers::{GeometricLaw, RandomStream, SampleBatch};
pub use thinning::EventTrain;
