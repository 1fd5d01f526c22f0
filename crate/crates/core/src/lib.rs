//! Round-trip correctness (RTC) evaluation for code models.
//!
//! A model describes a piece of code (forward), regenerates the code from its
//! own description (backward), and the harness measures how much of the
//! original semantics survived the trip. The crate is split along the
//! pipeline:
//!
//! - [`corpus`] turns a tested project into sampled code regions.
//! - [`sandbox`] copies projects into disposable worktrees and runs their suites.
//! - [`gateway`] talks to a generation endpoint or to deterministic mock models.
//! - [`engine`] draws forward/backward samples and computes RTC and lift.
//! - [`synthesis`] and [`editing`] are the two task instantiations.
//! - [`similarity`] holds the scoring functions, [`stats`] the reporting math.

pub mod corpus;
pub mod editing;
pub mod engine;
pub mod gateway;
pub mod sandbox;
pub mod similarity;
pub mod stats;
pub mod synthesis;
pub mod sync;
pub mod text;

pub use engine::{RoundTripRecord, SamplingConfig};
