//! Modeling and analysis of Eberhard-inequality photon experiments.
//!
//! * [`model`] predicts singles and coincidence counts from a damped
//!   two-photon polarization state, including dark counts and accidental
//!   coincidences.
//! * [`inequality`] evaluates the Eberhard value `J` (violation iff `J < 0`)
//!   and round statistics.
//! * [`drift`] removes production-rate drifts between setting combinations
//!   and recomputes `J'`.
//! * [`sim`] generates timestamped detection events for quantum and
//!   local-hidden-variable sources and counts window coincidences.
//! * [`io`] reads and writes counts datasets (JSON) and event logs (CSV);
//!   [`fixtures`] embeds the published measurement.

pub mod drift;
pub mod error;
pub mod fixtures;
pub mod inequality;
pub mod io;
pub mod model;
pub mod report;
pub mod sim;
pub mod types;
pub mod validation;

pub use drift::{BaselinePolicy, CorrectionFactors, NormalizationPath, PathLink, RoundNormalization};
pub use error::{Error, Result};
pub use inequality::{eberhard_j, SeriesStats, SinglesDeviationTable};
pub use io::{Dataset, DatasetRound};
pub use model::{DensityMatrix, ExperimentConfig, MeasurementAngle, ModelComparison, Prediction, StateParams};
pub use report::ReportRow;
pub use sim::{BlockId, EventRecord, IntensityProfile, LhvStrategy, Schedule, SimSeed};
pub use types::{Combo, Count, CountsBlock, Party, RoundData};
