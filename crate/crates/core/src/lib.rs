//! Discrete hidden Markov models for inferring which task a user performed
//! from their mouse-cursor trajectory.
//!
//! The pipeline: a [`aoi::CursorTrace`] is resampled every `ds` milliseconds
//! and mapped onto areas of interest ([`aoi::vectorize`]), producing a
//! [`hmm::SymbolSequence`]. One HMM per task is trained with
//! [`training::baum_welch`], and [`classifier::classify`] picks the task whose
//! model gives the sequence the highest log-likelihood.
//!
//! Every log-likelihood is a natural logarithm.

pub mod aoi;
pub mod classifier;
pub mod error;
pub mod hmm;
pub mod model_io;
pub mod training;

pub use error::{Error, Result};
pub use hmm::{HmmModel, StatePath, SymbolSequence};
