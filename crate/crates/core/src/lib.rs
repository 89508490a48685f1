//! Forward and inverse modelling of sequential quantum measurements with a
//! von Neumann pointer.
//!
//! The forward side computes Feynman path amplitudes for a chain of
//! measurements ([`paths`]), the statistics of a Gaussian pointer coupled to
//! one of them ([`pointer`]) and synthetic records of pointer readings
//! ([`sampler`]). The inverse side recovers the moduli and relative phases of
//! the path amplitudes from those records ([`inverse`]).

pub mod config;
pub mod error;
pub mod experiment;
pub mod inverse;
pub mod numerics;
pub mod paths;
pub mod pointer;
pub mod qcore;
pub mod sampler;
pub mod scenarios;

pub use config::{ExperimentConfig, Mode};
pub use error::{Error, Result};
pub use paths::{MeasurementChain, PathAmplitudes, TwoStepSystem};
pub use pointer::{GramMatrix, PointerConfig, ReadingDensity};
pub use qcore::{MixedState, Observable, QuantumState, Unitary};
pub use sampler::{CountVector, IntervalPartition, TrialRecord};
