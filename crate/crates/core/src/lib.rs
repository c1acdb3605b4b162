//! On-line signature verification toolkit.
//!
//! The crate covers the full benchmark loop for dynamic (time-series)
//! signatures: domain types and text formats ([`sigdata`]), preprocessing
//! ([`preprocess`]), time-function / global / path-signature features
//! ([`features`]), DTW and soft-DTW alignment kernels ([`alignment`]),
//! threshold- and fusion-based verifiers ([`verifiers`]), EER evaluation and
//! points ranking ([`evaluation`]), and a deterministic synthetic dataset
//! generator for desk-scale runs ([`synth`]).

pub mod alignment;
pub mod evaluation;
pub mod features;
pub mod preprocess;
pub mod sigdata;
pub mod synth;
pub mod verifiers;
