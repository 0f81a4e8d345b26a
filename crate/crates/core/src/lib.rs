//! Random sets, random projectors and the continuous resolutions of the
//! identity they generate.
//!
//! The set-side modules ([`lattice`], [`cardinality`], [`random_sets`],
//! [`partition`]) work in exact rational arithmetic. The Hilbert-space side
//! ([`prebasis`], [`resolution`]) is generic over exact and floating complex
//! entries. [`sampling`] checks both against seeded Monte Carlo draws and
//! [`cli`] drives everything from JSON input documents.

pub mod cardinality;
pub mod cli;
pub mod curve;
pub mod document;
pub mod lattice;
pub mod operator;
pub mod partition;
pub mod poly;
pub mod prebasis;
pub mod quadrature;
pub mod random_sets;
pub mod resolution;
pub mod sampling;
pub mod scalar;
