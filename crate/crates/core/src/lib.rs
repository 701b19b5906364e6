//! Isotropy data, flag complexes and invariant Einstein metrics on compact
//! homogeneous spaces `G/H` built from classical matrix groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`liealg`] builds the ambient algebra, its bracket and Killing form;
//! * [`isotropy`] embeds `h`, splits `m = h^⊥` into summands and computes
//!   the structure constants `d_i`, `b_i`, `c_i`, `[ijk]`;
//! * [`lattice`] enumerates the intermediate subalgebras;
//! * [`flags`] handles flags, canonical endomorphisms, disks and butterflies;
//! * [`complex`] builds the flag complex and its integral homology;
//! * [`curvature`] and [`solver`] evaluate curvature and search for Einstein
//!   metrics;
//! * [`cli`] ingests configurations and assembles reports.

pub mod cli;
pub mod complex;
pub mod curvature;
pub mod error;
pub mod flags;
pub mod isotropy;
pub mod lattice;
pub mod liealg;
pub mod linalg;
pub mod solver;

pub use error::{Error, Result};

/// Absolute tolerance for structural identities.
pub const EPS_STRUCT: f64 = 1e-9;
