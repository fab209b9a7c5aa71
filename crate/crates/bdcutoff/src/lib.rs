//! Exact mixing-time and cutoff analysis for finite birth-and-death
//! chains.
//!
//! The crate computes, without simulation error wherever a formula
//! exists:
//!
//! - spectra of I − K and of its principal submatrices ([`spectral`]),
//! - first-passage means and variances under discrete and continuous
//!   clocks ([`hitting`]),
//! - total-variation and separation distance profiles and mixing times
//!   via uniformization ([`evolve`]),
//! - family-level cutoff statistics, criterion products, and verdicts
//!   across parametric chain families, including randomized slowdown
//!   families ([`cutoff`], [`families`]),
//! - a batch of cross-checking invariants against independent oracles
//!   ([`verify`]).

pub mod chain;
pub mod cutoff;
pub mod evolve;
pub mod families;
pub mod hitting;
pub mod spectral;
pub mod util;
pub mod verify;

/// Discrete steps of K or the continuous-time semigroup e^{−t(I−K)}.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    Discrete,
    Continuous,
}

pub use chain::{Chain, ChainError, TimeParameter};
pub use cutoff::{analyze_family, verdict, FamilyReport, SweepOptions};
pub use evolve::{mixing_time, separation, tv_distance, Distance, Start};
pub use families::Family;
pub use hitting::{mean_hit, var_hit, HitMoments};
pub use spectral::{full_spectrum, leading_spectrum, punctured_spectrum, Spectrum};
