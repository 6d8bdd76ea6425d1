//! Rate regions for multiple-description source coding.
//!
//! The crate models the achievable rate tuples of an L-description source
//! code under per-subset distortion constraints. It provides:
//!
//! - subset combinatorics for the index families that organize shared
//!   messages ([`combinatorics`]);
//! - exact entropy and mutual-information computation for dense discrete
//!   joint distributions ([`pmf`]) and for jointly Gaussian systems built
//!   from noise sums, aliases, and conditional means ([`gaussian`]);
//! - constraint-set builders for the message-sharing achievable region and
//!   for the classical two- and L-description inner bounds ([`regions`]);
//! - exact-rational polyhedral tools: Fourier–Motzkin projection, redundancy
//!   reduction, vertex enumeration, and containment tests ([`polyhedra`]);
//! - closed-form quadratic-Gaussian regions, corner points, and regime
//!   classification ([`gaussian_md`]);
//! - a finite-blocklength random-coding simulator for small discrete
//!   sources ([`sim`]).
//!
//! Data-parallel operations (regime maps, simulation sweeps) use rayon when
//! the default `parallel` feature is enabled and fall back to sequential
//! loops otherwise; both paths produce identical output.

pub mod combinatorics;
pub mod gaussian;
pub mod gaussian_md;
pub mod lp;
pub mod par;
pub mod pmf;
pub mod polyhedra;
pub mod regions;
pub mod sim;
pub mod error;

pub use error::{Error, Result};
