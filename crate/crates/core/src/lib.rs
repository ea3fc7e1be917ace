//! Sampling and exact analysis of the 1-2 model on finite hexagonal lattices.
//!
//! The crate is organised bottom-up:
//!
//! - [`hexlattice`]: regions of the honeycomb lattice, faces, boundary edges and the
//!   vertex/face incidence structure.
//! - [`model`]: configurations, local weights, measures and exhaustive state spaces.
//! - [`dimer`]: the bisector correspondence, disagreement cycles, distances and paths.
//! - [`chain`]: the single-edge/single-face chain, its kernel and sampler.
//! - [`blocks`]: strip and square block dynamics with couplings.
//! - [`analysis`]: total variation, mixing times, spectra, comparison and diameter bounds.
//! - [`spatial`]: spin formulation, Gibbs measures, condition F and self-avoiding walks.
//! - [`pfaffian`]: gadget graphs, Kasteleyn orientations and Pfaffian counts.

pub mod analysis;
pub mod blocks;
pub mod chain;
pub mod dimer;
pub mod error;
pub mod hexlattice;
pub mod model;
pub mod numeric;
pub mod par;
pub mod pfaffian;
pub mod rng;
pub mod spatial;

pub use error::{Error, Result};
