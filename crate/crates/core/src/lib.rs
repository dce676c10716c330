//! Random periodic sampling for shift-invariant and multi-band Paley-Wiener spaces.
//!
//! The crate is organised around the Zak-domain picture of periodic sampling:
//! a pattern `X + Z^d` samples a shift-invariant space stably if and only if the
//! `k x k` Hermitian matrices `T(w) = conj(Z) Z^t` built from the Zak matrix are
//! uniformly well conditioned across the fundamental domain of frequencies.
//!
//! * [`spectrum`] represents spectra on a finite raster and computes tiling
//!   decompositions, complexity indices, multi-tile completions and ρ-covers.
//! * [`generators`] holds generator sets `φ_i = e^{2πi<ℓ_i,·>} ψ_i` and the
//!   constants `C`, `K`, `D` that drive the sample-count bounds.
//! * [`verify`] assembles Zak matrices, checks frame bounds fiber by fiber and
//!   evaluates the sample-count formulas and Bernstein tails.
//! * [`signal`] is an exact finite model used as an oracle for the Zak-domain
//!   criterion, including per-fiber least-squares reconstruction.
//! * [`experiments`] is a seeded Monte Carlo harness over random patterns.

pub mod error;
pub mod experiments;
pub mod generators;
pub mod lattice;
pub mod schema;
pub mod signal;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use generators::{FrequencyProfile, GeneratorSet, RasterProfile};
pub use lattice::{FiberPoint, Grid, LatticePoint};
pub use signal::{DiscreteSignal, SampleSet};
pub use spectrum::{
    BoundaryGeometry, MultiTileSpectrum, RasterSpectrum, Spectrum, TilingClass, TilingDecomposition,
};
pub use verify::{FrameReport, GridPolicy, SamplingPattern};
