//! Simulation and analysis library for continuum particle dynamics on a
//! periodic torus.
//!
//! The library covers three layers:
//!
//! * **Dynamics** — event-driven (thinning/rejection) simulation of hopping
//!   particle systems ([`kawasaki`]) and of spatial birth-and-death processes
//!   ([`glauber`]), plus grand-canonical Gibbs sampling via a reversible
//!   birth-death chain ([`gibbs`]).
//! * **Harmonic analysis on configuration spaces** — exact small-`n`
//!   combinatorics (K-transform, set partitions, correlation ↔ Ursell
//!   inversion) and Lebesgue–Poisson cluster integrals, including the dual
//!   action of the scaled hop generator on product correlation functionals
//!   ([`harmonic`]).
//! * **Estimation** — densities, pair correlations, Laplace functionals and
//!   two-time covariances over trajectory ensembles, all with standard errors
//!   from independent trajectories ([`estimation`]).
//!
//! Everything is deterministic given an explicit RNG stream; see [`stream`]
//! for the counter-based per-trajectory stream construction.

pub mod error;
pub mod estimation;
pub mod gibbs;
pub mod glauber;
pub mod harmonic;
pub mod kawasaki;
pub mod potential;
pub mod quad;
pub mod stats;
pub mod stream;
pub mod testfn;
pub mod torus;

pub use error::{Error, Result};
