//! Desk-scale computational machinery for the dynamics of unimodular lattices:
//! exact shortest-vector geometry, diagonal flows, the correspondence between
//! approximation functions and flow excursions, Haar-measure Monte Carlo with
//! the primitive-vector summation formulas, type-A root data, and seeded
//! statistical experiments driving all of it.

pub mod dani;
pub mod dio;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod lattice;
pub mod mat;
pub mod numeric;
pub mod rng;
pub mod roots;
pub mod siegel;
pub mod snf;

pub use error::{Error, Result};
pub use lattice::{LatticeBasis, NormKind, ShortVec};
