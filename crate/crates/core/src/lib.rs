//! Simulation and verification laboratory for the stochastic six-vertex model.
//!
//! The model lives on a square lattice: arrows enter each vertex from the
//! bottom and the left and leave through the top and the right, conserving
//! the number of arrows. A vertex with a single incoming arrow resolves it
//! randomly (continue straight or turn) with probabilities `b1` (vertical)
//! and `b2` (horizontal); multi-class arrows resolve by letting the lowest
//! class win the coin flip. Everything else in this crate is built on that
//! single local rule:
//!
//! * [`quadrant`] — sampling on finite boxes, height functions, and an exact
//!   transfer-matrix distribution of the height for small widths;
//! * [`line`] — windowed simulation on the integer line, shared-randomness
//!   couplings, class merging;
//! * [`tracking`] — tagged-particle experiments (second-class trajectories,
//!   overtaking counts, permutation snapshots);
//! * [`hydro`] — closed-form limit shape, density profile, flux, and speed
//!   distribution, plus statistical test helpers in [`stats`];
//! * [`meixner`] — the Meixner orthogonal-polynomial ensemble and the exact
//!   q-Laplace identity that ties it to the lattice height function.
//!
//! All randomness flows through [`field::RandomField`], a counter-based
//! generator: the bit at `(x, t, channel)` is a pure function of the seed, so
//! any number of initial conditions can be coupled on one realization and
//! every run is reproducible bit for bit.
//!
//! Numeric kernels (analytic curves, orthogonal polynomials, transfer-matrix
//! weights) are generic over the scalar type via [`Scalar`]; `f64` aliases
//! are exported at the crate root.

pub mod class;
pub mod error;
pub mod field;
pub mod hydro;
pub mod line;
pub mod meixner;
pub mod params;
pub mod quadrant;
pub mod stats;
pub mod tolerances;
pub mod tracking;
pub mod vertex;

pub use class::Class;
pub use error::{Error, Result};
pub use field::{Channel, RandomField};
pub use params::ModelParams;

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Scalar type the numeric kernels are generic over.
///
/// Implemented by `f32` and `f64`; the lattice samplers themselves are
/// integer-valued and do not depend on this.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize conversion")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Default concrete scalar used by the CLI and the test suites.
pub type F = f64;

/// Exact height distribution at the default scalar.
pub type ExactHeightDistribution = quadrant::HeightDistribution<f64>;
/// Meixner ensemble at the default scalar.
pub type MeixnerEnsemble = meixner::Ensemble<f64>;
/// Orthonormal basis at the default scalar.
pub type OrthoBasis = meixner::Basis<f64>;
