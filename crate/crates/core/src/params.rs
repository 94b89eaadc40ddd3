//! Model parameters `(b1, b2)` and the derived ratios `(q, kappa)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the stochastic six-vertex model.
///
/// `b1` is the probability that a lone vertical arrow continues upward, `b2`
/// that a lone horizontal arrow continues rightward. The ratios
/// `q = b1/b2` and `kappa = (1-b1)/(1-b2)` are recomputed from `(b1, b2)` at
/// construction and never taken from the caller. All fan analytics require
/// the rarefaction regime `b1 < b2` (equivalently `kappa > 1`); parameters
/// with `b1 >= b2` are still constructible for the inversion-symmetry checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    b1: f64,
    b2: f64,
    q: f64,
    kappa: f64,
}

impl ModelParams {
    /// Builds parameters from the two vertex probabilities.
    pub fn new(b1: f64, b2: f64) -> Result<ModelParams> {
        if !(b1 > 0.0 && b1 < 1.0) || !(b2 > 0.0 && b2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "b1 and b2 must lie in (0,1), got b1={b1}, b2={b2}"
            )));
        }
        Ok(ModelParams {
            b1,
            b2,
            q: b1 / b2,
            kappa: (1.0 - b1) / (1.0 - b2),
        })
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    /// `q = b1 / b2`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `kappa = (1 - b1) / (1 - b2)`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// True in the rarefaction-fan regime `b1 < b2`.
    pub fn is_rarefaction(&self) -> bool {
        self.b1 < self.b2
    }

    /// Errors unless `b1 < b2`; gate for every fan analytic.
    pub fn require_rarefaction(&self) -> Result<()> {
        if self.is_rarefaction() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "rarefaction regime b1 < b2 required, got b1={}, b2={}",
                self.b1, self.b2
            )))
        }
    }

    /// Parameters with the two probabilities swapped (image of the model
    /// under either single inversion symmetry).
    pub fn swapped(&self) -> ModelParams {
        ModelParams::new(self.b2, self.b1).expect("swap keeps parameters in (0,1)")
    }
}
