//! Closed-form reference curves for the rarefaction regime.
//!
//! All formulas are functions of `kappa > 1` alone. The step-data density
//! interpolates from 1 to 0 across the fan `kappa^{-1} < x/t < kappa`; the
//! limit shape `g` is its integrated counterpart, and the speed of a tagged
//! second-class particle has the distribution whose closed-form CDF lives
//! here.

use crate::error::{Error, Result};
use crate::field::{derive_seed, RandomField};
use crate::params::ModelParams;
use crate::Scalar;
use rayon::prelude::*;
use serde::Serialize;

/// Position of a space-time ratio relative to the fan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanRegime {
    /// `x/t <= kappa^{-1}`: density 1.
    Packed,
    /// Inside the fan.
    Fan,
    /// `x/t >= kappa`: density 0.
    Empty,
}

/// A ratio `mu = x/t` classified against the fan of the given `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanPoint<F: Scalar> {
    pub mu: F,
    pub regime: FanRegime,
}

fn check_kappa<F: Scalar>(kappa: F) -> Result<()> {
    if kappa <= F::one() {
        return Err(Error::InvalidParameter(format!(
            "fan analytics require kappa > 1, got {kappa}"
        )));
    }
    Ok(())
}

pub fn fan_point<F: Scalar>(mu: F, kappa: F) -> Result<FanPoint<F>> {
    check_kappa(kappa)?;
    let regime = if mu <= kappa.recip() {
        FanRegime::Packed
    } else if mu < kappa {
        FanRegime::Fan
    } else {
        FanRegime::Empty
    };
    Ok(FanPoint { mu, regime })
}

/// Limit shape of the height function: `y - x` below the fan,
/// `(sqrt(x) - sqrt(kappa y))^2 / (kappa - 1)` inside, `0` above.
pub fn limit_shape_g<F: Scalar>(x: F, y: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if x < F::zero() || y < F::zero() {
        return Err(Error::InvalidParameter("limit shape needs x, y >= 0".into()));
    }
    if y.is_zero() {
        return Ok(F::zero());
    }
    let ratio = x / y;
    Ok(if ratio <= kappa.recip() {
        y - x
    } else if ratio < kappa {
        let d = x.sqrt() - (kappa * y).sqrt();
        d * d / (kappa - F::one())
    } else {
        F::zero()
    })
}

/// Entropy-solution density of the step profile:
/// `1` below the fan, `(sqrt(kappa t / x) - 1) / (kappa - 1)` inside, `0`
/// above.
pub fn density_rho<F: Scalar>(x: F, t: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if t <= F::zero() {
        return Err(Error::InvalidParameter("density needs t > 0".into()));
    }
    let ratio = x / t;
    Ok(if ratio < kappa.recip() {
        F::one()
    } else if ratio <= kappa {
        ((kappa * t / x).sqrt() - F::one()) / (kappa - F::one())
    } else {
        F::zero()
    })
}

/// Conservation-law flux `phi(rho) = kappa rho / ((kappa - 1) rho + 1)`.
pub fn flux_phi<F: Scalar>(rho: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if rho < F::zero() || rho > F::one() {
        return Err(Error::InvalidParameter(format!(
            "flux needs rho in [0,1], got {rho}"
        )));
    }
    Ok(kappa * rho / ((kappa - F::one()) * rho + F::one()))
}

/// Density of the limiting speed on `[kappa^{-1}, kappa]`:
/// `sqrt(kappa) / (2 (kappa - 1)) x^{-3/2}`; zero outside.
pub fn speed_density<F: Scalar>(x: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if x < kappa.recip() || x > kappa {
        return Ok(F::zero());
    }
    let two = F::one() + F::one();
    let exponent = -(F::one() + F::one() / two);
    Ok(kappa.sqrt() / (two * (kappa - F::one())) * x.powf(exponent))
}

/// CDF of the limiting speed: `(kappa - sqrt(kappa/x)) / (kappa - 1)`
/// clamped to `[0, 1]`.
pub fn speed_cdf<F: Scalar>(x: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if x <= F::zero() {
        return Ok(F::zero());
    }
    let v = (kappa - (kappa / x).sqrt()) / (kappa - F::one());
    Ok(v.max(F::zero()).min(F::one()))
}

/// Quantile function of the speed law.
pub fn speed_quantile<F: Scalar>(p: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if p < F::zero() || p > F::one() {
        return Err(Error::InvalidParameter("quantile needs p in [0,1]".into()));
    }
    // Invert (kappa - sqrt(kappa) x^{-1/2}) / (kappa - 1) = p.
    let root = (kappa - p * (kappa - F::one())) / kappa.sqrt();
    Ok(root.powi(-2))
}

/// The unique increasing map sending the law of `-U` on
/// `[-kappa, -kappa^{-1}]` to the uniform law on `[-1, 1]`:
/// `f(u) = 2 F_-(u) - 1` with `F_-(u) = 1 - F(-u)`.
pub fn asep_map_f<F: Scalar>(u: F, kappa: F) -> Result<F> {
    check_kappa(kappa)?;
    if u < -kappa || u > -kappa.recip() {
        return Err(Error::InvalidParameter(format!(
            "map domain is [-kappa, -1/kappa], got {u}"
        )));
    }
    let two = F::one() + F::one();
    let f_minus = F::one() - speed_cdf(-u, kappa)?;
    Ok(two * f_minus - F::one())
}

/// Empirical tails of the centered, `T^{1/3}`-rescaled height at a fan
/// ratio `mu`.
#[derive(Clone, Debug, Serialize)]
pub struct TailProfile {
    pub t: u32,
    pub mu: f64,
    pub trials: u64,
    pub s_grid: Vec<f64>,
    /// `P[H(mu T, T) - g(mu) T >= s T^{1/3}]` per grid point.
    pub upper: Vec<f64>,
    /// `P[H(mu T, T) - g(mu) T <= -s T^{1/3}]` per grid point.
    pub lower: Vec<f64>,
}

impl TailProfile {
    /// Drop of the log-tail between two grid points, `+inf` when the
    /// farther tail is empty. Errs if the nearer tail is already empty.
    pub fn log_drop(&self, tail: &[f64], s_from: f64, s_to: f64) -> Result<f64> {
        let idx = |s: f64| {
            self.s_grid
                .iter()
                .position(|&g| (g - s).abs() < 1e-9)
                .ok_or_else(|| Error::InvalidParameter(format!("s = {s} not on the grid")))
        };
        let (from, to) = (tail[idx(s_from)?], tail[idx(s_to)?]);
        if from <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "empty tail at s = {s_from}; no decay measurable"
            )));
        }
        Ok(if to <= 0.0 { f64::INFINITY } else { (from / to).ln() })
    }
}

/// Samples `H(mu T, T)` from step data `trials` times and tabulates both
/// scaled tails on `s_grid`.
pub fn tail_profile(
    params: &ModelParams,
    t: u32,
    mu: f64,
    trials: u64,
    seed: u64,
    s_grid: &[f64],
) -> Result<TailProfile> {
    params.require_rarefaction()?;
    let kappa = params.kappa();
    if mu <= 1.0 / kappa || mu >= kappa {
        return Err(Error::InvalidParameter(format!(
            "mu = {mu} outside the open fan (1/kappa, kappa)"
        )));
    }
    let column = (mu * f64::from(t)).round() as usize;
    let heights: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let f = RandomField::new(params, derive_seed(seed, i));
            let run = crate::quadrant::stream_step_box(column - 1, t as usize, &f);
            f64::from(run.particle_exits)
        })
        .collect();
    let center = limit_shape_g(mu, 1.0, kappa)? * f64::from(t);
    let scale = f64::from(t).cbrt();
    let n = trials as f64;
    let upper: Vec<f64> = s_grid
        .iter()
        .map(|&s| heights.iter().filter(|&&h| h - center >= s * scale).count() as f64 / n)
        .collect();
    let lower: Vec<f64> = s_grid
        .iter()
        .map(|&s| heights.iter().filter(|&&h| h - center <= -s * scale).count() as f64 / n)
        .collect();
    Ok(TailProfile { t, mu, trials, s_grid: s_grid.to_vec(), upper, lower })
}
