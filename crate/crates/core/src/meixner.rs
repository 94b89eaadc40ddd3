//! The Meixner orthogonal-polynomial ensemble and the exact identity tying
//! it to the lattice height function.
//!
//! The weight on the nonnegative integers is
//! `W(x) = Gamma(beta + x) / (Gamma(beta) x!) * xi^x`. The `N`-point
//! ensemble draws `N` distinct sites with probability proportional to the
//! squared Vandermonde times the site weights; it is determinantal with the
//! Christoffel-Darboux kernel of the first `N` orthonormal polynomials.
//!
//! Everything here works on a certified truncation `[0, x_max]`: the weight
//! decays geometrically, so a finite window carries all but a provably tiny
//! part of the mass, and small ensembles can be enumerated exactly. The
//! q-Laplace functional of the height function on an `M x N` box equals a
//! multiplicative functional over the holes of a Meixner ensemble; both
//! sides are computed here by independent exact pipelines (transfer matrix
//! versus enumeration), which is the strongest correctness check in the
//! crate.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quadrant::{exact_height_distribution, BoundaryKind};
use crate::Scalar;
use serde::Serialize;

/// Parameters of a truncated Meixner ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeixnerParams<F: Scalar> {
    /// Number of particles.
    pub n: usize,
    /// Weight shape parameter, positive.
    pub beta: F,
    /// Weight ratio parameter, in (0, 1).
    pub xi: F,
    /// Sites `0..=x_max` are kept.
    pub x_max: usize,
    /// Certified bound on the probability that the untruncated ensemble
    /// places any particle beyond `x_max`.
    pub tail_bound: F,
}

fn check_weight_params<F: Scalar>(beta: F, xi: F) -> Result<()> {
    if beta <= F::zero() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if xi <= F::zero() || xi >= F::one() {
        return Err(Error::InvalidParameter(format!("xi must lie in (0,1), got {xi}")));
    }
    Ok(())
}

/// Log weights `ln W(x)` for `x = 0..count-1`, by the stable recurrence
/// `ln W(x+1) = ln W(x) + ln xi + ln(beta + x) - ln(x + 1)`.
fn log_weights<F: Scalar>(count: usize, beta: F, xi: F) -> Vec<F> {
    let mut lw = Vec::with_capacity(count);
    let mut cur = F::zero();
    let ln_xi = xi.ln();
    for x in 0..count {
        lw.push(cur);
        let xf = F::from_usize_lossy(x);
        cur = cur + ln_xi + (beta + xf).ln() - (xf + F::one()).ln();
    }
    lw
}

/// The Meixner weight `W(x)`, evaluated in log space.
pub fn meixner_weight<F: Scalar>(x: usize, beta: F, xi: F) -> Result<F> {
    check_weight_params(beta, xi)?;
    Ok(log_weights(x + 1, beta, xi)[x].exp())
}

impl<F: Scalar> MeixnerParams<F> {
    /// Picks the smallest truncation certifying `tail_bound <= target`.
    ///
    /// The certificate is geometric: beyond `x_max` the polynomially
    /// weighted mass `x^{2(n-1)} W(x)` (which dominates the one-point
    /// intensity up to the normalization) is summed by the eventual ratio
    /// bound, and the result is later tightened to the exact kernel
    /// diagonal by [`Ensemble::new`].
    pub fn certified(n: usize, beta: F, xi: F, target: f64) -> Result<MeixnerParams<F>> {
        check_weight_params(beta, xi)?;
        let target = F::from_f64_lossy(target);
        let power = 2 * n.saturating_sub(1) as i32;
        let mut x_max = n.max(8) + 8;
        loop {
            if x_max > 100_000 {
                return Err(Error::Capacity("no certifiable truncation below 1e5".into()));
            }
            let lw = log_weights(x_max + 2, beta, xi);
            let poly_mass = |x: usize, lwx: F| F::from_usize_lossy(x.max(1)).powi(power) * lwx.exp();
            let bulk: F = lw
                .iter()
                .enumerate()
                .take(x_max + 1)
                .map(|(x, &l)| poly_mass(x, l))
                .sum();
            // Eventual ratio of the polynomially weighted terms.
            let xf = F::from_usize_lossy(x_max);
            let ratio = xi * (beta + xf) / (xf + F::one())
                * ((xf + F::one()) / xf).powi(power);
            if ratio < F::one() {
                let head = poly_mass(x_max + 1, lw[x_max + 1]);
                let tail = head / (F::one() - ratio);
                if tail <= target * bulk {
                    return Ok(MeixnerParams { n, beta, xi, x_max, tail_bound: tail / bulk });
                }
            }
            x_max += x_max / 2 + 8;
        }
    }
}

/// Orthonormal polynomials tabulated on the truncated support.
#[derive(Clone, Debug)]
pub struct Basis<F: Scalar> {
    /// `values[k][x]` is `P_k(x)` for `x` on `0..=support`.
    values: Vec<Vec<F>>,
    weights: Vec<F>,
}

impl<F: Scalar> Basis<F> {
    /// Builds `count` orthonormal polynomials with respect to `W` on
    /// `0..=support` by the Stieltjes three-term procedure.
    pub fn build(beta: F, xi: F, support: usize, count: usize) -> Result<Basis<F>> {
        check_weight_params(beta, xi)?;
        if count > support {
            return Err(Error::InvalidParameter(format!(
                "cannot build {count} orthonormal polynomials on {} sites",
                support + 1
            )));
        }
        let weights: Vec<F> = log_weights(support + 1, beta, xi)
            .into_iter()
            .map(|l| l.exp())
            .collect();
        let dot = |a: &[F], b: &[F]| -> F {
            a.iter().zip(b).zip(&weights).map(|((&u, &v), &w)| u * v * w).sum()
        };
        let mut values: Vec<Vec<F>> = Vec::with_capacity(count);
        let mut prev = vec![F::zero(); support + 1];
        let mut cur = vec![F::one(); support + 1];
        let norm0 = dot(&cur, &cur).sqrt();
        for v in cur.iter_mut() {
            *v /= norm0;
        }
        values.push(cur.clone());
        let mut off_diag = F::zero();
        for _k in 1..count {
            let xp: Vec<F> = cur
                .iter()
                .enumerate()
                .map(|(x, &v)| F::from_usize_lossy(x) * v)
                .collect();
            let alpha = dot(&xp, &cur);
            let mut next: Vec<F> = (0..=support)
                .map(|x| xp[x] - alpha * cur[x] - off_diag * prev[x])
                .collect();
            let nrm = dot(&next, &next).sqrt();
            if !(nrm > F::zero()) || !nrm.is_finite() {
                return Err(Error::InvalidParameter(
                    "Stieltjes recurrence lost positivity; raise the support or precision".into(),
                ));
            }
            for v in next.iter_mut() {
                *v /= nrm;
            }
            off_diag = nrm;
            prev = std::mem::replace(&mut cur, next);
            values.push(cur.clone());
        }
        Ok(Basis { values, weights })
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn support(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn value(&self, k: usize, x: usize) -> F {
        self.values[k][x]
    }

    pub fn weight(&self, x: usize) -> F {
        self.weights[x]
    }

    /// Largest deviation of `<P_i, P_j>_W` from the identity.
    pub fn orthonormality_defect(&self) -> F {
        let mut worst = F::zero();
        for i in 0..self.count() {
            for j in i..self.count() {
                let dot: F = (0..=self.support())
                    .map(|x| self.values[i][x] * self.values[j][x] * self.weights[x])
                    .sum();
                let target = if i == j { F::one() } else { F::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Christoffel-Darboux kernel of the first `n` polynomials.
    pub fn kernel(&self, n: usize, x: usize, y: usize) -> F {
        let sum: F = (0..n).map(|k| self.values[k][x] * self.values[k][y]).sum();
        (self.weights[x] * self.weights[y]).sqrt() * sum
    }
}

/// Exactly enumerable truncated Meixner ensemble.
#[derive(Clone, Debug)]
pub struct Ensemble<F: Scalar> {
    pub params: MeixnerParams<F>,
    log_w: Vec<F>,
    log_z: F,
    basis: Option<Basis<F>>,
}

/// Enumeration ceiling: configurations above this are refused.
const MAX_CONFIGS: f64 = 2.0e7;

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0f64;
    for i in 0..k {
        v *= (n - i) as f64 / (i + 1) as f64;
    }
    v
}

impl<F: Scalar> Ensemble<F> {
    /// Builds the ensemble, tightening `tail_bound` to the exact kernel
    /// diagonal mass outside the truncation.
    pub fn new(params: MeixnerParams<F>) -> Result<Ensemble<F>> {
        check_weight_params(params.beta, params.xi)?;
        if binomial(params.x_max + 1, params.n) > MAX_CONFIGS {
            return Err(Error::Capacity(format!(
                "enumeration of C({}, {}) configurations exceeds the budget",
                params.x_max + 1,
                params.n
            )));
        }
        let log_w = log_weights(params.x_max + 1, params.beta, params.xi);
        let mut ensemble = Ensemble { params, log_w, log_z: F::zero(), basis: None };
        if params.n > 0 {
            // Two passes: max shift, then the shifted sum.
            let mut max_term = F::neg_infinity();
            ensemble.raw_for_each(|_, term| max_term = max_term.max(term));
            let mut total = F::zero();
            ensemble.raw_for_each(|_, term| total += (term - max_term).exp());
            ensemble.log_z = max_term + total.ln();

            // Exact one-point intensity beyond x_max, on a doubled support.
            let extended = 2 * params.x_max + 8;
            let basis = Basis::build(params.beta, params.xi, extended, params.n)?;
            let mut beyond = F::zero();
            for x in params.x_max + 1..=extended {
                beyond += basis.kernel(params.n, x, x);
            }
            ensemble.params.tail_bound = beyond + F::from_f64_lossy(1e-18);
            ensemble.basis = Some(basis);
        } else {
            ensemble.params.tail_bound = F::zero();
        }
        Ok(ensemble)
    }

    pub fn basis(&self) -> Option<&Basis<F>> {
        self.basis.as_ref()
    }

    /// Iterates every configuration with its unnormalized log weight
    /// `2 sum ln(x_j - x_i) + sum ln W(x_i)`.
    fn raw_for_each(&self, mut f: impl FnMut(&[usize], F)) {
        let n = self.params.n;
        let top = self.params.x_max;
        if n == 0 {
            f(&[], F::zero());
            return;
        }
        let mut c: Vec<usize> = (0..n).collect();
        loop {
            let mut term = F::zero();
            for i in 0..n {
                term += self.log_w[c[i]];
                for j in 0..i {
                    term += F::from_usize_lossy(c[i] - c[j]).ln() * (F::one() + F::one());
                }
            }
            f(&c, term);
            // Advance the odometer.
            let mut i = n;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if c[i] != i + top + 1 - n {
                    c[i] += 1;
                    for j in i + 1..n {
                        c[j] = c[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Iterates every configuration with its probability.
    pub fn for_each_config(&self, mut f: impl FnMut(&[usize], F)) {
        let log_z = self.log_z;
        self.raw_for_each(|c, term| f(c, (term - log_z).exp()));
    }

    /// Probability of a configuration given as a strictly increasing tuple.
    /// Repeated sites have probability zero.
    pub fn pmf(&self, config: &[usize]) -> Result<F> {
        if config.len() != self.params.n {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} sites, ensemble has {}",
                config.len(),
                self.params.n
            )));
        }
        if config.iter().any(|&x| x > self.params.x_max) {
            return Err(Error::OutOfRange("site beyond truncation".into()));
        }
        if config.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("configuration must be sorted".into()));
        }
        if config.windows(2).any(|w| w[0] == w[1]) {
            return Ok(F::zero());
        }
        let mut term = F::zero();
        for i in 0..config.len() {
            term += self.log_w[config[i]];
            for j in 0..i {
                term += F::from_usize_lossy(config[i] - config[j]).ln() * (F::one() + F::one());
            }
        }
        Ok((term - self.log_z).exp())
    }

    /// Total probability over the enumerated configurations (1 by
    /// construction, up to rounding; the test suites assert it).
    pub fn normalization(&self) -> F {
        let mut total = F::zero();
        self.for_each_config(|_, p| total += p);
        total
    }

    /// `E prod_{holes x} 1/(1 + xi_arg q^x)`, the multiplicative functional
    /// over the holes, including the analytic factor for the sites beyond
    /// the truncation (all of which are holes up to `tail_bound`).
    pub fn holes_functional(&self, xi_arg: F, q: F) -> Result<F> {
        if q <= F::zero() || q >= F::one() {
            return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q}")));
        }
        if xi_arg < F::zero() {
            return Err(Error::InvalidParameter("xi_arg must be nonnegative".into()));
        }
        // ln(1 + xi q^x) per site, and the full product over the window.
        let table: Vec<F> = (0..=self.params.x_max)
            .map(|x| (F::one() + xi_arg * q.powi(x as i32)).ln())
            .collect();
        let ln_full: F = -table.iter().copied().sum::<F>();
        let tail = qpochhammer_product(
            xi_arg * q.powi(self.params.x_max as i32 + 1),
            q,
            0,
        )?;
        let mut expectation = F::zero();
        self.for_each_config(|c, p| {
            let mut ln_val = ln_full;
            for &x in c {
                ln_val += table[x];
            }
            expectation += p * ln_val.exp();
        });
        Ok(expectation * tail)
    }

    /// Distribution of the smallest hole position (always in `0..=n`).
    pub fn smallest_hole_pmf(&self) -> Vec<F> {
        let mut pmf = vec![F::zero(); self.params.n + 1];
        self.for_each_config(|c, p| {
            let mut x1 = 0usize;
            for (i, &x) in c.iter().enumerate() {
                if x == i {
                    x1 = i + 1;
                } else {
                    break;
                }
            }
            pmf[x1] += p;
        });
        pmf
    }
}

/// `prod_{i >= 0} 1 / (1 + xi q^{h+i})`, truncated once the factors are
/// within 1e-16 of 1.
pub fn qpochhammer_product<F: Scalar>(xi_arg: F, q: F, h: u32) -> Result<F> {
    if q <= F::zero() || q >= F::one() {
        return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q}")));
    }
    if xi_arg < F::zero() {
        return Err(Error::InvalidParameter("xi_arg must be nonnegative".into()));
    }
    let cutoff = F::from_f64_lossy(1e-16);
    let mut factor_arg = xi_arg * q.powi(h as i32);
    let mut log_sum = F::zero();
    while factor_arg > cutoff {
        log_sum += (F::one() + factor_arg).ln();
        factor_arg *= q;
    }
    // Remaining factors contribute ~ factor_arg / (1 - q) in the log.
    Ok((-log_sum - factor_arg / (F::one() - q)).exp())
}

/// Exact q-Laplace transform of the height on an `M x N` step-boundary box:
/// `sum_h P[H = h] prod_{i >= 0} 1/(1 + xi q^{h+i})`.
pub fn qlaplace_lhs_exact<F: Scalar>(
    params: &ModelParams,
    m: usize,
    n: usize,
    xi_arg: F,
) -> Result<F> {
    params.require_rarefaction()?;
    let q = F::from_f64_lossy(params.q());
    let dist = exact_height_distribution::<F>(params, BoundaryKind::Step, m, n)?;
    let mut value = F::zero();
    for (h, &p) in dist.pmf.iter().enumerate() {
        if p > F::zero() {
            value += p * qpochhammer_product(xi_arg, q, h as u32)?;
        }
    }
    Ok(value)
}

/// Right-hand side of the identity, with the certified truncation error.
#[derive(Clone, Copy, Debug)]
pub struct RhsValue<F: Scalar> {
    pub value: F,
    pub tail_bound: F,
}

/// Hole functional of the Meixner ensemble matched to an `M x N` box:
/// `Meixner(N, M-N, 1/kappa)` when `M > N`, otherwise
/// `Meixner(M-1, N-M+2, 1/kappa)` with every hole shifted by `N-M+1`
/// (the shift enters as `xi -> xi q^{N-M+1}`; the packed sites it creates
/// are particles and contribute no factor).
pub fn qlaplace_rhs<F: Scalar>(
    params: &ModelParams,
    m: usize,
    n: usize,
    xi_arg: F,
) -> Result<RhsValue<F>> {
    params.require_rarefaction()?;
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("box dims must be positive".into()));
    }
    let q = F::from_f64_lossy(params.q());
    let xi_meixner = F::from_f64_lossy(1.0 / params.kappa());
    let (count, beta, xi_eff) = if m > n {
        (n, F::from_usize_lossy(m - n), xi_arg)
    } else {
        (
            m - 1,
            F::from_usize_lossy(n - m + 2),
            xi_arg * q.powi((n - m + 1) as i32),
        )
    };
    if count == 0 {
        // No particles: every site is a hole.
        return Ok(RhsValue { value: qpochhammer_product(xi_eff, q, 0)?, tail_bound: F::zero() });
    }
    let mp = MeixnerParams::certified(count, beta, xi_meixner, 1e-13)?;
    let ensemble = Ensemble::new(mp)?;
    Ok(RhsValue {
        value: ensemble.holes_functional(xi_eff, q)?,
        tail_bound: ensemble.params.tail_bound,
    })
}

/// Both sides of the identity plus their discrepancy.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QLaplaceReport {
    pub m: usize,
    pub n: usize,
    pub xi: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub tail_bound: f64,
}

pub fn qlaplace_check(params: &ModelParams, m: usize, n: usize, xi: f64) -> Result<QLaplaceReport> {
    let lhs = qlaplace_lhs_exact::<f64>(params, m, n, xi)?;
    let rhs = qlaplace_rhs::<f64>(params, m, n, xi)?;
    Ok(QLaplaceReport {
        m,
        n,
        xi,
        lhs,
        rhs: rhs.value,
        abs_err: (lhs - rhs.value).abs(),
        tail_bound: rhs.tail_bound,
    })
}
