//! Statistical test kit shared by the experiments.

use crate::error::{Error, Result};
use crate::Scalar;
use serde::Serialize;

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Scalar>(samples: &[F], cdf: impl Fn(F) -> F) -> Result<F> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("KS statistic of empty sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("comparable samples"));
    let n = F::from_usize_lossy(xs.len());
    let mut d = F::zero();
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        let above = (F::from_usize_lossy(i + 1) / n - c).abs();
        let below = (c - F::from_usize_lossy(i) / n).abs();
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Asymptotic KS critical value at level `alpha` for sample size `n`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Two-sample KS distance between empirical distributions.
pub fn ks_two_sample<F: Scalar>(a: &[F], b: &[F]) -> Result<F> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("KS distance of empty sample".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).expect("comparable"));
    ys.sort_by(|u, v| u.partial_cmp(v).expect("comparable"));
    let (na, nb) = (F::from_usize_lossy(xs.len()), F::from_usize_lossy(ys.len()));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = F::zero();
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        let gap = (F::from_usize_lossy(i) / na - F::from_usize_lossy(j) / nb).abs();
        d = d.max(gap);
    }
    Ok(d)
}

/// One tail row of a stochastic-domination report.
#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub k: usize,
    /// Empirical `P[L >= k]`.
    pub empirical: f64,
    /// Dominating tail `q^k`.
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub se: f64,
    pub pass: bool,
}

/// Domination report: empirical tails against `q^k + sigma_mult * se`.
#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub q: f64,
    pub trials: u64,
    pub sigma_mult: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

/// Compares empirical tail counts `#{L >= k}` for `k in 0..=k_max` against
/// the geometric tail `q^k`, allowing `sigma_mult` binomial standard errors.
pub fn dominance_check(
    tail_counts: &[u64],
    trials: u64,
    q: f64,
    k_max: usize,
    sigma_mult: f64,
) -> Result<DominationReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("dominance check needs trials > 0".into()));
    }
    if k_max >= tail_counts.len() {
        return Err(Error::InvalidParameter(format!(
            "k_max {k_max} exceeds tail table length {}",
            tail_counts.len()
        )));
    }
    let n = trials as f64;
    let rows: Vec<TailRow> = (0..=k_max)
        .map(|k| {
            let bound = q.powi(k as i32);
            let se = (bound * (1.0 - bound) / n).sqrt();
            let empirical = tail_counts[k] as f64 / n;
            TailRow { k, empirical, bound, se, pass: empirical <= bound + sigma_mult * se }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(DominationReport { q, trials, sigma_mult, rows, pass })
}

/// Mean and standard error of a sample.
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// z-score of a proportion against a hypothesized value.
pub fn one_proportion_z(successes: u64, trials: u64, p0: f64) -> f64 {
    let n = trials as f64;
    let se = (p0 * (1.0 - p0) / n).sqrt();
    ((successes as f64 / n) - p0) / se
}

/// Two-proportion z-score with pooled variance; zero when both samples are
/// degenerate at the same value.
pub fn two_proportion_z(s1: u64, n1: u64, s2: u64, n2: u64) -> f64 {
    let (x1, x2) = (s1 as f64, s2 as f64);
    let (m1, m2) = (n1 as f64, n2 as f64);
    let pool = (x1 + x2) / (m1 + m2);
    let denom = (pool * (1.0 - pool) * (1.0 / m1 + 1.0 / m2)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (x1 / m1 - x2 / m2) / denom
    }
}
