//! Sampling on finite boxes of the quadrant.
//!
//! Vertices sit at `(x, t)` for `x in 1..=M` (columns) and `t in 1..=N`
//! (rows). Horizontal edges `x -> x+1` at row `t` are indexed by
//! `x in 0..=M` with `x = 0` the left boundary; vertical edges `t -> t+1`
//! at column `x` are indexed by `t in 0..=N` with `t = 0` the bottom
//! boundary. Rows are resolved bottom to top, left to right, which by the
//! order-independence of the update rule samples the same law as any
//! antidiagonal schedule.
//!
//! The height `H(X, T)` counts the occupied horizontal edges entering
//! column `X` over rows `1..=T`. This convention is pinned by an exact
//! identity at box size (1,1) (see the q-Laplace tests) rather than read
//! off a picture.

use crate::class::Class;
use crate::error::{Error, Result};
use crate::field::{derive_seed, BitField, RandomField, TableField};
use crate::params::ModelParams;
use crate::vertex::resolve_vertex_multi;
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::HashMap;

/// Boundary data for an `M x N` box: classes of the arrows entering from
/// the left (per row) and from below (per column). A hole means no arrow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub left_entries: Vec<Class>,
    pub bottom_entries: Vec<Class>,
}

impl BoundarySpec {
    pub fn dims(&self) -> (usize, usize) {
        (self.bottom_entries.len(), self.left_entries.len())
    }

    fn check_dims(&self, m: usize, n: usize) -> Result<()> {
        if self.dims() != (m, n) {
            return Err(Error::InvalidParameter(format!(
                "boundary dims {:?} do not match box ({m}, {n})",
                self.dims()
            )));
        }
        Ok(())
    }
}

/// Step boundary: every left entry carries class 1, the bottom is empty.
pub fn make_step_boundary(m: usize, n: usize) -> BoundarySpec {
    BoundarySpec {
        left_entries: vec![Class(1); n],
        bottom_entries: vec![Class::HOLE; m],
    }
}

/// Step-Bernoulli boundary: each left entry carries class 1 independently
/// with probability `rho`, the bottom is empty.
pub fn make_step_bernoulli_boundary(
    m: usize,
    n: usize,
    rho: f64,
    field: &RandomField,
) -> BoundarySpec {
    BoundarySpec {
        left_entries: (1..=n)
            .map(|t| {
                if field.aux_bernoulli(rho, 0, t as i64, 3) {
                    Class(1)
                } else {
                    Class::HOLE
                }
            })
            .collect(),
        bottom_entries: vec![Class::HOLE; m],
    }
}

/// Step boundary with a single second-class arrow entering from below at
/// column 1 (the lattice image of the origin).
pub fn make_second_class_boundary(m: usize, n: usize) -> BoundarySpec {
    let mut bottom = vec![Class::HOLE; m];
    bottom[0] = Class(2);
    BoundarySpec {
        left_entries: vec![Class(1); n],
        bottom_entries: bottom,
    }
}

/// A fully resolved configuration on an `M x N` box.
///
/// `h_edge(x, t)` is the class on the horizontal edge `x -> x+1` at row `t`
/// (`x in 0..=M`), `v_edge(x, t)` the class on the vertical edge `t -> t+1`
/// at column `x` (`t in 0..=N`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadrantSample {
    m: usize,
    n: usize,
    h_edges: Vec<Class>,
    v_edges: Vec<Class>,
}

impl QuadrantSample {
    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn h_edge(&self, x: usize, t: usize) -> Class {
        debug_assert!(x <= self.m && (1..=self.n).contains(&t));
        self.h_edges[(t - 1) * (self.m + 1) + x]
    }

    pub fn v_edge(&self, x: usize, t: usize) -> Class {
        debug_assert!((1..=self.m).contains(&x) && t <= self.n);
        self.v_edges[t * self.m + (x - 1)]
    }

    /// Compact row-major edge list: all horizontal edges row by row
    /// (`x = 0..=M` within a row), then all vertical edges level by level
    /// (`x = 1..=M` within a level). Sentinels: `i32::MIN` for the minimal
    /// class, `i32::MAX` for a hole.
    pub fn to_edge_list(&self) -> EdgeList {
        EdgeList {
            dims: (self.m, self.n),
            h_edges: self.h_edges.iter().map(|c| c.0).collect(),
            v_edges: self.v_edges.iter().map(|c| c.0).collect(),
        }
    }

    pub fn from_edge_list(list: &EdgeList) -> Result<QuadrantSample> {
        let (m, n) = list.dims;
        if list.h_edges.len() != (m + 1) * n || list.v_edges.len() != m * (n + 1) {
            return Err(Error::InvalidParameter("edge list length mismatch".into()));
        }
        Ok(QuadrantSample {
            m,
            n,
            h_edges: list.h_edges.iter().map(|&v| Class(v)).collect(),
            v_edges: list.v_edges.iter().map(|&v| Class(v)).collect(),
        })
    }
}

/// Serialized form of [`QuadrantSample`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeList {
    pub dims: (usize, usize),
    pub h_edges: Vec<i32>,
    pub v_edges: Vec<i32>,
}

/// Samples the box by resolving every vertex against the field.
///
/// The result is a deterministic function of `(boundary, field)`; the
/// row-major schedule is equivalent to any other admissible order.
pub fn sample_quadrant<B: BitField>(
    boundary: &BoundarySpec,
    m: usize,
    n: usize,
    field: &B,
) -> Result<QuadrantSample> {
    boundary.check_dims(m, n)?;
    let mut h_edges = vec![Class::HOLE; (m + 1) * n];
    let mut v_edges = vec![Class::HOLE; m * (n + 1)];
    v_edges[..m].copy_from_slice(&boundary.bottom_entries);
    for t in 1..=n {
        let mut carry = boundary.left_entries[t - 1];
        h_edges[(t - 1) * (m + 1)] = carry;
        for x in 1..=m {
            let bottom = v_edges[(t - 1) * m + (x - 1)];
            let (top, right) = resolve_vertex_multi(
                bottom,
                carry,
                field.chi1(x as i64, t as i64),
                field.chi2(x as i64, t as i64),
            );
            v_edges[t * m + (x - 1)] = top;
            h_edges[(t - 1) * (m + 1) + x] = right;
            carry = right;
        }
    }
    Ok(QuadrantSample { m, n, h_edges, v_edges })
}

/// Result of a row-streaming box run: only the top row of vertical edges is
/// kept, plus the bookkeeping heights need.
#[derive(Clone, Debug)]
pub struct StreamedBox {
    /// Classes on the vertical edges above the last row.
    pub final_row: Vec<Class>,
    /// Number of occupied left-boundary entries over the run.
    pub left_particles: u32,
    /// Number of particles that exited through the right edge.
    pub particle_exits: u32,
}

impl StreamedBox {
    /// `H(x, N)` for `x = 1..=m+1` from the final row alone, valid for
    /// boxes started from an empty bottom: every arrow that entered from
    /// the left is either still among the first `x - 1` columns or has
    /// crossed the edge into column `x`, so
    /// `H(x, N) = left_particles - #particles in columns < x`.
    pub fn heights(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.final_row.len() + 1);
        let mut inside = 0u32;
        out.push(self.left_particles);
        for c in &self.final_row {
            inside += u32::from(c.is_particle());
            out.push(self.left_particles - inside);
        }
        out
    }

    /// `H(x, N)` for a single 1-based column.
    pub fn height_at(&self, x: usize) -> u32 {
        self.heights()[x - 1]
    }
}

/// Streams an `m`-wide box for `n` rows without storing it. `left(t)` gives
/// the class entering row `t`; `bottom` seeds the vertical edges;
/// `on_row(t, row)` observes the vertical edges after each row.
pub fn stream_box<B: BitField>(
    bottom: Vec<Class>,
    mut left: impl FnMut(usize) -> Class,
    n: usize,
    field: &B,
    mut on_row: impl FnMut(usize, &[Class]),
) -> StreamedBox {
    let mut row = bottom;
    let mut front = row.iter().rposition(|c| c.is_particle());
    let mut left_particles = 0u32;
    let mut particle_exits = 0u32;
    for t in 1..=n {
        let entering = left(t);
        left_particles += u32::from(entering.is_particle());
        let exit = crate::vertex::sweep_row_tracked(field, &mut row, entering, 1, t as i64, &mut front);
        particle_exits += u32::from(exit.is_particle());
        on_row(t, &row);
    }
    StreamedBox { final_row: row, left_particles, particle_exits }
}

/// Streams the step-boundary box: class-1 arrows on every left entry,
/// empty bottom.
pub fn stream_step_box<B: BitField>(m: usize, n: usize, field: &B) -> StreamedBox {
    stream_box(vec![Class::HOLE; m], |_| Class(1), n, field, |_, _| {})
}

/// Height function: occupied horizontal in-edges at column `x` over rows
/// `1..=t`.
pub fn height(sample: &QuadrantSample, x: usize, t: usize) -> Result<u32> {
    let (m, n) = sample.dims();
    if !(1..=m).contains(&x) || !(1..=n).contains(&t) {
        return Err(Error::OutOfRange(format!(
            "height at ({x}, {t}) outside box ({m}, {n})"
        )));
    }
    Ok((1..=t)
        .filter(|&s| sample.h_edge(x - 1, s).is_particle())
        .count() as u32)
}

/// Column of the unique second-class vertical edge above row `t`.
pub fn second_class_position(sample: &QuadrantSample, t: usize) -> Result<usize> {
    let (m, n) = sample.dims();
    if !(1..=n).contains(&t) {
        return Err(Error::OutOfRange(format!("row {t} outside box height {n}")));
    }
    let hits: Vec<usize> = (1..=m)
        .filter(|&x| sample.v_edge(x, t) == Class(2))
        .collect();
    match hits.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::Invariant(format!(
            "expected exactly one second-class vertical edge at row {t}, found {}",
            hits.len()
        ))),
    }
}

/// Boundary kinds the exact transfer matrix supports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Step,
    StepBernoulli(f64),
}

/// Exact distribution of `H(M, N)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeightDistribution<F: Scalar> {
    pub params: ModelParams,
    pub dims: (usize, usize),
    pub boundary: BoundaryKind,
    /// `pmf[h] = P[H(M, N) = h]`, `h in 0..=N`.
    pub pmf: Vec<F>,
}

impl<F: Scalar> HeightDistribution<F> {
    pub fn mean(&self) -> F {
        self.pmf
            .iter()
            .enumerate()
            .map(|(h, &p)| F::from_usize_lossy(h) * p)
            .sum()
    }

    pub fn variance(&self) -> F {
        let mu = self.mean();
        self.pmf
            .iter()
            .enumerate()
            .map(|(h, &p)| {
                let d = F::from_usize_lossy(h) - mu;
                d * d * p
            })
            .sum()
    }

    /// JSON map `h -> probability` with a metadata header.
    pub fn to_json(&self) -> serde_json::Value {
        let probs: BTreeMap<String, f64> = self
            .pmf
            .iter()
            .enumerate()
            .map(|(h, &p)| (h.to_string(), p.to_f64().unwrap_or(f64::NAN)))
            .collect();
        serde_json::json!({
            "b1": self.params.b1(),
            "b2": self.params.b2(),
            "dims": self.dims,
            "boundary": self.boundary,
            "pmf": probs,
        })
    }
}

/// Largest width the exact sweep accepts (state space `2^M`).
pub const MAX_EXACT_WIDTH: usize = 14;

/// Exact pmf of `H(M, N)` by sweeping rows of a `2^M x (N+1)` state space.
///
/// The state tracks the occupation of the `M` vertical edges above the
/// current row together with the height counter at column `M`; every vertex
/// contributes its branch weights (`b1/1-b1` for a lone vertical arrow,
/// `b2/1-b2` for a lone horizontal one).
pub fn exact_height_distribution<F: Scalar>(
    params: &ModelParams,
    boundary: BoundaryKind,
    m: usize,
    n: usize,
) -> Result<HeightDistribution<F>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("box dims must be positive".into()));
    }
    if m > MAX_EXACT_WIDTH {
        return Err(Error::Capacity(format!(
            "exact height distribution limited to M <= {MAX_EXACT_WIDTH}, got {m}"
        )));
    }
    let b1 = F::from_f64_lossy(params.b1());
    let b2 = F::from_f64_lossy(params.b2());
    let one = F::one();
    let states = 1usize << m;
    let counters = n + 1;
    // dist[v_bits * counters + count]
    let mut dist = vec![F::zero(); states * counters];
    dist[0] = one; // step boundaries start from an empty bottom row
    let mut next = vec![F::zero(); states * counters];
    // Scratch distribution over (v_bits, carry, count) while sweeping a row.
    let mut cur = vec![F::zero(); states * 2 * counters];
    let mut nxt = vec![F::zero(); states * 2 * counters];
    let idx3 = |bits: usize, carry: usize, count: usize| (bits * 2 + carry) * counters + count;

    for _row in 1..=n {
        // Inject the left entry.
        for v in cur.iter_mut() {
            *v = F::zero();
        }
        let (p_occ, p_emp) = match boundary {
            BoundaryKind::Step => (one, F::zero()),
            BoundaryKind::StepBernoulli(rho) => {
                let r = F::from_f64_lossy(rho);
                (r, one - r)
            }
        };
        for bits in 0..states {
            for count in 0..counters {
                let p = dist[bits * counters + count];
                if p.is_zero() {
                    continue;
                }
                if !p_occ.is_zero() {
                    cur[idx3(bits, 1, count)] += p * p_occ;
                }
                if !p_emp.is_zero() {
                    cur[idx3(bits, 0, count)] += p * p_emp;
                }
            }
        }
        // Sweep the columns.
        for x in 0..m {
            for v in nxt.iter_mut() {
                *v = F::zero();
            }
            for bits in 0..states {
                let bottom = (bits >> x) & 1;
                for carry in 0..2 {
                    for count in 0..counters {
                        let p = cur[idx3(bits, carry, count)];
                        if p.is_zero() {
                            continue;
                        }
                        // H counts the occupied in-edge at column M.
                        let count2 = if x == m - 1 && carry == 1 { count + 1 } else { count };
                        debug_assert!(count2 < counters);
                        let mut push = |top: usize, right: usize, w: F| {
                            if w.is_zero() {
                                return;
                            }
                            let bits2 = (bits & !(1 << x)) | (top << x);
                            nxt[idx3(bits2, right, count2)] += p * w;
                        };
                        match (bottom, carry) {
                            (0, 0) | (1, 1) => push(bottom, carry, one),
                            (1, 0) => {
                                push(1, 0, b1);
                                push(0, 1, one - b1);
                            }
                            (0, 1) => {
                                push(0, 1, b2);
                                push(1, 0, one - b2);
                            }
                            _ => unreachable!(),
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut nxt);
        }
        // Drop the exiting carry.
        for v in next.iter_mut() {
            *v = F::zero();
        }
        for bits in 0..states {
            for count in 0..counters {
                next[bits * counters + count] =
                    cur[idx3(bits, 0, count)] + cur[idx3(bits, 1, count)];
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }

    let mut pmf = vec![F::zero(); counters];
    for bits in 0..states {
        for count in 0..counters {
            pmf[count] += dist[bits * counters + count];
        }
    }
    let total: F = pmf.iter().copied().sum();
    if (total - one).abs() > F::from_f64_lossy(1e-12) {
        return Err(Error::Invariant(format!(
            "height pmf sums to {total}, expected 1"
        )));
    }
    Ok(HeightDistribution { params: *params, dims: (m, n), boundary, pmf })
}

/// Rescaled heights `H(round(mu T), T) / T` from step data, one row per
/// seed, one column per ratio.
pub fn step_height_means(
    params: &ModelParams,
    t: u32,
    mus: &[f64],
    seeds: u64,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    params.require_rarefaction()?;
    let max_col = mus
        .iter()
        .map(|&mu| (mu * f64::from(t)).round() as usize)
        .max()
        .ok_or_else(|| Error::InvalidParameter("no ratios given".into()))?;
    let width = max_col - 1;
    Ok((0..seeds)
        .into_par_iter()
        .map(|i| {
            let f = RandomField::new(params, derive_seed(master_seed, i));
            let hs = stream_step_box(width, t as usize, &f).heights();
            mus.iter()
                .map(|&mu| {
                    let col = (mu * f64::from(t)).round() as usize;
                    f64::from(hs[col - 1]) / f64::from(t)
                })
                .collect()
        })
        .collect())
}

/// Window-averaged occupation around each ratio `alpha` at time `t`, one
/// row per seed. Site `s` of the line is column `s + 1` of the box.
pub fn fan_density_samples(
    params: &ModelParams,
    t: u32,
    alphas: &[f64],
    half_window: i64,
    seeds: u64,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    params.require_rarefaction()?;
    let max_site = alphas
        .iter()
        .map(|&a| (a * f64::from(t)).round() as i64 + half_window)
        .max()
        .ok_or_else(|| Error::InvalidParameter("no ratios given".into()))?;
    let width = (max_site + 2) as usize;
    Ok((0..seeds)
        .into_par_iter()
        .map(|i| {
            let f = RandomField::new(params, derive_seed(master_seed, i));
            let row = stream_step_box(width, t as usize, &f).final_row;
            alphas
                .iter()
                .map(|&alpha| {
                    let center = (alpha * f64::from(t)).round() as i64;
                    let sites = (center - half_window)..=(center + half_window);
                    let occupied = sites
                        .clone()
                        .filter(|&s| row[s as usize].is_particle())
                        .count();
                    occupied as f64 / (2 * half_window + 1) as f64
                })
                .collect()
        })
        .collect())
}

/// Occupation counts at a grid of interior vertices under the stationary
/// Bernoulli boundaries: `rho` on the bottom, `flux(rho)` on the left.
/// Returns `counts[ti][xi]` over `trials` runs of a `m x m` box.
pub fn stationary_grid_counts(
    params: &ModelParams,
    rho: f64,
    m: usize,
    grid: &[usize],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<Vec<u64>>> {
    let phi = crate::hydro::flux_phi(rho, params.kappa())?;
    if grid.iter().any(|&g| g == 0 || g > m) {
        return Err(Error::OutOfRange("grid coordinate outside the box".into()));
    }
    let k = grid.len();
    let per_trial: Vec<Vec<u8>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let f = RandomField::new(params, derive_seed(master_seed, i));
            let bottom: Vec<Class> = (1..=m as i64)
                .map(|x| if f.aux_bernoulli(rho, x, 0, 4) { Class(1) } else { Class::HOLE })
                .collect();
            let mut hits = vec![0u8; k * k];
            stream_box(
                bottom,
                |t| if f.aux_bernoulli(phi, 0, t as i64, 3) { Class(1) } else { Class::HOLE },
                m,
                &f,
                |t, row| {
                    if let Some(ti) = grid.iter().position(|&g| g == t) {
                        for (xi, &gx) in grid.iter().enumerate() {
                            hits[ti * k + xi] = u8::from(row[gx - 1].is_particle());
                        }
                    }
                },
            );
            hits
        })
        .collect();
    let mut counts = vec![vec![0u64; k]; k];
    for hits in per_trial {
        for ti in 0..k {
            for xi in 0..k {
                counts[ti][xi] += u64::from(hits[ti * k + xi]);
            }
        }
    }
    Ok(counts)
}

/// Largest probability gap between the exact 2x2 step-boundary
/// configuration law and its image under transpose-plus-complement. Both
/// single inversions swap `(b1, b2)`, so their composition preserves the
/// law; the gap is machine-zero when the vertex rules respect the
/// symmetry.
pub fn inversion_law_gap(params: &ModelParams) -> Result<f64> {
    let boundary = make_step_boundary(2, 2);
    let mut table = TableField::new(1, 1, 2, 2);
    let key = |s: &QuadrantSample| -> u32 {
        let mut k = 0u32;
        for t in 1..=2 {
            for x in 0..=2 {
                k = (k << 1) | u32::from(s.h_edge(x, t).is_particle());
            }
        }
        for t in 0..=2 {
            for x in 1..=2 {
                k = (k << 1) | u32::from(s.v_edge(x, t).is_particle());
            }
        }
        k
    };
    let transform = |s: &QuadrantSample| -> Result<QuadrantSample> {
        let complement = |occupied: bool| if occupied { Class::HOLE } else { Class(1) };
        let mut h = Vec::new();
        for t in 1..=2usize {
            for x in 0..=2usize {
                // New h-edge (x, t) is the complemented old v-edge (t, x).
                h.push(complement(s.v_edge(t, x).is_particle()));
            }
        }
        let mut v = Vec::new();
        for t in 0..=2usize {
            for x in 1..=2usize {
                v.push(complement(s.h_edge(t, x).is_particle()));
            }
        }
        QuadrantSample::from_edge_list(&EdgeList {
            dims: (2, 2),
            h_edges: h.iter().map(|c| c.0).collect(),
            v_edges: v.iter().map(|c| c.0).collect(),
        })
    };
    let mut law: HashMap<u32, f64> = HashMap::new();
    let mut transformed: HashMap<u32, f64> = HashMap::new();
    for pattern in 0..(1u64 << table.bit_count()) {
        table.load_pattern(pattern);
        let w = table.pattern_weight(params);
        let s = sample_quadrant(&boundary, 2, 2, &table)?;
        *law.entry(key(&s)).or_insert(0.0) += w;
        *transformed.entry(key(&transform(&s)?)).or_insert(0.0) += w;
    }
    let mut gap: f64 = 0.0;
    for (k, &v) in &law {
        gap = gap.max((v - transformed.get(k).copied().unwrap_or(0.0)).abs());
    }
    for (k, &v) in &transformed {
        gap = gap.max((v - law.get(k).copied().unwrap_or(0.0)).abs());
    }
    Ok(gap)
}
