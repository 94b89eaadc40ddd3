//! The (multi-class) process on the integer line, simulated on finite
//! windows.
//!
//! A window `[A, B]` carries explicit classes; the exterior is frozen — the
//! minimal class on the left (a packed exterior that injects one horizontal
//! arrow per row) or holes on either side. Information travels only
//! rightward, so freezing costs nothing on the right; on the left the frozen
//! exterior can disagree with the true process, and the finite-speed bound
//! confines that disagreement to `ceil(2T/(1-b2)) + 1` sites over `T` rows.
//! The window charges that margin on every evolution and refuses reads
//! inside it: silent boundary contamination is the failure mode this module
//! is built to rule out.

use crate::class::Class;
use crate::error::{Error, Result};
use crate::field::BitField;
use crate::params::ModelParams;
use crate::vertex::sweep_row;
use serde::{Deserialize, Serialize};

/// Frozen state of the sites left of the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeftExterior {
    /// Every exterior site holds the minimal class; one minimal-class arrow
    /// enters the window per row.
    Packed,
    /// Exterior is empty; no arrow enters.
    Empty,
}

/// Classes on an integer window, plus margin bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowState {
    window: (i64, i64),
    classes: Vec<Class>,
    time: u32,
    margin_used: i64,
    left_exterior: LeftExterior,
}

impl WindowState {
    /// Builds a window from explicit classes on `[a, b]`.
    pub fn new(a: i64, b: i64, classes: Vec<Class>, left_exterior: LeftExterior) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidParameter(format!("empty window [{a}, {b}]")));
        }
        if classes.len() as i64 != b - a + 1 {
            return Err(Error::InvalidParameter(format!(
                "window [{a}, {b}] needs {} classes, got {}",
                b - a + 1,
                classes.len()
            )));
        }
        Ok(WindowState { window: (a, b), classes, time: 0, margin_used: 0, left_exterior: left_exterior })
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn margin_used(&self) -> i64 {
        self.margin_used
    }

    pub fn left_exterior(&self) -> LeftExterior {
        self.left_exterior
    }

    /// First site whose state is still exact.
    pub fn readable_from(&self) -> i64 {
        self.window.0 + self.margin_used
    }

    /// Class at `x`, provided `x` lies in the margin-trimmed exact region.
    pub fn class_at(&self, x: i64) -> Result<Class> {
        if x < self.readable_from() || x > self.window.1 {
            return Err(Error::OutOfRange(format!(
                "site {x} outside readable region [{}, {}]",
                self.readable_from(),
                self.window.1
            )));
        }
        Ok(self.classes[(x - self.window.0) as usize])
    }

    /// Occupation indicator at `x` (any class below the hole).
    pub fn occupied_at(&self, x: i64) -> Result<bool> {
        Ok(self.class_at(x)?.is_particle())
    }

    /// Raw class storage, margin rule not applied. For pathwise comparisons
    /// of coupled windows, not for statistics.
    pub fn classes_raw(&self) -> &[Class] {
        &self.classes
    }

    /// JSON checkpoint `{window, time, classes}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "window": [self.window.0, self.window.1],
            "time": self.time,
            "margin_used": self.margin_used,
            "left_exterior": self.left_exterior,
            "classes": self.classes.iter().map(|c| c.0).collect::<Vec<i32>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<WindowState> {
        serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidParameter(format!("window JSON: {e}")))
    }
}

/// Packed initial condition: `classes[x] = x` on the window.
pub fn make_packed_ic(a: i64, b: i64) -> Result<WindowState> {
    let classes = (a..=b)
        .map(|x| Class(i32::try_from(x).expect("window coordinate fits i32")))
        .collect();
    WindowState::new(a, b, classes, LeftExterior::Packed)
}

/// Step initial condition: first-class particles at `x < 0`, holes at
/// `x >= 0`.
pub fn make_step_ic(a: i64, b: i64) -> Result<WindowState> {
    require_origin(a, b)?;
    let classes = (a..=b)
        .map(|x| if x < 0 { Class(1) } else { Class::HOLE })
        .collect();
    WindowState::new(a, b, classes, LeftExterior::Packed)
}

/// Step initial condition with a second-class particle at the origin.
pub fn make_step_second_class_ic(a: i64, b: i64) -> Result<WindowState> {
    require_origin(a, b)?;
    let classes = (a..=b)
        .map(|x| match x {
            _ if x < 0 => Class(1),
            0 => Class(2),
            _ => Class::HOLE,
        })
        .collect();
    WindowState::new(a, b, classes, LeftExterior::Packed)
}

fn require_origin(a: i64, b: i64) -> Result<()> {
    if a <= 0 && b >= 0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "window [{a}, {b}] must contain the origin"
        )))
    }
}

/// Sites a disagreement outside the window can contaminate over `t` rows:
/// `ceil(2t/(1-b2)) + 1`.
pub fn margin_for(params: &ModelParams, t: u32) -> i64 {
    (2.0 * f64::from(t) / (1.0 - params.b2())).ceil() as i64 + 1
}

/// Advances the window by `steps` rows against the field.
///
/// Each row is swept left to right starting from the frozen exterior; the
/// arrow leaving the rightmost site exits the window. The left margin for
/// the whole call is charged up front; a call with `steps = 0` is a no-op.
pub fn evolve_window<B: BitField>(
    params: &ModelParams,
    state: &mut WindowState,
    steps: u32,
    field: &B,
) -> Result<()> {
    if steps == 0 {
        return Ok(());
    }
    let margin = margin_for(params, steps);
    if state.window.0 + state.margin_used + margin > state.window.1 {
        return Err(Error::WindowTooSmall {
            readable_from: state.window.0 + state.margin_used + margin,
            window_end: state.window.1,
        });
    }
    let entering = match state.left_exterior {
        LeftExterior::Packed => Class::NEG_INF,
        LeftExterior::Empty => Class::HOLE,
    };
    for _ in 0..steps {
        let t = i64::from(state.time) + 1;
        sweep_row(field, &mut state.classes, entering, state.window.0, t);
        state.time += 1;
    }
    state.margin_used += margin;
    Ok(())
}

/// Several windows evolving against one shared field.
#[derive(Clone, Debug)]
pub struct CouplingBundle {
    states: Vec<WindowState>,
}

impl CouplingBundle {
    pub fn states(&self) -> &[WindowState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<WindowState> {
        self.states
    }
}

/// Couples initial conditions on identical windows and times.
pub fn couple(ics: Vec<WindowState>) -> Result<CouplingBundle> {
    if ics.is_empty() {
        return Err(Error::InvalidParameter("empty coupling bundle".into()));
    }
    let w = ics[0].window;
    let t = ics[0].time;
    if ics.iter().any(|s| s.window != w || s.time != t) {
        return Err(Error::InvalidParameter(
            "coupled states must share window and time".into(),
        ));
    }
    Ok(CouplingBundle { states: ics })
}

/// Advances every member of the bundle with the same field.
pub fn evolve_bundle<B: BitField>(
    params: &ModelParams,
    bundle: &mut CouplingBundle,
    steps: u32,
    field: &B,
) -> Result<()> {
    for s in bundle.states.iter_mut() {
        evolve_window(params, s, steps, field)?;
    }
    Ok(())
}

/// Weakly increasing relabeling of classes, tabulated on a finite range
/// with constant values outside it.
#[derive(Clone, Debug)]
pub struct MergeMap {
    lo: i32,
    table: Vec<Class>,
    below: Class,
    above: Class,
}

impl MergeMap {
    /// Tabulates `f` on `[lo, hi]`; finite classes below `lo` share the
    /// image of the minimal class, finite classes above `hi` the image of
    /// the hole. Rejects maps that are not weakly increasing over the
    /// sampled domain.
    pub fn from_fn(lo: i32, hi: i32, f: impl Fn(Class) -> Class) -> Result<MergeMap> {
        if lo > hi {
            return Err(Error::InvalidParameter("empty merge-map domain".into()));
        }
        let below = f(Class::NEG_INF);
        let above = f(Class::HOLE);
        let table: Vec<Class> = (lo..=hi).map(|v| f(Class(v))).collect();
        let map = MergeMap { lo, table, below, above };
        map.validate()?;
        Ok(map)
    }

    /// Identity relabeling on `[lo, hi]`.
    pub fn identity(lo: i32, hi: i32) -> MergeMap {
        MergeMap::from_fn(lo, hi, |c| c).expect("identity is monotone")
    }

    /// Sends classes `<= threshold` to `low` and the rest to `high`.
    pub fn two_level(threshold: i32, low: Class, high: Class) -> Result<MergeMap> {
        if low > high {
            return Err(Error::NonMonotoneMap(format!("{low} > {high}")));
        }
        MergeMap::from_fn(threshold, threshold + 1, move |c| {
            if c <= Class(threshold) {
                low
            } else {
                high
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let mut prev = self.below;
        for (i, &v) in self.table.iter().enumerate() {
            if v < prev {
                return Err(Error::NonMonotoneMap(format!(
                    "value {v} at {} drops below {prev}",
                    self.lo + i as i32
                )));
            }
            prev = v;
        }
        if self.above < prev {
            return Err(Error::NonMonotoneMap(format!(
                "hole image {} drops below {prev}",
                self.above
            )));
        }
        Ok(())
    }

    pub fn apply(&self, c: Class) -> Class {
        match c {
            Class::NEG_INF => self.below,
            Class::HOLE => self.above,
            Class(v) if v < self.lo => self.below,
            Class(v) => {
                let i = (v - self.lo) as usize;
                if i < self.table.len() {
                    self.table[i]
                } else {
                    self.above
                }
            }
        }
    }
}

/// Relabels every class in the window through a weakly increasing map.
pub fn apply_merge(state: &WindowState, map: &MergeMap) -> WindowState {
    let mut out = state.clone();
    for c in out.classes.iter_mut() {
        *c = map.apply(*c);
    }
    out
}

/// Outcome of the pathwise coupling checks.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct CouplingCheck {
    pub attractivity_instances: u64,
    pub attractivity_violations: u64,
    pub merging_instances: u64,
    pub merging_violations: u64,
}

impl CouplingCheck {
    pub fn pass(&self) -> bool {
        self.attractivity_violations == 0 && self.merging_violations == 0
    }
}

/// Exact pathwise checks of attractivity and merging commutation over
/// random coupled instances, `steps` rows each. Attractivity is verified
/// sitewise after every row; merging is verified as state equality of
/// relabel-then-evolve against evolve-then-relabel.
pub fn coupling_check(
    params: &ModelParams,
    instances: u64,
    steps: u32,
    master_seed: u64,
) -> Result<CouplingCheck> {
    use crate::field::{derive_seed, RandomField};
    let half = instances / 2;
    let mut out = CouplingCheck {
        attractivity_instances: half,
        merging_instances: instances - half,
        ..Default::default()
    };
    let span = 6 * i64::from(steps) + 30;
    for trial in 0..half {
        let field = RandomField::new(params, derive_seed(master_seed, 2 * trial));
        let init = RandomField::new(params, derive_seed(master_seed ^ 0xa77a, trial));
        let (a, b) = (-span, 70i64);
        let n = (b - a + 1) as usize;
        let mut lower = vec![Class::HOLE; n];
        let mut upper = vec![Class::HOLE; n];
        for i in 0..n {
            let x = a + i as i64;
            if init.aux_bernoulli(0.55, x, 0, 11) {
                upper[i] = Class(1);
                if init.aux_bernoulli(0.6, x, 0, 12) {
                    lower[i] = Class(1);
                }
            }
        }
        let mut bundle = couple(vec![
            WindowState::new(a, b, lower, LeftExterior::Empty)?,
            WindowState::new(a, b, upper, LeftExterior::Empty)?,
        ])?;
        'steps: for _ in 0..steps {
            evolve_bundle(params, &mut bundle, 1, &field)?;
            let (lo, hi) = (bundle.states()[0].classes_raw(), bundle.states()[1].classes_raw());
            for i in 0..n {
                if lo[i].is_particle() && !hi[i].is_particle() {
                    out.attractivity_violations += 1;
                    break 'steps;
                }
            }
        }
    }
    for trial in 0..instances - half {
        let field = RandomField::new(params, derive_seed(master_seed, 2 * trial + 1));
        let init = RandomField::new(params, derive_seed(master_seed ^ 0x16ca, trial));
        let (a, b) = (-span, 40i64);
        let classes: Vec<Class> = (a..=b)
            .map(|x| {
                if init.aux_bernoulli(0.6, x, 0, 21) {
                    Class((x % 5) as i32)
                } else {
                    Class::HOLE
                }
            })
            .collect();
        let state = WindowState::new(a, b, classes, LeftExterior::Packed)?;
        let mut value = -2i32;
        let mut steps_table = Vec::new();
        for v in -5i32..=5 {
            if init.aux_bernoulli(0.5, i64::from(v), 1, 22) {
                value += 1;
            }
            steps_table.push((v, value));
        }
        let map = MergeMap::from_fn(-5, 5, |c| match c {
            Class::NEG_INF => Class::NEG_INF,
            Class::HOLE => Class::HOLE,
            Class(v) => Class(steps_table.iter().find(|&&(u, _)| u == v).expect("in range").1),
        })?;
        let mut evolved = state.clone();
        evolve_window(params, &mut evolved, steps, &field)?;
        let mut merged = apply_merge(&state, &map);
        evolve_window(params, &mut merged, steps, &field)?;
        if apply_merge(&evolved, &map) != merged {
            out.merging_violations += 1;
        }
    }
    Ok(out)
}

/// Fraction of trials in which two states that agreed on an interval still
/// agree, after `t` rows of the shared field, on the interval shrunk by the
/// charged margin. Disagreements are planted on 60 sites left of the
/// agreement region.
pub fn finite_speed_agreement(
    params: &ModelParams,
    t: u32,
    trials: u64,
    master_seed: u64,
) -> Result<f64> {
    use crate::field::{derive_seed, RandomField};
    use rayon::prelude::*;
    let margin = margin_for(params, t);
    let (a, b) = (-(margin + 69), 90i64);
    let agree_from = a + 60;
    let agreements: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let field = RandomField::new(params, derive_seed(master_seed, trial));
            let init = RandomField::new(params, derive_seed(master_seed ^ 0x7ca, trial));
            let n = (b - a + 1) as usize;
            let mut one = vec![Class::HOLE; n];
            let mut two = vec![Class::HOLE; n];
            for i in 0..n {
                let x = a + i as i64;
                let occ = |stream: i64| init.aux_bernoulli(0.5, x, stream, 13);
                one[i] = if occ(0) { Class(1) } else { Class::HOLE };
                two[i] = if x >= agree_from {
                    one[i]
                } else if occ(1) {
                    Class(1)
                } else {
                    Class::HOLE
                };
            }
            let mut s1 = WindowState::new(a, b, one, LeftExterior::Empty)?;
            let mut s2 = WindowState::new(a, b, two, LeftExterior::Empty)?;
            evolve_window(params, &mut s1, t, &field)?;
            evolve_window(params, &mut s2, t, &field)?;
            let from = (agree_from + margin - a) as usize;
            Ok(s1.classes_raw()[from..] == s2.classes_raw()[from..])
        })
        .collect();
    let ok = agreements?.iter().filter(|&&x| x).count();
    Ok(ok as f64 / trials as f64)
}

/// Height profile on a window, anchored at a reference site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineHeight {
    pub reference: i64,
    /// `values[i]` is the height at site `from + i`; the profile spans one
    /// site past the readable region so every gradient is represented.
    pub from: i64,
    pub values: Vec<i64>,
}

impl LineHeight {
    pub fn at(&self, x: i64) -> Result<i64> {
        let i = x - self.from;
        if i < 0 || i as usize >= self.values.len() {
            return Err(Error::OutOfRange(format!("height at {x} outside profile")));
        }
        Ok(self.values[i as usize])
    }
}

/// Height with `h(reference) = 0` satisfying
/// `h(x) - h(x+1) = occupied(x)` across the readable region.
pub fn line_height(state: &WindowState, reference: i64) -> Result<LineHeight> {
    let from = state.readable_from();
    let to = state.window.1;
    if reference < from || reference > to + 1 {
        return Err(Error::OutOfRange(format!(
            "reference {reference} outside readable region [{from}, {to}]"
        )));
    }
    let len = (to - from + 2) as usize;
    let mut values = vec![0i64; len];
    // Build relative to `from`, then shift so the reference vanishes.
    for i in 0..len - 1 {
        let drop = i64::from(state.occupied_at(from + i as i64)?);
        values[i + 1] = values[i] - drop;
    }
    let shift = values[(reference - from) as usize];
    for v in values.iter_mut() {
        *v -= shift;
    }
    Ok(LineHeight { reference, from, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{derive_seed, RandomField};

    fn params() -> ModelParams {
        ModelParams::new(0.3, 0.6).unwrap()
    }

    #[test]
    fn packed_ic_layout() {
        let s = make_packed_ic(-2, 2).unwrap();
        let got: Vec<i32> = s.classes_raw().iter().map(|c| c.0).collect();
        assert_eq!(got, vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn packed_merges_to_step_variants() {
        let s = make_packed_ic(-3, 3).unwrap();
        // All classes to one: fully packed single-class state.
        let all_one = MergeMap::from_fn(-3, 3, |_| Class(1)).unwrap();
        let m = apply_merge(&s, &all_one);
        assert!(m.classes_raw().iter().all(|&c| c == Class(1)));
        // x <= 0 -> 1, x > 0 -> hole: the step state shifted by one.
        let step = MergeMap::two_level(0, Class(1), Class::HOLE).unwrap();
        let m = apply_merge(&s, &step);
        let expect: Vec<Class> = (-3..=3)
            .map(|x| if x <= 0 { Class(1) } else { Class::HOLE })
            .collect();
        assert_eq!(m.classes_raw(), &expect[..]);
    }

    #[test]
    fn step_ic_layouts() {
        let s = make_step_second_class_ic(-1, 1).unwrap();
        assert_eq!(s.classes_raw(), &[Class(1), Class(2), Class::HOLE]);
        let s = make_step_ic(-1, 1).unwrap();
        assert_eq!(s.classes_raw(), &[Class(1), Class::HOLE, Class::HOLE]);
        let merged = apply_merge(
            &make_step_second_class_ic(-1, 1).unwrap(),
            &MergeMap::from_fn(1, 2, |c| if c <= Class(2) { Class(1) } else { c }).unwrap(),
        );
        assert_eq!(merged.classes_raw(), &[Class(1), Class(1), Class::HOLE]);
        assert!(make_step_ic(1, 5).is_err());
    }

    #[test]
    fn margin_arithmetic() {
        let p = params();
        assert_eq!(margin_for(&p, 0), 1);
        assert_eq!(margin_for(&p, 100), 501);
        let p = ModelParams::new(0.3, 0.5).unwrap();
        assert_eq!(margin_for(&p, 10), 41);
    }

    #[test]
    fn zero_steps_is_identity() {
        let p = params();
        let f = RandomField::new(&p, 1);
        let mut s = make_step_ic(-10, 10).unwrap();
        let before = s.clone();
        evolve_window(&p, &mut s, 0, &f).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn fully_packed_state_is_frozen() {
        let p = params();
        let f = RandomField::new(&p, 2);
        // Minimal-class packing matches the packed exterior: every vertex
        // sees equal inputs and passes through, so the state is literally
        // frozen.
        let mut s =
            WindowState::new(-5, 30, vec![Class::NEG_INF; 36], LeftExterior::Packed).unwrap();
        evolve_window(&p, &mut s, 3, &f).unwrap();
        assert!(s.classes_raw().iter().all(|&c| c == Class::NEG_INF));
        assert_eq!(s.time(), 3);
        // A window packed with any single class stays fully occupied; the
        // exterior relabels sites from the left but never creates holes.
        let mut s = WindowState::new(-5, 30, vec![Class(1); 36], LeftExterior::Packed).unwrap();
        evolve_window(&p, &mut s, 3, &f).unwrap();
        assert!(s.classes_raw().iter().all(|c| c.is_particle()));
    }

    #[test]
    fn margin_exhaustion_errors() {
        let p = params();
        let f = RandomField::new(&p, 3);
        let mut s = make_step_ic(-10, 10).unwrap();
        // margin_for(4) = 21 > window span.
        let err = evolve_window(&p, &mut s, 4, &f);
        assert!(matches!(err, Err(Error::WindowTooSmall { .. })));
    }

    /// One window step from the step state matches the exact single-vertex
    /// law of the quadrant: site 0 is occupied after one row iff the lone
    /// horizontal arrow turned up, probability 1 - b2.
    #[test]
    fn one_step_matches_quadrant_exact_value() {
        let p = params();
        let trials = 100_000u64;
        let mut occupied = 0u64;
        for i in 0..trials {
            let f = RandomField::new(&p, derive_seed(0x51e9, i));
            let mut s = make_step_ic(-40, 12).unwrap();
            evolve_window(&p, &mut s, 1, &f).unwrap();
            if s.occupied_at(0).unwrap() {
                occupied += 1;
            }
        }
        let phat = occupied as f64 / trials as f64;
        let exact = 1.0 - p.b2();
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(
            (phat - exact).abs() < 4.0 * se,
            "site-0 occupation {phat} vs exact {exact}"
        );
    }

    #[test]
    fn line_height_profiles() {
        // Step state at time 0 anchored at 0: h(x) = max(0, -x).
        let s = make_step_ic(-6, 6).unwrap();
        let h = line_height(&s, 0).unwrap();
        for x in -6..=7 {
            assert_eq!(h.at(x).unwrap(), 0.max(-x), "step height at {x}");
        }
        // Packed region: height drops by its length; empty region: constant.
        let packed = WindowState::new(0, 4, vec![Class(7); 5], LeftExterior::Packed).unwrap();
        let h = line_height(&packed, 0).unwrap();
        assert_eq!(h.at(5).unwrap() - h.at(0).unwrap(), -5);
        let empty = WindowState::new(0, 4, vec![Class::HOLE; 5], LeftExterior::Empty).unwrap();
        let h = line_height(&empty, 0).unwrap();
        assert_eq!(h.at(5).unwrap(), h.at(0).unwrap());
    }

    #[test]
    fn coupling_requires_matching_windows() {
        let a = make_step_ic(-5, 5).unwrap();
        let b = make_step_ic(-4, 5).unwrap();
        assert!(couple(vec![a.clone(), b]).is_err());
        assert!(couple(vec![a.clone(), a]).is_ok());
    }

    #[test]
    fn identical_ics_stay_identical() {
        let p = params();
        let f = RandomField::new(&p, 77);
        let ic = make_step_second_class_ic(-30, 30).unwrap();
        let mut bundle = couple(vec![ic.clone(), ic]).unwrap();
        evolve_bundle(&p, &mut bundle, 2, &f).unwrap();
        assert_eq!(bundle.states()[0], bundle.states()[1]);
    }

    #[test]
    fn non_monotone_map_rejected() {
        let negate = |c: Class| match c {
            Class::NEG_INF | Class::HOLE => c,
            Class(v) => Class(-v),
        };
        assert!(MergeMap::from_fn(0, 3, negate).is_err());
        assert!(MergeMap::two_level(0, Class::HOLE, Class(1)).is_err());
        // Hole image below a finite image is also non-monotone.
        assert!(MergeMap::from_fn(0, 3, |c| if c.is_hole() { Class(0) } else { Class(1) }).is_err());
    }

    /// Ordered single-class ICs stay ordered under the shared field
    /// (500 random pairs, 50 rows).
    #[test]
    fn attractivity_on_windows() {
        let p = params();
        let occupied =
            |s: &WindowState, i: usize| -> bool { s.classes_raw()[i].is_particle() };
        for trial in 0..500u64 {
            let seed = derive_seed(0xa77a, trial);
            let f = RandomField::new(&p, seed);
            let init = RandomField::new(&p, derive_seed(0x1c5, trial));
            // Span covers 50 single-step margin charges of 6 sites each.
            let (a, b) = (-340i64, 60i64);
            let n = (b - a + 1) as usize;
            // eta1 <= eta2 sitewise as occupations, built by thinning.
            let mut c1 = vec![Class::HOLE; n];
            let mut c2 = vec![Class::HOLE; n];
            for i in 0..n {
                let x = a + i as i64;
                if init.aux_bernoulli(0.55, x, 0, 11) {
                    c2[i] = Class(1);
                    if init.aux_bernoulli(0.6, x, 0, 12) {
                        c1[i] = Class(1);
                    }
                }
            }
            let s1 = WindowState::new(a, b, c1, LeftExterior::Empty).unwrap();
            let s2 = WindowState::new(a, b, c2, LeftExterior::Empty).unwrap();
            let mut bundle = couple(vec![s1, s2]).unwrap();
            for _ in 0..50 {
                evolve_bundle(&p, &mut bundle, 1, &f).unwrap();
                for i in 0..n {
                    assert!(
                        !occupied(&bundle.states()[0], i) || occupied(&bundle.states()[1], i),
                        "ordering broken at trial {trial}"
                    );
                }
            }
        }
    }

    /// Merge-then-evolve equals evolve-then-merge, path by path.
    #[test]
    fn merging_commutes_on_windows() {
        let p = params();
        for trial in 0..200u64 {
            let f = RandomField::new(&p, derive_seed(0xbeef, trial));
            let init = RandomField::new(&p, derive_seed(0xfeed, trial));
            let (a, b) = (-60i64, 40i64);
            let n = (b - a + 1) as usize;
            let classes: Vec<Class> = (0..n)
                .map(|i| {
                    let x = a + i as i64;
                    if init.aux_bernoulli(0.6, x, 0, 21) {
                        Class((x % 7) as i32)
                    } else {
                        Class::HOLE
                    }
                })
                .collect();
            let state = WindowState::new(a, b, classes, LeftExterior::Packed).unwrap();
            // Random monotone map: cumulative jumps over [-7, 7].
            let mut value = -3;
            let mut table = Vec::new();
            for v in -7i32..=7 {
                if init.aux_bernoulli(0.5, i64::from(v), 1, 22) {
                    value += 1;
                }
                table.push((v, value));
            }
            // Sentinels stay fixed: the frozen exterior must relabel to
            // itself for the windowed commutation to be exact.
            let map = MergeMap::from_fn(-7, 7, |c| match c {
                Class::NEG_INF => Class::NEG_INF,
                Class::HOLE => Class::HOLE,
                c => table
                    .iter()
                    .find(|&&(v, _)| Class(v) == c)
                    .map(|&(_, m)| Class(m))
                    .expect("class inside tabulated range"),
            })
            .unwrap();

            let mut evolved = state.clone();
            evolve_window(&p, &mut evolved, 12, &f).unwrap();
            let merged_then_evolved = {
                let mut s = apply_merge(&state, &map);
                evolve_window(&p, &mut s, 12, &f).unwrap();
                s
            };
            assert_eq!(
                apply_merge(&evolved, &map),
                merged_then_evolved,
                "merge does not commute at trial {trial}"
            );
        }
    }
}
