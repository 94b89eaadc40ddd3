//! Local vertex resolution rules, single- and multi-class.
//!
//! Single-class rules: two or zero incoming arrows pass through; a lone
//! vertical arrow keeps going up iff `chi1`, a lone horizontal arrow keeps
//! going right iff `chi2`. The multi-class rule reduces to this on classes
//! `{1, hole}` and is bound to the channels so that the minimal incoming
//! class plays the role of the lone arrow: `chi1` decides when it arrives
//! from below, `chi2` when it arrives from the left. This binding makes
//! class merging and attractivity hold path by path, not just in law.

use crate::class::Class;
use crate::field::{BitField, Channel};

/// Arrow configuration around one vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VertexIO {
    pub in_bottom: Class,
    pub in_left: Class,
    pub out_top: Class,
    pub out_right: Class,
}

impl VertexIO {
    /// Local conservation: outputs are a permutation of inputs.
    pub fn conserves(&self) -> bool {
        (self.out_top, self.out_right) == (self.in_bottom, self.in_left)
            || (self.out_top, self.out_right) == (self.in_left, self.in_bottom)
    }
}

/// Resolves a single-class vertex. Returns `(out_top, out_right)` as
/// occupation indicators.
#[inline(always)]
pub fn resolve_vertex_single(
    in_bottom: bool,
    in_left: bool,
    chi1: bool,
    chi2: bool,
) -> (bool, bool) {
    match (in_bottom, in_left) {
        (true, true) | (false, false) => (in_bottom, in_left),
        (true, false) => (chi1, !chi1),
        (false, true) => (!chi2, chi2),
    }
}

/// Resolves a multi-class vertex. Returns `(out_top, out_right)`.
#[inline(always)]
pub fn resolve_vertex_multi(
    in_bottom: Class,
    in_left: Class,
    chi1: bool,
    chi2: bool,
) -> (Class, Class) {
    if in_bottom == in_left {
        (in_bottom, in_left)
    } else if in_bottom < in_left {
        // Minimal class arrives from below: continues upward iff chi1.
        if chi1 {
            (in_bottom, in_left)
        } else {
            (in_left, in_bottom)
        }
    } else {
        // Minimal class arrives from the left: continues rightward iff chi2.
        if chi2 {
            (in_bottom, in_left)
        } else {
            (in_left, in_bottom)
        }
    }
}

/// Sweeps one lattice row left to right.
///
/// `classes[i]` holds the class on the vertical in-edge of the vertex at
/// absolute column `x0 + i`; `entering` is the class on the horizontal edge
/// entering the leftmost vertex. On return `classes` holds the vertical
/// out-edges and the returned value is the class leaving the last vertex to
/// the right. Only vertices with unequal inputs consume a field bit, and
/// each consumes exactly the bit of its deciding channel.
pub fn sweep_row<B: BitField>(
    field: &B,
    classes: &mut [Class],
    entering: Class,
    x0: i64,
    t: i64,
) -> Class {
    let mut carry = entering;
    for (i, site) in classes.iter_mut().enumerate() {
        let bottom = *site;
        if bottom == carry {
            continue;
        }
        let x = x0 + i as i64;
        if bottom < carry {
            if !field.chi(Channel::Chi1, x, t) {
                *site = carry;
                carry = bottom;
            }
        } else if !field.chi(Channel::Chi2, x, t) {
            *site = carry;
            carry = bottom;
        }
    }
    carry
}

/// [`sweep_row`] that skips the all-hole tail beyond the rightmost particle.
///
/// `front` is the index of the rightmost non-hole site (or `None` when the
/// row is empty); it is updated in place. Behaviour is identical to
/// [`sweep_row`] with an entering carry over a row whose tail is holes.
pub fn sweep_row_tracked<B: BitField>(
    field: &B,
    classes: &mut [Class],
    entering: Class,
    x0: i64,
    t: i64,
    front: &mut Option<usize>,
) -> Class {
    let prefix = front.map_or(0, |f| f + 1).min(classes.len());
    let mut carry = sweep_row(field, &mut classes[..prefix], entering, x0, t);
    let mut landed = None;
    let mut i = prefix;
    // Past the front every site is a hole: the carry either keeps moving
    // (chi2) or lands, after which the row is quiet.
    while carry.is_particle() && i < classes.len() {
        if !field.chi(Channel::Chi2, x0 + i as i64, t) {
            classes[i] = carry;
            carry = Class::HOLE;
            landed = Some(i);
        }
        i += 1;
    }
    *front = landed.or_else(|| classes[..prefix].iter().rposition(|c| c.is_particle()));
    carry
}
