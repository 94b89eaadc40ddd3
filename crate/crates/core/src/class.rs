//! Class labels for multi-class configurations.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Class of an arrow: an integer, or one of the two sentinels.
///
/// Lower classes behave as particles relative to higher classes. The maximal
/// class is the hole (an unoccupied edge); the minimal class is a "frozen
/// packed" label used for window exteriors. The total order is the integer
/// order with `NEG_INF < n < HOLE` for every finite `n`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Class(pub i32);

impl Class {
    /// Minimal class, below every finite label.
    pub const NEG_INF: Class = Class(i32::MIN);
    /// Maximal class: the hole (no arrow).
    pub const HOLE: Class = Class(i32::MAX);

    pub fn finite(v: i32) -> Class {
        debug_assert!(v != i32::MIN && v != i32::MAX);
        Class(v)
    }

    pub fn is_hole(self) -> bool {
        self == Class::HOLE
    }

    /// True for any arrow, i.e. every class except the hole.
    pub fn is_particle(self) -> bool {
        self != Class::HOLE
    }
}

impl From<i32> for Class {
    fn from(v: i32) -> Self {
        Class(v)
    }
}

impl fmt::Debug for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Class::NEG_INF => write!(f, "-inf"),
            Class::HOLE => write!(f, "hole"),
            Class(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
