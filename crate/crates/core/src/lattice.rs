//! Lattice coordinates.
//!
//! Public positions are 1-based `(t₁, t₂)` pairs so that a node reads the same
//! way as the time indices of the two series. The rotated frame is
//! `x = t₂ − t₁` (lag, positive when `X` leads `Y`) and `τ = t₁ + t₂ − 2`.
//! Internally the engines use 0-based `(i, j) = (t₁ − 1, t₂ − 1)` so that
//! `τ = i + j` and anti-diagonal layer `τ` holds the nodes `i ∈ layer_bounds(n, τ)`.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A lattice node in 1-based time coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Node {
    pub t1: usize,
    pub t2: usize,
}

impl Node {
    pub const fn new(t1: usize, t2: usize) -> Self {
        Node { t1, t2 }
    }

    /// Lag coordinate `x = t₂ − t₁`.
    pub fn lag(&self) -> i64 {
        self.t2 as i64 - self.t1 as i64
    }

    /// Diagonal coordinate `τ = t₁ + t₂ − 2`.
    pub fn tau(&self) -> usize {
        self.t1 + self.t2 - 2
    }

    /// Componentwise order: `self.t₁ ≤ other.t₁` and `self.t₂ ≤ other.t₂`.
    pub fn precedes(&self, other: &Node) -> bool {
        self.t1 <= other.t1 && self.t2 <= other.t2
    }

    pub fn in_lattice(&self, n: usize) -> bool {
        (1..=n).contains(&self.t1) && (1..=n).contains(&self.t2)
    }

    pub(crate) fn i(&self) -> usize {
        self.t1 - 1
    }

    pub(crate) fn j(&self) -> usize {
        self.t2 - 1
    }

    /// The node's own image under a 180° rotation of an `n × n` lattice.
    pub fn mirrored(&self, n: usize) -> Node {
        Node::new(n + 1 - self.t1, n + 1 - self.t2)
    }

    /// Swap the two time axes (the node seen from the `(Y, X)` landscape).
    pub fn transposed(&self) -> Node {
        Node::new(self.t2, self.t1)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.t1, self.t2)
    }
}

/// Rotated-frame coordinate `(x, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotatedCoord {
    pub x: i64,
    pub tau: i64,
}

impl RotatedCoord {
    pub fn from_node(node: Node) -> Self {
        RotatedCoord {
            x: node.lag(),
            tau: node.tau() as i64,
        }
    }

    /// Back-projection to `(t₁, t₂)`; `None` on a parity mismatch or outside `[1, n]²`.
    pub fn to_node(self, n: usize) -> Option<Node> {
        if (self.x + self.tau).rem_euclid(2) != 0 {
            return None;
        }
        let t2 = (self.tau + self.x) / 2 + 1;
        let t1 = (self.tau - self.x) / 2 + 1;
        if t1 < 1 || t2 < 1 {
            return None;
        }
        let node = Node::new(t1 as usize, t2 as usize);
        node.in_lattice(n).then_some(node)
    }
}

/// Inclusive 0-based `i` range of anti-diagonal layer `tau` in an `n × n` lattice.
#[inline]
pub(crate) fn layer_bounds(n: usize, tau: usize) -> (usize, usize) {
    (tau.saturating_sub(n - 1), tau.min(n - 1))
}

/// Index of the last layer, `2n − 2`.
#[inline]
pub(crate) fn last_tau(n: usize) -> usize {
    2 * n - 2
}

/// Number of directed paths between two nodes `dt1` and `dt2` apart
/// (the Delannoy number `D(dt1, dt2)`).
pub fn delannoy(dt1: usize, dt2: usize) -> u128 {
    let mut row = vec![1u128; dt2 + 1];
    for _ in 0..dt1 {
        let mut diag = row[0];
        for j in 1..=dt2 {
            let up = row[j];
            row[j] = row[j] + row[j - 1] + diag;
            diag = up;
        }
    }
    row[dt2]
}
