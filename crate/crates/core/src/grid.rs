//! Meshes in the distance variable `delta`, graded towards the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Upper bound on the ratio of consecutive spacings.
pub const MAX_SPACING_RATIO: f64 = 1.2;

pub const DEFAULT_GRADING: f64 = 0.02;
pub const DEFAULT_MAX_SPACING: f64 = 0.01;
pub const DEFAULT_DELTA_MIN: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T = f64> {
    nodes: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// Validates a node list: strictly increasing, in `(0, 1]`, ending at 1,
    /// spacings nondecreasing with ratio at most [`MAX_SPACING_RATIO`].
    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid("need at least three nodes".into()));
        }
        if !(nodes[0] > T::zero()) || *nodes.last().unwrap() != T::one() {
            return Err(Error::InvalidGrid("nodes must start above 0 and end at 1".into()));
        }
        let max_ratio = T::lit(MAX_SPACING_RATIO) * (T::one() + T::lit(1e-9));
        let min_ratio = T::one() - T::lit(1e-9);
        for i in 1..nodes.len() {
            if !(nodes[i] > nodes[i - 1]) {
                return Err(Error::InvalidGrid(format!("nodes not strictly increasing at index {i}")));
            }
            if i >= 2 {
                let ratio = (nodes[i] - nodes[i - 1]) / (nodes[i - 1] - nodes[i - 2]);
                if ratio > max_ratio || ratio < min_ratio {
                    return Err(Error::InvalidGrid(format!(
                        "spacing ratio {ratio} at index {i} outside [1, {MAX_SPACING_RATIO}]"
                    )));
                }
            }
        }
        Ok(Self { nodes })
    }

    /// Mesh on `[delta_min, 1]`: spacing starts at `grading * delta_min`, grows by
    /// the factor `1 + grading` up to `max_spacing`, then stays uniform.
    pub fn graded(delta_min: T, grading: T, max_spacing: T) -> Result<Self> {
        Self::graded_from(delta_min, grading * delta_min, grading, max_spacing)
    }

    /// Like [`Grid::graded`] with an explicit first spacing, for meshes that must
    /// resolve a layer much thinner than `delta_min` next to the inner node.
    pub fn graded_from(delta_min: T, first_spacing: T, grading: T, max_spacing: T) -> Result<Self> {
        if !(first_spacing > T::zero()) {
            return Err(Error::InvalidGrid("first spacing must be positive".into()));
        }
        if !(delta_min > T::zero() && delta_min < T::one()) {
            return Err(Error::InvalidGrid(format!("delta_min must lie in (0, 1) (got {delta_min})")));
        }
        if !(grading > T::zero() && grading <= T::lit(MAX_SPACING_RATIO - 1.0)) {
            return Err(Error::InvalidGrid(format!("grading must lie in (0, 0.2] (got {grading})")));
        }
        if !(max_spacing > T::zero()) {
            return Err(Error::InvalidGrid("max_spacing must be positive".into()));
        }
        let growth = T::one() + grading;
        let mut nodes = vec![delta_min];
        let mut h = first_spacing.min(max_spacing);
        let mut x = delta_min;
        loop {
            let remaining = T::one() - x;
            if h >= max_spacing || remaining < T::lit(6.0) * h * growth {
                break;
            }
            x = x + h;
            nodes.push(x);
            h = h * growth;
        }
        // Uniform tail with spacing at least the last graded one.
        let h_prev = h / growth;
        let remaining = T::one() - x;
        let k = (remaining / h_prev).floor().to_usize().unwrap_or(1).max(1);
        let step = remaining / T::from_usize(k).unwrap();
        for j in 1..k {
            nodes.push(x + step * T::from_usize(j).unwrap());
        }
        nodes.push(T::one());
        Self::from_nodes(nodes)
    }

    /// Default mesh on `[delta_min, 1]`.
    pub fn with_delta_min(delta_min: T) -> Result<Self> {
        Self::graded(delta_min, T::lit(DEFAULT_GRADING), T::lit(DEFAULT_MAX_SPACING))
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn delta_min(&self) -> T {
        self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
