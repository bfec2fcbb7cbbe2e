use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// One-dimensional reduction of the domain, parameterized by the distance
/// `delta` to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    /// `{0 < x_1 < 1}` near one face: flat level sets.
    Slab,
    /// Unit ball in `R^dim`, radial functions, `delta = 1 - |x|`.
    Ball { dim: usize },
}

impl Geometry {
    pub fn ball(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParams("ball dimension must be at least 1".into()));
        }
        Ok(Geometry::Ball { dim })
    }

    /// `(N - 1) / (1 - delta)`, the mean curvature term multiplying `u_delta`
    /// in the radial Laplacian; zero for the slab.
    pub fn curvature<T: Real>(&self, delta: T) -> T {
        match *self {
            Geometry::Slab => T::zero(),
            Geometry::Ball { dim } => T::from_usize(dim - 1).unwrap() / (T::one() - delta),
        }
    }

    /// Supremum of the curvature term over `{delta < rho}`.
    pub fn curvature_bound<T: Real>(&self, rho: T) -> T {
        self.curvature(rho)
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slab" => Ok(Geometry::Slab),
            "ball" => Ok(Geometry::Ball { dim: 3 }),
            other => Err(Error::InvalidParams(format!("unknown geometry '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_values() {
        assert_eq!(Geometry::Slab.curvature(0.5), 0.0);
        assert_eq!(Geometry::Ball { dim: 3 }.curvature(0.5), 4.0);
        assert_eq!(Geometry::Ball { dim: 1 }.curvature(0.5), 0.0);
        assert!(Geometry::ball(0).is_err());
    }
}
