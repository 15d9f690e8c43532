//! Shrink operators and the penalty-parameter bound that makes the L1
//! penalty exact.

use crate::error::Result;
use crate::grid::{laplacian, DirichletBC, GridFunction};

/// Default multiplicative safety margin on the discrete bound.
pub const DEFAULT_MARGIN: f64 = 1.05;

/// One-sided soft threshold, the minimizer of `c·max(v,0) + ½(v - z)²`.
///
/// Returns `z - c` above the threshold, `z` for negative `z`, and `0` in
/// between.
#[inline]
pub fn shrink_plus(z: f64, c: f64) -> f64 {
    debug_assert!(c >= 0.0);
    if z > c {
        z - c
    } else if z < 0.0 {
        z
    } else {
        0.0
    }
}

/// Two-sided soft threshold `(|z| - c)₊ sign(z)`, the minimizer of
/// `c|v| + ½(v - z)²`.
#[inline]
pub fn shrink(z: f64, c: f64) -> f64 {
    debug_assert!(c >= 0.0);
    if z > c {
        z - c
    } else if z < -c {
        z + c
    } else {
        0.0
    }
}

/// Discrete lower bound on the penalty weight together with the safety
/// margin applied on top of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyBound {
    pub mu_min: f64,
    pub margin: f64,
}

impl PenaltyBound {
    /// The penalty weight actually used: `margin · mu_min`.
    pub fn applied(&self) -> f64 {
        self.margin * self.mu_min
    }
}

/// `max(0, max_interior (-Δ_h φ))`.
///
/// Any `μ` at or above this value makes the penalized discrete problem
/// share its minimizer with the constrained one. For obstacles with jumps
/// the bound scales like `h⁻²`.
pub fn mu_lower_bound(phi: &GridFunction, bc: &DirichletBC) -> Result<PenaltyBound> {
    let lap = laplacian(phi, bc)?;
    let spec = phi.spec();
    let mut mu_min: f64 = 0.0;
    spec.for_each_interior(|k| mu_min = mu_min.max(-lap.get(k)));
    Ok(PenaltyBound {
        mu_min,
        margin: DEFAULT_MARGIN,
    })
}
