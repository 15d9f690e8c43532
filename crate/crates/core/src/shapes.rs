//! Geometric primitives rasterized to 0/1 masks by node membership.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle { center: [f64; 2], radius: f64 },
    /// Axis-aligned box `[lo, hi]`.
    Rect { lo: [f64; 2], hi: [f64; 2] },
    /// Simple polygon, vertices in order; the closing edge is implicit.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape {
    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Shape::Circle { center, radius })
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::InvalidParameter(format!("empty rectangle {lo:?}..{hi:?}")));
        }
        Ok(Shape::Rect { lo, hi })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidParameter("polygon needs at least 3 vertices".into()));
        }
        Ok(Shape::Polygon { vertices })
    }

    /// Closed-set membership for circles and rectangles, even-odd rule for
    /// polygons.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Circle { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rect { lo, hi } => p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1],
            Shape::Polygon { vertices } => {
                let mut inside = false;
                let n = vertices.len();
                let mut j = n - 1;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[j]);
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// Bounding box `(lo, hi)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Shape::Circle { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::Rect { lo, hi } => (*lo, *hi),
            Shape::Polygon { vertices } => vertices.iter().fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), v| ([lo[0].min(v[0]), lo[1].min(v[1])], [hi[0].max(v[0]), hi[1].max(v[1])]),
            ),
        }
    }
}

/// Union of shapes as a 0/1 mask on `spec`'s nodes.
pub fn rasterize(spec: &GridSpec, shapes: &[Shape]) -> GridFunction {
    GridFunction::from_fn(spec, |p| {
        let q = [p[0], if p.len() > 1 { p[1] } else { 0.0 }];
        if shapes.iter().any(|s| s.contains(q)) {
            1.0
        } else {
            0.0
        }
    })
}

/// Polygon with vertices `c + r(θ)(cos θ, sin θ)` at `count` equally spaced
/// angles.
pub fn radial_polygon(center: [f64; 2], count: usize, r: impl Fn(f64) -> f64) -> Result<Shape> {
    let vertices = (0..count)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / count as f64;
            let rad = r(t);
            [center[0] + rad * t.cos(), center[1] + rad * t.sin()]
        })
        .collect();
    Shape::polygon(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_membership_is_closed() {
        let c = Shape::circle([0.0, 0.0], 1.0).unwrap();
        assert!(c.contains([1.0, 0.0]));
        assert!(!c.contains([1.0, 1e-6]));
    }

    #[test]
    fn polygon_even_odd() {
        let tri = Shape::polygon(vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        assert!(tri.contains([0.5, 0.5]));
        assert!(!tri.contains([1.5, 1.5]));
        assert!(!tri.contains([-0.1, 0.5]));
    }

    #[test]
    fn rhombus_area_converges() {
        let spec = GridSpec::square(-3.0, 3.0, 601).unwrap();
        let rh = Shape::polygon(vec![[2.0, 0.0], [0.0, 1.0], [-2.0, 0.0], [0.0, -1.0]]).unwrap();
        let mask = rasterize(&spec, &[rh]);
        let area: f64 = mask.values().iter().sum::<f64>() * spec.cell_volume();
        assert!((area - 4.0).abs() < 0.05, "{area}");
    }

    #[test]
    fn union_and_bounds() {
        let spec = GridSpec::square(-2.0, 2.0, 41).unwrap();
        let a = Shape::rect([-1.0, -1.0], [0.0, 0.0]).unwrap();
        let b = Shape::circle([1.0, 1.0], 0.5).unwrap();
        let m = rasterize(&spec, &[a.clone(), b]);
        assert_eq!(m.at(spec.n(0) / 2 - 5, spec.n(1) / 2 - 5), 1.0);
        assert_eq!(m.at(30, 30), 1.0);
        assert_eq!(m.at(30, 10), 0.0);
        assert_eq!(a.bounds(), ([-1.0, -1.0], [0.0, 0.0]));
    }

    #[test]
    fn degenerate_shapes_are_rejected() {
        assert!(Shape::circle([0.0, 0.0], 0.0).is_err());
        assert!(Shape::rect([0.0, 0.0], [0.0, 1.0]).is_err());
        assert!(Shape::polygon(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
    }
}
