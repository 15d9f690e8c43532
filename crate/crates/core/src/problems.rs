//! Named benchmark instances with their reference solutions and the solver
//! settings they are usually run with.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{DirichletBC, GridFunction, GridSpec};
use crate::hele_shaw::{exact_circle_radius, HeleShawSetup};
use crate::obstacle::ObstacleProblem;
use crate::shapes::{radial_polygon, rasterize, Shape};
use crate::two_phase::TwoPhaseProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Obstacle,
    Nonlinear,
    TwoPhase,
    HeleShaw,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Obstacle => "obstacle",
            ProblemKind::Nonlinear => "nonlinear",
            ProblemKind::TwoPhase => "two_phase",
            ProblemKind::HeleShaw => "hele_shaw",
        }
    }
}

/// Penalty weight, either fixed or proportional to `1/h²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Fixed(f64),
    PerInverseH2(f64),
}

impl Penalty {
    pub fn at(self, h: f64) -> f64 {
        match self {
            Penalty::Fixed(v) => v,
            Penalty::PerInverseH2(c) => c / (h * h),
        }
    }
}

/// Settings an instance was originally run with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    /// Nodes per axis.
    pub n: usize,
    /// `μ` for obstacle problems, `γ₁ = γ₂` for Hele-Shaw; unused by the
    /// two-phase solver.
    pub penalty: Option<Penalty>,
    /// `λ` (`λ₁ = λ₂` for Hele-Shaw).
    pub lambda: f64,
    pub tol: f64,
}

/// One benchmark instance.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedProblem {
    pub id: &'static str,
    pub kind: ProblemKind,
    pub dim: usize,
    /// Square domain `[lo, hi]^dim`.
    pub lo: f64,
    pub hi: f64,
    pub preset: Preset,
    pub note: &'static str,
}

impl NamedProblem {
    pub fn grid(&self, n: usize) -> Result<GridSpec> {
        let d = self.dim;
        GridSpec::new(&vec![self.lo; d], &vec![self.hi; d], &vec![n; d])
    }

    pub fn default_grid(&self) -> Result<GridSpec> {
        self.grid(self.preset.n)
    }

    pub fn build(&self, spec: &GridSpec) -> Result<ProblemSpec> {
        build(self.id, spec)
    }

    pub fn has_reference(&self) -> bool {
        !matches!(
            self.id,
            "shapes_2d" | "two_phase_branching" | "hs_pinned" | "hs_concave"
        )
    }
}

/// A concrete problem ready for its solver.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Obstacle(ObstacleProblem),
    Nonlinear(ObstacleProblem),
    TwoPhase(TwoPhaseProblem),
    HeleShaw(HeleShawSetup),
}

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceOrigin {
    /// Closed-form expression.
    Analytic,
    /// Root of a scalar equation or other exact discrete construction.
    Computed,
    /// Measured value reported for the instance.
    Reported,
}

impl ReferenceOrigin {
    pub fn tag(self) -> &'static str {
        match self {
            ReferenceOrigin::Analytic => "analytic",
            ReferenceOrigin::Computed => "computed",
            ReferenceOrigin::Reported => "reported",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTarget {
    pub name: &'static str,
    pub value: f64,
    pub origin: ReferenceOrigin,
}

/// Reference solution sampled at the nodes plus any scalar targets.
#[derive(Debug, Clone)]
pub struct Reference {
    pub field: Option<(GridFunction, ReferenceOrigin)>,
    pub targets: Vec<ScalarTarget>,
}

impl Reference {
    pub fn target(&self, name: &str) -> Option<f64> {
        self.targets.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

const fn fixed(n: usize, mu: f64, lambda: f64, tol: f64) -> Preset {
    Preset {
        n,
        penalty: Some(Penalty::Fixed(mu)),
        lambda,
        tol,
    }
}

const PROBLEMS: &[NamedProblem] = &[
    NamedProblem {
        id: "phi1_1d",
        kind: ProblemKind::Obstacle,
        dim: 1,
        lo: 0.0,
        hi: 1.0,
        preset: fixed(256, 300.0, 45.0, 1e-6),
        note: "piecewise parabola obstacle; exact solution ramps onto 100x(1-x)-12.5",
    },
    NamedProblem {
        id: "phi2_1d",
        kind: ProblemKind::Obstacle,
        dim: 1,
        lo: 0.0,
        hi: 1.0,
        preset: fixed(256, 2.5e4, 250.0, 1e-6),
        note: "sine/cosine obstacle; exact solution has a plateau at 10 on [0.25, 0.75]",
    },
    NamedProblem {
        id: "hemisphere_2d",
        kind: ProblemKind::Obstacle,
        dim: 2,
        lo: -2.0,
        hi: 2.0,
        preset: Preset {
            n: 256,
            penalty: Some(Penalty::PerInverseH2(10.0)),
            lambda: 20.3,
            tol: 1e-6,
        },
        note: "hemisphere over -1; exact radial solution, contact radius r* from r²(1-ln(r/2)) = 1",
    },
    NamedProblem {
        id: "shapes_2d",
        kind: ProblemKind::Obstacle,
        dim: 2,
        lo: 0.0,
        hi: 1.0,
        preset: fixed(256, 6.5e5, 1.3e4, 5e-4),
        note: "diamond, small disc and a line segment; qualitative only",
    },
    NamedProblem {
        id: "planes_bumps_2d",
        kind: ProblemKind::Obstacle,
        dim: 2,
        lo: -1.0,
        hi: 1.0,
        preset: fixed(256, 1e5, 5e3, 5e-4),
        note: "two intersecting planes with two dents; exact solution is the min of the planes",
    },
    NamedProblem {
        id: "minimal_surface_osc",
        kind: ProblemKind::Nonlinear,
        dim: 1,
        lo: 0.0,
        hi: 1.0,
        preset: Preset {
            n: 512,
            penalty: Some(Penalty::Fixed(1.1e3)),
            lambda: 5.3,
            tol: 1e-6,
        },
        note: "minimal surface over 10 sin²(π(x+1)²) with u(0)=5, u(1)=10; reference is the discrete taut string",
    },
    NamedProblem {
        id: "two_phase_sym",
        kind: ProblemKind::TwoPhase,
        dim: 1,
        lo: -1.0,
        hi: 1.0,
        preset: Preset {
            n: 512,
            penalty: None,
            lambda: 204.8,
            tol: 5e-5,
        },
        note: "u'' = 8χ(u>0) - 8χ(u<0), u(±1) = ±1; zero set [-0.5, 0.5]",
    },
    NamedProblem {
        id: "two_phase_asym",
        kind: ProblemKind::TwoPhase,
        dim: 1,
        lo: -1.0,
        hi: 1.0,
        preset: Preset {
            n: 4096,
            penalty: None,
            lambda: 3072.0,
            tol: 5e-7,
        },
        note: "u'' = 2χ(u>0) - χ(u<0), u(±1) = ±1; sign change near x = 0.141",
    },
    NamedProblem {
        id: "two_phase_branching",
        kind: ProblemKind::TwoPhase,
        dim: 2,
        lo: -1.0,
        hi: 1.0,
        preset: Preset {
            n: 256,
            penalty: None,
            lambda: 100.0,
            tol: 1e-6,
        },
        note: "unit weights with piecewise quadratic boundary data; zero set with a branch point",
    },
    NamedProblem {
        id: "hs_circles",
        kind: ProblemKind::HeleShaw,
        dim: 2,
        lo: -5.0,
        hi: 5.0,
        preset: fixed(256, 1.5e4, 150.0, 1e-6),
        note: "K = unit disc, initial fluid = disc of radius √2, t = 0.25; exact radius known",
    },
    NamedProblem {
        id: "hs_pinned",
        kind: ProblemKind::HeleShaw,
        dim: 2,
        lo: -4.0,
        hi: 4.0,
        preset: fixed(256, 1.5e4, 150.0, 1e-5),
        note: "rhombus with acute vertices at (±2, 0), K = disc of radius 0.5, t = 0.1; approximate geometry",
    },
    NamedProblem {
        id: "hs_concave",
        kind: ProblemKind::HeleShaw,
        dim: 2,
        lo: -4.0,
        hi: 4.0,
        preset: fixed(256, 1.5e4, 150.0, 1e-5),
        note: "peanut r(θ) = 1.3 + 0.45 cos 2θ, K = disc of radius 0.4, t = 0.06; approximate geometry",
    },
];

pub fn problems() -> &'static [NamedProblem] {
    PROBLEMS
}

pub fn lookup(id: &str) -> Result<&'static NamedProblem> {
    PROBLEMS
        .iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::UnknownProblem(id.to_string()))
}

/// Time for the Hele-Shaw instances.
pub fn hele_shaw_time(id: &str) -> Result<f64> {
    match id {
        "hs_circles" => Ok(0.25),
        "hs_pinned" => Ok(0.1),
        "hs_concave" => Ok(0.06),
        _ => Err(Error::UnknownProblem(id.to_string())),
    }
}

pub fn build(id: &str, spec: &GridSpec) -> Result<ProblemSpec> {
    let meta = lookup(id)?;
    if spec.dim() != meta.dim {
        return Err(Error::InvalidGrid(format!(
            "`{id}` is {}-dimensional, grid is {}-dimensional",
            meta.dim,
            spec.dim()
        )));
    }
    match id {
        "phi1_1d" => obstacle(spec, phi1, |_| 0.0),
        "phi2_1d" => obstacle(spec, phi2, |_| 0.0),
        "hemisphere_2d" => obstacle(spec, hemisphere_obstacle, hemisphere_exact),
        "shapes_2d" => Ok(ProblemSpec::Obstacle(ObstacleProblem::new(
            shapes_obstacle(spec),
            DirichletBC::zero(spec),
        )?)),
        "planes_bumps_2d" => obstacle(spec, planes_bumps_obstacle, planes_min),
        "minimal_surface_osc" => {
            let phi = GridFunction::from_fn(spec, |p| osc_obstacle(p[0]));
            let bc = DirichletBC::from_fn(spec, |p| if p[0] < 0.5 { 5.0 } else { 10.0 });
            Ok(ProblemSpec::Nonlinear(ObstacleProblem::new(phi, bc)?))
        }
        "two_phase_sym" => {
            let bc = DirichletBC::from_fn(spec, |p| p[0].signum());
            Ok(ProblemSpec::TwoPhase(TwoPhaseProblem::uniform(spec, 8.0, 8.0, bc)?))
        }
        "two_phase_asym" => {
            let bc = DirichletBC::from_fn(spec, |p| p[0].signum());
            Ok(ProblemSpec::TwoPhase(TwoPhaseProblem::uniform(spec, 2.0, 1.0, bc)?))
        }
        "two_phase_branching" => {
            let bc = DirichletBC::from_fn(spec, |p| branching_bc(p[0], p[1]));
            Ok(ProblemSpec::TwoPhase(TwoPhaseProblem::uniform(spec, 1.0, 1.0, bc)?))
        }
        "hs_circles" | "hs_pinned" | "hs_concave" => {
            let (k, omega0) = hele_shaw_shapes(id)?;
            let setup = HeleShawSetup::new(
                rasterize(spec, &k),
                rasterize(spec, &omega0),
                hele_shaw_time(id)?,
            )?;
            Ok(ProblemSpec::HeleShaw(setup))
        }
        _ => Err(Error::UnknownProblem(id.to_string())),
    }
}

/// Injection slot and initial fluid region of a Hele-Shaw instance.
pub fn hele_shaw_shapes(id: &str) -> Result<(Vec<Shape>, Vec<Shape>)> {
    match id {
        "hs_circles" => Ok((
            vec![Shape::circle([0.0, 0.0], 1.0)?],
            vec![Shape::circle([0.0, 0.0], 2f64.sqrt())?],
        )),
        "hs_pinned" => Ok((
            vec![Shape::circle([0.0, 0.0], 0.5)?],
            vec![Shape::polygon(vec![[2.0, 0.0], [0.0, 1.0], [-2.0, 0.0], [0.0, -1.0]])?],
        )),
        "hs_concave" => Ok((
            vec![Shape::circle([0.0, 0.0], 0.4)?],
            vec![radial_polygon([0.0, 0.0], 720, |t| 1.3 + 0.45 * (2.0 * t).cos())?],
        )),
        _ => Err(Error::UnknownProblem(id.to_string())),
    }
}

fn obstacle(spec: &GridSpec, phi: impl Fn(&[f64]) -> f64, g: impl Fn(&[f64]) -> f64) -> Result<ProblemSpec> {
    let phi = GridFunction::from_fn(spec, phi);
    let bc = DirichletBC::from_fn(spec, g);
    Ok(ProblemSpec::Obstacle(ObstacleProblem::new(phi, bc)?))
}

/// Exact solution sampled at the nodes and scalar targets.
pub fn evaluate_reference(id: &str, spec: &GridSpec) -> Result<Reference> {
    let meta = lookup(id)?;
    if !meta.has_reference() {
        return Err(Error::NoReference(id.to_string()));
    }
    if spec.dim() != meta.dim {
        return Err(Error::InvalidGrid(format!("`{id}` is {}-dimensional", meta.dim)));
    }
    let analytic = |f: &dyn Fn(&[f64]) -> f64| Some((GridFunction::from_fn(spec, f), ReferenceOrigin::Analytic));
    let target = |name, value, origin| ScalarTarget { name, value, origin };
    Ok(match id {
        "phi1_1d" => Reference {
            field: analytic(&|p| phi1_exact(p[0])),
            targets: vec![target("contact_start", 1.0 / (2.0 * 2f64.sqrt()), ReferenceOrigin::Analytic)],
        },
        "phi2_1d" => Reference {
            field: analytic(&|p| phi2_exact(p[0])),
            targets: vec![target("plateau", 10.0, ReferenceOrigin::Analytic)],
        },
        "hemisphere_2d" => Reference {
            field: analytic(&hemisphere_exact),
            targets: vec![target("contact_radius", hemisphere_contact_radius(), ReferenceOrigin::Computed)],
        },
        "planes_bumps_2d" => Reference {
            field: analytic(&planes_min),
            targets: vec![],
        },
        "minimal_surface_osc" => {
            let phi = GridFunction::from_fn(spec, |p| osc_obstacle(p[0]));
            Reference {
                field: Some((taut_string(&phi, 5.0, 10.0)?, ReferenceOrigin::Computed)),
                targets: vec![],
            }
        }
        "two_phase_sym" => Reference {
            field: analytic(&|p| two_phase_sym_exact(p[0])),
            targets: vec![
                target("zero_set_lo", -0.5, ReferenceOrigin::Analytic),
                target("zero_set_hi", 0.5, ReferenceOrigin::Analytic),
            ],
        },
        "two_phase_asym" => {
            let (x0, slope) = two_phase_asym_crossing();
            Reference {
                field: Some((
                    GridFunction::from_fn(spec, |p| two_phase_asym_exact(p[0], x0, slope)),
                    ReferenceOrigin::Computed,
                )),
                targets: vec![
                    target("free_boundary", x0, ReferenceOrigin::Computed),
                    target("free_boundary_reported", 0.141, ReferenceOrigin::Reported),
                ],
            }
        }
        "hs_circles" => Reference {
            field: None,
            targets: vec![target("radius", exact_circle_radius(0.25, 1.0, 2f64.sqrt())?, ReferenceOrigin::Computed)],
        },
        _ => return Err(Error::NoReference(id.to_string())),
    })
}

fn phi1(p: &[f64]) -> f64 {
    let x = if p[0] > 0.5 { 1.0 - p[0] } else { p[0] };
    if x <= 0.25 {
        100.0 * x * x
    } else {
        100.0 * x * (1.0 - x) - 12.5
    }
}

fn phi1_exact(x: f64) -> f64 {
    let x = if x > 0.5 { 1.0 - x } else { x };
    if x <= 1.0 / (2.0 * 2f64.sqrt()) {
        (100.0 - 50.0 * 2f64.sqrt()) * x
    } else {
        100.0 * x * (1.0 - x) - 12.5
    }
}

fn phi2(p: &[f64]) -> f64 {
    let x = if p[0] > 0.5 { 1.0 - p[0] } else { p[0] };
    if x <= 0.25 {
        10.0 * (2.0 * PI * x).sin()
    } else {
        5.0 * (PI * (4.0 * x - 1.0)).cos() + 5.0
    }
}

fn phi2_exact(x: f64) -> f64 {
    let x = if x > 0.5 { 1.0 - x } else { x };
    if x <= 0.25 {
        10.0 * (2.0 * PI * x).sin()
    } else {
        10.0
    }
}

fn hemisphere_obstacle(p: &[f64]) -> f64 {
    let r2 = p[0] * p[0] + p[1] * p[1];
    if r2 <= 1.0 {
        (1.0 - r2).sqrt()
    } else {
        -1.0
    }
}

/// Root of `r²(1 - ln(r/2)) = 1` in `(0, 1)` by bisection.
pub fn hemisphere_contact_radius() -> f64 {
    let f = |r: f64| r * r * (1.0 - (r / 2.0).ln()) - 1.0;
    let (mut lo, mut hi) = (1e-12, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn hemisphere_exact(p: &[f64]) -> f64 {
    let rs = hemisphere_contact_radius();
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    if r <= rs {
        (1.0 - r * r).sqrt()
    } else {
        -rs * rs * (r / 2.0).ln() / (1.0 - rs * rs).sqrt()
    }
}

fn shapes_obstacle(spec: &GridSpec) -> GridFunction {
    let h = spec.h();
    // the segment sits on the node row nearest y = 0.57
    let row = spec.lo(1) + ((0.57 - spec.lo(1)) / h).round() * h;
    GridFunction::from_fn(spec, |p| {
        let (x, y) = (p[0], p[1]);
        if (x - 0.6).abs() + (y - 0.6).abs() < 0.04 {
            5.0
        } else if (x - 0.6).powi(2) + (y - 0.25).powi(2) < 0.001 {
            4.5
        } else if (y - row).abs() < 0.5 * h && x > 0.075 && x < 0.13 {
            4.5
        } else {
            0.0
        }
    })
}

fn planes_min(p: &[f64]) -> f64 {
    (p[0] + p[1] - 2.0).min(2.0 * p[0] + 0.5 * p[1] - 2.5)
}

fn planes_bumps_obstacle(p: &[f64]) -> f64 {
    let (x, y) = (p[0], p[1]);
    planes_min(p)
        - 2.0 * (-60.0 * (x * x + y * y)).exp()
        - 1.5 * (-200.0 * ((x - 0.75).powi(2) + (y + 0.5).powi(2))).exp()
}

fn osc_obstacle(x: f64) -> f64 {
    let s = (PI * (x + 1.0).powi(2)).sin();
    10.0 * s * s
}

/// Least concave majorant of the nodal obstacle with the given end values.
/// Any strictly convex function of the slopes, the discrete arc length
/// included, is minimized over `u ≥ φ` by this piecewise linear hull.
pub fn taut_string(phi: &GridFunction, left: f64, right: f64) -> Result<GridFunction> {
    let spec = phi.spec();
    if spec.dim() != 1 {
        return Err(Error::InvalidGrid("taut string needs a 1D grid".into()));
    }
    let n = spec.len();
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let y = match k {
                0 => left.max(phi.get(0)),
                _ if k == n - 1 => right.max(phi.get(k)),
                _ => phi.get(k),
            };
            (spec.coord(0, k), y)
        })
        .collect();
    if pts[0].1 != left || pts[n - 1].1 != right {
        return Err(Error::InfeasibleBoundary("end values below the obstacle".into()));
    }
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]]);
            let c = pts[k];
            // drop b when it lies on or below the chord a-c
            if (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = vec![0.0; n];
    for w in hull.windows(2) {
        let (a, b) = (pts[w[0]], pts[w[1]]);
        for (k, o) in out.iter_mut().enumerate().take(w[1] + 1).skip(w[0]) {
            let s = (pts[k].0 - a.0) / (b.0 - a.0);
            *o = a.1 + s * (b.1 - a.1);
        }
    }
    GridFunction::from_values(spec, out)
}

fn two_phase_sym_exact(x: f64) -> f64 {
    if x <= -0.5 {
        -4.0 * x * x - 4.0 * x - 1.0
    } else if x < 0.5 {
        0.0
    } else {
        4.0 * x * x - 4.0 * x + 1.0
    }
}

/// Sign change `x₀` and slope there for `u'' = 2` on `u > 0`, `u'' = -1` on
/// `u < 0`, `u(±1) = ±1`. With `u = (x-x₀)² + a(x-x₀)` to the right and
/// `u = -(x-x₀)²/2 + a(x-x₀)` to the left, the boundary values give
/// `a = (1 - (1-x₀)²)/(1-x₀)` and `(1+x₀)²/2 + a(1+x₀) = 1`.
pub fn two_phase_asym_crossing() -> (f64, f64) {
    let slope = |x0: f64| (1.0 - (1.0 - x0).powi(2)) / (1.0 - x0);
    let f = |x0: f64| 0.5 * (1.0 + x0).powi(2) + slope(x0) * (1.0 + x0) - 1.0;
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x0 = 0.5 * (lo + hi);
    (x0, slope(x0))
}

fn two_phase_asym_exact(x: f64, x0: f64, a: f64) -> f64 {
    let d = x - x0;
    if d >= 0.0 {
        d * d + a * d
    } else {
        -0.5 * d * d + a * d
    }
}

fn branching_bc(x: f64, y: f64) -> f64 {
    const EDGE: f64 = 1e-12;
    if y >= 1.0 - EDGE {
        (1.0 - x).powi(2) / 4.0
    } else if y <= -1.0 + EDGE {
        -(1.0 - x).powi(2) / 4.0
    } else if x <= -1.0 + EDGE {
        y * y.abs()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacle::kkt_residuals;
    use crate::two_phase::euler_lagrange_residual;

    fn field(r: &Reference) -> &GridFunction {
        &r.field.as_ref().unwrap().0
    }

    fn value_at(g: &GridFunction, x: f64) -> f64 {
        let spec = g.spec();
        let k = ((x - spec.lo(0)) / spec.h()).round() as usize;
        assert!((spec.coord(0, k) - x).abs() < 1e-12, "{x} is not a node");
        g.get(k)
    }

    #[test]
    fn ids_are_unique_and_resolvable() {
        let mut ids: Vec<_> = problems().iter().map(|p| p.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), problems().len());
        assert!(matches!(lookup("nope"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn phi1_midpoint() {
        let spec = GridSpec::interval(0.0, 1.0, 257).unwrap();
        let ProblemSpec::Obstacle(p) = build("phi1_1d", &spec).unwrap() else { panic!() };
        assert!((value_at(&p.phi, 0.5) - 12.5).abs() < 1e-12);
    }

    #[test]
    fn reference_point_values() {
        let spec = GridSpec::interval(0.0, 1.0, 81).unwrap();
        let r1 = evaluate_reference("phi1_1d", &spec).unwrap();
        assert!((value_at(field(&r1), 0.1) - (100.0 - 50.0 * 2f64.sqrt()) * 0.1).abs() < 1e-12);
        assert!((value_at(field(&r1), 0.1) - 2.9289).abs() < 1e-4);
        let r2 = evaluate_reference("phi2_1d", &spec).unwrap();
        assert_eq!(value_at(field(&r2), 0.375), 10.0);

        let spec = GridSpec::interval(-1.0, 1.0, 81).unwrap();
        let s = evaluate_reference("two_phase_sym", &spec).unwrap();
        assert_eq!(value_at(field(&s), 0.0), 0.0);
        assert!((value_at(field(&s), 0.75) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn hemisphere_radius_solves_its_equation() {
        let r = hemisphere_contact_radius();
        assert!((r * r * (1.0 - (r / 2.0).ln()) - 1.0).abs() < 1e-10);
        assert!((r - 0.6979651482).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_crossing_matches_observation() {
        let (x0, a) = two_phase_asym_crossing();
        assert!((x0 - 0.141).abs() < 1e-3, "{x0}");
        assert!(a > 0.0);
        assert!((two_phase_asym_exact(1.0, x0, a) - 1.0).abs() < 1e-12);
        assert!((two_phase_asym_exact(-1.0, x0, a) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_data_dominates_obstacle_for_every_fixture() {
        for meta in problems() {
            for n in [9, 33, 64] {
                let spec = meta.grid(n).unwrap();
                let built = build(meta.id, &spec).unwrap();
                if let ProblemSpec::Obstacle(p) | ProblemSpec::Nonlinear(p) = built {
                    for k in spec.boundary_indices() {
                        assert!(p.bc.value(k) >= p.phi.get(k), "{} at n={n}", meta.id);
                    }
                }
            }
        }
    }

    #[test]
    fn builders_are_deterministic() {
        for meta in problems() {
            let spec = meta.grid(33).unwrap();
            let a = format!("{:?}", build(meta.id, &spec).unwrap());
            let b = format!("{:?}", build(meta.id, &spec).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn missing_references_are_reported() {
        for id in ["shapes_2d", "two_phase_branching", "hs_pinned", "hs_concave"] {
            let spec = lookup(id).unwrap().grid(17).unwrap();
            assert!(matches!(evaluate_reference(id, &spec), Err(Error::NoReference(_))));
        }
    }

    #[test]
    fn obstacle_references_satisfy_kkt_to_order_h() {
        for id in ["phi1_1d", "phi2_1d", "hemisphere_2d", "planes_bumps_2d"] {
            let meta = lookup(id).unwrap();
            for n in [65, 129] {
                let spec = meta.grid(n).unwrap();
                let ProblemSpec::Obstacle(p) = build(id, &spec).unwrap() else { panic!() };
                let r = evaluate_reference(id, &spec).unwrap();
                let k = kkt_residuals(&p, field(&r)).unwrap();
                let worst = k.complementarity;
                assert!(k.feasibility <= 1e-12, "{id}: {k:?}");
                assert!(k.subharmonicity <= 10.0 * spec.h(), "{id}: {k:?}");
                assert!(worst <= 10.0 * spec.h(), "{id}: {k:?}");
            }
        }
    }

    #[test]
    fn two_phase_references_satisfy_euler_lagrange() {
        for id in ["two_phase_sym", "two_phase_asym"] {
            let spec = lookup(id).unwrap().grid(401).unwrap();
            let ProblemSpec::TwoPhase(p) = build(id, &spec).unwrap() else { panic!() };
            let r = evaluate_reference(id, &spec).unwrap();
            let h = spec.h();
            // nodes whose stencil straddles a phase change count as zero
            let res = euler_lagrange_residual(&p, field(&r), 2.0 * h).unwrap();
            assert!(res <= 10.0 * h, "{id}: {res}");
        }
    }

    #[test]
    fn taut_string_is_concave_majorant() {
        let spec = GridSpec::interval(0.0, 1.0, 513).unwrap();
        let phi = GridFunction::from_fn(&spec, |p| osc_obstacle(p[0]));
        let u = taut_string(&phi, 5.0, 10.0).unwrap();
        assert_eq!(u.get(0), 5.0);
        assert_eq!(u.get(512), 10.0);
        for k in 0..513 {
            assert!(u.get(k) >= phi.get(k) - 1e-12);
        }
        for k in 1..512 {
            assert!(u.get(k + 1) - 2.0 * u.get(k) + u.get(k - 1) <= 1e-12);
        }
        // flat at the top once the first peak is reached
        assert!((value_at(&u, 0.75) - 10.0).abs() < 1e-3);
    }

    #[test]
    fn hele_shaw_fixtures_build() {
        for id in ["hs_circles", "hs_pinned", "hs_concave"] {
            let spec = lookup(id).unwrap().grid(65).unwrap();
            let ProblemSpec::HeleShaw(s) = build(id, &spec).unwrap() else { panic!() };
            assert!(s.k_mask.values().iter().sum::<f64>() > 0.0);
        }
        let r = evaluate_reference("hs_circles", &GridSpec::square(-5.0, 5.0, 17).unwrap()).unwrap();
        assert!((r.target("radius").unwrap() - 1.7553754911).abs() < 1e-8);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = GridSpec::square(0.0, 1.0, 9).unwrap();
        assert!(build("phi1_1d", &spec).is_err());
    }
}
