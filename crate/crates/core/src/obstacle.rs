//! Split-Bregman solver for the classical obstacle problem
//!
//! ```text
//! min_u  Σ ½|∇_h u|² - f u + μ (φ - u)₊     subject to u = g on the boundary
//! ```
//!
//! The auxiliary variable `v = φ - u` carries the non-smooth term. Each outer
//! iteration solves a screened Poisson problem for `u`, a one-sided shrink
//! for `v`, and a Bregman update for `b`:
//!
//! ```text
//! (λI - Δ_h) u⁺ = λ(φ - v - b) + f
//! v⁺ = S₊(φ - u⁺ - b, μ/λ)
//! b⁺ = b + u⁺ + v⁺ - φ
//! ```
//!
//! Iteration stops when successive iterates differ by at most `tol` in L∞
//! and, unless disabled, the iterate lies above the obstacle to within
//! `10·tol`.

use std::time::Instant;

use crate::elliptic::{CgSettings, ScreenedSolver, Shift};
use crate::error::{Error, Result};
use crate::grid::{edge_energy, laplacian, linf_slices, DirichletBC, GridFunction, GridSpec};
use crate::penalty::{mu_lower_bound, shrink_plus};
use crate::report::{HistoryEntry, SolveReport};

/// Ratio `λ/μ` used when only the penalty weight is given.
pub const DEFAULT_LAMBDA_RATIO: f64 = 0.15;

/// Obstacle problem on a box: obstacle `φ`, Dirichlet data `g ≥ φ`, and an
/// optional source `f`.
#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    pub spec: GridSpec,
    pub phi: GridFunction,
    pub bc: DirichletBC,
    pub source: Option<GridFunction>,
}

impl ObstacleProblem {
    pub fn new(phi: GridFunction, bc: DirichletBC) -> Result<Self> {
        let p = ObstacleProblem {
            spec: phi.spec().clone(),
            phi,
            bc,
            source: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_source(mut self, f: GridFunction) -> Result<Self> {
        self.source = Some(f);
        self.validate()?;
        Ok(self)
    }

    /// Checks grid agreement, finiteness and `g ≥ φ` on the boundary.
    pub fn validate(&self) -> Result<()> {
        self.spec.ensure_same(self.phi.spec(), "obstacle grid")?;
        self.spec.ensure_same(self.bc.spec(), "boundary condition grid")?;
        self.phi.check_finite("obstacle")?;
        self.bc.check_finite()?;
        if let Some(f) = &self.source {
            self.spec.ensure_same(f.spec(), "source grid")?;
            f.check_finite("source")?;
        }
        for (k, g) in self.bc.boundary_values() {
            let phi = self.phi.get(k);
            if g < phi - 1e-12 * phi.abs().max(1.0) {
                let p = self.spec.point(k);
                return Err(Error::InfeasibleBoundary(format!(
                    "g={g} < phi={phi} at node {k} ({}, {})",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn source_values(&self) -> Vec<f64> {
        match &self.source {
            Some(f) => f.values().to_vec(),
            None => vec![0.0; self.spec.len()],
        }
    }
}

/// Penalty/splitting weights and stopping controls of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub mu: f64,
    pub lambda: f64,
    /// Outer stop: `‖u^n - u^{n-1}‖_∞ ≤ tol`.
    pub tol: f64,
    pub max_outer: usize,
    pub cg: CgSettings,
    /// Also require `max (φ - u)₊ ≤ 10·tol` before stopping.
    pub feasibility_guard: bool,
}

impl SolverParams {
    pub fn new(mu: f64, lambda: f64) -> Self {
        SolverParams {
            mu,
            lambda,
            tol: 1e-6,
            max_outer: 20_000,
            cg: CgSettings::default(),
            feasibility_guard: true,
        }
    }

    /// Penalty from the discrete bound (with its safety margin), splitting
    /// weight `λ = 0.15 μ`. A harmonic or superharmonic-free obstacle has a
    /// zero bound; the weight is then floored at 1 so that the splitting
    /// stays well conditioned.
    pub fn auto(problem: &ObstacleProblem) -> Result<Self> {
        let bound = mu_lower_bound(&problem.phi, &problem.bc)?;
        let mu = bound.applied().max(1.0);
        Ok(Self::new(mu, DEFAULT_LAMBDA_RATIO * mu))
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn with_cg(mut self, cg: CgSettings) -> Self {
        self.cg = cg;
        self
    }

    pub fn with_feasibility_guard(mut self, on: bool) -> Self {
        self.feasibility_guard = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("mu", self.mu)?;
        positive("lambda", self.lambda)?;
        positive("tol", self.tol)?;
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter("max_outer must be at least 1".into()));
        }
        self.cg.validate()
    }
}

/// Pointwise violations of the complementarity system
/// `-Δu ≥ f, u ≥ φ, (-Δu - f)(u - φ) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `max (φ - u)₊` over all nodes.
    pub feasibility: f64,
    /// `max (Δ_h u + f)₊` over interior nodes.
    pub subharmonicity: f64,
    /// `max |min(u - φ, -Δ_h u - f)|` over interior nodes.
    pub complementarity: f64,
}

pub fn kkt_residuals(p: &ObstacleProblem, u: &GridFunction) -> Result<KktResiduals> {
    p.spec.ensure_same(u.spec(), "solution grid")?;
    let lap = laplacian(u, &p.bc)?;
    let f = p.source_values();
    let phi = p.phi.values();
    let vals = u.values();
    let feasibility = phi
        .iter()
        .zip(vals)
        .fold(0.0_f64, |m, (ph, u)| m.max(ph - u));
    let mut subharmonicity: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    p.spec.for_each_interior(|k| {
        let stress = -lap.get(k) - f[k];
        subharmonicity = subharmonicity.max(-stress);
        complementarity = complementarity.max((vals[k] - phi[k]).min(stress).abs());
    });
    Ok(KktResiduals {
        feasibility,
        subharmonicity,
        complementarity,
    })
}

/// Penalized objective `h^d Σ [½|∇_h u|² - f u + μ(φ - u)₊]`.
pub(crate) fn penalized_energy(spec: &GridSpec, u: &[f64], phi: &[f64], f: &[f64], mu: f64) -> f64 {
    let mut sum = edge_energy(spec, u);
    spec.for_each_interior(|k| {
        sum += mu * (phi[k] - u[k]).max(0.0) - f[k] * u[k];
    });
    spec.cell_volume() * sum
}

/// Runs the linear split-Bregman loop.
///
/// `u0` defaults to the obstacle; boundary nodes are always reset to `g`.
pub fn solve_linear_obstacle(
    p: &ObstacleProblem,
    params: &SolverParams,
    u0: Option<&GridFunction>,
) -> Result<SolveReport> {
    let start = Instant::now();
    params.validate()?;
    p.validate()?;
    let spec = &p.spec;
    let mut u = match u0 {
        Some(u0) => {
            spec.ensure_same(u0.spec(), "initial iterate")?;
            u0.clone()
        }
        None => p.phi.clone(),
    };
    p.bc.apply(&mut u)?;

    let n = spec.len();
    let phi = p.phi.values();
    let f = p.source_values();
    let lambda = params.lambda;
    let threshold = params.mu / lambda;
    let mut v = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut u_prev = u.values().to_vec();
    let mut solver = ScreenedSolver::new(spec, Shift::Uniform(lambda))?;

    let mut history = Vec::new();
    let mut converged = false;
    let mut inner_iters = 0;
    for iter in 1..=params.max_outer {
        spec.for_each_interior(|k| rhs[k] = lambda * (phi[k] - v[k] - b[k]) + f[k]);
        u_prev.copy_from_slice(u.values());
        let stats = solver.solve(&rhs, u.values_mut(), &params.cg);
        inner_iters += stats.iterations;

        let uv = u.values();
        spec.for_each_interior(|k| {
            let vk = shrink_plus(phi[k] - uv[k] - b[k], threshold);
            v[k] = vk;
            b[k] += uv[k] + vk - phi[k];
        });

        let diff = linf_slices(uv, &u_prev);
        let energy = penalized_energy(spec, uv, phi, &f, params.mu);
        history.push(HistoryEntry { iter, diff, energy });
        if !diff.is_finite() || !energy.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                reason: "non-finite iterate".into(),
                history,
            });
        }
        if diff <= params.tol && (!params.feasibility_guard || feasibility(uv, phi) <= 10.0 * params.tol) {
            converged = true;
            break;
        }
    }

    let mut contact = GridFunction::zeros(spec);
    spec.for_each_interior(|k| {
        if v[k] == 0.0 {
            contact.values_mut()[k] = 1.0;
        }
    });

    let kkt = kkt_residuals(p, &u)?;
    Ok(SolveReport {
        outer_iters: history.len(),
        u,
        history,
        converged,
        feasibility_violation: kkt.feasibility,
        complementarity: kkt.complementarity,
        inner_iters,
        elapsed: start.elapsed(),
        active_set: Some(contact),
    })
}

fn feasibility(u: &[f64], phi: &[f64]) -> f64 {
    u.iter().zip(phi).fold(0.0, |m, (u, p)| m.max(p - u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inactive_obstacle_gives_harmonic_fill() {
        let spec = GridSpec::square(0.0, 1.0, 33).unwrap();
        let phi = GridFunction::constant(&spec, -1.0);
        let p = ObstacleProblem::new(phi, DirichletBC::zero(&spec)).unwrap();
        let params = SolverParams::new(10.0, 5.0).with_tol(1e-9);
        let rep = solve_linear_obstacle(&p, &params, None).unwrap();
        assert!(rep.converged);
        assert!(rep.u.max_abs() < 1e-7, "{}", rep.u.max_abs());
    }

    #[test]
    fn infeasible_boundary_is_rejected() {
        let spec = GridSpec::interval(0.0, 1.0, 11).unwrap();
        let phi = GridFunction::constant(&spec, 1.0);
        assert!(matches!(
            ObstacleProblem::new(phi, DirichletBC::zero(&spec)),
            Err(Error::InfeasibleBoundary(_))
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let spec = GridSpec::interval(0.0, 1.0, 11).unwrap();
        let p = ObstacleProblem::new(GridFunction::constant(&spec, -1.0), DirichletBC::zero(&spec)).unwrap();
        for params in [
            SolverParams::new(0.0, 1.0),
            SolverParams::new(1.0, -1.0),
            SolverParams::new(1.0, 1.0).with_tol(0.0),
            SolverParams::new(1.0, 1.0).with_max_outer(0),
        ] {
            assert!(matches!(
                solve_linear_obstacle(&p, &params, None),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn kkt_contact_everywhere() {
        // strictly superharmonic obstacle with u = φ: feasible and complementary
        let spec = GridSpec::square(-1.0, 1.0, 33).unwrap();
        let phi = GridFunction::from_fn(&spec, |p| -(p[0] * p[0] + p[1] * p[1]));
        let p = ObstacleProblem::new(phi.clone(), DirichletBC::from_field(&phi)).unwrap();
        let r = kkt_residuals(&p, &phi).unwrap();
        assert_eq!(r.feasibility, 0.0);
        assert!(r.subharmonicity == 0.0);
        assert!(r.complementarity < 1e-9);
    }

    #[test]
    fn kkt_feasibility_detects_dip() {
        let spec = GridSpec::interval(0.0, 1.0, 11).unwrap();
        let phi = GridFunction::constant(&spec, -1.0);
        let p = ObstacleProblem::new(phi.clone(), DirichletBC::constant(&spec, 0.0)).unwrap();
        let mut u = GridFunction::zeros(&spec);
        let delta = 0.25;
        u.values_mut()[4] = -1.0 - delta;
        let r = kkt_residuals(&p, &u).unwrap();
        assert!((r.feasibility - delta).abs() < 1e-15);
    }

    #[test]
    fn diverging_configuration_reports_history() {
        let spec = GridSpec::interval(0.0, 1.0, 11).unwrap();
        let phi = GridFunction::from_fn(&spec, |p| if p[0] > 0.3 && p[0] < 0.7 { 1.0 } else { -1.0 });
        let mut p = ObstacleProblem::new(phi, DirichletBC::zero(&spec)).unwrap();
        p.source = Some(GridFunction::constant(&spec, f64::MAX));
        let err = solve_linear_obstacle(&p, &SolverParams::new(1.0, 1.0), None).unwrap_err();
        match err {
            Error::Diverged { history, .. } => assert!(!history.is_empty()),
            Error::NonFinite(_) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
