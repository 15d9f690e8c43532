//! Hele-Shaw flow at a fixed time through an obstacle reformulation.
//!
//! The time-integrated pressure `u` of fluid injected through `K` into an
//! initial region `Ω₀` becomes, after subtracting the potential
//! `φ₀ = -|x|²/(2d) - (-Δ)⁻¹χ_{Ω₀}`, the least superharmonic majorant
//! `w = u + φ₀` of the lifted obstacle `φ = φ₀ + tχ_K`. On `K` the majorant
//! is also held below `φ`, so `u = t` there. Both constraints are enforced by
//! exact penalties and split Bregman:
//!
//! ```text
//! ((λ₁ + λ₂χ_K) I - Δ_h) w⁺ = λ₁(φ - v₁ - b₁) + λ₂χ_K(φ + v₂ + b₂)
//! v₁⁺ = S₊(φ - w⁺ - b₁, γ₁/λ₁)            b₁⁺ = b₁ + v₁⁺ - φ + w⁺
//! v₂⁺ = S₊(w⁺ - φ - b₂, γ₂/λ₂)  on K      b₂⁺ = b₂ + v₂⁺ - w⁺ + φ
//! ```
//!
//! The box boundary carries `w = φ₀`, i.e. no fluid.

use std::time::Instant;

use crate::contour::{area_radius, contour, FreeBoundary};
use crate::elliptic::{screened_poisson_solve, CgSettings, ScreenedSolver, Shift};
use crate::error::{Error, Result};
use crate::grid::{edge_energy, linf_slices, DirichletBC, GridFunction, GridSpec};
use crate::penalty::{mu_lower_bound, shrink_plus, DEFAULT_MARGIN};
use crate::report::{HistoryEntry, SolveReport};

/// Injection slot `K`, initial fluid `Ω₀ ⊇ K`, and time `t`.
#[derive(Debug, Clone)]
pub struct HeleShawSetup {
    pub spec: GridSpec,
    pub k_mask: GridFunction,
    pub omega0_mask: GridFunction,
    pub t: f64,
}

impl HeleShawSetup {
    pub fn new(k_mask: GridFunction, omega0_mask: GridFunction, t: f64) -> Result<Self> {
        let s = HeleShawSetup {
            spec: k_mask.spec().clone(),
            k_mask,
            omega0_mask,
            t,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = &self.spec;
        spec.ensure_same(self.omega0_mask.spec(), "initial fluid mask")?;
        if spec.dim() != 2 {
            return Err(Error::InvalidGrid("Hele-Shaw setups are two-dimensional".into()));
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time must be non-negative, got {}", self.t)));
        }
        for (name, m) in [("K", &self.k_mask), ("Ω₀", &self.omega0_mask)] {
            if m.values().iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidParameter(format!("{name} mask must be 0/1 valued")));
            }
        }
        if (0..spec.len()).any(|k| self.k_mask.get(k) > self.omega0_mask.get(k)) {
            return Err(Error::InvalidParameter("K must lie inside Ω₀".into()));
        }
        if spec.boundary_indices().iter().any(|&k| self.omega0_mask.get(k) != 0.0) {
            return Err(Error::InvalidParameter("Ω₀ must lie strictly inside the box".into()));
        }
        Ok(())
    }
}

/// Penalty weights `γ₁, γ₂`, splitting weights `λ₁, λ₂` and loop controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublePenaltyParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub cg: CgSettings,
    /// Also require both constraints to hold to `10·tol` before stopping.
    pub feasibility_guard: bool,
}

impl Default for DoublePenaltyParams {
    /// `γ₁ = γ₂ = 1.5·10⁴`, `λ₁ = λ₂ = 150`.
    fn default() -> Self {
        DoublePenaltyParams {
            gamma1: 1.5e4,
            gamma2: 1.5e4,
            lambda1: 150.0,
            lambda2: 150.0,
            tol: 1e-6,
            max_outer: 20_000,
            cg: CgSettings::default(),
            feasibility_guard: true,
        }
    }
}

impl DoublePenaltyParams {
    /// Weights from the discrete bound on `-Δ_h φ` for the lifted obstacle,
    /// which grows like `t/h²` across `∂K`; `λ = γ/100`.
    pub fn auto(setup: &HeleShawSetup) -> Result<Self> {
        let (phi, phi0) = build_hs_obstacle(setup)?;
        let bound = mu_lower_bound(&phi, &DirichletBC::from_field(&phi0))?;
        let gamma = (DEFAULT_MARGIN * bound.mu_min).max(1.0);
        Ok(DoublePenaltyParams {
            gamma1: gamma,
            gamma2: gamma,
            lambda1: gamma / 100.0,
            lambda2: gamma / 100.0,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("tol", self.tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter("max_outer must be at least 1".into()));
        }
        self.cg.validate()
    }
}

/// `φ = -γ|x|²/(2d) - (-Δ)⁻¹f`, the inverse taken on the box with zero
/// boundary values.
pub fn transform_fbp_to_obstacle(f: &GridFunction, gamma: f64) -> Result<GridFunction> {
    let spec = f.spec();
    f.check_finite("source")?;
    if spec.boundary_indices().iter().any(|&k| f.get(k) != 0.0) {
        log::warn!("source touches the box boundary; the potential depends on the box");
    }
    let pot = screened_poisson_solve(
        f,
        &DirichletBC::zero(spec),
        0.0,
        &GridFunction::zeros(spec),
        &CgSettings::accurate(),
    )?;
    let d = spec.dim() as f64;
    let mut phi = GridFunction::from_fn(spec, |p| -gamma * p.iter().map(|x| x * x).sum::<f64>() / (2.0 * d));
    for (a, b) in phi.values_mut().iter_mut().zip(pot.u.values()) {
        *a -= b;
    }
    Ok(phi)
}

/// Returns `(φ, φ₀)` with `φ₀ = -|x|²/(2d) - (-Δ)⁻¹χ_{Ω₀}` and
/// `φ = φ₀ + tχ_K`.
pub fn build_hs_obstacle(s: &HeleShawSetup) -> Result<(GridFunction, GridFunction)> {
    let phi0 = transform_fbp_to_obstacle(&s.omega0_mask, 1.0)?;
    let phi = phi0.zip_map(&s.k_mask, |p, k| p + s.t * k)?;
    Ok((phi, phi0))
}

/// Solver output: the majorant `w` in `report.u`, plus the physical fields.
#[derive(Debug, Clone)]
pub struct HeleShawSolution {
    pub report: SolveReport,
    pub phi0: GridFunction,
    pub phi: GridFunction,
    /// `w - φ₀`, the time-integrated pressure.
    pub u_phys: GridFunction,
    /// `max (w - φ)₊` over `K`.
    pub slot_violation: f64,
}

impl HeleShawSolution {
    /// `{u_phys > eps}` as a 0/1 mask.
    pub fn fluid_mask(&self, eps: f64) -> GridFunction {
        self.u_phys.map(|u| if u > eps { 1.0 } else { 0.0 })
    }

    pub fn free_boundary(&self, eps: f64) -> Result<FreeBoundary> {
        extract_free_boundary(&self.u_phys, eps)
    }

    /// Radius of the disc with the same area as `{u_phys > eps}`.
    pub fn area_radius(&self, eps: f64) -> f64 {
        area_radius(&self.fluid_mask(eps))
    }
}

/// Contour `u_phys = eps`.
pub fn extract_free_boundary(u_phys: &GridFunction, eps: f64) -> Result<FreeBoundary> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    Ok(contour(u_phys, eps))
}

/// Runs the double-penalty split-Bregman loop from `w⁰ = φ`.
pub fn solve_hele_shaw(s: &HeleShawSetup, params: &DoublePenaltyParams) -> Result<HeleShawSolution> {
    let start = Instant::now();
    params.validate()?;
    s.validate()?;
    let spec = &s.spec;
    let n = spec.len();
    let (phi_f, phi0) = build_hs_obstacle(s)?;
    let bc = DirichletBC::from_field(&phi0);
    let phi = phi_f.values();
    let in_k: Vec<bool> = s.k_mask.values().iter().map(|&m| m > 0.5).collect();

    let (l1, l2) = (params.lambda1, params.lambda2);
    let (c1, c2) = (params.gamma1 / l1, params.gamma2 / l2);
    let shift: Vec<f64> = in_k.iter().map(|&k| if k { l1 + l2 } else { l1 }).collect();
    let mut solver = ScreenedSolver::new(spec, Shift::Field(shift))?;

    let mut w = phi_f.clone();
    bc.apply(&mut w)?;
    let mut v1 = vec![0.0; n];
    let mut b1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    let mut b2 = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut w_prev = w.values().to_vec();
    let mut history = Vec::new();
    let mut converged = false;
    let mut inner_iters = 0;
    for iter in 1..=params.max_outer {
        spec.for_each_interior(|k| {
            rhs[k] = l1 * (phi[k] - v1[k] - b1[k]);
            if in_k[k] {
                rhs[k] += l2 * (phi[k] + v2[k] + b2[k]);
            }
        });
        w_prev.copy_from_slice(w.values());
        inner_iters += solver.solve(&rhs, w.values_mut(), &params.cg).iterations;

        let wv = w.values();
        spec.for_each_interior(|k| {
            let a = shrink_plus(phi[k] - wv[k] - b1[k], c1);
            v1[k] = a;
            b1[k] += a - phi[k] + wv[k];
            if in_k[k] {
                let c = shrink_plus(wv[k] - phi[k] - b2[k], c2);
                v2[k] = c;
                b2[k] += c - wv[k] + phi[k];
            }
        });

        let diff = linf_slices(wv, &w_prev);
        let energy = double_penalty_energy(spec, wv, phi, &in_k, params);
        history.push(HistoryEntry { iter, diff, energy });
        if !diff.is_finite() || !energy.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                reason: "non-finite iterate".into(),
                history,
            });
        }
        if diff <= params.tol {
            let (below, above) = violations(wv, phi, &in_k);
            if !params.feasibility_guard || below.max(above) <= 10.0 * params.tol {
                converged = true;
                break;
            }
        }
    }

    let (below, above) = violations(w.values(), phi, &in_k);
    let mut contact = GridFunction::zeros(spec);
    spec.for_each_interior(|k| {
        if v1[k] == 0.0 {
            contact.values_mut()[k] = 1.0;
        }
    });
    let u_phys = w.zip_map(&phi0, |a, b| a - b)?;
    let report = SolveReport {
        outer_iters: history.len(),
        u: w,
        history,
        converged,
        feasibility_violation: below,
        complementarity: 0.0,
        inner_iters,
        elapsed: start.elapsed(),
        active_set: Some(contact),
    };
    let mut sol = HeleShawSolution {
        report,
        phi0,
        phi: phi_f,
        u_phys,
        slot_violation: above,
    };
    sol.report.complementarity = harmonic_residual(&sol, 10.0 * params.tol, &in_k);
    Ok(sol)
}

/// `(max (φ - w)₊, max_K (w - φ)₊)`.
fn violations(w: &[f64], phi: &[f64], in_k: &[bool]) -> (f64, f64) {
    let mut below: f64 = 0.0;
    let mut above: f64 = 0.0;
    for k in 0..w.len() {
        below = below.max(phi[k] - w[k]);
        if in_k[k] {
            above = above.max(w[k] - phi[k]);
        }
    }
    (below, above)
}

/// `max |Δ_h w|` over interior nodes off `K` with `w - φ > eps` and all
/// neighbours interior.
fn harmonic_residual(sol: &HeleShawSolution, eps: f64, in_k: &[bool]) -> f64 {
    let spec = sol.phi.spec();
    let w = sol.report.u.values();
    let phi = sol.phi.values();
    let mut out = vec![0.0; spec.len()];
    crate::grid::laplacian_into(spec, w, &mut out);
    let mut worst: f64 = 0.0;
    spec.for_each_interior(|k| {
        if !in_k[k] && w[k] - phi[k] > eps {
            worst = worst.max(out[k].abs());
        }
    });
    worst
}

fn double_penalty_energy(spec: &GridSpec, w: &[f64], phi: &[f64], in_k: &[bool], p: &DoublePenaltyParams) -> f64 {
    let mut sum = edge_energy(spec, w);
    spec.for_each_interior(|k| {
        sum += p.gamma1 * (phi[k] - w[k]).max(0.0);
        if in_k[k] {
            sum += p.gamma2 * (w[k] - phi[k]).max(0.0);
        }
    });
    spec.cell_volume() * sum
}

/// Radius of the fluid disc at time `t` for a circular slot of radius `r_k`
/// inside a circular initial region of radius `r0`.
///
/// The radial profile is harmonic on `[r_k, r0]` with `u(r_k) = t`, solves
/// `Δu = 1` on `[r0, R]` with `u(R) = u'(R) = 0`, and is C¹ at `r0`.
/// Eliminating the constants leaves
///
/// ```text
/// F(R) = t + (r0² - R²)/2 · ln(r0/r_k) - (r0² - R²)/4 - R²/2 · ln(R/r0) = 0,
/// ```
///
/// with `F(r0) = t` and `F'(R) = -R ln(R/r_k) < 0`; the root is bracketed by
/// doubling and refined by bisection to `1e-10`.
pub fn exact_circle_radius(t: f64, r_k: f64, r0: f64) -> Result<f64> {
    if !(r_k > 0.0 && r_k < r0 && r0.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < r_k < r0, got r_k={r_k}, r0={r0}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(r0);
    }
    let f = |r: f64| {
        let d = r0 * r0 - r * r;
        t + 0.5 * d * (r0 / r_k).ln() - 0.25 * d - 0.5 * r * r * (r / r0).ln()
    };
    let mut lo = r0;
    let mut hi = 2.0 * r0;
    let mut doublings = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NoRoot(format!("no radius for t={t}")));
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
