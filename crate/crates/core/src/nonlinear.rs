//! Minimal-surface obstacle problem
//!
//! ```text
//! min_u  Σ √(1 + |∇_h u|²) - f u + μ (φ - u)₊
//! ```
//!
//! The outer loop is the split-Bregman loop of the linear solver. The
//! `u`-substep is no longer a linear solve; it minimizes the strongly convex
//! functional `Σ √(1+|∇_h u|²) - f u + ½λ|u - (φ - v - b)|²` with Nesterov's
//! accelerated gradient method.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{linf_slices, DirichletBC, GridFunction, GridSpec};
use crate::obstacle::{kkt_residuals, ObstacleProblem, SolverParams};
use crate::penalty::shrink_plus;
use crate::report::{HistoryEntry, SolveReport};

/// Consecutive energy increases after which the inner loop is declared
/// divergent.
pub const DIVERGENCE_WINDOW: usize = 50;

/// Relative energy rise below which a step does not count as an increase.
const ENERGY_SLACK: f64 = 1e-12;

/// Step size, Lipschitz estimate and stopping rule of the inner loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NesterovSettings {
    /// Pseudo-time step, at most `1/lipschitz`.
    pub tau: f64,
    /// Lipschitz estimate of the gradient of the inner objective.
    pub lipschitz: f64,
    /// Inner stop: `‖U^k - U^{k-1}‖_∞ ≤ inner_tol`.
    pub inner_tol: f64,
    pub max_inner: usize,
}

impl NesterovSettings {
    /// `L = λ + 4d/h²` bounds the surface gradient's Lipschitz constant;
    /// `τ = 1/L`, `inner_tol = tol/10`.
    pub fn for_grid(spec: &GridSpec, lambda: f64, tol: f64) -> Self {
        let h = spec.h();
        let lipschitz = lambda + 4.0 * spec.dim() as f64 / (h * h);
        NesterovSettings {
            tau: 1.0 / lipschitz,
            lipschitz,
            inner_tol: tol / 10.0,
            max_inner: 20_000,
        }
    }

    /// Explicit step with `L = 1/τ`.
    pub fn with_step(tau: f64, tol: f64) -> Self {
        NesterovSettings {
            tau,
            lipschitz: 1.0 / tau,
            inner_tol: tol / 10.0,
            max_inner: 100_000,
        }
    }

    /// Momentum coefficient `(√L - √λ)/(√L + √λ)` for strong convexity `λ`.
    pub fn momentum(&self, strong_convexity: f64) -> f64 {
        let (sl, sm) = (self.lipschitz.sqrt(), strong_convexity.sqrt());
        (sl - sm) / (sl + sm)
    }

    pub fn validate(&self, strong_convexity: f64) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.tau) || !ok(self.lipschitz) || !ok(self.inner_tol) {
            return Err(Error::InvalidParameter(
                "tau, lipschitz and inner_tol must be positive".into(),
            ));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidParameter("max_inner must be at least 1".into()));
        }
        if self.tau * self.lipschitz > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "tau = {} exceeds 1/L = {}",
                self.tau,
                1.0 / self.lipschitz
            )));
        }
        if !(strong_convexity > 0.0 && strong_convexity <= self.lipschitz) {
            return Err(Error::InvalidParameter(format!(
                "strong convexity {strong_convexity} must lie in (0, L]"
            )));
        }
        Ok(())
    }
}

/// Outcome of one accelerated minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NesterovStats {
    pub iterations: usize,
    pub last_diff: f64,
    pub converged: bool,
}

/// Accelerated gradient descent for a `strong_convexity`-strongly convex
/// objective:
///
/// ```text
/// w = U^k + β (U^k - U^{k-1}),   U^{k+1} = w - τ ∇E(w)
/// ```
///
/// `grad` writes `∇E` into its second argument. Entries it leaves at zero
/// stay fixed, which is how Dirichlet nodes are held. `energy` is watched for
/// divergence only. The energy of an accelerated method is not monotone, so
/// a step counts as an increase only when it rises and also exceeds the
/// starting energy. [`DIVERGENCE_WINDOW`] consecutive increases, or a
/// non-finite value, abort with [`Error::Diverged`].
pub fn nesterov_minimize(
    mut grad: impl FnMut(&[f64], &mut [f64]),
    mut energy: impl FnMut(&[f64]) -> f64,
    x: &mut [f64],
    settings: &NesterovSettings,
    strong_convexity: f64,
) -> Result<NesterovStats> {
    settings.validate(strong_convexity)?;
    let beta = settings.momentum(strong_convexity);
    let n = x.len();
    let mut prev = x.to_vec();
    let mut w = vec![0.0; n];
    let mut g = vec![0.0; n];
    let start_energy = energy(x);
    let mut last_energy = start_energy;
    let mut rising = 0;
    let mut history = Vec::new();
    let mut last_diff = f64::INFINITY;

    for k in 1..=settings.max_inner {
        for i in 0..n {
            w[i] = x[i] + beta * (x[i] - prev[i]);
        }
        grad(&w, &mut g);
        let mut diff: f64 = 0.0;
        for i in 0..n {
            let next = w[i] - settings.tau * g[i];
            prev[i] = x[i];
            diff = diff.max((next - x[i]).abs());
            x[i] = next;
        }
        last_diff = diff;
        let e = energy(x);
        if !e.is_finite() || !diff.is_finite() {
            history.push(HistoryEntry { iter: k, diff, energy: e });
            return Err(Error::Diverged {
                iteration: k,
                reason: "non-finite inner iterate".into(),
                history,
            });
        }
        let slack = ENERGY_SLACK * last_energy.abs().max(1.0);
        if e > last_energy + slack && e > start_energy + slack {
            rising += 1;
        } else {
            rising = 0;
        }
        last_energy = e;
        history.push(HistoryEntry { iter: k, diff, energy: e });
        if history.len() > DIVERGENCE_WINDOW {
            history.remove(0);
        }
        if rising >= DIVERGENCE_WINDOW {
            return Err(Error::Diverged {
                iteration: k,
                reason: format!("inner energy increased {DIVERGENCE_WINDOW} times in a row"),
                history,
            });
        }
        if diff <= settings.inner_tol {
            return Ok(NesterovStats {
                iterations: k,
                last_diff: diff,
                converged: true,
            });
        }
    }
    Ok(NesterovStats {
        iterations: settings.max_inner,
        last_diff,
        converged: false,
    })
}

/// `Σ_j √(1 + s_j)` where `s_j` sums the squared forward differences
/// available at node `j`. Multiply by `h^d` for the surface area.
pub(crate) fn surface_sum(spec: &GridSpec, u: &[f64]) -> f64 {
    let inv_h = 1.0 / spec.h();
    if spec.dim() == 1 {
        let edges: f64 = u
            .windows(2)
            .map(|w| {
                let d = (w[1] - w[0]) * inv_h;
                (1.0 + d * d).sqrt()
            })
            .sum();
        return edges + 1.0;
    }
    let (nx, ny) = (spec.n(0), spec.n(1));
    let mut sum = 0.0;
    for i in 0..nx {
        let row = i * ny;
        for j in 0..ny {
            let k = row + j;
            let dx = if i + 1 < nx { (u[k + ny] - u[k]) * inv_h } else { 0.0 };
            let dy = if j + 1 < ny { (u[k + 1] - u[k]) * inv_h } else { 0.0 };
            sum += (1.0 + dx * dx + dy * dy).sqrt();
        }
    }
    sum
}

/// Gradient of [`surface_sum`], written on interior nodes only.
fn surface_gradient_into(spec: &GridSpec, u: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / spec.h();
    out.fill(0.0);
    if spec.dim() == 1 {
        let n = u.len();
        for k in 0..n - 1 {
            let d = (u[k + 1] - u[k]) * inv_h;
            let flux = d * inv_h / (1.0 + d * d).sqrt();
            out[k] -= flux;
            out[k + 1] += flux;
        }
        out[0] = 0.0;
        out[n - 1] = 0.0;
        return;
    }
    let (nx, ny) = (spec.n(0), spec.n(1));
    for i in 0..nx {
        let row = i * ny;
        for j in 0..ny {
            let k = row + j;
            let has_x = i + 1 < nx;
            let has_y = j + 1 < ny;
            let dx = if has_x { (u[k + ny] - u[k]) * inv_h } else { 0.0 };
            let dy = if has_y { (u[k + 1] - u[k]) * inv_h } else { 0.0 };
            let q = inv_h / (1.0 + dx * dx + dy * dy).sqrt();
            if has_x {
                out[k] -= q * dx;
                out[k + ny] += q * dx;
            }
            if has_y {
                out[k] -= q * dy;
                out[k + 1] += q * dy;
            }
        }
    }
    for i in 0..nx {
        out[i * ny] = 0.0;
        out[i * ny + ny - 1] = 0.0;
    }
    out[..ny].fill(0.0);
    out[(nx - 1) * ny..].fill(0.0);
}

/// Discrete first variation `-div_h(∇_h w / √(1 + |∇_h w|²))` of the surface
/// area, zero on Dirichlet nodes. Boundary values of `w` are overwritten by
/// `bc` before differencing.
pub fn minimal_surface_gradient(w: &GridFunction, bc: &DirichletBC) -> Result<GridFunction> {
    let spec = w.spec();
    spec.ensure_same(bc.spec(), "boundary data")?;
    let mut vals = w.values().to_vec();
    bc.apply_slice(&mut vals);
    let mut out = vec![0.0; spec.len()];
    surface_gradient_into(spec, &vals, &mut out);
    GridFunction::from_values(spec, out)
}

/// Discrete surface area `h^d Σ √(1 + |∇_h w|²)`.
pub fn surface_energy(w: &GridFunction) -> f64 {
    let spec = w.spec();
    spec.cell_volume() * surface_sum(spec, w.values())
}

/// Split-Bregman loop with a Nesterov inner solve for the `u`-substep.
///
/// `params.cg` is unused. Starts from `u⁰ = φ` with Dirichlet data imposed.
pub fn solve_nonlinear_obstacle(
    p: &ObstacleProblem,
    params: &SolverParams,
    nes: &NesterovSettings,
) -> Result<SolveReport> {
    let start = Instant::now();
    params.validate()?;
    p.validate()?;
    nes.validate(params.lambda)?;
    let spec = &p.spec;
    let n = spec.len();
    let mut u = p.phi.clone();
    p.bc.apply(&mut u)?;

    let phi = p.phi.values();
    let f = p.source_values();
    let lambda = params.lambda;
    let threshold = params.mu / lambda;
    let mut v = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut target = vec![0.0; n];
    let mut interior = vec![false; n];
    spec.for_each_interior(|k| interior[k] = true);

    let mut u_prev = u.values().to_vec();
    let mut history = Vec::new();
    let mut converged = false;
    let mut inner_iters = 0;
    for iter in 1..=params.max_outer {
        spec.for_each_interior(|k| target[k] = phi[k] - v[k] - b[k]);
        u_prev.copy_from_slice(u.values());

        let grad = |w: &[f64], g: &mut [f64]| {
            surface_gradient_into(spec, w, g);
            for k in 0..n {
                if interior[k] {
                    g[k] += lambda * (w[k] - target[k]) - f[k];
                }
            }
        };
        let energy = |w: &[f64]| {
            let mut e = surface_sum(spec, w);
            for k in 0..n {
                if interior[k] {
                    let r = w[k] - target[k];
                    e += 0.5 * lambda * r * r - f[k] * w[k];
                }
            }
            e
        };
        let stats = match nesterov_minimize(grad, energy, u.values_mut(), nes, lambda) {
            Ok(s) => s,
            Err(Error::Diverged { iteration, reason, .. }) => {
                return Err(Error::Diverged {
                    iteration: iter,
                    reason: format!("inner step {iteration}: {reason}"),
                    history,
                })
            }
            Err(e) => return Err(e),
        };
        inner_iters += stats.iterations;

        let uv = u.values();
        spec.for_each_interior(|k| {
            let vk = shrink_plus(phi[k] - uv[k] - b[k], threshold);
            v[k] = vk;
            b[k] += uv[k] + vk - phi[k];
        });

        let diff = linf_slices(uv, &u_prev);
        let energy = penalized_surface_energy(spec, uv, phi, &f, params.mu);
        history.push(HistoryEntry { iter, diff, energy });
        if !diff.is_finite() || !energy.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                reason: "non-finite iterate".into(),
                history,
            });
        }
        let feasible = || uv.iter().zip(phi).all(|(u, p)| p - u <= 10.0 * params.tol);
        if diff <= params.tol && (!params.feasibility_guard || feasible()) {
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

/// Largest undivided second difference `|u[k+1] - 2u[k] + u[k-1]|` over 1D
/// interior nodes whose whole stencil lies off the contact set. Zero on an
/// exactly piecewise-affine free part.
pub fn max_free_second_difference(u: &GridFunction, contact: &GridFunction) -> Result<f64> {
    let spec = u.spec();
    spec.ensure_same(contact.spec(), "contact mask")?;
    if spec.dim() != 1 {
        return Err(Error::InvalidGrid("second differences are taken on 1D grids".into()));
    }
    let (v, c) = (u.values(), contact.values());
    let mut worst: f64 = 0.0;
    for k in 1..v.len() - 1 {
        if c[k - 1] == 0.0 && c[k] == 0.0 && c[k + 1] == 0.0 {
            worst = worst.max((v[k + 1] - 2.0 * v[k] + v[k - 1]).abs());
        }
    }
    Ok(worst)
}

fn penalized_surface_energy(spec: &GridSpec, u: &[f64], phi: &[f64], f: &[f64], mu: f64) -> f64 {
    let mut sum = surface_sum(spec, u);
    spec.for_each_interior(|k| sum += mu * (phi[k] - u[k]).max(0.0) - f[k] * u[k]);
    spec.cell_volume() * sum
}
