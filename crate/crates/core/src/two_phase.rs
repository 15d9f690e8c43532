//! Two-phase membrane problem
//!
//! ```text
//! min_u  Σ ½|∇_h u|² - f u + μ₁ u₊ + μ₂ (-u)₊
//! ```
//!
//! Writing `μ₁u₊ + μ₂(-u)₊ = α u + β|u|` with `α = (μ₁ - μ₂)/2` and
//! `β = (μ₁ + μ₂)/2` leaves a single absolute value to split off. The source
//! is folded into `α`. Each outer iteration:
//!
//! ```text
//! (λI - Δ_h) u⁺ = λ(v - b) - α
//! v⁺ = S(u⁺ + b, β/λ)
//! b⁺ = b + u⁺ - v⁺
//! ```

use std::time::Instant;

use crate::contour::{contour, FreeBoundary};
use crate::elliptic::{ScreenedSolver, Shift};
use crate::error::{Error, Result};
use crate::grid::{edge_energy, laplacian, linf_diff, linf_slices, DirichletBC, GridFunction, GridSpec};
use crate::obstacle::{solve_linear_obstacle, ObstacleProblem, SolverParams};
use crate::penalty::shrink;
use crate::report::{HistoryEntry, SolveReport};

/// Weights `μ₁` (positive phase) and `μ₂` (negative phase), Dirichlet data
/// and an optional source.
#[derive(Debug, Clone)]
pub struct TwoPhaseProblem {
    pub spec: GridSpec,
    pub mu1: GridFunction,
    pub mu2: GridFunction,
    pub bc: DirichletBC,
    pub source: Option<GridFunction>,
}

impl TwoPhaseProblem {
    pub fn new(mu1: GridFunction, mu2: GridFunction, bc: DirichletBC) -> Result<Self> {
        let p = TwoPhaseProblem {
            spec: mu1.spec().clone(),
            mu1,
            mu2,
            bc,
            source: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Constant weights.
    pub fn uniform(spec: &GridSpec, mu1: f64, mu2: f64, bc: DirichletBC) -> Result<Self> {
        Self::new(GridFunction::constant(spec, mu1), GridFunction::constant(spec, mu2), bc)
    }

    pub fn with_source(mut self, f: GridFunction) -> Result<Self> {
        self.source = Some(f);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.ensure_same(self.mu2.spec(), "mu2")?;
        self.spec.ensure_same(self.bc.spec(), "boundary data")?;
        self.mu1.check_finite("mu1")?;
        self.mu2.check_finite("mu2")?;
        self.bc.check_finite()?;
        if let Some(f) = &self.source {
            self.spec.ensure_same(f.spec(), "source")?;
            f.check_finite("source")?;
        }
        for (name, m) in [("mu1", &self.mu1), ("mu2", &self.mu2)] {
            if m.min() <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive at every node")));
            }
        }
        Ok(())
    }

    fn source_values(&self) -> Vec<f64> {
        match &self.source {
            Some(f) => f.values().to_vec(),
            None => vec![0.0; self.spec.len()],
        }
    }
}

/// Penalized objective `h^d Σ [½|∇_h u|² - f u + μ₁u₊ + μ₂(-u)₊]`.
pub fn two_phase_energy(p: &TwoPhaseProblem, u: &GridFunction) -> f64 {
    energy_slices(&p.spec, u.values(), p.mu1.values(), p.mu2.values(), &p.source_values())
}

fn energy_slices(spec: &GridSpec, u: &[f64], mu1: &[f64], mu2: &[f64], f: &[f64]) -> f64 {
    let mut sum = edge_energy(spec, u);
    spec.for_each_interior(|k| {
        sum += mu1[k] * u[k].max(0.0) + mu2[k] * (-u[k]).max(0.0) - f[k] * u[k];
    });
    spec.cell_volume() * sum
}

/// Largest violation of the discrete Euler-Lagrange inclusion
/// `Δ_h u + f ∈ μ₁χ{u>0} - μ₂χ{u<0}` (the interval `[-μ₂, μ₁]` on the zero
/// set), with `|u| ≤ eps` counted as zero.
pub fn euler_lagrange_residual(p: &TwoPhaseProblem, u: &GridFunction, eps: f64) -> Result<f64> {
    let lap = laplacian(u, &p.bc)?;
    let f = p.source_values();
    let (mu1, mu2) = (p.mu1.values(), p.mu2.values());
    let mut worst: f64 = 0.0;
    p.spec.for_each_interior(|k| {
        let s = lap.get(k) + f[k];
        let uk = u.get(k);
        let r = if uk > eps {
            (s - mu1[k]).abs()
        } else if uk < -eps {
            (s + mu2[k]).abs()
        } else {
            (s - mu1[k]).max(-mu2[k] - s).max(0.0)
        };
        worst = worst.max(r);
    });
    Ok(worst)
}

/// Split-Bregman loop for the two-phase problem, started from `u⁰ = 0` in the
/// interior. `params.mu` and `params.feasibility_guard` are not used.
pub fn solve_two_phase(p: &TwoPhaseProblem, params: &SolverParams) -> Result<SolveReport> {
    let start = Instant::now();
    params.validate()?;
    p.validate()?;
    let spec = &p.spec;
    let n = spec.len();
    let mut u = GridFunction::zeros(spec);
    p.bc.apply(&mut u)?;

    let f = p.source_values();
    let (mu1, mu2) = (p.mu1.values(), p.mu2.values());
    let alpha: Vec<f64> = (0..n).map(|k| 0.5 * (mu1[k] - mu2[k]) - f[k]).collect();
    let thresh: Vec<f64> = (0..n).map(|k| 0.5 * (mu1[k] + mu2[k]) / params.lambda).collect();
    let lambda = params.lambda;

    let mut v = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut u_prev = u.values().to_vec();
    let mut solver = ScreenedSolver::new(spec, Shift::Uniform(lambda))?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut inner_iters = 0;
    for iter in 1..=params.max_outer {
        spec.for_each_interior(|k| rhs[k] = lambda * (v[k] - b[k]) - alpha[k]);
        u_prev.copy_from_slice(u.values());
        inner_iters += solver.solve(&rhs, u.values_mut(), &params.cg).iterations;

        let uv = u.values();
        spec.for_each_interior(|k| {
            let vk = shrink(uv[k] + b[k], thresh[k]);
            v[k] = vk;
            b[k] += uv[k] - vk;
        });

        let diff = linf_slices(uv, &u_prev);
        let energy = energy_slices(spec, uv, mu1, mu2, &f);
        history.push(HistoryEntry { iter, diff, energy });
        if !diff.is_finite() || !energy.is_finite() {
            return Err(Error::Diverged {
                iteration: iter,
                reason: "non-finite iterate".into(),
                history,
            });
        }
        if diff <= params.tol {
            converged = true;
            break;
        }
    }

    let mut zero = GridFunction::zeros(spec);
    spec.for_each_interior(|k| {
        if v[k] == 0.0 {
            zero.values_mut()[k] = 1.0;
        }
    });
    let complementarity = euler_lagrange_residual(p, &u, 10.0 * params.tol)?;
    Ok(SolveReport {
        outer_iters: history.len(),
        u,
        history,
        converged,
        feasibility_violation: 0.0,
        complementarity,
        inner_iters,
        elapsed: start.elapsed(),
        active_set: Some(zero),
    })
}

/// Sign partition of a two-phase solution.
#[derive(Debug, Clone)]
pub struct ZeroStructure {
    /// `u > eps`
    pub plus: GridFunction,
    /// `u < -eps`
    pub minus: GridFunction,
    /// `|u| ≤ eps`
    pub zero: GridFunction,
    /// Level sets `u = eps` and `u = -eps`, in that order.
    pub interfaces: Vec<FreeBoundary>,
    pub eps: f64,
}

impl ZeroStructure {
    pub fn zero_count(&self) -> usize {
        self.zero.values().iter().filter(|&&v| v > 0.5).count()
    }

    /// Extent `[min x, max x]` of the zero set in 1D, `None` if empty.
    pub fn zero_interval(&self) -> Option<(f64, f64)> {
        let spec = self.zero.spec();
        let xs: Vec<f64> = (0..spec.len())
            .filter(|&k| self.zero.get(k) > 0.5)
            .map(|k| spec.point(k)[0])
            .collect();
        Some((*xs.first()?, *xs.last()?))
    }

    /// Nodewise class: `1` plus, `-1` minus, `0` zero.
    fn class(&self, k: usize) -> i8 {
        if self.plus.get(k) > 0.5 {
            1
        } else if self.minus.get(k) > 0.5 {
            -1
        } else {
            0
        }
    }
}

/// Classifies nodes by sign with threshold `eps` and extracts the two
/// interface families.
pub fn extract_zero_structure(u: &GridFunction, eps: f64) -> Result<ZeroStructure> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let ind = |pred: &dyn Fn(f64) -> bool| u.map(|x| if pred(x) { 1.0 } else { 0.0 });
    Ok(ZeroStructure {
        plus: ind(&|x| x > eps),
        minus: ind(&|x| x < -eps),
        zero: ind(&|x| x.abs() <= eps),
        interfaces: vec![contour(u, eps), contour(&u.map(|x| -x), eps)],
        eps,
    })
}

/// Points where the positive, negative and zero phases meet.
///
/// Every grid edge joining two different classes contributes its midpoint to
/// one of the interface types `+/0`, `-/0` or `+/-`. A candidate is a `+/-`
/// midpoint with a `+/0` and a `-/0` midpoint both within `radius`; nearby
/// candidates are merged and their centroid returned.
pub fn branch_points(z: &ZeroStructure, radius: f64) -> Vec<[f64; 2]> {
    let spec = z.zero.spec();
    let mut kinds: [Vec<[f64; 2]>; 3] = Default::default();
    for k in 0..spec.len() {
        for axis in 0..spec.dim() {
            if !spec.has_forward(k, axis) {
                continue;
            }
            let m = k + spec.stride(axis);
            let (a, b) = (z.class(k), z.class(m));
            if a == b {
                continue;
            }
            let slot = match (a.min(b), a.max(b)) {
                (0, 1) => 0,
                (-1, 0) => 1,
                _ => 2,
            };
            let (p, q) = (spec.point(k), spec.point(m));
            kinds[slot].push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
    }
    let near = |set: &[[f64; 2]], c: [f64; 2]| {
        set.iter()
            .any(|p| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= radius * radius)
    };
    let mut clusters: Vec<(Vec<[f64; 2]>, [f64; 2])> = Vec::new();
    for &c in &kinds[2] {
        if !(near(&kinds[0], c) && near(&kinds[1], c)) {
            continue;
        }
        match clusters
            .iter_mut()
            .find(|(pts, _)| near(pts, c))
        {
            Some((pts, _)) => pts.push(c),
            None => clusters.push((vec![c], c)),
        }
    }
    clusters
        .into_iter()
        .map(|(pts, _)| {
            let n = pts.len() as f64;
            let s = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
            [s[0] / n, s[1] / n]
        })
        .collect()
}

/// Solves `min ½|∇u|² - f u + μ|u|` two ways, as a two-phase problem with
/// `μ₁ = μ₂ = μ` and as the constrained problem over `u ≥ 0`, and returns
/// `‖ū - u₊‖_∞`.
///
/// On `u ≥ 0` the penalty `μ|u|` is the linear term `μu`, so the constrained
/// problem is an obstacle problem with obstacle `0` and source `f - μ`. Its
/// penalty weight is set to `2(μ + max|f|)`, above the exactness bound.
pub fn positive_part_check(f: &GridFunction, mu: f64, params: &SolverParams) -> Result<f64> {
    let spec = f.spec();
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let bc = DirichletBC::zero(spec);
    let two = TwoPhaseProblem::uniform(spec, mu, mu, bc.clone())?.with_source(f.clone())?;
    let u = solve_two_phase(&two, params)?;

    let obstacle = ObstacleProblem::new(GridFunction::zeros(spec), bc)?.with_source(f.map(|x| x - mu))?;
    let mu_obs = 2.0 * (mu + f.max_abs());
    let obs_params = SolverParams {
        mu: mu_obs,
        ..*params
    };
    let ubar = solve_linear_obstacle(&obstacle, &obs_params, Some(&GridFunction::zeros(spec)))?;
    linf_diff(&ubar.u, &u.u.map(|x| x.max(0.0)))
}
