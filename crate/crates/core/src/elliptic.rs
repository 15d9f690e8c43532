//! Linear solves with the screened Laplacian `(λI - Δ_h)` on the interior
//! nodes of a box with Dirichlet data.
//!
//! Dirichlet nodes are eliminated: their values are held fixed and enter
//! the interior equations as known right-hand-side contributions, so the
//! interior operator stays symmetric positive definite. 2D systems are
//! solved with matrix-free conjugate gradients; 1D systems are tridiagonal
//! and solved directly.

use crate::error::{Error, Result};
use crate::grid::{DirichletBC, GridFunction, GridSpec};

/// Conjugate-gradient controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    /// Residual reduction target.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Start from the supplied iterate instead of zero.
    pub warm_start: bool,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings {
            rel_tol: 1e-6,
            max_iter: 50,
            warm_start: true,
        }
    }
}

impl CgSettings {
    /// Settings for one-off solves whose accuracy feeds into other data
    /// (obstacle construction, reference potentials).
    pub fn accurate() -> Self {
        CgSettings {
            rel_tol: 1e-12,
            max_iter: 100_000,
            warm_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cg rel_tol must lie in (0,1), got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("cg max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveStats {
    pub iterations: usize,
    /// Final interior residual divided by the norm of the eliminated
    /// right-hand side.
    pub rel_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub u: GridFunction,
    pub stats: LinearSolveStats,
}

/// Diagonal shift of the screened operator.
#[derive(Debug, Clone)]
pub(crate) enum Shift {
    Uniform(f64),
    /// Per-node shift, full grid length.
    Field(Vec<f64>),
}

impl Shift {
    #[inline]
    fn at(&self, k: usize) -> f64 {
        match self {
            Shift::Uniform(s) => *s,
            Shift::Field(v) => v[k],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Shift::Uniform(s) => s.is_finite() && *s >= 0.0,
            Shift::Field(v) => v.iter().all(|s| s.is_finite() && *s >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "screening parameter must be finite and non-negative".into(),
            ))
        }
    }
}

/// Reusable solver for `(shift - Δ_h) u = rhs` on interior nodes.
///
/// Work buffers are allocated once so that outer loops can call
/// [`ScreenedSolver::solve`] every iteration without allocating.
pub(crate) struct ScreenedSolver {
    spec: GridSpec,
    shift: Shift,
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    // tridiagonal sweep storage (1D)
    c_prime: Vec<f64>,
}

impl ScreenedSolver {
    pub(crate) fn new(spec: &GridSpec, shift: Shift) -> Result<Self> {
        shift.validate()?;
        if let Shift::Field(v) = &shift {
            if v.len() != spec.len() {
                return Err(Error::SpecMismatch("shift field length".into()));
            }
        }
        // Every box grid has Dirichlet nodes, so the interior operator is
        // nonsingular even for a zero shift.
        if spec.boundary_indices().is_empty() {
            return Err(Error::Singular("no Dirichlet nodes".into()));
        }
        let n = spec.len();
        let (r, p, ap, c_prime) = if spec.dim() == 1 {
            (vec![0.0; n], Vec::new(), Vec::new(), vec![0.0; n])
        } else {
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], Vec::new())
        };
        Ok(ScreenedSolver {
            spec: spec.clone(),
            shift,
            r,
            p,
            ap,
            c_prime,
        })
    }

    /// Solves in place. `x` carries the Dirichlet values on its boundary
    /// nodes and the starting iterate on its interior nodes; `rhs` is read on
    /// interior nodes only.
    pub(crate) fn solve(&mut self, rhs: &[f64], x: &mut [f64], settings: &CgSettings) -> LinearSolveStats {
        if self.spec.dim() == 1 {
            self.solve_tridiagonal(rhs, x)
        } else {
            self.solve_cg(rhs, x, settings)
        }
    }

    fn solve_tridiagonal(&mut self, rhs: &[f64], x: &mut [f64]) -> LinearSolveStats {
        // Thomas algorithm on interior nodes 1..n-1 with off-diagonals -1/h².
        let n = self.spec.len();
        let inv_h2 = 1.0 / (self.spec.h() * self.spec.h());
        let off = -inv_h2;
        let d = &mut self.r; // modified right-hand side
        let c = &mut self.c_prime;
        let mut b_norm = 0.0;
        for k in 1..n - 1 {
            let mut rk = rhs[k];
            if k == 1 {
                rk += x[0] * inv_h2;
            }
            if k == n - 2 {
                rk += x[n - 1] * inv_h2;
            }
            b_norm += rk * rk;
            let diag = self.shift.at(k) + 2.0 * inv_h2;
            if k == 1 {
                c[k] = off / diag;
                d[k] = rk / diag;
            } else {
                let m = diag - off * c[k - 1];
                c[k] = off / m;
                d[k] = (rk - off * d[k - 1]) / m;
            }
        }
        x[n - 2] = d[n - 2];
        for k in (1..n - 2).rev() {
            x[k] = d[k] - c[k] * x[k + 1];
        }
        // report the true residual of the direct solve
        let mut res = 0.0;
        for k in 1..n - 1 {
            let ax = (self.shift.at(k) + 2.0 * inv_h2) * x[k] - (x[k - 1] + x[k + 1]) * inv_h2;
            let rk = rhs[k] - ax;
            res += rk * rk;
        }
        let rel = if b_norm > 0.0 { (res / b_norm).sqrt() } else { res.sqrt() };
        LinearSolveStats {
            iterations: 1,
            rel_residual: rel,
            converged: true,
        }
    }

    fn solve_cg(&mut self, rhs: &[f64], x: &mut [f64], settings: &CgSettings) -> LinearSolveStats {
        let spec = &self.spec;
        let ny = spec.n(1);
        let nx = spec.n(0);
        let inv_h2 = 1.0 / (spec.h() * spec.h());
        let shift = &self.shift;
        let r = &mut self.r;
        let p = &mut self.p;
        let ap = &mut self.ap;

        // Norm of the eliminated right-hand side: rhs plus boundary couplings.
        let mut b_norm2 = 0.0;
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                let k = i * ny + j;
                let mut b = rhs[k];
                if i == 1 {
                    b += x[k - ny] * inv_h2;
                }
                if i == nx - 2 {
                    b += x[k + ny] * inv_h2;
                }
                if j == 1 {
                    b += x[k - 1] * inv_h2;
                }
                if j == ny - 2 {
                    b += x[k + 1] * inv_h2;
                }
                b_norm2 += b * b;
            }
        }
        let b_norm = b_norm2.sqrt();
        if !settings.warm_start {
            spec.for_each_interior(|k| x[k] = 0.0);
        }

        // r = rhs - A x on the interior, zero on the boundary.
        let mut rr = 0.0;
        for i in 1..nx - 1 {
            let row = i * ny;
            for j in 1..ny - 1 {
                let k = row + j;
                let ax = shift.at(k) * x[k]
                    - (x[k - ny] + x[k + ny] + x[k - 1] + x[k + 1] - 4.0 * x[k]) * inv_h2;
                let rk = rhs[k] - ax;
                r[k] = rk;
                p[k] = rk;
                rr += rk * rk;
            }
        }
        for k in spec.boundary_indices() {
            r[k] = 0.0;
            p[k] = 0.0;
            ap[k] = 0.0;
        }
        let r0 = rr.sqrt();
        if b_norm == 0.0 && r0 == 0.0 {
            return LinearSolveStats {
                iterations: 0,
                rel_residual: 0.0,
                converged: true,
            };
        }
        // Reduce relative to whichever is smaller, the eliminated rhs or the
        // warm-start residual, so a good warm start still gets refined.
        let target = settings.rel_tol * if b_norm > 0.0 { b_norm.min(r0) } else { r0 };
        let scale = if b_norm > 0.0 { b_norm } else { r0 };

        let iterations = match shift {
            Shift::Uniform(s) => {
                let s = *s;
                cg_loop(nx, ny, inv_h2, |_| s, x, r, p, ap, &mut rr, target, settings.max_iter)
            }
            Shift::Field(f) => cg_loop(nx, ny, inv_h2, |k| f[k], x, r, p, ap, &mut rr, target, settings.max_iter),
        };
        let res = rr.sqrt();
        LinearSolveStats {
            iterations,
            rel_residual: res / scale,
            converged: res <= target,
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn cg_loop<S: Fn(usize) -> f64>(
    nx: usize,
    ny: usize,
    inv_h2: f64,
    shift: S,
    x: &mut [f64],
    r: &mut [f64],
    p: &mut [f64],
    ap: &mut [f64],
    rr: &mut f64,
    target: f64,
    max_iter: usize,
) -> usize {
    let mut iterations = 0;
    while rr.sqrt() > target && iterations < max_iter {
        let mut pap = 0.0;
        for i in 1..nx - 1 {
            let row = i * ny;
            let up = &p[row - ny..row];
            let mid = &p[row..row + ny];
            let down = &p[row + ny..row + 2 * ny];
            let out = &mut ap[row..row + ny];
            for j in 1..ny - 1 {
                let v = shift(row + j) * mid[j]
                    - (up[j] + down[j] + mid[j - 1] + mid[j + 1] - 4.0 * mid[j]) * inv_h2;
                out[j] = v;
                pap += mid[j] * v;
            }
        }
        if pap <= 0.0 {
            break;
        }
        let alpha = *rr / pap;
        let mut rr_new = 0.0;
        for i in 1..nx - 1 {
            let lo = i * ny + 1;
            let hi = (i + 1) * ny - 1;
            for (((xk, rk), pk), apk) in x[lo..hi]
                .iter_mut()
                .zip(&mut r[lo..hi])
                .zip(&p[lo..hi])
                .zip(&ap[lo..hi])
            {
                *xk += alpha * pk;
                *rk -= alpha * apk;
                rr_new += *rk * *rk;
            }
        }
        let beta = rr_new / *rr;
        *rr = rr_new;
        for i in 1..nx - 1 {
            let lo = i * ny + 1;
            let hi = (i + 1) * ny - 1;
            for (pk, rk) in p[lo..hi].iter_mut().zip(&r[lo..hi]) {
                *pk = rk + beta * *pk;
            }
        }
        iterations += 1;
    }
    iterations
}

/// Applies `(λI - Δ_h)` to `w` on interior nodes (boundary entries of the
/// result are zero). Boundary values of `w` are used as given.
pub fn apply_screened(w: &GridFunction, lambda: f64) -> GridFunction {
    let spec = w.spec();
    let mut out = vec![0.0; spec.len()];
    crate::grid::laplacian_into(spec, w.values(), &mut out);
    let vals = w.values();
    let mut res = GridFunction::zeros(spec);
    let dst = res.values_mut();
    spec.for_each_interior(|k| dst[k] = lambda * vals[k] - out[k]);
    res
}

/// Solves `(λI - Δ_h) u = rhs` on interior nodes with `u = bc` on the
/// boundary, starting from `x0` when warm starting.
pub fn screened_poisson_solve(
    rhs: &GridFunction,
    bc: &DirichletBC,
    lambda: f64,
    x0: &GridFunction,
    settings: &CgSettings,
) -> Result<PoissonSolution> {
    settings.validate()?;
    let spec = rhs.spec();
    spec.ensure_same(bc.spec(), "rhs and boundary condition")?;
    spec.ensure_same(x0.spec(), "rhs and initial iterate")?;
    rhs.check_finite("right-hand side")?;
    bc.check_finite()?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let mut solver = ScreenedSolver::new(spec, Shift::Uniform(lambda))?;
    let mut u = x0.clone();
    bc.apply(&mut u)?;
    let stats = solver.solve(rhs.values(), u.values_mut(), settings);
    u.check_finite("screened Poisson solution")?;
    Ok(PoissonSolution { u, stats })
}

/// Returns `v` with `-Δ_h v = mask` in the interior and `v = 0` on the box.
///
/// The mask must be 0/1-valued. A mask touching the box boundary is
/// accepted with a warning, since the result then depends on the box.
pub fn poisson_solve_indicator(mask: &GridFunction, bc_zero: &DirichletBC) -> Result<PoissonSolution> {
    let spec = mask.spec();
    if mask.values().iter().any(|&m| m != 0.0 && m != 1.0) {
        return Err(Error::InvalidParameter("indicator mask must be 0/1 valued".into()));
    }
    if bc_zero.boundary_values().any(|(_, v)| v != 0.0) {
        return Err(Error::InvalidParameter(
            "indicator potential needs homogeneous boundary data".into(),
        ));
    }
    if spec.boundary_indices().iter().any(|&k| mask.get(k) != 0.0) {
        log::warn!("indicator mask touches the box boundary; the potential depends on the box");
    }
    screened_poisson_solve(mask, bc_zero, 0.0, &GridFunction::zeros(spec), &CgSettings::accurate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_solution_for_constant_rhs() {
        let spec = GridSpec::square(0.0, 1.0, 17).unwrap();
        let lambda = 3.0;
        let c = 2.5;
        let rhs = GridFunction::constant(&spec, lambda * c);
        let bc = DirichletBC::constant(&spec, c);
        let sol = screened_poisson_solve(&rhs, &bc, lambda, &GridFunction::zeros(&spec), &CgSettings::accurate())
            .unwrap();
        assert!(sol.u.values().iter().all(|v| (v - c).abs() < 1e-10));
        assert!(sol.stats.converged);
    }

    #[test]
    fn discrete_harmonic_is_linear_1d() {
        let spec = GridSpec::interval(0.0, 1.0, 33).unwrap();
        let bc = DirichletBC::from_fn(&spec, |p| p[0]);
        let sol = screened_poisson_solve(
            &GridFunction::zeros(&spec),
            &bc,
            0.0,
            &GridFunction::zeros(&spec),
            &CgSettings::default(),
        )
        .unwrap();
        for k in 0..spec.len() {
            assert!((sol.u.get(k) - spec.point(k)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn discrete_harmonic_is_linear_2d() {
        let spec = GridSpec::square(0.0, 1.0, 21).unwrap();
        let bc = DirichletBC::from_fn(&spec, |p| 1.0 + p[0] - 2.0 * p[1]);
        let sol = screened_poisson_solve(
            &GridFunction::zeros(&spec),
            &bc,
            0.0,
            &GridFunction::zeros(&spec),
            &CgSettings::accurate(),
        )
        .unwrap();
        for k in 0..spec.len() {
            let p = spec.point(k);
            assert!((sol.u.get(k) - (1.0 + p[0] - 2.0 * p[1])).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = GridSpec::square(0.0, 1.0, 9).unwrap();
        let z = GridFunction::zeros(&spec);
        let bc = DirichletBC::zero(&spec);
        assert!(screened_poisson_solve(&z, &bc, -1.0, &z, &CgSettings::default()).is_err());
        let mut bad = z.clone();
        bad.values_mut()[40] = f64::NAN;
        assert!(screened_poisson_solve(&bad, &bc, 1.0, &z, &CgSettings::default()).is_err());
        let s = CgSettings {
            rel_tol: 0.0,
            ..CgSettings::default()
        };
        assert!(screened_poisson_solve(&z, &bc, 1.0, &z, &s).is_err());
    }

    #[test]
    fn cg_respects_iteration_cap() {
        let spec = GridSpec::square(0.0, 1.0, 65).unwrap();
        let rhs = GridFunction::from_fn(&spec, |p| (7.0 * p[0]).sin() * (3.0 * p[1]).cos());
        let settings = CgSettings {
            rel_tol: 1e-14,
            max_iter: 3,
            warm_start: false,
        };
        let sol = screened_poisson_solve(&rhs, &DirichletBC::zero(&spec), 0.0, &rhs, &settings).unwrap();
        assert_eq!(sol.stats.iterations, 3);
        assert!(!sol.stats.converged);
    }

    #[test]
    fn zero_indicator_gives_zero() {
        let spec = GridSpec::square(-1.0, 1.0, 17).unwrap();
        let sol = poisson_solve_indicator(&GridFunction::zeros(&spec), &DirichletBC::zero(&spec)).unwrap();
        assert!(sol.u.values().iter().all(|&v| v == 0.0));
        let bad = GridFunction::constant(&spec, 0.5);
        assert!(poisson_solve_indicator(&bad, &DirichletBC::zero(&spec)).is_err());
    }
}
