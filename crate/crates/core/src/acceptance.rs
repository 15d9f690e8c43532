//! The acceptance suite: ten numbered checks against closed-form solutions,
//! independent oracles and reference measurements. Used by the `check`
//! subcommand and by the `acceptance` test target.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::contour::area_radius;
use crate::error::{Error, Result};
use crate::grid::{linf_diff, DirichletBC, GridFunction, GridSpec};
use crate::harness::{fit_rate, run};
use crate::hele_shaw::{exact_circle_radius, solve_hele_shaw, DoublePenaltyParams};
use crate::nonlinear::{
    max_free_second_difference, minimal_surface_gradient, solve_nonlinear_obstacle, surface_energy, NesterovSettings,
};
use crate::obstacle::{solve_linear_obstacle, SolverParams};
use crate::penalty::{mu_lower_bound, shrink, shrink_plus};
use crate::problems::{self, ProblemSpec};
use crate::two_phase::{branch_points, extract_zero_structure, solve_two_phase, positive_part_check};

/// Reference radius errors for grids of 128, 256, 512 and 1024 nodes.
pub const REFERENCE_RADIUS_ERRORS: [f64; 4] = [0.0238, 0.0124, 0.0083, 0.0044];
pub const REFERENCE_GRIDS: [usize; 4] = [128, 256, 512, 1024];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub const CRITERIA: [(usize, &str); 10] = [
    (1, "shrink operators match brute-force proximal minimizers"),
    (2, "1D obstacles: feasibility and convergence under refinement"),
    (3, "hemisphere: contact radius and error location"),
    (4, "penalty exactness above the discrete bound"),
    (5, "two-phase positive part equals the constrained solution"),
    (6, "1D two-phase: closed form, zero set and free boundary"),
    (7, "2D two-phase: zero set and branch point"),
    (8, "minimal-surface obstacle: affine free parts and feasibility"),
    (9, "Hele-Shaw circles: radius errors and rate"),
    (10, "determinism of artifacts"),
];

/// Runs criterion `id`. Solver errors are reported as failures.
pub fn run_criterion(id: usize) -> Result<CriterionResult> {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1)
        .ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
    let start = Instant::now();
    let outcome = match id {
        1 => prox_oracle(),
        2 => one_d_obstacles(),
        3 => hemisphere(),
        4 => penalty_exactness(),
        5 => positive_part(),
        6 => two_phase_1d(),
        7 => two_phase_branching(),
        8 => nonlinear(),
        9 => circle_radii(),
        _ => determinism(),
    };
    let (passed, detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Ok(CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    })
}

/// Runs every criterion in order, calling `each` as results arrive.
pub fn run_all(mut each: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, _)| {
            let r = run_criterion(id).expect("criterion ids are valid");
            each(&r);
            r
        })
        .collect()
}

type Outcome = Result<(bool, String)>;

/// Two-level grid search for the minimizer of a 1D objective on `[a, b]`.
fn grid_argmin(obj: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let search = |lo: f64, hi: f64| {
        let m = 2000;
        let step = (hi - lo) / m as f64;
        let mut best = (lo, obj(lo));
        for i in 1..=m {
            let v = lo + step * i as f64;
            let e = obj(v);
            if e < best.1 {
                best = (v, e);
            }
        }
        (best.0, step)
    };
    let (v, step) = search(a, b);
    search(v - 2.0 * step, v + 2.0 * step).0
}

fn prox_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let z: f64 = rng.gen_range(-5.0..5.0);
        let c: f64 = rng.gen_range(0.0..3.0);
        let (a, b) = (z.min(0.0) - c - 0.5, z.max(0.0) + c + 0.5);
        let plus = grid_argmin(|v| 0.5 * (v - z).powi(2) + c * v.max(0.0), a, b);
        let abs = grid_argmin(|v| 0.5 * (v - z).powi(2) + c * v.abs(), a, b);
        worst = worst.max((shrink_plus(z, c) - plus).abs()).max((shrink(z, c) - abs).abs());
    }
    Ok((worst <= 1e-4, format!("max deviation {worst:.2e} over 10^4 pairs (limit 1e-4)")))
}

/// Solves a 1D fixture at `n` nodes. Away from the fixture's own grid the
/// split weight keeps `λh²` fixed.
fn obstacle_run(id: &str, n: usize, tol: f64) -> Result<(f64, f64, f64)> {
    let meta = problems::lookup(id)?;
    let spec = meta.grid(n)?;
    let ProblemSpec::Obstacle(p) = problems::build(id, &spec)? else {
        return Err(Error::InvalidParameter(format!("{id} is not an obstacle problem")));
    };
    let mu = meta.preset.penalty.map(|m| m.at(spec.h())).unwrap_or(1.0);
    let ratio = (n - 1) as f64 / (meta.preset.n - 1) as f64;
    let params = SolverParams::new(mu, meta.preset.lambda * ratio * ratio)
        .with_tol(tol)
        .with_max_outer(200_000);
    let start = Instant::now();
    let rep = solve_linear_obstacle(&p, &params, None)?;
    let secs = start.elapsed().as_secs_f64();
    let reference = problems::evaluate_reference(id, &spec)?;
    let (exact, _) = reference.field.as_ref().ok_or_else(|| Error::NoReference(id.into()))?;
    if !rep.converged {
        return Err(Error::InvalidParameter(format!("{id} at n={n} did not converge")));
    }
    Ok((rep.feasibility_violation, linf_diff(&rep.u, exact)?, secs))
}

/// Refinement errors are measured with a tolerance well below the
/// discretization error so that they reflect the grid, not the stopping rule.
const REFINE_TOL: f64 = 1e-9;

fn one_d_obstacles() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for id in ["phi1_1d", "phi2_1d"] {
        let meta = problems::lookup(id)?;
        let (feas, _, mut slowest) = obstacle_run(id, meta.preset.n, meta.preset.tol)?;
        let mut pts = Vec::new();
        for n in [256, 512, 1024] {
            let (_, err, secs) = obstacle_run(id, n, REFINE_TOL)?;
            slowest = slowest.max(secs);
            pts.push((1.0 / (n - 1) as f64, err));
        }
        let rate = fit_rate(&pts)?;
        let pass = feas <= 10.0 * meta.preset.tol && pts[2].1 < pts[0].1 && rate >= 0.8 && slowest < 5.0;
        ok &= pass;
        detail.push(format!(
            "{id}: feas {feas:.1e}, errors {:.2e}/{:.2e}/{:.2e}, rate {rate:.2}, slowest {slowest:.2} s",
            pts[0].1, pts[1].1, pts[2].1
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn hemisphere() -> Outcome {
    let id = "hemisphere_2d";
    let meta = problems::lookup(id)?;
    let spec = meta.default_grid()?;
    let h = spec.h();
    let ProblemSpec::Obstacle(p) = problems::build(id, &spec)? else { unreachable!() };
    let params = SolverParams::new(meta.preset.penalty.unwrap().at(h), meta.preset.lambda).with_tol(meta.preset.tol);
    let start = Instant::now();
    let rep = solve_linear_obstacle(&p, &params, None)?;
    let secs = start.elapsed().as_secs_f64();
    let reference = problems::evaluate_reference(id, &spec)?;
    let rstar = reference.target("contact_radius").unwrap();
    let exact = &reference.field.as_ref().unwrap().0;
    let rc = area_radius(rep.active_set.as_ref().unwrap());
    let mut worst = (0.0, 0usize);
    for k in 0..spec.len() {
        let e = (rep.u.get(k) - exact.get(k)).abs();
        if e > worst.0 {
            worst = (e, k);
        }
    }
    let q = spec.point(worst.1);
    let dist = ((q[0] * q[0] + q[1] * q[1]).sqrt() - rstar).abs();
    let pass = rep.converged && (rc - rstar).abs() <= 2.0 * h && dist <= 3.0 * h && secs < 60.0;
    Ok((
        pass,
        format!(
            "contact radius {rc:.4} vs r* {rstar:.4} (|Δ| = {:.2}h), max error {:.2e} at {:.2}h from the contact circle, {secs:.1} s",
            (rc - rstar).abs() / h,
            worst.0,
            dist / h
        ),
    ))
}

fn penalty_exactness() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for id in ["phi1_1d", "hemisphere_2d"] {
        let meta = problems::lookup(id)?;
        let spec = meta.default_grid()?;
        let ProblemSpec::Obstacle(p) = problems::build(id, &spec)? else { unreachable!() };
        let bound = mu_lower_bound(&p.phi, &p.bc)?.mu_min;
        let tol = meta.preset.tol;
        let solve = |factor: f64| -> Result<GridFunction> {
            let params = SolverParams::new(factor * bound, meta.preset.lambda).with_tol(tol);
            let r = solve_linear_obstacle(&p, &params, None)?;
            if !r.converged {
                return Err(Error::InvalidParameter(format!("{id} at {factor}x bound did not converge")));
            }
            Ok(r.u)
        };
        let d = linf_diff(&solve(1.05)?, &solve(2.1)?)?;
        ok &= d <= 10.0 * tol;
        detail.push(format!("{id}: bound {bound:.4e}, difference {d:.2e} (limit {:.0e})", 10.0 * tol));
    }
    Ok((ok, detail.join("; ")))
}

/// Sum of a few positive Gaussian bumps.
fn random_smooth_source(spec: &GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..3)
        .map(|_| {
            let c = (0..spec.dim()).map(|a| rng.gen_range(spec.lo(a)..spec.hi(a))).collect();
            (c, rng.gen_range(0.0..30.0), rng.gen_range(0.01..0.05))
        })
        .collect();
    GridFunction::from_fn(spec, |p| {
        bumps
            .iter()
            .map(|(c, a, w)| {
                let r2: f64 = p.iter().zip(c).map(|(x, y)| (x - y).powi(2)).sum();
                a * (-r2 / w).exp()
            })
            .sum()
    })
}

fn positive_part() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    for spec in [GridSpec::interval(0.0, 1.0, 128)?, GridSpec::square(0.0, 1.0, 64)?] {
        // A split weight on the scale of the stiffness keeps the contraction fast
        // enough for the stopping rule to bound the distance to the fixed point.
        let h = spec.h();
        let params = SolverParams::new(1.0, 1.0 / (h * h)).with_tol(tol).with_max_outer(1_000_000);
        for _ in 0..5 {
            let f = random_smooth_source(&spec, &mut rng);
            let mu = rng.gen_range(0.5..5.0);
            worst = worst.max(positive_part_check(&f, mu, &params)?);
        }
    }
    Ok((worst <= 10.0 * tol, format!("max ‖ū - u₊‖ = {worst:.2e} over 10 sources (limit {:.0e})", 10.0 * tol)))
}

const ZERO_SET_TOL: f64 = 1e-6;

fn two_phase_1d() -> Outcome {
    let start = Instant::now();
    let meta = problems::lookup("two_phase_sym")?;
    let spec = meta.default_grid()?;
    let h = spec.h();
    let ProblemSpec::TwoPhase(p) = problems::build(meta.id, &spec)? else { unreachable!() };
    let rep = solve_two_phase(&p, &SolverParams::new(1.0, meta.preset.lambda).with_tol(meta.preset.tol))?;
    let exact = problems::evaluate_reference(meta.id, &spec)?.field.unwrap().0;
    let err = linf_diff(&rep.u, &exact)?;
    let sym_converged = rep.converged;
    // The contact at the zero set is quadratic, so its edge needs a tighter stop.
    let rep = solve_two_phase(&p, &SolverParams::new(1.0, meta.preset.lambda).with_tol(ZERO_SET_TOL))?;
    let zero = rep.active_set.as_ref().unwrap();
    let idx: Vec<usize> = (0..spec.len()).filter(|&k| zero.get(k) > 0.5).collect();
    let (lo, hi) = match (idx.first(), idx.last()) {
        (Some(&a), Some(&b)) => (spec.coord(0, a), spec.coord(0, b)),
        _ => (f64::NAN, f64::NAN),
    };
    let sym_ok = sym_converged && rep.converged && err <= 1e-2 && (lo + 0.5).abs() <= 2.0 * h && (hi - 0.5).abs() <= 2.0 * h;

    let meta = problems::lookup("two_phase_asym")?;
    let spec = meta.default_grid()?;
    let ha = spec.h();
    let ProblemSpec::TwoPhase(p) = problems::build(meta.id, &spec)? else { unreachable!() };
    let rep = solve_two_phase(&p, &SolverParams::new(1.0, meta.preset.lambda).with_tol(meta.preset.tol))?;
    let fb = crate::contour::contour(&rep.u, 0.0).crossings();
    let x = fb.first().copied().unwrap_or(f64::NAN);
    let asym_ok = rep.converged && fb.len() == 1 && (x - 0.141).abs() <= 2.0 * ha;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        sym_ok && asym_ok && secs < 30.0,
        format!(
            "symmetric: error {err:.2e}, zero set [{lo:.4}, {hi:.4}]; asymmetric: sign change at {x:.5} (|Δ| = {:.2}h from 0.141); {secs:.1} s",
            (x - 0.141).abs() / ha
        ),
    ))
}

fn two_phase_branching() -> Outcome {
    let meta = problems::lookup("two_phase_branching")?;
    let spec = meta.default_grid()?;
    let h = spec.h();
    let ProblemSpec::TwoPhase(p) = problems::build(meta.id, &spec)? else { unreachable!() };
    let params = SolverParams::new(1.0, meta.preset.lambda).with_tol(meta.preset.tol);
    let rep = solve_two_phase(&p, &params)?;
    let zero_nodes: f64 = rep.active_set.as_ref().unwrap().values().iter().sum();
    let z = extract_zero_structure(&rep.u, 10.0 * params.tol)?;
    let pts = branch_points(&z, 5.0 * h);
    let pass = rep.converged && zero_nodes >= 10.0 && !pts.is_empty();
    let loc = pts
        .iter()
        .map(|p| format!("({:.3}, {:.3})", p[0], p[1]))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((pass, format!("zero set {zero_nodes} cells, branch points {loc}")))
}

fn nonlinear() -> Outcome {
    let meta = problems::lookup("minimal_surface_osc")?;
    let spec = meta.default_grid()?;
    let h = spec.h();
    let ProblemSpec::Nonlinear(p) = problems::build(meta.id, &spec)? else { unreachable!() };
    let params = SolverParams::new(meta.preset.penalty.unwrap().at(h), meta.preset.lambda)
        .with_tol(meta.preset.tol)
        .with_max_outer(200_000);
    let nes = NesterovSettings::for_grid(&spec, params.lambda, params.tol);
    let rep = solve_nonlinear_obstacle(&p, &params, &nes)?;
    let u = &rep.u;
    let n = spec.len();
    let ends = u.get(0) == 5.0 && u.get(n - 1) == 10.0;
    let d2 = max_free_second_difference(u, rep.active_set.as_ref().unwrap())?;
    let d2_limit = 1e-3 * u.max_abs();

    // gradient against central differences of the discrete energy
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gspec = GridSpec::interval(0.0, 1.0, 33)?;
    let w = GridFunction::from_values(&gspec, (0..gspec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let bc = DirichletBC::from_field(&w);
    let g = minimal_surface_gradient(&w, &bc)?;
    let mut grad_err: f64 = 0.0;
    for _ in 0..10 {
        let mut z = GridFunction::from_values(&gspec, (0..gspec.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        for k in gspec.boundary_indices() {
            z.values_mut()[k] = 0.0;
        }
        let eps = 1e-6;
        let shifted = |s: f64| surface_energy(&w.zip_map(&z, |a, b| a + s * b).unwrap());
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        let an: f64 = g.values().iter().zip(z.values()).map(|(a, b)| a * b).sum::<f64>() * gspec.cell_volume();
        grad_err = grad_err.max((fd - an).abs() / an.abs().max(1e-12));
    }
    let pass = rep.converged && ends && rep.feasibility_violation <= 1e-4 && d2 <= d2_limit && grad_err <= 1e-5;
    Ok((
        pass,
        format!(
            "converged {} in {} outer / {} inner steps, feasibility {:.1e}, free second difference {d2:.2e} (limit {d2_limit:.0e}), gradient rel. error {grad_err:.1e}",
            rep.converged, rep.outer_iters, rep.inner_iters, rep.feasibility_violation
        ),
    ))
}

/// Free radius from a finite-difference solve of the radial problem
/// `(1/r)(r u')' = χ_{r > r0}` on `[r_k, R]` with `u(r_k) = t`, `u(R) = 0`:
/// bisection on `R` for a vanishing outer slope.
pub fn radial_fd_radius(t: f64, r_k: f64, r0: f64) -> f64 {
    let m = 20_000;
    let outer_slope = |big_r: f64| -> f64 {
        let dr = (big_r - r_k) / m as f64;
        let r = |i: usize| r_k + dr * i as f64;
        // interior unknowns 1..m-1, conservative form
        let mut a = vec![0.0; m + 1];
        let mut b = vec![0.0; m + 1];
        let mut c = vec![0.0; m + 1];
        let mut d = vec![0.0; m + 1];
        for i in 1..m {
            let (rm, rp) = (r(i) - 0.5 * dr, r(i) + 0.5 * dr);
            a[i] = rm;
            c[i] = rp;
            b[i] = -(rm + rp);
            d[i] = if r(i) > r0 { r(i) * dr * dr } else { 0.0 };
        }
        d[1] -= a[1] * t;
        // Thomas
        for i in 2..m {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut u = vec![0.0; m + 1];
        u[0] = t;
        u[m - 1] = d[m - 1] / b[m - 1];
        for i in (1..m - 1).rev() {
            u[i] = (d[i] - c[i] * u[i + 1]) / b[i];
        }
        // second-order one-sided slope at R
        (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * dr)
    };
    // the slope at R is negative for R below the free radius and positive above
    let (mut lo, mut hi) = (r0 * 1.0001, 4.0 * r0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if outer_slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn circle_radii() -> Outcome {
    let exact = exact_circle_radius(0.25, 1.0, 2f64.sqrt())?;
    let fd = radial_fd_radius(0.25, 1.0, 2f64.sqrt());
    let oracle_ok = (exact - fd).abs() <= 1e-4;
    let meta = problems::lookup("hs_circles")?;
    let mut pts = Vec::new();
    let mut bands_ok = true;
    let mut errs = Vec::new();
    for (n, target) in REFERENCE_GRIDS.into_iter().zip(REFERENCE_RADIUS_ERRORS) {
        let spec = meta.grid(n)?;
        let ProblemSpec::HeleShaw(s) = problems::build(meta.id, &spec)? else { unreachable!() };
        let params = DoublePenaltyParams::default();
        let sol = solve_hele_shaw(&s, &params)?;
        let e = (sol.area_radius(10.0 * params.tol) - exact).abs();
        bands_ok &= sol.report.converged && e >= target / 2.0 && e <= target * 2.0;
        errs.push(format!("{e:.4}"));
        pts.push((spec.h(), e));
    }
    let rate = fit_rate(&pts)?;
    let pass = oracle_ok && bands_ok && (rate - 0.8).abs() <= 0.3;
    Ok((
        pass,
        format!(
            "exact radius {exact:.6} (radial FD {fd:.6}), errors {} vs {:?}, rate {rate:.2}",
            errs.join("/"),
            REFERENCE_RADIUS_ERRORS
        ),
    ))
}

fn strip_wall_time(s: &str) -> String {
    s.lines().filter(|l| !l.starts_with("wall_time")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Outcome {
    let mut identical = true;
    let mut checked = Vec::new();
    for (id, n) in [("phi1_1d", 256), ("two_phase_sym", 512), ("hemisphere_2d", 65), ("hs_circles", 65)] {
        let dirs = [tempfile_dir()?, tempfile_dir()?];
        for d in &dirs {
            let mut cfg = RunConfig::for_problem(id);
            cfg.n = Some(n);
            cfg.out = d.clone();
            run(&cfg)?;
        }
        for f in ["solution.csv", "history.csv", "boundary.csv"] {
            identical &= std::fs::read(dirs[0].join(f))? == std::fs::read(dirs[1].join(f))?;
        }
        let reports: Vec<String> = dirs
            .iter()
            .map(|d| std::fs::read_to_string(d.join("report.txt")).map(|s| strip_wall_time(&s)))
            .collect::<std::io::Result<_>>()?;
        identical &= reports[0] == reports[1];
        for d in &dirs {
            let _ = std::fs::remove_dir_all(d);
        }
        checked.push(id);
    }
    Ok((identical, format!("two runs each of {} compared byte for byte", checked.join(", "))))
}

fn tempfile_dir() -> Result<std::path::PathBuf> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "l1-obstacle-check-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_search_finds_quadratic_minimum() {
        let v = grid_argmin(|x| (x - 0.3).powi(2), -2.0, 2.0);
        assert!((v - 0.3).abs() < 1e-5);
    }

    #[test]
    fn radial_oracle_agrees_with_closed_form() {
        for t in [0.05, 0.25, 0.6] {
            let a = exact_circle_radius(t, 1.0, 2f64.sqrt()).unwrap();
            let b = radial_fd_radius(t, 1.0, 2f64.sqrt());
            assert!((a - b).abs() < 1e-4, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_criterion(11).is_err());
    }
}
