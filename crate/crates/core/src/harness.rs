//! Runs configured problems, writes artifacts and performs refinement and
//! time-sweep studies.
//!
//! A single run writes `solution.csv`, `history.csv`, `boundary.csv` and
//! `report.txt` into the output directory. Studies write one subdirectory
//! per level plus a summary table and report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{PenaltyChoice, RunConfig, StudyMode};
use crate::contour::{area_radius, contour, FreeBoundary};
use crate::error::{Error, Result};
use crate::grid::{fmt_f64, linf_diff, GridFunction, GridSpec};
use crate::hele_shaw::{solve_hele_shaw, DoublePenaltyParams, HeleShawSetup};
use crate::nonlinear::{max_free_second_difference, solve_nonlinear_obstacle, NesterovSettings};
use crate::obstacle::{kkt_residuals, solve_linear_obstacle, SolverParams};
use crate::penalty::mu_lower_bound;
use crate::problems::{self, ProblemKind, ProblemSpec, Reference, ReferenceOrigin};
use crate::report::{history_csv, SolveReport};
use crate::shapes::rasterize;
use crate::two_phase::{extract_zero_structure, solve_two_phase};

/// Default outer iteration cap for the minimal-surface solver.
const NONLINEAR_MAX_OUTER: usize = 200_000;

/// One scalar result line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// Origin of the reference the value is measured against, if any.
    pub against: Option<ReferenceOrigin>,
}

/// Everything produced by one solve.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub problem: String,
    pub kind: ProblemKind,
    pub spec: GridSpec,
    /// Effective parameters in report order.
    pub params: Vec<(String, String)>,
    pub report: SolveReport,
    /// Field written to `solution.csv`: `u`, or the pressure for Hele-Shaw.
    pub solution: GridFunction,
    pub boundary: FreeBoundary,
    pub metrics: Vec<Metric>,
}

impl SingleRun {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// The error used in refinement studies.
    pub fn study_error(&self) -> Option<f64> {
        self.metric("radius_error").or_else(|| self.metric("linf_error"))
    }

    pub fn report_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem = {}", self.problem);
        let _ = writeln!(s, "kind = {}", self.kind.name());
        let _ = writeln!(s, "n = {}", self.spec.n(0));
        let _ = writeln!(s, "h = {}", fmt_f64(self.spec.h()));
        for (k, v) in &self.params {
            let _ = writeln!(s, "{k} = {v}");
        }
        let r = &self.report;
        let _ = writeln!(s, "converged = {}", r.converged);
        let _ = writeln!(s, "outer_iters = {}", r.outer_iters);
        let _ = writeln!(s, "inner_iters = {}", r.inner_iters);
        let _ = writeln!(s, "final_diff = {}", fmt_f64(r.final_diff().unwrap_or(f64::NAN)));
        let _ = writeln!(s, "feasibility = {}", fmt_f64(r.feasibility_violation));
        let _ = writeln!(s, "complementarity = {}", fmt_f64(r.complementarity));
        for m in &self.metrics {
            match m.against {
                Some(o) => {
                    let _ = writeln!(s, "{} = {} [{}]", m.name, fmt_f64(m.value), o.tag());
                }
                None => {
                    let _ = writeln!(s, "{} = {}", m.name, fmt_f64(m.value));
                }
            }
        }
        let _ = writeln!(s, "wall_time_s = {:.3}", r.elapsed.as_secs_f64());
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.solution.write_csv(dir.join("solution.csv"))?;
        fs::write(dir.join("history.csv"), history_csv(&self.report.history))?;
        self.boundary.write_csv(dir.join("boundary.csv"))?;
        fs::write(dir.join("report.txt"), self.report_text())?;
        Ok(())
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub runs: Vec<SingleRun>,
    /// Fitted rate for refinement studies.
    pub rate: Option<f64>,
    /// Text written to the top-level `report.txt`.
    pub report: String,
}

impl RunSummary {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.report.converged)
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::InvalidParameter("rate fit needs positive spacings and errors".into()));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs distinct spacings".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Process exit status for an error: 2 for configuration problems, 1 for
/// solver failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::UnknownProblem(_)
        | Error::InvalidParameter(_)
        | Error::InvalidGrid(_)
        | Error::SpecMismatch(_)
        | Error::NoReference(_)
        | Error::InfeasibleBoundary(_) => 2,
        _ => 1,
    }
}

/// Runs `cfg` and writes its artifacts under `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    match &cfg.study {
        StudyMode::Single => {
            let r = solve_single(cfg, None, None)?;
            r.write(&cfg.out)?;
            let report = r.report_text();
            Ok(RunSummary {
                runs: vec![r],
                rate: None,
                report,
            })
        }
        StudyMode::Refine(ns) => refine(cfg, ns),
        StudyMode::TimeSweep(ts) => time_sweep(cfg, ts),
    }
}

fn refine(cfg: &RunConfig, ns: &[usize]) -> Result<RunSummary> {
    let mut runs = Vec::new();
    let mut table = String::from("n,h,error\n");
    let mut points = Vec::new();
    for &n in ns {
        let r = solve_single(cfg, Some(n), None)?;
        r.write(&cfg.out.join(format!("n{n}")))?;
        let e = r
            .study_error()
            .ok_or_else(|| Error::NoReference(format!("`{}` has no error measure", cfg.problem)))?;
        let _ = writeln!(table, "{n},{},{}", fmt_f64(r.spec.h()), fmt_f64(e));
        points.push((r.spec.h(), e));
        runs.push(r);
    }
    let rate = if points.len() >= 3 { Some(fit_rate(&points)?) } else { None };
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("study.csv"), &table)?;
    let mut report = format!("problem = {}\nstudy = refine\n", cfg.problem);
    for (r, (h, e)) in runs.iter().zip(&points) {
        let _ = writeln!(report, "n = {} h = {} error = {} converged = {}", r.spec.n(0), fmt_f64(*h), fmt_f64(*e), r.report.converged);
    }
    match rate {
        Some(p) => {
            let _ = writeln!(report, "rate = {}", fmt_f64(p));
        }
        None => report.push_str("rate = n/a (fewer than 3 levels)\n"),
    }
    fs::write(cfg.out.join("report.txt"), &report)?;
    Ok(RunSummary { runs, rate, report })
}

fn time_sweep(cfg: &RunConfig, ts: &[f64]) -> Result<RunSummary> {
    let mut runs = Vec::new();
    let mut table = String::from("t,radius_area,fluid_area\n");
    for (i, &t) in ts.iter().enumerate() {
        let r = solve_single(cfg, None, Some(t))?;
        if r.kind != ProblemKind::HeleShaw {
            return Err(Error::Config("time sweeps apply to Hele-Shaw problems only".into()));
        }
        r.write(&cfg.out.join(format!("t{i}")))?;
        let ra = r.metric("radius_area").unwrap_or(f64::NAN);
        let _ = writeln!(table, "{},{},{}", fmt_f64(t), fmt_f64(ra), fmt_f64(std::f64::consts::PI * ra * ra));
        runs.push(r);
    }
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("sweep.csv"), &table)?;
    let report = format!("problem = {}\nstudy = time-sweep\n{table}", cfg.problem);
    fs::write(cfg.out.join("report.txt"), &report)?;
    Ok(RunSummary {
        runs,
        rate: None,
        report,
    })
}

/// Solves one instance without writing anything. `n` and `t` override the
/// configuration.
pub fn solve_single(cfg: &RunConfig, n: Option<usize>, t: Option<f64>) -> Result<SingleRun> {
    if cfg.problem == "hele_shaw" {
        let custom = cfg
            .custom
            .as_ref()
            .ok_or_else(|| Error::Config("custom Hele-Shaw setup missing".into()))?;
        let n = n.or(cfg.n).unwrap_or(256);
        let spec = GridSpec::square(custom.lo, custom.hi, n)?;
        let setup = HeleShawSetup::new(
            rasterize(&spec, &custom.slot),
            rasterize(&spec, &custom.initial_fluid),
            t.or(cfg.t).unwrap_or(0.0),
        )?;
        let defaults = DoublePenaltyParams::default();
        return run_hele_shaw(cfg, "hele_shaw", setup, defaults.gamma1, defaults.lambda1, defaults.tol, None);
    }
    let meta = problems::lookup(&cfg.problem)?;
    let spec = meta.grid(n.or(cfg.n).unwrap_or(meta.preset.n))?;
    let reference = if meta.has_reference() {
        Some(problems::evaluate_reference(meta.id, &spec)?)
    } else {
        None
    };
    match problems::build(meta.id, &spec)? {
        ProblemSpec::Obstacle(p) => {
            let bound = mu_lower_bound(&p.phi, &p.bc)?;
            let mut params = match cfg.penalty {
                PenaltyChoice::Auto => SolverParams::auto(&p)?,
                PenaltyChoice::Preset => {
                    let mu = meta.preset.penalty.map(|m| m.at(spec.h())).unwrap_or(1.0);
                    SolverParams::new(mu, meta.preset.lambda).with_tol(meta.preset.tol)
                }
            };
            apply_common(cfg, &mut params);
            let report = solve_linear_obstacle(&p, &params, None)?;
            let kkt = kkt_residuals(&p, &report.u)?;
            let mut metrics = vec![
                metric("mu_lower_bound", bound.mu_min),
                metric("subharmonicity", kkt.subharmonicity),
            ];
            let contact = report.active_set.clone().unwrap_or_else(|| GridFunction::zeros(&spec));
            metrics.push(metric("contact_nodes", contact.values().iter().sum()));
            push_field_error(&mut metrics, &report.u, reference.as_ref())?;
            if let Some(r) = reference.as_ref().and_then(|r| r.target("contact_radius")) {
                let rc = area_radius(&contact);
                metrics.push(metric("contact_radius", rc));
                metrics.push(against("contact_radius_error", (rc - r).abs(), ReferenceOrigin::Computed));
            }
            let boundary = contour(&contact, 0.5);
            Ok(SingleRun {
                problem: meta.id.into(),
                kind: meta.kind,
                spec,
                params: obstacle_params(&params, cfg.penalty),
                solution: report.u.clone(),
                report,
                boundary,
                metrics,
            })
        }
        ProblemSpec::Nonlinear(p) => {
            let mut params = SolverParams::new(
                meta.preset.penalty.map(|m| m.at(spec.h())).unwrap_or(1.0),
                meta.preset.lambda,
            )
            .with_tol(meta.preset.tol)
            .with_max_outer(NONLINEAR_MAX_OUTER);
            if cfg.penalty == PenaltyChoice::Auto {
                let auto = SolverParams::auto(&p)?;
                params.mu = auto.mu;
                params.lambda = auto.lambda;
            }
            apply_common(cfg, &mut params);
            let nes = nonlinear_settings(cfg, &spec, params.lambda, params.tol);
            let report = solve_nonlinear_obstacle(&p, &params, &nes)?;
            let contact = report.active_set.clone().unwrap_or_else(|| GridFunction::zeros(&spec));
            let mut metrics = vec![
                metric("contact_nodes", contact.values().iter().sum()),
                metric("max_free_second_difference", max_free_second_difference(&report.u, &contact)?),
            ];
            push_field_error(&mut metrics, &report.u, reference.as_ref())?;
            let mut prm = obstacle_params(&params, cfg.penalty);
            prm.push(("tau".into(), fmt_f64(nes.tau)));
            prm.push(("lipschitz".into(), fmt_f64(nes.lipschitz)));
            prm.push(("inner_tol".into(), fmt_f64(nes.inner_tol)));
            prm.push(("max_inner".into(), nes.max_inner.to_string()));
            Ok(SingleRun {
                problem: meta.id.into(),
                kind: meta.kind,
                spec,
                params: prm,
                solution: report.u.clone(),
                boundary: contour(&contact, 0.5),
                report,
                metrics,
            })
        }
        ProblemSpec::TwoPhase(p) => {
            let mut params = SolverParams::new(1.0, meta.preset.lambda).with_tol(meta.preset.tol);
            apply_common(cfg, &mut params);
            let report = solve_two_phase(&p, &params)?;
            let eps = 10.0 * params.tol;
            let z = extract_zero_structure(&report.u, eps)?;
            let zero = report.active_set.clone().unwrap_or_else(|| GridFunction::zeros(&spec));
            let mut metrics = vec![metric("zero_nodes", zero.values().iter().sum())];
            if spec.dim() == 1 {
                if let Some((lo, hi)) = active_interval(&zero) {
                    metrics.push(metric("zero_set_lo", lo));
                    metrics.push(metric("zero_set_hi", hi));
                }
                if let Some(x) = contour(&report.u, 0.0).crossings().first() {
                    metrics.push(metric("sign_change", *x));
                    if let Some(x0) = reference.as_ref().and_then(|r| r.target("free_boundary")) {
                        metrics.push(against("free_boundary_error", (x - x0).abs(), ReferenceOrigin::Computed));
                    }
                }
            } else {
                let pts = crate::two_phase::branch_points(&z, 5.0 * spec.h());
                metrics.push(metric("branch_points", pts.len() as f64));
                for (i, p) in pts.iter().enumerate() {
                    metrics.push(metric(&format!("branch_point_{i}_x"), p[0]));
                    metrics.push(metric(&format!("branch_point_{i}_y"), p[1]));
                }
            }
            push_field_error(&mut metrics, &report.u, reference.as_ref())?;
            let mut components = Vec::new();
            for fb in &z.interfaces {
                components.extend(fb.components.iter().cloned());
            }
            let boundary = FreeBoundary {
                dim: spec.dim(),
                level: eps,
                components,
            };
            let mut prm = vec![
                ("mu1".to_string(), fmt_f64(p.mu1.get(0))),
                ("mu2".to_string(), fmt_f64(p.mu2.get(0))),
            ];
            prm.extend(obstacle_params(&params, cfg.penalty).into_iter().filter(|(k, _)| k != "mu" && k != "penalty"));
            prm.push(("zero_eps".into(), fmt_f64(eps)));
            Ok(SingleRun {
                problem: meta.id.into(),
                kind: meta.kind,
                spec,
                params: prm,
                solution: report.u.clone(),
                report,
                boundary,
                metrics,
            })
        }
        ProblemSpec::HeleShaw(mut setup) => {
            if let Some(t) = t.or(cfg.t) {
                setup = HeleShawSetup::new(setup.k_mask, setup.omega0_mask, t)?;
            }
            let gamma = meta.preset.penalty.map(|m| m.at(spec.h())).unwrap_or(1.5e4);
            let mut run = run_hele_shaw(cfg, meta.id, setup.clone(), gamma, meta.preset.lambda, meta.preset.tol, reference.as_ref())?;
            run.kind = meta.kind;
            Ok(run)
        }
    }
}

fn run_hele_shaw(
    cfg: &RunConfig,
    id: &str,
    setup: HeleShawSetup,
    gamma: f64,
    lambda: f64,
    tol: f64,
    reference: Option<&Reference>,
) -> Result<SingleRun> {
    let mut params = match cfg.penalty {
        PenaltyChoice::Auto => DoublePenaltyParams::auto(&setup)?,
        PenaltyChoice::Preset => DoublePenaltyParams {
            gamma1: gamma,
            gamma2: gamma,
            lambda1: lambda,
            lambda2: lambda,
            ..Default::default()
        },
    };
    params.tol = tol;
    if let Some(g) = cfg.mu {
        params.gamma1 = g;
        params.gamma2 = g;
    }
    if let Some(l) = cfg.lambda {
        params.lambda1 = l;
        params.lambda2 = l;
    }
    if let Some(t) = cfg.tol {
        params.tol = t;
    }
    if let Some(m) = cfg.max_outer {
        params.max_outer = m;
    }
    params.feasibility_guard = cfg.guard;
    let spec = setup.spec.clone();
    let t = setup.t;
    let sol = solve_hele_shaw(&setup, &params)?;
    let eps = 10.0 * params.tol;
    let boundary = sol.free_boundary(eps)?;
    let ra = sol.area_radius(eps);
    let mut metrics = vec![
        metric("slot_violation", sol.slot_violation),
        metric("fluid_eps", eps),
        metric("radius_area", ra),
    ];
    let mean = boundary.mean_radius([0.0, 0.0]);
    if let Some(m) = mean {
        metrics.push(metric("radius_contour_mean", m));
    }
    if let Some(r) = reference.and_then(|r| r.target("radius")) {
        metrics.push(against("radius_error", (ra - r).abs(), ReferenceOrigin::Computed));
        if let Some(m) = mean {
            metrics.push(against("radius_contour_error", (m - r).abs(), ReferenceOrigin::Computed));
        }
        if let Some(d) = boundary.max_radius_deviation([0.0, 0.0], r) {
            metrics.push(against("radius_max_deviation", d, ReferenceOrigin::Computed));
        }
    }
    let params_list = vec![
        ("t".to_string(), fmt_f64(t)),
        ("gamma1".to_string(), fmt_f64(params.gamma1)),
        ("gamma2".to_string(), fmt_f64(params.gamma2)),
        ("lambda1".to_string(), fmt_f64(params.lambda1)),
        ("lambda2".to_string(), fmt_f64(params.lambda2)),
        ("penalty".to_string(), penalty_name(cfg.penalty).to_string()),
        ("tol".to_string(), fmt_f64(params.tol)),
        ("max_outer".to_string(), params.max_outer.to_string()),
        ("guard".to_string(), on_off(params.feasibility_guard).to_string()),
        ("cg_rel_tol".to_string(), fmt_f64(params.cg.rel_tol)),
        ("cg_max_iter".to_string(), params.cg.max_iter.to_string()),
        ("cg_warm_start".to_string(), params.cg.warm_start.to_string()),
    ];
    Ok(SingleRun {
        problem: id.into(),
        kind: ProblemKind::HeleShaw,
        spec,
        params: params_list,
        solution: sol.u_phys.clone(),
        report: sol.report,
        boundary,
        metrics,
    })
}

/// Minimal-surface step: an explicit `tau` (and optional `lipschitz`) from
/// the configuration, else the stable grid default.
fn nonlinear_settings(cfg: &RunConfig, spec: &GridSpec, lambda: f64, tol: f64) -> NesterovSettings {
    let mut nes = match cfg.tau {
        Some(tau) => NesterovSettings::with_step(tau, tol),
        None => NesterovSettings::for_grid(spec, lambda, tol),
    };
    if let Some(l) = cfg.lipschitz {
        nes.lipschitz = l;
    }
    if let Some(m) = cfg.max_inner {
        nes.max_inner = m;
    }
    nes
}

fn apply_common(cfg: &RunConfig, params: &mut SolverParams) {
    if let Some(mu) = cfg.mu {
        params.mu = mu;
    }
    if let Some(l) = cfg.lambda {
        params.lambda = l;
    }
    if let Some(t) = cfg.tol {
        params.tol = t;
    }
    if let Some(m) = cfg.max_outer {
        params.max_outer = m;
    }
    params.feasibility_guard = cfg.guard;
}

fn obstacle_params(p: &SolverParams, choice: PenaltyChoice) -> Vec<(String, String)> {
    vec![
        ("mu".into(), fmt_f64(p.mu)),
        ("penalty".into(), penalty_name(choice).into()),
        ("lambda".into(), fmt_f64(p.lambda)),
        ("tol".into(), fmt_f64(p.tol)),
        ("max_outer".into(), p.max_outer.to_string()),
        ("guard".into(), on_off(p.feasibility_guard).into()),
        ("cg_rel_tol".into(), fmt_f64(p.cg.rel_tol)),
        ("cg_max_iter".into(), p.cg.max_iter.to_string()),
        ("cg_warm_start".into(), p.cg.warm_start.to_string()),
    ]
}

fn penalty_name(c: PenaltyChoice) -> &'static str {
    match c {
        PenaltyChoice::Preset => "preset",
        PenaltyChoice::Auto => "auto",
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn metric(name: &str, value: f64) -> Metric {
    Metric {
        name: name.into(),
        value,
        against: None,
    }
}

fn against(name: &str, value: f64, origin: ReferenceOrigin) -> Metric {
    Metric {
        name: name.into(),
        value,
        against: Some(origin),
    }
}

fn push_field_error(metrics: &mut Vec<Metric>, u: &GridFunction, reference: Option<&Reference>) -> Result<()> {
    if let Some((field, origin)) = reference.and_then(|r| r.field.as_ref()) {
        metrics.push(against("linf_error", linf_diff(u, field)?, *origin));
    }
    Ok(())
}

/// Extent of the nodes flagged in a 1D 0/1 mask.
fn active_interval(mask: &GridFunction) -> Option<(f64, f64)> {
    let spec = mask.spec();
    let idx: Vec<usize> = (0..spec.len()).filter(|&k| mask.get(k) > 0.5).collect();
    Some((spec.coord(0, *idx.first()?), spec.coord(0, *idx.last()?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_of_exact_power_laws() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let lin: Vec<_> = hs.iter().map(|&h| (h, h)).collect();
        assert!((fit_rate(&lin).unwrap() - 1.0).abs() < 1e-12);
        let p: Vec<_> = hs.iter().map(|&h| (h, 3.0 * h.powf(0.8))).collect();
        assert!((fit_rate(&p).unwrap() - 0.8).abs() < 1e-6);
    }

    #[test]
    fn rate_of_table_values() {
        let e = [0.0238, 0.0124, 0.0083, 0.0044];
        let pts: Vec<_> = [128.0, 256.0, 512.0, 1024.0]
            .iter()
            .zip(e)
            .map(|(n, e)| (1.0 / n, e))
            .collect();
        let r = fit_rate(&pts).unwrap();
        assert!((r - 0.8).abs() < 0.03, "{r}");
    }

    #[test]
    fn rate_rejects_degenerate_input() {
        assert!(fit_rate(&[(0.1, 0.1), (0.05, 0.05)]).is_err());
        assert!(fit_rate(&[(0.1, 0.1), (0.05, 0.0), (0.025, 0.01)]).is_err());
        assert!(fit_rate(&[(0.1, 0.1), (0.1, 0.05), (0.1, 0.01)]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::UnknownProblem("x".into())), 2);
        assert_eq!(
            exit_code(&Error::Diverged {
                iteration: 1,
                reason: String::new(),
                history: vec![]
            }),
            1
        );
    }

    #[test]
    fn single_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::for_problem("phi1_1d");
        cfg.n = Some(65);
        cfg.out = dir.path().to_path_buf();
        let s = run(&cfg).unwrap();
        assert!(s.all_converged());
        for f in ["solution.csv", "history.csv", "boundary.csv", "report.txt"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(report.contains("mu = 3.0000000000000000e2"));
        assert!(report.contains("lambda = 4.5000000000000000e1"));
        assert!(report.contains("linf_error = "));
        assert!(report.contains("[analytic]"));
    }

    #[test]
    fn refine_fits_a_rate() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::for_problem("two_phase_sym");
        cfg.out = dir.path().to_path_buf();
        cfg.tol = Some(1e-7);
        cfg.study = StudyMode::Refine(vec![33, 65, 129]);
        let s = run(&cfg).unwrap();
        assert_eq!(s.runs.len(), 3);
        assert!(s.rate.is_some());
        assert!(dir.path().join("study.csv").exists());
        assert!(dir.path().join("n65").join("solution.csv").exists());
    }

    #[test]
    fn time_sweep_rejects_other_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::for_problem("phi1_1d");
        cfg.n = Some(33);
        cfg.out = dir.path().to_path_buf();
        cfg.study = StudyMode::TimeSweep(vec![0.1]);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn custom_hele_shaw_sweep_grows() {
        let dir = tempfile::tempdir().unwrap();
        let text = "problem = hele_shaw\ndomain = -3 3\nn = 49\nslot = circle 0 0 0.5\n\
                    initial_fluid = circle 0 0 0.8\nt = 0.05\ntol = 1e-5\nstudy = time-sweep 0.02,0.08";
        let mut cfg = RunConfig::from_pairs(&crate::config::parse_pairs(text).unwrap()).unwrap();
        cfg.out = dir.path().to_path_buf();
        let s = run(&cfg).unwrap();
        let r0 = s.runs[0].metric("radius_area").unwrap();
        let r1 = s.runs[1].metric("radius_area").unwrap();
        assert!(r1 > r0, "{r0} {r1}");
    }
}
