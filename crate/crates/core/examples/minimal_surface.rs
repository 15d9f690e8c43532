//! Minimal-surface obstacle problem in 1D: the graph over an oscillating
//! obstacle between u(0) = 5 and u(1) = 10. Off the contact set the solution
//! is a straight line.
use l1_obstacle::nonlinear::{max_free_second_difference, solve_nonlinear_obstacle, NesterovSettings};
use l1_obstacle::obstacle::SolverParams;
use l1_obstacle::problems::{self, ProblemSpec};

fn main() -> l1_obstacle::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(129);
    let spec = problems::lookup("minimal_surface_osc")?.grid(n)?;
    let ProblemSpec::Nonlinear(problem) = problems::build("minimal_surface_osc", &spec)? else { unreachable!() };

    let params = SolverParams::new(1.1e3, 5.3).with_tol(1e-6).with_max_outer(200_000);
    let inner = NesterovSettings::for_grid(&spec, params.lambda, params.tol);
    let rep = solve_nonlinear_obstacle(&problem, &params, &inner)?;

    let contact = rep.active_set.as_ref().unwrap();
    println!(
        "converged {} ({} outer, {} inner steps), feasibility {:.1e}",
        rep.converged, rep.outer_iters, rep.inner_iters, rep.feasibility_violation
    );
    println!("largest second difference off contact: {:.2e}", max_free_second_difference(&rep.u, contact)?);
    Ok(())
}
