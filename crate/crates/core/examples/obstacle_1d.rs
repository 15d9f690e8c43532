//! A membrane pushed up by a piecewise-quadratic obstacle on [0, 1].
//!
//! Solves the penalized problem with the split-Bregman loop and compares
//! against the closed-form solution.
use l1_obstacle::obstacle::{solve_linear_obstacle, SolverParams};
use l1_obstacle::penalty::mu_lower_bound;
use l1_obstacle::problems::{self, ProblemSpec};

fn main() -> l1_obstacle::Result<()> {
    let spec = problems::lookup("phi1_1d")?.grid(256)?;
    let ProblemSpec::Obstacle(problem) = problems::build("phi1_1d", &spec)? else { unreachable!() };

    let bound = mu_lower_bound(&problem.phi, &problem.bc)?;
    println!("smallest exact penalty on this grid: {:.1}", bound.mu_min);

    let params = SolverParams::new(300.0, 45.0).with_tol(1e-6);
    let rep = solve_linear_obstacle(&problem, &params, None)?;
    let exact = problems::evaluate_reference("phi1_1d", &spec)?.field.unwrap().0;

    println!(
        "converged {} after {} iterations, feasibility {:.1e}, max error {:.2e}",
        rep.converged,
        rep.outer_iters,
        rep.feasibility_violation,
        l1_obstacle::grid::linf_diff(&rep.u, &exact)?
    );
    let contact = rep.active_set.as_ref().unwrap();
    let nodes: Vec<f64> = (0..spec.len()).filter(|&k| contact.get(k) > 0.5).map(|k| spec.coord(0, k)).collect();
    println!("contact set [{:.4}, {:.4}]", nodes[0], nodes[nodes.len() - 1]);
    Ok(())
}
