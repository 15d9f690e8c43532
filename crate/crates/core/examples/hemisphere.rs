//! Membrane over a hemisphere on [-2, 2]², with the contact radius compared
//! to the root of r²(1 - log(r/2)) = 1.
use l1_obstacle::contour::area_radius;
use l1_obstacle::obstacle::{solve_linear_obstacle, SolverParams};
use l1_obstacle::problems::{self, ProblemSpec};

fn main() -> l1_obstacle::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let spec = problems::lookup("hemisphere_2d")?.grid(n)?;
    let h = spec.h();
    let ProblemSpec::Obstacle(problem) = problems::build("hemisphere_2d", &spec)? else { unreachable!() };

    // the obstacle jumps at r = 1, so the exact penalty grows like 1/h²
    let params = SolverParams::new(10.0 / (h * h), 20.3).with_tol(1e-6);
    let rep = solve_linear_obstacle(&problem, &params, None)?;

    let r = area_radius(rep.active_set.as_ref().unwrap());
    let exact = problems::hemisphere_contact_radius();
    println!("n = {n}: {} iterations, contact radius {r:.4} (exact {exact:.4}, {:.2}h off)", rep.outer_iters, (r - exact).abs() / h);
    Ok(())
}
