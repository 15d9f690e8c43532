//! Two-phase membrane u'' = μ₁χ{u>0} - μ₂χ{u<0} on [-1, 1] with u(±1) = ±1.
//! Equal weights give a flat zero set; unequal weights shrink it to a point.
use l1_obstacle::obstacle::SolverParams;
use l1_obstacle::contour::contour;
use l1_obstacle::grid::{DirichletBC, GridSpec};
use l1_obstacle::two_phase::{solve_two_phase, TwoPhaseProblem};

fn main() -> l1_obstacle::Result<()> {
    let spec = GridSpec::interval(-1.0, 1.0, 513)?;
    let bc = DirichletBC::from_fn(&spec, |p| p[0].signum());
    let params = SolverParams::new(1.0, 204.8).with_tol(1e-6);

    for (mu1, mu2) in [(8.0, 8.0), (2.0, 1.0)] {
        let p = TwoPhaseProblem::uniform(&spec, mu1, mu2, bc.clone())?;
        let rep = solve_two_phase(&p, &params)?;
        // nodes where the split variable was shrunk to exactly zero
        let zero = rep.active_set.as_ref().unwrap();
        let nodes: Vec<f64> = (0..spec.len()).filter(|&k| zero.get(k) > 0.5).map(|k| spec.coord(0, k)).collect();
        print!("μ = ({mu1}, {mu2}): {} iterations, ", rep.outer_iters);
        match (nodes.first(), nodes.last()) {
            (Some(a), Some(b)) if b > a => println!("zero set [{a:.4}, {b:.4}]"),
            _ => println!("sign change at {:.4?}", contour(&rep.u, 0.0).crossings()),
        }
    }
    Ok(())
}
