//! Hele-Shaw flow from a square slot into a rhombus-shaped fluid region.
//! Writes the free boundary at a few times to `hele_shaw_shapes/`.
use l1_obstacle::grid::GridSpec;
use l1_obstacle::hele_shaw::{solve_hele_shaw, DoublePenaltyParams, HeleShawSetup};
use l1_obstacle::shapes::{rasterize, Shape};

fn main() -> l1_obstacle::Result<()> {
    let spec = GridSpec::square(-4.0, 4.0, 129)?;
    let slot = rasterize(&spec, &[Shape::rect([-0.4, -0.4], [0.4, 0.4])?]);
    let fluid = rasterize(
        &spec,
        &[Shape::polygon(vec![[1.5, 0.0], [0.0, 1.0], [-1.5, 0.0], [0.0, -1.0]])?],
    );
    let out = std::path::Path::new("hele_shaw_shapes");
    std::fs::create_dir_all(out)?;

    let params = DoublePenaltyParams { tol: 1e-5, ..DoublePenaltyParams::default() };
    for (i, t) in [0.05, 0.1, 0.2, 0.4].into_iter().enumerate() {
        let setup = HeleShawSetup::new(slot.clone(), fluid.clone(), t)?;
        let sol = solve_hele_shaw(&setup, &params)?;
        let fb = sol.free_boundary(10.0 * params.tol)?;
        fb.write_csv(out.join(format!("boundary_t{i}.csv")))?;
        let r = sol.area_radius(10.0 * params.tol);
        println!("t = {t}: fluid area {:.3}, {} iterations", std::f64::consts::PI * r * r, sol.report.outer_iters);
    }
    Ok(())
}
