//! Hele-Shaw flow injected through a disc: radius of the fluid region at
//! t = 0.25 against the radially symmetric solution.
use l1_obstacle::hele_shaw::{exact_circle_radius, solve_hele_shaw, DoublePenaltyParams, HeleShawSetup};
use l1_obstacle::grid::GridSpec;
use l1_obstacle::shapes::{rasterize, Shape};

fn main() -> l1_obstacle::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(128);
    let t = 0.25;
    let spec = GridSpec::square(-5.0, 5.0, n)?;
    let slot = rasterize(&spec, &[Shape::circle([0.0, 0.0], 1.0)?]);
    let fluid = rasterize(&spec, &[Shape::circle([0.0, 0.0], 2f64.sqrt())?]);
    let setup = HeleShawSetup::new(slot, fluid, t)?;

    let params = DoublePenaltyParams::default();
    let sol = solve_hele_shaw(&setup, &params)?;
    let eps = 10.0 * params.tol;
    let exact = exact_circle_radius(t, 1.0, 2f64.sqrt())?;
    let r = sol.area_radius(eps);
    let boundary = sol.free_boundary(eps)?;
    println!(
        "n = {n}: {} iterations, radius {r:.4} (exact {exact:.4}, error {:.4}), contour mean {:.4}",
        sol.report.outer_iters,
        (r - exact).abs(),
        boundary.mean_radius([0.0, 0.0]).unwrap_or(f64::NAN)
    );
    Ok(())
}
