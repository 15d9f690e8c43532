use proptest::prelude::*;

use l1_obstacle::elliptic::{apply_screened, screened_poisson_solve, CgSettings};
use l1_obstacle::grid::{dirichlet_energy, laplacian, linf_diff, DirichletBC, GridFunction, GridSpec};
use l1_obstacle::nonlinear::NesterovSettings;
use l1_obstacle::obstacle::{solve_linear_obstacle, ObstacleProblem, SolverParams};
use l1_obstacle::penalty::{mu_lower_bound, shrink, shrink_plus};
use l1_obstacle::two_phase::{solve_two_phase, TwoPhaseProblem};

fn field(spec: &GridSpec, vals: &[f64], zero_boundary: bool) -> GridFunction {
    let mut u = GridFunction::from_values(spec, vals[..spec.len()].to_vec()).unwrap();
    if zero_boundary {
        for k in spec.boundary_indices() {
            u.values_mut()[k] = 0.0;
        }
    }
    u
}

fn dot(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

fn spec_for(dim: usize, n: usize) -> GridSpec {
    if dim == 1 {
        GridSpec::interval(0.0, 1.0, n).unwrap()
    } else {
        GridSpec::square(0.0, 1.0, n).unwrap()
    }
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summation_by_parts(dim in 1usize..=2, a in values(256), b in values(256)) {
        let spec = spec_for(dim, 16);
        let (u, w) = (field(&spec, &a, true), field(&spec, &b, true));
        let sum = u.zip_map(&w, |x, y| x + y).unwrap();
        let bilinear = dirichlet_energy(&sum) - dirichlet_energy(&u) - dirichlet_energy(&w);
        let lap = laplacian(&u, &DirichletBC::zero(&spec)).unwrap();
        let rhs = -spec.cell_volume() * dot(&lap, &w);
        prop_assert!((bilinear - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn laplacian_exact_on_quadratics(c in prop::array::uniform6(-3.0..3.0f64)) {
        let spec = GridSpec::square(-1.0, 2.0, 13).unwrap();
        let q = GridFunction::from_fn(&spec, |p| {
            let (x, y) = (p[0], p[1]);
            c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
        });
        let lap = laplacian(&q, &DirichletBC::from_field(&q)).unwrap();
        let exact = 2.0 * (c[3] + c[5]);
        let mut worst: f64 = 0.0;
        spec.for_each_interior(|k| worst = worst.max((lap.get(k) - exact).abs()));
        prop_assert!(worst <= 1e-9);
    }

    #[test]
    fn linf_is_a_metric(a in values(40), b in values(40), c in values(40)) {
        let spec = GridSpec::interval(0.0, 1.0, 40).unwrap();
        let (x, y, z) = (field(&spec, &a, false), field(&spec, &b, false), field(&spec, &c, false));
        let d = |p: &GridFunction, q: &GridFunction| linf_diff(p, q).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-15);
    }

    #[test]
    fn bc_apply_is_idempotent(a in values(100), b in values(100)) {
        let spec = GridSpec::square(0.0, 1.0, 10).unwrap();
        let bc = DirichletBC::from_field(&field(&spec, &b, false));
        let mut u = field(&spec, &a, false);
        bc.apply(&mut u).unwrap();
        let once = u.clone();
        bc.apply(&mut u).unwrap();
        prop_assert_eq!(once.values(), u.values());
    }

    #[test]
    fn screened_operator_is_symmetric_and_coercive(
        dim in 1usize..=2, lambda in 0.01..100.0f64, a in values(144), b in values(144)
    ) {
        let spec = spec_for(dim, 12);
        let (w, z) = (field(&spec, &a, true), field(&spec, &b, true));
        let (aw, az) = (apply_screened(&w, lambda), apply_screened(&z, lambda));
        let (l, r) = (dot(&aw, &z), dot(&w, &az));
        prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
        prop_assert!(dot(&aw, &w) >= lambda * dot(&w, &w) * (1.0 - 1e-12));
    }

    #[test]
    fn cg_does_not_increase_the_residual(lambda in 0.0..50.0f64, a in values(400), iters in 1usize..30) {
        let spec = GridSpec::square(0.0, 1.0, 20).unwrap();
        let rhs = field(&spec, &a, true);
        let settings = CgSettings { rel_tol: 1e-10, max_iter: iters, warm_start: true };
        let zero = GridFunction::zeros(&spec);
        let sol = screened_poisson_solve(&rhs, &DirichletBC::zero(&spec), lambda, &zero, &settings).unwrap();
        prop_assert!(sol.stats.rel_residual <= 1.0 + 1e-12);
    }

    #[test]
    fn shrinks_are_monotone_and_nonexpansive(z1 in -10.0..10.0f64, z2 in -10.0..10.0f64, c in 0.0..5.0f64) {
        for s in [shrink as fn(f64, f64) -> f64, shrink_plus] {
            let (a, b) = (s(z1, c), s(z2, c));
            prop_assert!((a - b).abs() <= (z1 - z2).abs() + 1e-15);
            if z1 <= z2 {
                prop_assert!(a <= b);
            }
        }
        prop_assert_eq!(shrink(z1, 0.0), z1);
        prop_assert_eq!(shrink_plus(z1, 0.0), z1);
    }

    #[test]
    fn penalty_bound_is_nonnegative(a in values(81)) {
        let spec = GridSpec::square(0.0, 1.0, 9).unwrap();
        let phi = field(&spec, &a, false);
        let bound = mu_lower_bound(&phi, &DirichletBC::from_field(&phi)).unwrap();
        prop_assert!(bound.mu_min >= 0.0);
        prop_assert!(bound.applied() >= bound.mu_min);
    }

    #[test]
    fn nesterov_momentum_in_unit_interval(n in 9usize..600, lambda in 0.1..1e4f64) {
        let spec = GridSpec::interval(0.0, 1.0, n).unwrap();
        let s = NesterovSettings::for_grid(&spec, lambda, 1e-6);
        let m = s.momentum(lambda);
        prop_assert!((0.0..1.0).contains(&m));
        prop_assert!(s.tau <= 1.0 / s.lipschitz * (1.0 + 1e-15));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn obstacle_solution_obeys_maximum_principle(
        bumps in prop::collection::vec((0.1..0.9f64, -1.0..2.0f64), 1..4),
        g0 in 2.0..3.0f64,
        g1 in 2.0..3.0f64,
    ) {
        let spec = GridSpec::interval(0.0, 1.0, 65).unwrap();
        let phi = GridFunction::from_fn(&spec, |p| {
            bumps.iter().map(|(c, a)| a * (-(p[0] - c).powi(2) / 0.01).exp()).sum::<f64>() - 0.5
        });
        let bc = DirichletBC::from_fn(&spec, |p| if p[0] < 0.5 { g0 } else { g1 });
        let problem = ObstacleProblem::new(phi.clone(), bc).unwrap();
        let params = SolverParams::auto(&problem).unwrap().with_tol(1e-8).with_max_outer(200_000);
        let rep = solve_linear_obstacle(&problem, &params, None).unwrap();
        let tol = 10.0 * params.tol;
        prop_assert!(rep.converged);
        prop_assert!(rep.u.max() <= phi.max().max(g0.max(g1)) + tol);
        prop_assert!(rep.u.min() >= g0.min(g1) - tol);
        prop_assert!(rep.feasibility_violation <= tol);
    }

    #[test]
    fn symmetric_two_phase_is_odd(mu in 1.0..10.0f64, g in 0.5..2.0f64) {
        let spec = GridSpec::interval(-1.0, 1.0, 129).unwrap();
        let tol = 1e-9;
        let params = SolverParams::new(1.0, 0.01 / (spec.h() * spec.h())).with_tol(tol).with_max_outer(200_000);
        let bc = DirichletBC::from_fn(&spec, |p| g * p[0].signum());
        let p = TwoPhaseProblem::uniform(&spec, mu, mu, bc).unwrap();
        let u = solve_two_phase(&p, &params).unwrap().u;
        let n = spec.len();
        let odd = (0..n).map(|k| (u.get(k) + u.get(n - 1 - k)).abs()).fold(0.0, f64::max);
        prop_assert!(odd <= 10.0 * tol);
    }
}

/// The iteration commutes with scaling the weights and boundary data, so the
/// iterates agree after any fixed number of steps.
#[test]
fn two_phase_scales_with_its_data() {
    let spec = GridSpec::interval(-1.0, 1.0, 129).unwrap();
    let params = SolverParams::new(1.0, 0.01 / (spec.h() * spec.h())).with_tol(1e-300).with_max_outer(3000);
    let solve = |s: f64| {
        let bc = DirichletBC::from_fn(&spec, |p| s * p[0].signum());
        let p = TwoPhaseProblem::uniform(&spec, 8.0 * s, 8.0 * s, bc).unwrap();
        solve_two_phase(&p, &params).unwrap()
    };
    let (one, two) = (solve(1.0), solve(2.0));
    assert_eq!(one.outer_iters, 3000);
    let d = linf_diff(&two.u.map(|x| x / 2.0), &one.u).unwrap();
    assert!(d <= 1e-14, "scaled difference {d:e}");
    let d = linf_diff(&solve(0.3).u.map(|x| x / 0.3), &one.u).unwrap();
    assert!(d <= 1e-12, "scaled difference {d:e}");
}

/// Dense Gaussian elimination on the interior unknowns of `(λI - Δ_h)`.
fn dense_screened_solve(spec: &GridSpec, lambda: f64, rhs: &GridFunction) -> Vec<f64> {
    let interior: Vec<usize> = (0..spec.len()).filter(|&k| !spec.is_boundary(k)).collect();
    let m = interior.len();
    let mut pos = vec![usize::MAX; spec.len()];
    for (i, &k) in interior.iter().enumerate() {
        pos[k] = i;
    }
    let inv_h2 = 1.0 / (spec.h() * spec.h());
    let mut a = vec![0.0; m * m];
    let mut b: Vec<f64> = interior.iter().map(|&k| rhs.get(k)).collect();
    for (i, &k) in interior.iter().enumerate() {
        a[i * m + i] = lambda + 2.0 * spec.dim() as f64 * inv_h2;
        for axis in 0..spec.dim() {
            let s = spec.stride(axis);
            for nb in [k - s, k + s] {
                if pos[nb] != usize::MAX {
                    a[i * m + pos[nb]] = -inv_h2;
                }
            }
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&p, &q| a[p * m + col].abs().total_cmp(&a[q * m + col].abs())).unwrap();
        if piv != col {
            for j in 0..m {
                a.swap(piv * m + j, col * m + j);
            }
            b.swap(piv, col);
        }
        for r in col + 1..m {
            let f = a[r * m + col] / a[col * m + col];
            if f != 0.0 {
                for j in col..m {
                    a[r * m + j] -= f * a[col * m + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|j| a[r * m + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * m + r];
    }
    let mut out = vec![0.0; spec.len()];
    for (i, &k) in interior.iter().enumerate() {
        out[k] = x[i];
    }
    out
}

#[test]
fn cg_matches_dense_elimination() {
    let spec = GridSpec::square(0.0, 1.0, 33).unwrap();
    let rhs = GridFunction::from_fn(&spec, |p| (3.0 * p[0]).sin() * (1.0 + p[1] * p[1]));
    let rhs = field(&spec, rhs.values(), true);
    for lambda in [0.0, 5.0, 150.0] {
        let exact = dense_screened_solve(&spec, lambda, &rhs);
        let zero = GridFunction::zeros(&spec);
        let cg = screened_poisson_solve(&rhs, &DirichletBC::zero(&spec), lambda, &zero, &CgSettings::accurate()).unwrap();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = cg.u.values().iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-9 * scale, "lambda {lambda}: {err}");
    }
}

#[test]
fn minimal_surface_objective_descends() {
    use l1_obstacle::nonlinear::{solve_nonlinear_obstacle, NesterovSettings};
    use l1_obstacle::problems::{self, ProblemSpec};
    let spec = problems::lookup("minimal_surface_osc").unwrap().grid(65).unwrap();
    let ProblemSpec::Nonlinear(p) = problems::build("minimal_surface_osc", &spec).unwrap() else { panic!() };
    let params = SolverParams::new(1.1e3, 5.3).with_tol(1e-6).with_max_outer(200_000);
    let rep = solve_nonlinear_obstacle(&p, &params, &NesterovSettings::for_grid(&spec, 5.3, 1e-6)).unwrap();
    assert!(rep.converged);
    // split Bregman is not a descent method; the early transient is excluded
    let worst = rep.history[20..]
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(worst <= 1e-10, "objective rose by {worst:e}");
    assert!(rep.feasibility_violation <= 1e-4);
}
