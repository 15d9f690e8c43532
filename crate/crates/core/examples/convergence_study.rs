//! Grid refinement through the harness: the same machinery the CLI's
//! `study` subcommand uses, with artifacts under `study_phi2/`.
use l1_obstacle::config::{RunConfig, StudyMode};
use l1_obstacle::harness::run;

fn main() -> l1_obstacle::Result<()> {
    let mut cfg = RunConfig::for_problem("phi2_1d");
    cfg.study = StudyMode::Refine(vec![64, 128, 256, 512]);
    cfg.tol = Some(1e-9);
    cfg.max_outer = Some(1_000_000);
    cfg.out = "study_phi2".into();
    let summary = run(&cfg)?;
    for r in &summary.runs {
        println!("n = {:>4}: error {:.3e}", r.spec.n(0), r.study_error().unwrap());
    }
    println!("fitted rate {:.2}", summary.rate.unwrap());
    Ok(())
}
