//! File formats round trip: emit the builtin problem/trajectory documents,
//! parse them back, run the full pipeline on the parsed copies, and dump the
//! per-node CSV and the JSON report.
//!
//! ```bash
//! cargo run --example problem_files
//! ```

use occert::files;
use occert::pipeline::{run_certify, CertifyConfig, MultiplierSource, Order, ProblemSource};
use occert::registry;
use occert::report;
use occert::tolerances::Tolerances;

fn main() -> occert::Result<()> {
    let dir = std::env::temp_dir().join("occert-files-example");
    std::fs::create_dir_all(&dir).ok();

    let (spec, traj, _) = registry::registry_get_on("REG1", 100)?;
    let ppath = dir.join("reg1.problem.toml");
    let tpath = dir.join("reg1.trajectory.toml");
    files::save(&ppath, &files::problem_to_string(&spec))?;
    files::save(&tpath, &files::trajectory_to_string(&traj))?;
    println!("wrote {}", ppath.display());
    println!("wrote {}", tpath.display());

    // byte-identical canonical serialization
    let text = std::fs::read_to_string(&ppath).unwrap();
    let reparsed = files::problem_from_str(&text)?;
    assert_eq!(files::problem_to_string(&reparsed), text);
    println!("problem file round trip: byte-identical");

    // full pipeline from the files
    let cfg = CertifyConfig {
        problem: ProblemSource::File(ppath),
        trajectory: Some(tpath),
        multiplier: MultiplierSource::Fit,
        order: Order::Second,
        grid: None,
        tolerances: Tolerances::default(),
        emit_cone: false,
    };
    let out = run_certify(&cfg)?;
    println!("pipeline verdicts:");
    for (name, verdict) in &out.report.verdicts {
        println!("  {name}: {verdict:?}");
    }
    println!("exit code: {}", out.report.exit_code);

    let mpath = dir.join("reg1.multiplier.toml");
    if let Some(lam) = &out.multiplier {
        files::save(&mpath, &files::multiplier_to_string(lam))?;
        println!("wrote {}", mpath.display());
        let csv = dir.join("reg1.nodes.csv");
        report::write_csv(&csv, &out.spec, &out.trajectory, lam)?;
        println!("wrote {}", csv.display());
    }
    let rpath = dir.join("reg1.report.json");
    files::save(&rpath, &out.report.to_json())?;
    println!("wrote {}", rpath.display());
    Ok(())
}
