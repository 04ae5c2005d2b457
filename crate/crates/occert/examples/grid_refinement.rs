//! Convergence study: the cone eigenvalues and the measure density converge
//! at second order under grid doubling (the one-step state scheme is
//! fourth-order, but the piecewise-constant control representation caps the
//! overall rate at two).
//!
//! ```bash
//! cargo run --release --example grid_refinement
//! ```

use nalgebra::RowDVector;
use occert::instances;
use occert::multiplier::fit_multiplier;
use occert::second_order::{build_cone, necessary_test, ConeKind};
use occert::tolerances::Tolerances;

fn main() -> occert::Result<()> {
    let tol = Tolerances::default();

    println!("smallest pencil eigenvalue on the singular chain (exact limit 2):");
    let spec = instances::singular_chain_spec(1.0);
    let mut prev: Option<f64> = None;
    let mut prev_d: Option<f64> = None;
    for n in [50usize, 100, 200, 400, 800] {
        let traj = instances::singular_chain_trajectory(&spec, n)?;
        let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol)?;
        let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol)?;
        let mu = necessary_test(&spec, &traj, &cone, &tol)?.min_eigenvalue.unwrap();
        match prev {
            None => println!("  N = {n:4}: mu_min = {mu:.8}"),
            Some(p) => {
                let d = (p - mu).abs();
                match prev_d {
                    None => println!("  N = {n:4}: mu_min = {mu:.8}  |Δ| = {d:.3e}"),
                    Some(pd) => println!("  N = {n:4}: mu_min = {mu:.8}  |Δ| = {d:.3e}  ratio = {:.2}", pd / d),
                }
                prev_d = Some(d);
            }
        }
        prev = Some(mu);
    }

    println!("\nmeasure density on the curved-constraint instance (exact ν(t) = (1+t)²/4):");
    let spec = instances::curved_constraint_spec();
    let mut tol_c = tol.clone();
    tol_c.tol_g = 1e-3;
    let mut paths: Vec<Vec<f64>> = Vec::new();
    let grids = [250usize, 500, 1000, 2000];
    for &n in &grids {
        let traj = instances::curved_constraint_trajectory(&spec, n)?;
        let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(2), &[], &tol_c)?;
        paths.push(lam.measure.nu.clone());
    }
    let mut prev_d: Option<f64> = None;
    for k in 0..paths.len() - 1 {
        let mut diff: f64 = 0.0;
        for (i, c) in paths[k].iter().enumerate() {
            diff = diff.max((c - paths[k + 1][2 * i]).abs());
        }
        match prev_d {
            None => println!("  N = {:4} vs {:4}: sup|Δν| = {diff:.3e}", grids[k], grids[k + 1]),
            Some(pd) => println!(
                "  N = {:4} vs {:4}: sup|Δν| = {diff:.3e}  ratio = {:.2}",
                grids[k],
                grids[k + 1],
                pd / diff
            ),
        }
        prev_d = Some(diff);
    }
    let exact_end = (1.0_f64 + 1.0).powi(2) / 4.0;
    println!("  ν(T) at the finest grid: {:.8} (exact {exact_end})", paths.last().unwrap().last().unwrap());
    Ok(())
}
