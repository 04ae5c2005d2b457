//! Load the builtin instances, validate their declared arc structures
//! against the geometric hypotheses, and inspect the first-order data.
//!
//! ```bash
//! cargo run --example validate_structure
//! ```

use occert::registry;
use occert::tolerances::Tolerances;
use occert::trajectory::{self, ArcKind};

fn main() -> occert::Result<()> {
    let tol = Tolerances::default();
    for name in ["REG1", "CB1"] {
        let (spec, traj, _) = registry::registry_get(name)?;
        println!("== {name}: n = {}, T = {}, u ∈ [{}, {}]", spec.n, spec.horizon, spec.u_min, spec.u_max);
        println!("   arcs:");
        for arc in traj.arcs.arcs() {
            println!("     {:?} on [{}, {}]", arc.kind, arc.t_start, arc.t_end);
        }

        let residual = traj.dynamics_residual(&spec)?;
        println!("   one-step dynamics defect: {residual:.3e}");

        let findings = trajectory::validate_arcs(&spec, &traj, &tol)?;
        let violations = findings.iter().filter(|f| trajectory::finding_is_violation(f)).count();
        println!("   structure findings: {} ({} violations)", findings.len(), violations);
        for f in &findings {
            println!("     {f:?}");
        }

        match trajectory::check_first_order(&spec, &traj) {
            Some(margin) => println!("   first-order margin min |g'f1| on C: {margin}"),
            None => println!("   no constrained arc: first-order condition vacuous"),
        }

        // control jumps at the junctions, taken as one-sided arc-law limits
        for j in traj.junctions() {
            let ul = traj.control_limit(&spec, j.node, true)?;
            let ur = traj.control_limit(&spec, j.node, false)?;
            println!(
                "   junction t = {}: {:?} → {:?}, [u] = {:+.3e}",
                j.time,
                j.left,
                j.right,
                ur - ul
            );
        }

        // the feedback law that holds the constraint, sampled mid-arc
        for arc in traj.arcs.arcs().iter().filter(|a| a.kind == ArcKind::C) {
            let t = 0.5 * (arc.t_start + arc.t_end);
            let node = traj
                .grid
                .nodes()
                .iter()
                .position(|&s| s >= t)
                .unwrap();
            let u = trajectory::constrained_control(&spec, traj.x[node].as_slice())?;
            println!("   boundary feedback at t ≈ {:.3}: u = {u:.6}", traj.grid.nodes()[node]);
        }
        println!();
    }
    Ok(())
}
