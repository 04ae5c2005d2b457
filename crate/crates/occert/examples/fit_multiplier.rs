//! Recover the Lagrange multiplier of each builtin instance from the
//! stationarity system and check the pointwise first-order conditions:
//! sign structure of the switching function, jump identities at the
//! junctions, and strict complementarity.
//!
//! ```bash
//! cargo run --example fit_multiplier
//! ```

use occert::multiplier;
use occert::registry;
use occert::tolerances::Tolerances;

fn main() -> occert::Result<()> {
    let tol = Tolerances::default();
    for name in ["REG1", "CB1"] {
        let (spec, traj, seed) = registry::registry_get(name)?;
        let (lam, info) = multiplier::fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol)?;
        println!("== {name}");
        println!("   fit: residual {:.3e} after {} iterations (β rescaled: {})", info.residual, info.iterations, info.rescaled_to_unit_beta);
        println!("   β = {}, Ψ = {:?}", lam.beta, lam.psi.as_slice());
        println!("   boundary defect |−p0 − D_x0 ℓ| = {:.3e}", lam.boundary_defect.amax());
        for atom in &lam.measure.atoms {
            println!("   measure atom at t = {}: mass {:.6}", atom.time, atom.mass);
        }
        let c_nu: Vec<f64> = lam
            .measure
            .nu
            .iter()
            .copied()
            .filter(|v| *v != 0.0)
            .take(3)
            .collect();
        println!("   density on the constrained arc (first nodes): {c_nu:?}");

        let st = multiplier::check_stationarity(&spec, &traj, &lam, &tol);
        println!("   stationarity: {:?} (worst violation {:.3e}, tol {:.3e})", st.verdict, st.worst, st.tolerance);
        for arc in &st.arcs {
            println!("     {:?} [{}, {}]: worst {:.3e}", arc.kind, arc.t_start, arc.t_end, arc.worst);
        }

        let jumps = multiplier::check_jumps(&spec, &traj, &lam, &tol)?;
        println!("   jump conditions: {:?}", jumps.verdict);
        for j in &jumps.junctions {
            println!(
                "     t = {}: [u] = {:+.3}, [μ] = {:+.4}, ‖[p] + [μ]g'‖ = {:.2e}, [u][H_u] = {:.2e}",
                j.time, j.control_jump, j.measure_jump, j.costate_identity, j.orthogonality
            );
        }

        let comp = multiplier::check_strict_complementarity(&spec, &traj, &[&lam], &tol)?;
        println!(
            "   strict complementarity: {:?} (bang margin {:?}, endpoint margin {:?}, support margin {:?})",
            comp.verdict, comp.bang_margin, comp.endpoint_margin, comp.support_margin
        );
        println!();
    }
    Ok(())
}
