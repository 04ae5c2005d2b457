//! Second-order necessary test on the strict critical cone: the builtin
//! instances (trivial cones) and a constructed singular-arc chain whose
//! transformed Legendre coefficient is negative, producing a FAIL with an
//! explicit violating direction.
//!
//! ```bash
//! cargo run --example necessary_conditions
//! ```

use nalgebra::RowDVector;
use occert::instances;
use occert::multiplier::fit_multiplier;
use occert::registry;
use occert::second_order::{build_cone, necessary_test, ConeKind, FormContext};
use occert::tolerances::Tolerances;

fn main() -> occert::Result<()> {
    let tol = Tolerances::default();

    for name in ["REG1", "CB1"] {
        let (spec, traj, seed) = registry::registry_get(name)?;
        let (lam, _) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol)?;
        let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol)?;
        let outcome = necessary_test(&spec, &traj, &cone, &tol)?;
        println!(
            "{name}: cone dim {} (free variables {}, constraint rank {}), verdict {:?}",
            cone.dim, cone.n_free, cone.constraint_rank, outcome.verdict
        );
    }

    for sign in [1.0, -1.0] {
        let spec = instances::singular_chain_spec(sign);
        let traj = instances::singular_chain_trajectory(&spec, 200)?;
        let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol)?;
        let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol)?;
        let outcome = necessary_test(&spec, &traj, &cone, &tol)?;
        println!(
            "\n{}: cone dim {}, verdict {:?}, min Rayleigh quotient {:+.6}",
            spec.name,
            cone.dim,
            outcome.verdict,
            outcome.min_eigenvalue.unwrap()
        );
        if let Some(witness) = &outcome.witness {
            // the reported witness reproduces its Rayleigh quotient exactly
            let fc = FormContext::new(&spec, &traj, &lam);
            let rayleigh = fc.eval_omega(witness) / witness.gamma(&traj.grid);
            println!(
                "  witness: h = {:+.4}, γ = {:.4}, Ω/γ re-evaluated = {:+.6}",
                witness.h,
                witness.gamma(&traj.grid),
                rayleigh
            );
        }
    }
    Ok(())
}
