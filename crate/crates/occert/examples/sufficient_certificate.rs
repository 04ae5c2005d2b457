//! Sufficient-condition certificate: pointwise Legendre margin plus
//! γ-coercivity of the transformed form on the extended cone.
//!
//! The singular-arc chain passes with margins bounded away from zero; the
//! builtin constrained instance has a degenerate Legendre coefficient and is
//! reported as not certified.
//!
//! ```bash
//! cargo run --example sufficient_certificate
//! ```

use nalgebra::RowDVector;
use occert::instances;
use occert::multiplier::{check_strict_complementarity, fit_multiplier};
use occert::registry;
use occert::second_order::{build_cone, sufficient_test, ConeKind};
use occert::tolerances::Tolerances;

fn main() -> occert::Result<()> {
    let tol = Tolerances::default();

    let spec = instances::singular_chain_spec(1.0);
    let traj = instances::singular_chain_trajectory(&spec, 200)?;
    let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol)?;
    let comp = check_strict_complementarity(&spec, &traj, &[&lam], &tol)?;
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol)?;
    let outcome = sufficient_test(&spec, &traj, &[&lam], &cone, &tol)?;
    println!("{}:", spec.name);
    println!("  strict complementarity gate: {:?}", comp.verdict);
    println!("  cone dim {}, terminal limit applied: {}", cone.dim, cone.terminal_limit_applied);
    println!(
        "  Legendre margin α = {:.6} (> {:.0e}), coercivity ρ = {:.6} (> {:.0e}) → {:?}",
        outcome.alpha_min,
        tol.leg_tol,
        outcome.rho_min.unwrap(),
        tol.suf_tol,
        outcome.verdict
    );

    let (spec, traj, seed) = registry::registry_get("CB1")?;
    let (lam, _) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol)?;
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol)?;
    let outcome = sufficient_test(&spec, &traj, &[&lam], &cone, &tol)?;
    println!("\nCB1:");
    println!("  cone dim {} (coercivity vacuous)", cone.dim);
    println!(
        "  Legendre margin α = {:.6} — degenerate, so the verdict is {:?}",
        outcome.alpha_min, outcome.verdict
    );
    Ok(())
}
