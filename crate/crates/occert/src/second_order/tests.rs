use nalgebra::{DVector, RowDVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instances;
use crate::multiplier::{fit_multiplier, Verdict};
use crate::registry;
use crate::tolerances::Tolerances;
use crate::trajectory::integrate_state;

use super::*;

fn reg1_fitted() -> (crate::problem::ProblemSpec, crate::trajectory::Trajectory, crate::multiplier::Multiplier) {
    let (spec, traj, seed) = registry::registry_get("REG1").unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &Tolerances::default()).unwrap();
    (spec, traj, lam)
}

#[test]
fn zero_direction_transforms_to_zero() {
    let (spec, traj, _) = registry::registry_get_on("REG1", 50).unwrap();
    let v = vec![0.0; traj.num_intervals()];
    let (dir, z) = goh_transform(&spec, &traj, &v, &DVector::zeros(2));
    assert_eq!(dir.h, 0.0);
    assert!(dir.y.iter().all(|&y| y == 0.0));
    assert!(dir.xi.iter().all(|xi| xi.norm() == 0.0));
    assert!(z.iter().all(|zi| zi.norm() == 0.0));
}

#[test]
fn transform_of_unit_step_direction_matches_hand_integration() {
    // v = 1 on [0,1], 0 after: y = min(t,1); ξ1 ≡ 0; ξ2 = t²/2 then t − 1/2
    let (spec, traj, _) = registry::registry_get("REG1").unwrap();
    let v: Vec<f64> = (0..traj.num_intervals())
        .map(|i| {
            let mid = 0.5 * (traj.grid.nodes()[i] + traj.grid.nodes()[i + 1]);
            if mid < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let (dir, _) = goh_transform(&spec, &traj, &v, &DVector::zeros(2));
    assert!((dir.h - 1.0).abs() <= 1e-12);
    for &t in [0.5, 1.0, 1.5, 2.0].iter() {
        let node = traj.grid.node_at(t).unwrap();
        let expected = if t <= 1.0 { t * t / 2.0 } else { t - 0.5 };
        assert!((dir.xi[node][0]).abs() <= 1e-10);
        assert!(
            (dir.xi[node][1] - expected).abs() <= 1e-9,
            "xi2({t}) = {}, expected {expected}",
            dir.xi[node][1]
        );
    }
}

#[test]
fn inverse_transform_recovers_linearized_response() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (spec, traj, _) = registry::registry_get_on("CB1", 120).unwrap();
    for _ in 0..5 {
        let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z0 = DVector::from_iterator(3, (0..3).map(|_| rng.gen_range(-1.0..1.0)));
        let (dir, z) = goh_transform(&spec, &traj, &v, &z0);
        let mut y_node = 0.0;
        for (i, zi) in z.iter().enumerate() {
            let back = &dir.xi[i] + spec.f1.eval(traj.x[i].as_slice()) * y_node;
            assert!((zi - back).norm() <= 1e-9 * (1.0 + zi.norm()));
            if i < v.len() {
                y_node += v[i] * traj.grid.step(i);
            }
        }
        assert!(xi_propagation_defect(&spec, &traj, &dir) <= 1e-9);
    }
}

#[test]
fn regulator_coefficients_vanish() {
    // constant bracket and constant f1 kill every Ω coefficient
    let (spec, traj, lam) = reg1_fitted();
    let fc = FormContext::new(&spec, &traj, &lam);
    for c in fc.assemble_m_r() {
        assert!(c.r.abs() <= 1e-12);
        assert!(c.r_closed.abs() <= 1e-12);
        assert!(c.m_row.amax() <= 1e-12);
        assert!((c.e - DVector::from_vec(vec![0.0, 1.0])).norm() <= 1e-12);
    }
}

#[test]
fn zero_multiplier_zeroes_the_coefficients() {
    let (spec, traj, _) = registry::registry_get_on("CB1", 60).unwrap();
    let lam = crate::multiplier::integrate_costate(&spec, &traj, 0.0, &RowDVector::zeros(3), &[]).unwrap();
    let fc = FormContext::new(&spec, &traj, &lam);
    for c in fc.assemble_m_r() {
        assert_eq!(c.r, 0.0);
        assert_eq!(c.r_closed, 0.0);
        assert_eq!(c.m_row.amax(), 0.0);
        assert_eq!(c.nu, 0.0);
    }
}

#[test]
fn quadratic_forms_vanish_at_zero_and_scale_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (spec, traj, lam) = reg1_fitted();
    let fc = FormContext::new(&spec, &traj, &lam);
    let zeros = vec![0.0; traj.num_intervals()];
    assert_eq!(fc.eval_q(&zeros, &DVector::zeros(2)), 0.0);
    let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let z0 = DVector::from_iterator(2, (0..2).map(|_| rng.gen_range(-1.0..1.0)));
    let q1 = fc.eval_q(&v, &z0);
    let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
    let q2 = fc.eval_q(&v2, &(&z0 * 2.0));
    assert!((q2 - 4.0 * q1).abs() <= 1e-10 * (1.0 + q1.abs()));

    let (dir, _) = goh_transform(&spec, &traj, &v, &z0);
    let w1 = fc.eval_omega(&dir);
    let w2 = fc.eval_omega(&dir.scale(2.0));
    assert!((w2 - 4.0 * w1).abs() <= 1e-10 * (1.0 + w1.abs()));
    assert_eq!(fc.eval_omega(&dir.scale(0.0)), 0.0);
}

#[test]
fn q_equals_omega_on_registry_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for name in ["REG1", "CB1"] {
        let (spec, traj, seed) = registry::registry_get(name).unwrap();
        let (lam, _) =
            fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &Tolerances::default()).unwrap();
        let fc = FormContext::new(&spec, &traj, &lam);
        for _ in 0..50 {
            let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z0 = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
            let q = fc.eval_q(&v, &z0);
            let (dir, _) = goh_transform(&spec, &traj, &v, &z0);
            let omega = fc.eval_omega(&dir);
            assert!(
                (q - omega).abs() <= 1e-7 * (1.0 + q.abs()),
                "{name}: Q = {q}, Ω = {omega}"
            );
        }
    }
}

#[test]
fn constrained_instance_cone_is_trivial() {
    let tol = Tolerances::default();
    let (spec, traj, seed) = registry::registry_get("CB1").unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol).unwrap();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    assert_eq!(cone.dim, 0);
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    assert_eq!(outcome.verdict, Verdict::Vacuous);
    // the extended cone is trivial here as well (terminal state response)
    let star = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol).unwrap();
    assert_eq!(star.dim, 0);
}

#[test]
fn cone_dimension_matches_rank_oracle() {
    let tol = Tolerances::default();
    let (spec, traj, lam) = reg1_fitted();
    for kind in [ConeKind::StrictPrimitive, ConeKind::Extended, ConeKind::ExtendedStar] {
        let cone = build_cone(&spec, &traj, &[&lam], kind, &tol).unwrap();
        let rank = crate::linalg::rank_by_elimination(&cone.constraints);
        assert_eq!(cone.dim, cone.n_free - rank, "kind {kind:?}");
        assert_eq!(cone.constraint_rank, rank);
    }
    // y pinned on the initial bang arc and by the terminal limit: trivial cone
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    assert_eq!(cone.dim, 0);
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    assert!(outcome.verdict.acceptable());
}

#[test]
fn unconstrained_endpoints_leave_one_condition() {
    // free endpoints, inactive state constraint: only the cost row binds, so
    // dim = (#intervals + 1 + n) − 1
    let tol = Tolerances::default();
    let spec = {
        let mut s = instances::singular_chain_spec(1.0);
        s.n1 = 0;
        s.n2 = 0;
        s.endpoint.clear();
        s
    };
    let traj = instances::singular_chain_trajectory(&spec, 40).unwrap();
    let lam = crate::multiplier::integrate_costate(&spec, &traj, 1.0, &RowDVector::zeros(0), &[]).unwrap();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    assert_eq!(cone.n_free, 40 + 1 + 3);
    assert_eq!(cone.dim, cone.n_free - 1);
}

#[test]
fn indefinite_singular_arc_fails_with_consistent_witness() {
    let tol = Tolerances::default();
    let spec = instances::singular_chain_spec(-1.0);
    let traj = instances::singular_chain_trajectory(&spec, 100).unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    assert!(cone.dim > 0);
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    assert_eq!(outcome.verdict, Verdict::Fail);
    let mu = outcome.min_eigenvalue.unwrap();
    assert!(mu < -1.0, "Legendre coefficient −2 must show, got {mu}");
    let witness = outcome.witness.unwrap();
    let fc = FormContext::new(&spec, &traj, &lam);
    let rayleigh = fc.eval_omega(&witness) / witness.gamma(&traj.grid);
    assert!((mu - rayleigh).abs() <= 1e-9);
}

#[test]
fn positive_singular_arc_passes_both_tests() {
    let tol = Tolerances::default();
    let spec = instances::singular_chain_spec(1.0);
    let traj = instances::singular_chain_trajectory(&spec, 100).unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    assert_eq!(outcome.verdict, Verdict::Pass);
    assert!(outcome.min_eigenvalue.unwrap() > 1.9);

    let star = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol).unwrap();
    let sufficient = sufficient_test(&spec, &traj, &[&lam], &star, &tol).unwrap();
    assert_eq!(sufficient.verdict, Verdict::Pass);
    assert!((sufficient.alpha_min - 2.0).abs() <= 1e-9);
    assert!(sufficient.rho_min.unwrap() > 1.9);
}

#[test]
fn sufficient_test_requires_multipliers() {
    let tol = Tolerances::default();
    let (spec, traj, lam) = reg1_fitted();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol).unwrap();
    assert!(matches!(
        sufficient_test(&spec, &traj, &[], &cone, &tol),
        Err(crate::error::Error::EmptyMultiplierList)
    ));
}

#[test]
fn degenerate_legendre_margin_on_the_constrained_instance() {
    let tol = Tolerances::default();
    let (spec, traj, seed) = registry::registry_get("CB1").unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol).unwrap();
    let star = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol).unwrap();
    let outcome = sufficient_test(&spec, &traj, &[&lam], &star, &tol).unwrap();
    assert_eq!(outcome.verdict, Verdict::NotCertified);
    assert!(outcome.alpha_min.abs() <= 1e-9, "f1ᵀg''f1 = 0 and R = 0 here");
}

#[test]
fn regulator_form_is_identically_zero() {
    // H_xx, H_ux, g'' and D²ℓ all vanish: Ω ≡ 0 on the whole variable space
    let tol = Tolerances::default();
    let (spec, traj, lam) = reg1_fitted();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::Extended, &tol).unwrap();
    assert!(cone.omega[0].amax() <= 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fc = FormContext::new(&spec, &traj, &lam);
    for _ in 0..10 {
        let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z0 = DVector::from_iterator(2, (0..2).map(|_| rng.gen_range(-1.0..1.0)));
        assert!(fc.eval_q(&v, &z0).abs() <= 1e-10);
    }
}

#[test]
fn refined_grids_shrink_the_eigenvalue_error_quadratically() {
    let tol = Tolerances::default();
    let spec = instances::singular_chain_spec(1.0);
    let mut mu = Vec::new();
    for n in [40usize, 80, 160, 320] {
        let traj = instances::singular_chain_trajectory(&spec, n).unwrap();
        let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
        let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
        let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
        mu.push(outcome.min_eigenvalue.unwrap());
    }
    let d: Vec<f64> = mu.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!((2.5..=6.0).contains(&ratio), "refinement ratio {ratio}");
    }
}

#[test]
fn brute_force_rayleigh_sampling_respects_the_minimum() {
    let tol = Tolerances::default();
    let spec = instances::singular_chain_spec(1.0);
    let traj = instances::singular_chain_trajectory(&spec, 60).unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    let mu = outcome.min_eigenvalue.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let coords = DVector::from_iterator(cone.dim, (0..cone.dim).map(|_| rng.gen_range(-1.0..1.0)));
        let gamma = cone.gamma_of(&coords);
        if gamma <= 1e-14 {
            continue;
        }
        let rayleigh = cone.omega_of(0, &coords) / gamma;
        assert!(rayleigh >= mu - 1e-9);
    }
}

#[test]
fn hand_integrated_direction_reproduces_q_on_the_regulator() {
    // the unit-step direction of the transform test, evaluated both ways
    let (spec, traj, lam) = reg1_fitted();
    let fc = FormContext::new(&spec, &traj, &lam);
    let v: Vec<f64> = (0..traj.num_intervals())
        .map(|i| {
            let mid = 0.5 * (traj.grid.nodes()[i] + traj.grid.nodes()[i + 1]);
            if mid < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let z0 = DVector::zeros(2);
    let q = fc.eval_q(&v, &z0);
    let (dir, _) = goh_transform(&spec, &traj, &v, &z0);
    let omega = fc.eval_omega(&dir);
    assert!((q - omega).abs() <= 1e-7 * (1.0 + q.abs()));
}

#[test]
fn state_reintegration_matches_on_singular_chain() {
    let spec = instances::singular_chain_spec(1.0);
    let traj = instances::singular_chain_trajectory(&spec, 64).unwrap();
    let again = integrate_state(&spec, &traj.u, &traj.x[0], &traj.grid).unwrap();
    for (a, b) in again.iter().zip(&traj.x) {
        assert_eq!(a, b);
    }
}

#[test]
fn necessary_test_over_several_multipliers() {
    // positively scaled copies certify the same verdicts as a singleton list
    let tol = Tolerances::default();
    for (sign, expected) in [(1.0, Verdict::Pass), (-1.0, Verdict::Fail)] {
        let spec = instances::singular_chain_spec(sign);
        let traj = instances::singular_chain_trajectory(&spec, 60).unwrap();
        let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
        let scaled = crate::multiplier::integrate_costate(
            &spec,
            &traj,
            2.0 * lam.beta,
            &(lam.psi.clone() * 2.0),
            &[],
        )
        .unwrap();
        let cone = build_cone(&spec, &traj, &[&lam, &scaled], ConeKind::StrictPrimitive, &tol).unwrap();
        assert_eq!(cone.omega.len(), 2);
        let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
        assert_eq!(outcome.verdict, expected);
        assert_eq!(outcome.per_multiplier_min.len(), 2);
        assert!((outcome.per_multiplier_min[1] - 2.0 * outcome.per_multiplier_min[0]).abs() <= 1e-6);
    }
}

#[test]
fn active_inequality_endpoint_row_pins_the_cone() {
    // same singular chain, but the terminal condition is the inequality
    // x1(T) ≤ 0, active along the candidate: the active row is imposed as an
    // equality, so the cone and both verdicts match the equality-constrained
    // variant
    let tol = Tolerances::default();
    let mut spec = instances::singular_chain_spec(1.0);
    spec.n1 = 3;
    spec.n2 = 1;
    let traj = instances::singular_chain_trajectory(&spec, 80).unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
    assert!(lam.psi[3] >= -1e-12, "inequality multiplier stays nonnegative");
    assert!(lam.psi[3].abs() <= 1e-9, "stationarity forces the weakly active row to zero");
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    assert_eq!(cone.dim, 80, "y free per interval, h pinned by the active row");
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    assert_eq!(outcome.verdict, Verdict::Pass);
    assert!(outcome.min_eigenvalue.unwrap() > 1.9);
    let star = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol).unwrap();
    let sufficient = sufficient_test(&spec, &traj, &[&lam], &star, &tol).unwrap();
    assert_eq!(sufficient.verdict, Verdict::Pass);
}

#[test]
fn inactive_inequality_endpoint_row_frees_a_direction() {
    // shifting the bound to x1(T) ≤ 1 makes the row inactive: its multiplier
    // is eliminated and its cone row dropped, so the terminal variable h is
    // free and the form is only semidefinite there
    let tol = Tolerances::default();
    let mut spec = instances::singular_chain_spec(1.0);
    spec.n1 = 3;
    spec.n2 = 1;
    let row = spec.endpoint.pop().unwrap();
    spec.endpoint.push(row.add(&crate::poly::Polynomial::constant(6, -1.0)));
    let traj = instances::singular_chain_trajectory(&spec, 80).unwrap();
    let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
    assert_eq!(lam.psi[3], 0.0, "inactive row carries no multiplier");
    let cone = build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
    assert_eq!(cone.dim, 81, "h joins the cone when the row is inactive");
    let outcome = necessary_test(&spec, &traj, &cone, &tol).unwrap();
    assert_eq!(outcome.verdict, Verdict::Pass, "form is semidefinite, not negative");
    assert!(outcome.min_eigenvalue.unwrap().abs() <= 1e-9);
    // no coercivity along the free terminal direction
    let star = build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, &tol).unwrap();
    let sufficient = sufficient_test(&spec, &traj, &[&lam], &star, &tol).unwrap();
    assert_eq!(sufficient.verdict, Verdict::NotCertified);
    assert!(sufficient.rho_min.unwrap().abs() <= 1e-9);
}
