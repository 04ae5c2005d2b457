//! Deterministic property suites over the shipped instances and randomly
//! generated polynomial problems.
//!
//! The seed only moves the sampled points; verdicts are stable across seeds
//! and two runs with the same seed produce byte-identical reports.

use nalgebra::{DVector, RowDVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instances;
use crate::multiplier::{self, Multiplier};
use crate::poly::{MultiIndex, Polynomial};
use crate::problem::{lie_bracket, ProblemSpec, VectorField};
use crate::registry;
use crate::second_order::{self, ConeKind, FormContext};
use crate::tolerances::Tolerances;
use crate::trajectory::{integrate_state, Arc, ArcKind, ArcStructure, Grid, Trajectory};

pub const SELFTEST_SCHEMA: &str = "occert/selftest/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub worst_error: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub schema: String,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
    pub pass: bool,
}

impl SelftestReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("selftest serialization");
        s.push('\n');
        s
    }
}

fn result(name: &str, worst: f64, threshold: f64) -> PropertyResult {
    PropertyResult { name: name.into(), worst_error: worst, threshold, pass: worst <= threshold }
}

/// Random degree-≤2 problem with the full initial state fixed. Cost depends
/// on the final state only, so the boundary condition at t = 0 can always be
/// met exactly by the endpoint multiplier.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> (ProblemSpec, Trajectory) {
    loop {
        let mut monomials: Vec<Vec<u32>> = vec![vec![0; n]];
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 1;
            monomials.push(e.clone());
            e[i] = 2;
            monomials.push(e);
            for j in (i + 1)..n {
                let mut e = vec![0; n];
                e[i] = 1;
                e[j] = 1;
                monomials.push(e);
            }
        }
        let random_poly = |rng: &mut ChaCha8Rng, scale: f64| -> Polynomial {
            let mut p = Polynomial::zero(n);
            for m in &monomials {
                if rng.gen_bool(0.6) {
                    p.add_term(MultiIndex(m.clone()), rng.gen_range(-scale..scale));
                }
            }
            p
        };
        let f0 = VectorField::new((0..n).map(|_| random_poly(rng, 0.4)).collect()).unwrap();
        let mut f1_comps: Vec<Polynomial> = (0..n).map(|_| random_poly(rng, 0.3)).collect();
        f1_comps[0] = f1_comps[0].add(&Polynomial::constant(n, 1.0));
        let f1 = VectorField::new(f1_comps).unwrap();
        let mut g = random_poly(rng, 0.3);
        g.add_term(MultiIndex::constant(n), -2.0);
        // cost on the final state only (degree ≤ 2)
        let mut cost = Polynomial::zero(2 * n);
        for i in n..2 * n {
            cost.add_term(MultiIndex({ let mut e = vec![0; 2 * n]; e[i] = 1; e }), rng.gen_range(-1.0..1.0));
            cost.add_term(MultiIndex({ let mut e = vec![0; 2 * n]; e[i] = 2; e }), rng.gen_range(-0.5..0.5));
        }
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let endpoint: Vec<Polynomial> = (0..n)
            .map(|i| {
                let mut row = Polynomial::var(2 * n, i);
                row.add_term(MultiIndex::constant(2 * n), -x0[i]);
                row
            })
            .collect();
        let spec = ProblemSpec {
            name: "random".into(),
            n,
            n1: n,
            n2: 0,
            horizon: 1.0,
            u_min: -10.0,
            u_max: 10.0,
            f0,
            f1,
            g,
            cost,
            endpoint,
        };
        if spec.validate().is_err() {
            continue;
        }
        let grid = Grid::uniform_with_junctions(1.0, 160, &[]).unwrap();
        let (a, b) = (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
        let u: Vec<f64> = (0..grid.num_intervals())
            .map(|i| {
                let mid = 0.5 * (grid.nodes()[i] + grid.nodes()[i + 1]);
                a + b * mid
            })
            .collect();
        let x0v = DVector::from_vec(x0);
        let Ok(x) = integrate_state(&spec, &u, &x0v, &grid) else { continue };
        if x.iter().any(|xi| xi.norm() > 5.0) {
            continue;
        }
        let arcs =
            ArcStructure::new(vec![Arc { kind: ArcKind::S, t_start: 0.0, t_end: 1.0 }], 1.0).unwrap();
        return (spec, Trajectory { grid, u, x, arcs });
    }
}

/// Costate path satisfying both boundary conditions exactly: integrate once
/// with Ψ = 0, then absorb the initial defect into the initial-state rows.
pub fn random_multiplier(spec: &ProblemSpec, traj: &Trajectory, rng: &mut ChaCha8Rng) -> Multiplier {
    let atoms = vec![(0.0, rng.gen_range(0.0..0.5)), (traj.horizon(), rng.gen_range(0.0..0.5))];
    let psi0 = RowDVector::zeros(spec.n1 + spec.n2);
    let first = multiplier::integrate_costate(spec, traj, 1.0, &psi0, &atoms).unwrap();
    let psi = -first.p_left[0].clone();
    multiplier::integrate_costate(spec, traj, 1.0, &psi, &atoms).unwrap()
}

fn fitted(name: &str, tol: &Tolerances) -> (ProblemSpec, Trajectory, Multiplier) {
    let (spec, traj, seed) = registry::registry_get(name).unwrap();
    let (lam, _) = multiplier::fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, tol).unwrap();
    (spec, traj, lam)
}

fn fitted_curved(tol: &Tolerances, intervals: usize) -> (ProblemSpec, Trajectory, Multiplier) {
    let spec = instances::curved_constraint_spec();
    let traj = instances::curved_constraint_trajectory(&spec, intervals).unwrap();
    // the discrete boundary trajectory hovers O(step²) off the constraint
    let mut tol_c = tol.clone();
    tol_c.tol_g = 1e-3;
    let (lam, _) = multiplier::fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(2), &[], &tol_c).unwrap();
    (spec, traj, lam)
}

/// Run every property suite with the given seed.
pub fn run(seed: u64) -> SelftestReport {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut properties = Vec::new();

    // --- problem model ----------------------------------------------------
    {
        let mut worst: f64 = 0.0;
        for name in ["REG1", "CB1"] {
            let (spec, _, _) = registry::registry_get(name).unwrap();
            for field in [&spec.f0, &spec.f1] {
                let eps = 1e-5;
                for _ in 0..100 {
                    let x: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    let jac = field.jacobian_at(&x);
                    for j in 0..spec.n {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[j] += eps;
                        xm[j] -= eps;
                        let col = (field.eval(&xp) - field.eval(&xm)) / (2.0 * eps);
                        for i in 0..spec.n {
                            let denom = 1.0 + jac[(i, j)].abs();
                            worst = worst.max((jac[(i, j)] - col[i]).abs() / denom);
                        }
                    }
                }
            }
        }
        properties.push(result("jacobian_vs_central_differences", worst, 1e-6));
    }
    {
        let (spec, _, _) = registry::registry_get("CB1").unwrap();
        let self_bracket = lie_bracket(&spec.f0, &spec.f0).unwrap();
        let mut worst: f64 = self_bracket
            .components()
            .iter()
            .flat_map(|p| p.terms().map(|(_, c)| c.abs()))
            .fold(0.0, f64::max);
        // bilinearity of the bracket at random points
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo = spec.f0.scale(a).add(&spec.f1.scale(b));
        let lhs = lie_bracket(&combo, &spec.f0).unwrap();
        let rhs = lie_bracket(&spec.f0, &spec.f0)
            .unwrap()
            .scale(a)
            .add(&lie_bracket(&spec.f1, &spec.f0).unwrap().scale(b));
        for _ in 0..10 {
            let x: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            worst = worst.max((lhs.eval(&x) - rhs.eval(&x)).norm());
        }
        properties.push(result("lie_bracket_antisymmetry_bilinearity", worst, 1e-12));
    }
    {
        let mut worst: f64 = 0.0;
        for name in ["REG1", "CB1"] {
            let (spec, _, _) = registry::registry_get(name).unwrap();
            for _ in 0..25 {
                let x: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let p = RowDVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.5..1.5)));
                let u: f64 = rng.gen_range(-1.0..1.0);
                let he = spec.eval_hamiltonian(u, &x, &p).unwrap();
                let f = spec.eval_dynamics(u, &x).unwrap();
                worst = worst.max((he.h - p.dot(&f.transpose())).abs());
                worst = worst.max((he.h_u - p.dot(&spec.f1.eval(&x).transpose())).abs());
                worst = worst.max((he.h_x.clone() - &p * spec.dynamics_jacobian(u, &x)).amax());
            }
        }
        properties.push(result("hamiltonian_identities", worst, 1e-12));
    }

    // --- trajectories -----------------------------------------------------
    {
        let mut worst: f64 = 0.0;
        for name in ["REG1", "CB1"] {
            let (spec, traj, _) = registry::registry_get(name).unwrap();
            let x = integrate_state(&spec, &traj.u, &traj.x[0], &traj.grid).unwrap();
            for (ours, stored) in x.iter().zip(&traj.x) {
                worst = worst.max((ours - stored).norm() / (1.0 + stored.norm()));
            }
        }
        properties.push(result("trajectory_reintegration", worst, 1e-8));
    }
    {
        let mut worst: f64 = 0.0;
        for name in ["REG1", "CB1"] {
            let (spec, traj, _) = registry::registry_get(name).unwrap();
            for arc in traj.arcs.arcs().iter().filter(|a| a.kind == ArcKind::C) {
                let (a, b) = traj.arc_node_range(arc);
                for i in a..b {
                    let fb = crate::trajectory::constrained_control(&spec, traj.x[i].as_slice()).unwrap();
                    worst = worst.max((traj.u[i] - fb).abs());
                }
            }
        }
        properties.push(result("constrained_control_consistency", worst, 10.0 * tol.tol_g / tol.fo_min));
    }

    // --- multipliers --------------------------------------------------------
    let reg1 = fitted("REG1", &tol);
    let cb1 = fitted("CB1", &tol);
    let curved = fitted_curved(&tol, 400);
    {
        let mut worst: f64 = 0.0;
        for (spec, traj, lam) in [&reg1, &cb1, &curved] {
            let fc = FormContext::new(spec, traj, lam);
            for _ in 0..20 {
                let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let z0 = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
                let (_, lhs, rhs) = fc.q_parts(&v, &z0);
                worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
            }
        }
        properties.push(result("integral_identity", worst, 1e-6));
    }
    {
        // expansion of the Lagrangian: remainder/ε² must keep shrinking
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let (spec, traj) = random_problem(&mut rng, 3);
            let lam = random_multiplier(&spec, &traj, &mut rng);
            let fc = FormContext::new(&spec, &traj, &lam);
            let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let delta = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
            let base = multiplier::lagrangian_value(&spec, &traj, &lam, &traj);
            let q = fc.eval_q(&v, &delta);
            let (_, _, hu_v) = fc.q_parts(&v, &delta);
            let mut ratios = Vec::new();
            for eps in [1e-1, 1e-2, 1e-3] {
                let u_eps: Vec<f64> = traj.u.iter().zip(&v).map(|(u, vi)| u + eps * vi).collect();
                let x0_eps = &traj.x[0] + &delta * eps;
                let x_eps = integrate_state(&spec, &u_eps, &x0_eps, &traj.grid).unwrap();
                let perturbed = Trajectory {
                    grid: traj.grid.clone(),
                    u: u_eps,
                    x: x_eps,
                    arcs: traj.arcs.clone(),
                };
                let val = multiplier::lagrangian_value(&spec, &perturbed, &lam, &traj);
                let remainder = val - base - eps * hu_v - 0.5 * eps * eps * q;
                ratios.push(remainder.abs() / (eps * eps));
            }
            for w in ratios.windows(2) {
                worst = worst.max(3.0 * w[1] / w[0].max(1e-12));
            }
        }
        properties.push(result("lagrangian_expansion_order", worst, 1.0));
    }
    {
        let mut worst: f64 = 0.0;
        for (_, traj, lam) in [&reg1, &cb1, &curved] {
            let min_nu = traj
                .arcs
                .arcs()
                .iter()
                .filter(|a| a.kind == ArcKind::C)
                .flat_map(|arc| {
                    let (a, b) = traj.arc_node_range(arc);
                    (a..=b).map(|i| lam.measure.nu[i])
                })
                .fold(f64::INFINITY, f64::min);
            if min_nu.is_finite() {
                worst = worst.max((-min_nu).max(0.0));
            }
        }
        properties.push(result("density_nonnegativity", worst, 1e-9));
    }

    // --- second order -------------------------------------------------------
    {
        let mut worst: f64 = 0.0;
        for (spec, traj, _) in [&reg1, &cb1] {
            for _ in 0..5 {
                let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let z0 = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
                let (dir, z) = second_order::goh_transform(spec, traj, &v, &z0);
                // inverse map reproduces the linear response
                for ((zi, xi), (node, y)) in z.iter().zip(traj.x.iter()).zip(
                    (0..traj.x.len()).map(|k| (k, node_y(&dir, k, traj))),
                ) {
                    let back = &dir.xi[node] + spec.f1.eval(xi.as_slice()) * y;
                    worst = worst.max((zi - &back).norm() / (1.0 + zi.norm()));
                }
                worst = worst.max(second_order::xi_propagation_defect(spec, traj, &dir));
            }
        }
        properties.push(result("goh_inverse_identity", worst, 1e-9));
    }
    {
        let mut worst: f64 = 0.0;
        for (spec, traj, lam) in [&reg1, &cb1, &curved] {
            let fc = FormContext::new(spec, traj, lam);
            for _ in 0..50 {
                let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let z0 = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
                let q = fc.eval_q(&v, &z0);
                let (dir, _) = second_order::goh_transform(spec, traj, &v, &z0);
                let omega = fc.eval_omega(&dir);
                worst = worst.max((q - omega).abs() / (1.0 + q.abs()));
            }
        }
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let (spec, traj) = random_problem(&mut rng, n);
            let lam = random_multiplier(&spec, &traj, &mut rng);
            let fc = FormContext::new(&spec, &traj, &lam);
            for _ in 0..3 {
                let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let z0 = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
                let q = fc.eval_q(&v, &z0);
                let (dir, _) = second_order::goh_transform(&spec, &traj, &v, &z0);
                let omega = fc.eval_omega(&dir);
                worst = worst.max((q - omega).abs() / (1.0 + q.abs()));
            }
        }
        properties.push(result("q_omega_equivalence", worst, 1e-7));
    }
    {
        // E equals the bracket; R equals its closed form; R ignores the control
        let mut worst_e: f64 = 0.0;
        let mut worst_r: f64 = 0.0;
        for (spec, traj, lam) in [&reg1, &cb1, &curved] {
            let fc = FormContext::new(spec, traj, lam);
            let brackets = second_order::BracketFields::new(spec);
            for (node, c) in fc.assemble_m_r().iter().enumerate() {
                let b = brackets.bracket01.eval(traj.x[node].as_slice());
                worst_e = worst_e.max((&c.e - &b).norm());
                worst_r = worst_r.max((c.r - c.r_closed).abs());
            }
            // pointwise control perturbation, holding the state/costate data
            for node in [0, traj.x.len() / 2] {
                let p = &lam.p_right[node];
                let on_c = traj.interval_kind(node.min(traj.num_intervals() - 1)) == ArcKind::C;
                let u0 = traj.u[node.min(traj.num_intervals() - 1)];
                let c0 = second_order::StageCoeffs::at(spec, &brackets, &traj.x[node], u0, p, on_c);
                let c1 = second_order::StageCoeffs::at(spec, &brackets, &traj.x[node], u0 + 0.37, p, on_c);
                worst_r = worst_r.max((c0.r - c1.r).abs());
                assert_eq!(c0.r_closed, c1.r_closed, "closed form must not see the control");
            }
        }
        properties.push(result("transformed_system_coefficients_e", worst_e, 1e-9));
        properties.push(result("transformed_system_coefficients_r", worst_r, 1e-8));
    }
    {
        // eigen-witness consistency on the singular chain (both signs)
        let mut worst: f64 = 0.0;
        for sign in [1.0, -1.0] {
            let spec = instances::singular_chain_spec(sign);
            let traj = instances::singular_chain_trajectory(&spec, 80).unwrap();
            let (lam, _) =
                multiplier::fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
            let cone = second_order::build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
            let outcome = second_order::necessary_test(&spec, &traj, &cone, &tol).unwrap();
            let fc = FormContext::new(&spec, &traj, &lam);
            if let (Some(mu), Some(witness)) = (outcome.min_eigenvalue, &outcome.witness) {
                let rayleigh = fc.eval_omega(witness) / witness.gamma(&traj.grid);
                worst = worst.max((mu - rayleigh).abs());
            }
        }
        properties.push(result("eigen_witness_consistency", worst, 1e-9));
    }
    {
        // grid refinement: second-order shrinkage of the eigenvalues on the
        // singular chain and of the density path on the curved instance
        let mut ratios: Vec<f64> = Vec::new();
        let spec = instances::singular_chain_spec(1.0);
        let mut mu = Vec::new();
        for n in [50usize, 100, 200, 400] {
            let traj = instances::singular_chain_trajectory(&spec, n).unwrap();
            let (lam, _) =
                multiplier::fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(4), &[], &tol).unwrap();
            let cone = second_order::build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, &tol).unwrap();
            let outcome = second_order::necessary_test(&spec, &traj, &cone, &tol).unwrap();
            mu.push(outcome.min_eigenvalue.unwrap());
        }
        let d: Vec<f64> = mu.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        for w in d.windows(2) {
            ratios.push(w[0] / w[1]);
        }
        let mut nu_paths: Vec<Vec<f64>> = Vec::new();
        for n in [250usize, 500, 1000, 2000] {
            let (_, _traj, lam) = fitted_curved(&tol, n);
            nu_paths.push(lam.measure.nu.clone());
        }
        let mut nu_diffs = Vec::new();
        for k in 0..nu_paths.len() - 1 {
            let coarse = &nu_paths[k];
            let fine = &nu_paths[k + 1];
            let mut diff: f64 = 0.0;
            for (i, c) in coarse.iter().enumerate() {
                diff = diff.max((c - fine[2 * i]).abs());
            }
            nu_diffs.push(diff);
        }
        for w in nu_diffs.windows(2) {
            ratios.push(w[0] / w[1]);
        }
        let worst = ratios
            .iter()
            .map(|r| (2.5 - r).max(r - 6.0).max(0.0))
            .fold(0.0, f64::max);
        properties.push(result("grid_refinement_second_order", worst, 0.0));
    }

    // --- reporting ----------------------------------------------------------
    {
        let cfg = crate::pipeline::CertifyConfig {
            problem: crate::pipeline::ProblemSource::Registry("REG1".into()),
            trajectory: None,
            multiplier: crate::pipeline::MultiplierSource::Fit,
            order: crate::pipeline::Order::Second,
            grid: Some(100),
            tolerances: tol.clone(),
            emit_cone: false,
        };
        let out = crate::pipeline::run_certify(&cfg).unwrap();
        let once = out.report.to_json();
        let parsed = crate::report::CertificationReport::from_json(&once).unwrap();
        let twice = parsed.to_json();
        let worst = if once == twice { 0.0 } else { 1.0 };
        properties.push(result("report_round_trip", worst, 0.0));
    }

    let pass = properties.iter().all(|p| p.pass);
    SelftestReport { schema: SELFTEST_SCHEMA.into(), seed, properties, pass }
}

fn node_y(dir: &second_order::GohDirection, node: usize, traj: &Trajectory) -> f64 {
    dir.y_at_node(node, &traj.grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_are_seed_independent() {
        let a = run(1);
        let b = run(2);
        assert!(a.pass && b.pass);
        assert_eq!(a.properties.len(), b.properties.len());
        for (pa, pb) in a.properties.iter().zip(&b.properties) {
            assert_eq!(pa.name, pb.name);
            assert_eq!(pa.pass, pb.pass, "verdict of {} depends on the seed", pa.name);
        }
    }

    #[test]
    fn corrupted_trajectory_fails_the_dynamics_property() {
        let (spec, mut traj, _) = registry::registry_get_on("REG1", 100).unwrap();
        let k = traj.x.len() / 2;
        traj.x[k][0] += 1e-3;
        let residual = traj.dynamics_residual(&spec).unwrap();
        assert!(
            residual > Tolerances::default().tol_dyn,
            "1e-3 state corruption must trip the one-step defect, got {residual:.3e}"
        );
    }
}
