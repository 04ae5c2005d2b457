//! Certification pipeline: parse inputs, run the stages in dependency order,
//! emit a report and an exit code.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DVector, RowDVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::files;
use crate::multiplier::{self, Multiplier, Verdict};
use crate::problem::ProblemSpec;
use crate::registry;
use crate::report::{
    digest, exit_code, CertificationReport, ConeDump, MatrixDump, MultiplierStage, Provenance,
    SecondOrderStage, SufficientStage, WitnessDump, REPORT_SCHEMA,
};
use crate::second_order::{self, ConeKind, FormContext};
use crate::tolerances::Tolerances;
use crate::trajectory::{self, Trajectory};

#[derive(Debug, Clone)]
pub enum ProblemSource {
    Registry(String),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub enum MultiplierSource {
    /// Fit from the registry seed (or from zeros for file problems).
    Fit,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
    Sufficient,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::First => "first",
            Order::Second => "second",
            Order::Sufficient => "sufficient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertifyConfig {
    pub problem: ProblemSource,
    pub trajectory: Option<PathBuf>,
    pub multiplier: MultiplierSource,
    pub order: Order,
    /// Re-grid registry trajectories onto this interval count.
    pub grid: Option<usize>,
    pub tolerances: Tolerances,
    /// Include the cone matrices and witness direction in the report.
    pub emit_cone: bool,
}

pub struct CertifyOutput {
    pub report: CertificationReport,
    pub spec: ProblemSpec,
    pub trajectory: Trajectory,
    pub multiplier: Option<Multiplier>,
}

/// Load inputs, run the requested stages, and assemble the report. The exit
/// code is 0 iff every requested verdict is PASS or VACUOUS.
pub fn run_certify(cfg: &CertifyConfig) -> Result<CertifyOutput> {
    let tol = &cfg.tolerances;
    let (spec, traj, seed, problem_name) = match &cfg.problem {
        ProblemSource::Registry(name) => {
            let n = cfg.grid.unwrap_or(registry::DEFAULT_GRID);
            let (spec, traj, seed) = registry::registry_get_on(name, n)?;
            let traj = match &cfg.trajectory {
                Some(path) => files::load_trajectory(path)?,
                None => traj,
            };
            (spec, traj, Some(seed), name.clone())
        }
        ProblemSource::File(path) => {
            let spec = files::load_problem(path)?;
            let tpath = cfg.trajectory.as_ref().ok_or_else(|| {
                crate::error::Error::InvalidTrajectory(
                    "a trajectory file is required for file-based problems".into(),
                )
            })?;
            let traj = files::load_trajectory(tpath)?;
            let name = spec.name.clone();
            (spec, traj, None, name)
        }
    };

    let problem_digest = digest(&files::problem_to_string(&spec));
    let trajectory_digest = digest(&files::trajectory_to_string(&traj));
    let mut verdicts: BTreeMap<String, Verdict> = BTreeMap::new();

    // structural stages
    let dynamics_residual = traj.dynamics_residual(&spec)?;
    let findings = trajectory::validate_arcs(&spec, &traj, tol)?;
    let violations = findings.iter().filter(|f| trajectory::finding_is_violation(f)).count();
    verdicts.insert(
        "arc_structure".into(),
        if violations == 0 { Verdict::Pass } else { Verdict::Fail },
    );
    let first_order_margin = trajectory::check_first_order(&spec, &traj);
    verdicts.insert(
        "first_order_constraint".into(),
        match first_order_margin {
            None => Verdict::Vacuous,
            Some(m) if m >= tol.fo_min => Verdict::Pass,
            Some(_) => Verdict::Fail,
        },
    );

    // multiplier
    let (lam, mult_stage, multiplier_digest) = match &cfg.multiplier {
        MultiplierSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| crate::error::Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let lam = files::multiplier_from_str(&text, &spec, &traj)?;
            let issues = multiplier::validate_multiplier(&spec, &traj, &lam, tol);
            if !issues.is_empty() {
                return Err(crate::error::Error::InvalidProblem(format!(
                    "supplied multiplier rejected: {}",
                    issues.join("; ")
                )));
            }
            let stage = MultiplierStage {
                source: "file".into(),
                beta: lam.beta,
                boundary_defect: lam.boundary_defect.amax(),
                fit_iterations: None,
                fit_residual: None,
                atom_masses: lam.measure.atoms.iter().map(|a| (a.time, a.mass)).collect(),
            };
            (lam, stage, Some(digest(&text)))
        }
        MultiplierSource::Fit => {
            let (beta0, psi0, atoms0) = match &seed {
                Some(s) => (s.beta, s.psi.clone(), s.atoms.clone()),
                None => (0.0, RowDVector::zeros(spec.n1 + spec.n2), Vec::new()),
            };
            let (lam, info) = multiplier::fit_multiplier(&spec, &traj, beta0, &psi0, &atoms0, tol)?;
            let stage = MultiplierStage {
                source: "fit".into(),
                beta: lam.beta,
                boundary_defect: lam.boundary_defect.amax(),
                fit_iterations: Some(info.iterations),
                fit_residual: Some(info.residual),
                atom_masses: lam.measure.atoms.iter().map(|a| (a.time, a.mass)).collect(),
            };
            let text = files::multiplier_to_string(&lam);
            (lam, stage, Some(digest(&text)))
        }
    };

    let stationarity = multiplier::check_stationarity(&spec, &traj, &lam, tol);
    verdicts.insert("stationarity".into(), stationarity.verdict);
    let jumps = multiplier::check_jumps(&spec, &traj, &lam, tol)?;
    verdicts.insert("jump_conditions".into(), jumps.verdict);
    let complementarity = multiplier::check_strict_complementarity(&spec, &traj, &[&lam], tol)?;
    if cfg.order == Order::Sufficient {
        verdicts.insert("strict_complementarity".into(), complementarity.verdict);
    }

    // cross-route sample: Q against Ω on a few deterministic directions
    let fc = FormContext::new(&spec, &traj, &lam);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut q_omega_err: f64 = 0.0;
    for _ in 0..8 {
        let v: Vec<f64> = (0..traj.num_intervals()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z0 = DVector::from_iterator(spec.n, (0..spec.n).map(|_| rng.gen_range(-1.0..1.0)));
        let q = fc.eval_q(&v, &z0);
        let (dir, _) = second_order::goh_transform(&spec, &traj, &v, &z0);
        let omega = fc.eval_omega(&dir);
        q_omega_err = q_omega_err.max((q - omega).abs() / (1.0 + q.abs()));
    }

    // second-order stages
    let mut second_stage = None;
    let mut sufficient_stage = None;
    if cfg.order != Order::First {
        let cone = second_order::build_cone(&spec, &traj, &[&lam], ConeKind::StrictPrimitive, tol)?;
        let outcome = second_order::necessary_test(&spec, &traj, &cone, tol)?;
        verdicts.insert("second_order_necessary".into(), outcome.verdict);
        second_stage = Some(SecondOrderStage {
            cone_dim: cone.dim,
            n_free_variables: cone.n_free,
            constraint_rank: cone.constraint_rank,
            min_eigenvalue: outcome.min_eigenvalue,
            verdict: outcome.verdict,
            cone: cfg.emit_cone.then(|| cone_dump(&cone, outcome.min_eigenvalue, outcome.witness.as_ref())),
        });
    }
    if cfg.order == Order::Sufficient {
        let cone = second_order::build_cone(&spec, &traj, &[&lam], ConeKind::ExtendedStar, tol)?;
        let outcome = second_order::sufficient_test(&spec, &traj, &[&lam], &cone, tol)?;
        // the sufficient condition presumes strict complementarity; a failed
        // gate downgrades the verdict but the numbers are still reported
        let verdict = if complementarity.verdict.acceptable() {
            outcome.verdict
        } else {
            Verdict::NotCertified
        };
        verdicts.insert("second_order_sufficient".into(), verdict);
        sufficient_stage = Some(SufficientStage {
            cone_dim: cone.dim,
            terminal_limit_applied: cone.terminal_limit_applied,
            alpha_min: outcome.alpha_min,
            rho_min: outcome.rho_min,
            verdict,
            cone: cfg.emit_cone.then(|| cone_dump(&cone, outcome.rho_min, None)),
        });
    }

    let code = exit_code(&verdicts);
    let report = CertificationReport {
        schema: REPORT_SCHEMA.into(),
        provenance: Provenance {
            problem: problem_name,
            problem_digest,
            trajectory_digest,
            multiplier_digest,
            grid_intervals: traj.num_intervals(),
            order: cfg.order.name().into(),
            tolerances: tol.clone(),
        },
        dynamics_residual,
        arc_findings: findings,
        arc_violations: violations,
        first_order_margin,
        multiplier: Some(mult_stage),
        stationarity: Some(stationarity),
        jumps: Some(jumps),
        complementarity: Some(complementarity),
        q_omega_sample_error: Some(q_omega_err),
        second_order: second_stage,
        sufficient: sufficient_stage,
        verdicts,
        exit_code: code,
    };
    Ok(CertifyOutput { report, spec, trajectory: traj, multiplier: Some(lam) })
}

fn cone_dump(
    cone: &second_order::ConeBasis,
    rayleigh: Option<f64>,
    witness: Option<&second_order::GohDirection>,
) -> ConeDump {
    ConeDump {
        dim: cone.dim,
        omega: MatrixDump::from(&cone.omega[0]),
        gram: MatrixDump::from(&cone.gram),
        basis: MatrixDump::from(&cone.basis),
        witness: witness.zip(rayleigh).map(|(w, r)| WitnessDump {
            y: w.y.clone(),
            h: w.h,
            xi0: w.xi0().iter().copied().collect(),
            rayleigh: r,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry_cfg(name: &str, order: Order) -> CertifyConfig {
        CertifyConfig {
            problem: ProblemSource::Registry(name.into()),
            trajectory: None,
            multiplier: MultiplierSource::Fit,
            order,
            grid: None,
            tolerances: Tolerances::default(),
            emit_cone: false,
        }
    }

    #[test]
    fn regulator_second_order_run_passes() {
        let out = run_certify(&registry_cfg("REG1", Order::Second)).unwrap();
        assert_eq!(out.report.exit_code, 0, "{:#?}", out.report.verdicts);
        let so = out.report.second_order.as_ref().unwrap();
        assert!(so.verdict.acceptable());
    }

    #[test]
    fn constrained_instance_has_trivial_cone() {
        let out = run_certify(&registry_cfg("CB1", Order::Second)).unwrap();
        assert_eq!(out.report.exit_code, 0, "{:#?}", out.report.verdicts);
        let so = out.report.second_order.as_ref().unwrap();
        assert_eq!(so.cone_dim, 0);
        assert_eq!(so.verdict, Verdict::Vacuous);
    }

    #[test]
    fn constrained_instance_fails_the_sufficient_gate() {
        let out = run_certify(&registry_cfg("CB1", Order::Sufficient)).unwrap();
        assert_ne!(out.report.exit_code, 0);
        let st = out.report.sufficient.as_ref().unwrap();
        assert_eq!(st.verdict, Verdict::NotCertified);
        assert!(st.alpha_min.abs() <= 1e-9, "degenerate transformed Legendre margin, got {}", st.alpha_min);
    }

    #[test]
    fn report_round_trip_is_byte_identical() {
        let out = run_certify(&registry_cfg("REG1", Order::Sufficient)).unwrap();
        let once = out.report.to_json();
        let parsed = CertificationReport::from_json(&once).unwrap();
        let twice = parsed.to_json();
        assert_eq!(once, twice);
    }
}
