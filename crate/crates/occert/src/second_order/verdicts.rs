//! Necessary and sufficient second-order verdicts on the discretized cones.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::multiplier::{Multiplier, Verdict};
use crate::problem::ProblemSpec;
use crate::tolerances::Tolerances;
use crate::trajectory::Trajectory;

use super::cone::{ConeBasis, ConeKind};
use super::forms::{FormContext, GohDirection};

/// Outcome of the second-order necessary test on the strict cone.
#[derive(Debug, Clone)]
pub struct NecessaryOutcome {
    pub verdict: Verdict,
    /// Most negative Rayleigh quotient found (None on an empty cone).
    pub min_eigenvalue: Option<f64>,
    /// Per-multiplier smallest pencil eigenvalue.
    pub per_multiplier_min: Vec<f64>,
    /// Witness direction achieving `min_eigenvalue`.
    pub witness: Option<GohDirection>,
    pub cone_dim: usize,
}

/// Nonnegativity of `max_λ Ω` over the strict cone, tested through the
/// generalized eigenvalues of each (Ω, G_γ) pencil. With several multipliers
/// a direction only counts as violating when every supplied multiplier is
/// negative on it.
pub fn necessary_test(
    _spec: &ProblemSpec,
    traj: &Trajectory,
    cone: &ConeBasis,
    tol: &Tolerances,
) -> Result<NecessaryOutcome> {
    if cone.kind != ConeKind::StrictPrimitive {
        return Err(Error::InvalidProblem(
            "necessary test must run on the strict primitive cone".into(),
        ));
    }
    if cone.dim == 0 {
        return Ok(NecessaryOutcome {
            verdict: Verdict::Vacuous,
            min_eigenvalue: None,
            per_multiplier_min: vec![f64::INFINITY; cone.omega.len()],
            witness: None,
            cone_dim: 0,
        });
    }
    let mut per_min = Vec::with_capacity(cone.omega.len());
    let mut decompositions = Vec::with_capacity(cone.omega.len());
    for omega in &cone.omega {
        let (vals, vecs) = linalg::generalized_symmetric_eigen(omega, &cone.gram);
        per_min.push(vals[0]);
        decompositions.push((vals, vecs));
    }

    // scan candidate directions: eigenvectors of every pencil; a candidate
    // violates only if no multiplier rescues it
    let mut worst_best: Option<(f64, DVector<f64>)> = None;
    for (vals, vecs) in &decompositions {
        for (j, &val) in vals.iter().enumerate() {
            if val >= -tol.nec_tol && worst_best.is_some() {
                continue;
            }
            let coords = vecs.column(j).into_owned();
            let gamma = cone.gamma_of(&coords);
            let best = (0..cone.omega.len())
                .map(|k| cone.omega_of(k, &coords) / gamma)
                .fold(f64::NEG_INFINITY, f64::max);
            match &worst_best {
                Some((w, _)) if best >= *w => {}
                _ => worst_best = Some((best, coords)),
            }
        }
    }
    let (min_rayleigh, coords) = worst_best.expect("nonempty cone produced no candidates");
    let verdict = if min_rayleigh >= -tol.nec_tol { Verdict::Pass } else { Verdict::Fail };
    Ok(NecessaryOutcome {
        verdict,
        min_eigenvalue: Some(min_rayleigh),
        per_multiplier_min: per_min,
        witness: Some(cone.direction(traj, &coords)),
        cone_dim: cone.dim,
    })
}

/// Outcome of the second-order sufficient test on the extended cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SufficientOutcome {
    pub verdict: Verdict,
    /// Pointwise Legendre margin `min_t R + f1ᵀ g'' f1 ν` of the certifying
    /// multiplier (the best one when none certifies).
    pub alpha_min: f64,
    /// Smallest pencil eigenvalue of the certifying multiplier (None on an
    /// empty cone, where coercivity is vacuous).
    pub rho_min: Option<f64>,
    pub per_multiplier: Vec<(f64, Option<f64>)>,
    pub cone_dim: usize,
}

/// γ-coercivity of Ω on the extended cone plus the pointwise Legendre check.
/// A single multiplier passing both certifies the strengthened condition.
pub fn sufficient_test(
    spec: &ProblemSpec,
    traj: &Trajectory,
    lams: &[&Multiplier],
    cone: &ConeBasis,
    tol: &Tolerances,
) -> Result<SufficientOutcome> {
    if lams.is_empty() {
        return Err(Error::EmptyMultiplierList);
    }
    if cone.kind == ConeKind::StrictPrimitive {
        return Err(Error::InvalidProblem(
            "sufficient test must run on an extended cone".into(),
        ));
    }
    if cone.omega.len() != lams.len() {
        return Err(Error::DimensionMismatch(
            "cone was built over a different multiplier list".into(),
        ));
    }
    let mut per = Vec::with_capacity(lams.len());
    for (k, lam) in lams.iter().enumerate() {
        let fc = FormContext::new(spec, traj, lam);
        let mut alpha = f64::INFINITY;
        for node in 0..traj.x.len() {
            let c = fc.node_coeffs(node);
            let quad = (c.f1x.transpose() * &c.g_hess * &c.f1x)[(0, 0)];
            alpha = alpha.min(c.r + quad * c.nu);
        }
        let rho = if cone.dim > 0 {
            let (vals, _) = linalg::generalized_symmetric_eigen(&cone.omega[k], &cone.gram);
            Some(vals[0])
        } else {
            None
        };
        per.push((alpha, rho));
    }
    let certifies = |entry: &(f64, Option<f64>)| -> bool {
        entry.0 > tol.leg_tol && entry.1.map_or(true, |r| r > tol.suf_tol)
    };
    let best = per
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            let score = |e: &(f64, Option<f64>)| {
                let c = if certifies(e) { 1.0 } else { 0.0 };
                (c, e.0.min(e.1.unwrap_or(f64::INFINITY)))
            };
            score(a).partial_cmp(&score(b)).unwrap()
        })
        .map(|(k, _)| k)
        .unwrap();
    let verdict = if certifies(&per[best]) { Verdict::Pass } else { Verdict::NotCertified };
    Ok(SufficientOutcome {
        verdict,
        alpha_min: per[best].0,
        rho_min: per[best].1,
        per_multiplier: per,
        cone_dim: cone.dim,
    })
}
