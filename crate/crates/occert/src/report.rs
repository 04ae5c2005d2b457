//! Machine-readable certification report and plot-ready CSV dumps.
//!
//! Reports serialize to JSON with a fixed field order; serialize → parse →
//! serialize is byte-identical, which makes regression diffs trivial.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::multiplier::{ComplementarityReport, JumpReport, StationarityReport, Verdict};
use crate::tolerances::Tolerances;
use crate::trajectory::Finding;

pub const REPORT_SCHEMA: &str = "occert/report/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub problem: String,
    pub problem_digest: String,
    pub trajectory_digest: String,
    pub multiplier_digest: Option<String>,
    pub grid_intervals: usize,
    pub order: String,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierStage {
    pub source: String,
    pub beta: f64,
    pub boundary_defect: f64,
    pub fit_iterations: Option<usize>,
    pub fit_residual: Option<f64>,
    pub atom_masses: Vec<(f64, f64)>,
}

/// Row-major dense matrix payload for report emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixDump {
    pub fn from(m: &nalgebra::DMatrix<f64>) -> Self {
        MatrixDump {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDump {
    pub y: Vec<f64>,
    pub h: f64,
    pub xi0: Vec<f64>,
    pub rayleigh: f64,
}

/// Optional dump of the discretized cone data: the quadratic form and Gram
/// matrices on the orthonormal basis, the basis itself, and the extremal
/// direction found by the eigensolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDump {
    pub dim: usize,
    pub omega: MatrixDump,
    pub gram: MatrixDump,
    pub basis: MatrixDump,
    pub witness: Option<WitnessDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderStage {
    pub cone_dim: usize,
    pub n_free_variables: usize,
    pub constraint_rank: usize,
    pub min_eigenvalue: Option<f64>,
    pub verdict: Verdict,
    pub cone: Option<ConeDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStage {
    pub cone_dim: usize,
    pub terminal_limit_applied: bool,
    pub alpha_min: f64,
    pub rho_min: Option<f64>,
    pub verdict: Verdict,
    pub cone: Option<ConeDump>,
}

/// Full pipeline record: per-stage numeric evidence plus one verdict per
/// requested condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub schema: String,
    pub provenance: Provenance,
    pub dynamics_residual: f64,
    pub arc_findings: Vec<Finding>,
    pub arc_violations: usize,
    /// Minimum of |g'f1| over constrained nodes; `None` when no constrained
    /// arc exists (the margin is vacuously infinite).
    pub first_order_margin: Option<f64>,
    pub multiplier: Option<MultiplierStage>,
    pub stationarity: Option<StationarityReport>,
    pub jumps: Option<JumpReport>,
    pub complementarity: Option<ComplementarityReport>,
    /// Worst relative mismatch between the two quadratic-form routes over the
    /// sampled directions.
    pub q_omega_sample_error: Option<f64>,
    pub second_order: Option<SecondOrderStage>,
    pub sufficient: Option<SufficientStage>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub exit_code: i32,
}

impl CertificationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// Exit code as a pure function of the verdict set.
pub fn exit_code(verdicts: &BTreeMap<String, Verdict>) -> i32 {
    if verdicts.values().all(|v| v.acceptable()) {
        0
    } else {
        1
    }
}

pub fn digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-node CSV of the transformed-system coefficients: the linearized state
/// matrix A (row major), E, M, R with its closed form, and the density ν.
pub fn write_coefficients_csv(
    path: &Path,
    spec: &crate::problem::ProblemSpec,
    traj: &crate::trajectory::Trajectory,
    lam: &crate::multiplier::Multiplier,
) -> Result<()> {
    let fc = crate::second_order::FormContext::new(spec, traj, lam);
    let n = spec.n;
    let mut out = Vec::new();
    let mut header = String::from("t");
    for i in 1..=n {
        for j in 1..=n {
            header.push_str(&format!(",A_{i}{j}"));
        }
    }
    for i in 1..=n {
        header.push_str(&format!(",E_{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",M_{i}"));
    }
    header.push_str(",R,R_closed,nu");
    writeln!(out, "{header}").unwrap();
    for c in fc.assemble_m_r() {
        let mut line = format!("{}", c.time);
        for i in 0..n {
            for j in 0..n {
                line.push_str(&format!(",{}", c.a[(i, j)]));
            }
        }
        for v in c.e.iter() {
            line.push_str(&format!(",{v}"));
        }
        for v in c.m_row.iter() {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{},{},{}", c.r, c.r_closed, c.nu));
        writeln!(out, "{line}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

/// Per-node CSV dump: t, u, x, p, ν, g, H_u, R.
pub fn write_csv(
    path: &Path,
    spec: &crate::problem::ProblemSpec,
    traj: &crate::trajectory::Trajectory,
    lam: &crate::multiplier::Multiplier,
) -> Result<()> {
    let fc = crate::second_order::FormContext::new(spec, traj, lam);
    let coeffs = fc.assemble_m_r();
    let mut out = Vec::new();
    let n = spec.n;
    let mut header = String::from("t,u");
    for k in 1..=n {
        header.push_str(&format!(",x_{k}"));
    }
    for k in 1..=n {
        header.push_str(&format!(",p_{k}"));
    }
    header.push_str(",nu,g,H_u,R");
    writeln!(out, "{header}").unwrap();
    let n_int = traj.num_intervals();
    for (node, c) in coeffs.iter().enumerate() {
        let u = traj.u[node.min(n_int - 1)];
        let p = if node == traj.x.len() - 1 { &lam.p_left[node] } else { &lam.p_right[node] };
        let hu = (p * spec.f1.eval(traj.x[node].as_slice()))[0];
        let g = spec.g.eval(traj.x[node].as_slice());
        let mut line = format!("{},{}", c.time, u);
        for v in traj.x[node].iter() {
            line.push_str(&format!(",{v}"));
        }
        for v in p.iter() {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{},{},{},{}", c.nu, g, hu, c.r));
        writeln!(out, "{line}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_is_pure_in_the_verdicts() {
        let mut v = BTreeMap::new();
        v.insert("stationarity".to_string(), Verdict::Pass);
        v.insert("necessary".to_string(), Verdict::Vacuous);
        assert_eq!(exit_code(&v), 0);
        v.insert("sufficient".to_string(), Verdict::NotCertified);
        assert_eq!(exit_code(&v), 1);
        v.insert("sufficient".to_string(), Verdict::Pass);
        assert_eq!(exit_code(&v), 0);
        v.insert("jumps".to_string(), Verdict::Fail);
        assert_eq!(exit_code(&v), 1);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
