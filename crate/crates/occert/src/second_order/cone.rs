//! Discretization of the critical cones on Goh variables.
//!
//! Free variables are the piecewise-constant y values on singular intervals,
//! one shared y value per interior bang arc, the terminal variable h, and the
//! initial state direction ξ0. On constrained arcs y is eliminated through
//! `g'(x̂)(ξ + y f1(x̂)) = 0`; ξ itself is eliminated by one-step propagation
//! of the transformed linear system, so the remaining conditions (junction
//! continuity, terminal limit, endpoint rows) become a small homogeneous
//! system whose nullspace is the discrete cone.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::multiplier::Multiplier;
use crate::problem::ProblemSpec;
use crate::tolerances::Tolerances;
use crate::trajectory::{ArcKind, Trajectory};

use super::forms::{FormContext, GohDirection};

/// Which critical cone to discretize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ConeKind {
    /// Strict primitive cone (the closure characterization): junction
    /// continuity of y at bang/constrained boundaries and the terminal limit
    /// condition when the horizon ends on the constraint.
    StrictPrimitive,
    /// Extended cone for the sufficient test: continuity conditions at
    /// interior junctions are dropped.
    Extended,
    /// Extended cone with the terminal limit condition re-imposed when some
    /// multiplier carries a terminal atom and the horizon ends on the
    /// constraint.
    ExtendedStar,
}

/// Where an interval's y value comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum YSource {
    Var(usize),
    Zero,
    TerminalH,
    Eliminated,
}

/// Discretized cone with the γ Gram matrix and one Ω matrix per multiplier.
#[derive(Debug, Clone)]
pub struct ConeBasis {
    pub kind: ConeKind,
    pub dim: usize,
    pub n_free: usize,
    pub constraint_rank: usize,
    /// Orthonormal nullspace basis, `n_free × dim`.
    pub basis: DMatrix<f64>,
    /// γ inner product restricted to the basis.
    pub gram: DMatrix<f64>,
    /// Ω restricted to the basis, one matrix per supplied multiplier.
    pub omega: Vec<DMatrix<f64>>,
    /// Raw constraint rows (kept for the independent rank cross-check).
    pub constraints: DMatrix<f64>,
    pub terminal_limit_applied: bool,
    y_rows: DMatrix<f64>,
    xi_maps: Vec<DMatrix<f64>>,
    h_col: usize,
}

impl ConeBasis {
    /// Reconstruct the Goh direction of a coefficient vector on the basis.
    pub fn direction(&self, traj: &Trajectory, coords: &DVector<f64>) -> GohDirection {
        let w = &self.basis * coords;
        let n_int = traj.num_intervals();
        let y: Vec<f64> = (0..n_int).map(|i| (self.y_rows.row(i) * &w)[0]).collect();
        let h = w[self.h_col];
        let xi: Vec<DVector<f64>> = self.xi_maps.iter().map(|m| m * &w).collect();
        GohDirection { y, y_slope: None, h, xi }
    }

    /// γ of a coefficient vector (quadratic form on the basis).
    pub fn gamma_of(&self, coords: &DVector<f64>) -> f64 {
        (coords.transpose() * &self.gram * coords)[(0, 0)]
    }

    /// Ω of a coefficient vector for multiplier `k`.
    pub fn omega_of(&self, k: usize, coords: &DVector<f64>) -> f64 {
        (coords.transpose() * &self.omega[k] * coords)[(0, 0)]
    }
}

/// Elimination row `y = c·ξ` on a constrained arc, at a given node.
fn elimination_row(spec: &ProblemSpec, traj: &Trajectory, node: usize) -> RowDVector<f64> {
    let x = traj.x[node].as_slice();
    let g_grad = spec.g_gradient(x);
    let denom = (&g_grad * spec.f1.eval(x))[0];
    -g_grad / denom
}

/// Build the requested cone over the supplied multipliers. The geometry
/// (nullspace, Gram) is multiplier independent; the terminal limit condition
/// of the extended-star cone consults the list for a terminal atom.
pub fn build_cone(
    spec: &ProblemSpec,
    traj: &Trajectory,
    lams: &[&Multiplier],
    kind: ConeKind,
    tol: &Tolerances,
) -> Result<ConeBasis> {
    if lams.is_empty() {
        return Err(Error::EmptyMultiplierList);
    }
    let n = spec.n;
    let n_int = traj.num_intervals();
    let n_nodes = n_int + 1;
    let arcs = traj.arcs.arcs();

    // assign y sources
    let mut sources = vec![YSource::Eliminated; n_int];
    let mut arc_source: Vec<YSource> = Vec::with_capacity(arcs.len());
    let mut n_vars = 0usize;
    let mut force_h_zero = false;
    for arc in arcs {
        let src = match arc.kind {
            ArcKind::C => YSource::Eliminated,
            ArcKind::S => YSource::Var(usize::MAX), // per-interval, assigned below
            ArcKind::Bminus | ArcKind::Bplus => {
                if arc.t_start == 0.0 {
                    if (arc.t_end - traj.horizon()).abs() < 1e-12 {
                        force_h_zero = true; // single bang arc: y = 0 and y = h
                    }
                    YSource::Zero
                } else if (arc.t_end - traj.horizon()).abs() < 1e-12 {
                    YSource::TerminalH
                } else {
                    let v = YSource::Var(n_vars);
                    n_vars += 1;
                    v
                }
            }
        };
        arc_source.push(src);
    }
    for (arc, src) in arcs.iter().zip(&arc_source) {
        let (a, b) = traj.arc_node_range(arc);
        for i in a..b {
            sources[i] = match (arc.kind, src) {
                (ArcKind::S, _) => {
                    let v = YSource::Var(n_vars);
                    n_vars += 1;
                    v
                }
                (_, s) => *s,
            };
        }
    }

    let n_free = n_vars + 1 + n;
    let h_col = n_vars;
    let xi0_col = n_vars + 1;

    // λ-independent ξ transition of each interval, from the shared engine
    let fc0 = FormContext::new(spec, traj, lams[0]);
    let mut y_rows = DMatrix::<f64>::zeros(n_int, n_free);
    let mut xi_maps: Vec<DMatrix<f64>> = Vec::with_capacity(n_nodes);
    let mut xi_map = DMatrix::<f64>::zeros(n, n_free);
    for k in 0..n {
        xi_map[(k, xi0_col + k)] = 1.0;
    }
    xi_maps.push(xi_map.clone());
    let zero_xi = DVector::zeros(n);
    for i in 0..n_int {
        let y_row: RowDVector<f64> = match sources[i] {
            YSource::Var(col) => {
                let mut r = RowDVector::zeros(n_free);
                r[col] = 1.0;
                r
            }
            YSource::Zero => RowDVector::zeros(n_free),
            YSource::TerminalH => {
                let mut r = RowDVector::zeros(n_free);
                r[h_col] = 1.0;
                r
            }
            YSource::Eliminated => elimination_row(spec, traj, i) * &xi_map,
        };
        y_rows.set_row(i, &y_row);
        // transition: columns of S from unit ξ starts, d from unit y
        let mut next = DMatrix::<f64>::zeros(n, n_free);
        let (d_vec, _) = fc0.omega_interval(i, &zero_xi, 1.0, 0.0);
        for k in 0..n {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            let (s_col, _) = fc0.omega_interval(i, &e, 0.0, 0.0);
            let row_map = xi_map.row(k).into_owned();
            for c in 0..n_free {
                for rr in 0..n {
                    next[(rr, c)] += s_col[rr] * row_map[c];
                }
            }
        }
        for c in 0..n_free {
            for rr in 0..n {
                next[(rr, c)] += d_vec[rr] * y_row[c];
            }
        }
        xi_map = next;
        xi_maps.push(xi_map.clone());
    }

    // constraint rows
    let mut rows: Vec<RowDVector<f64>> = Vec::new();
    if force_h_zero {
        let mut r = RowDVector::zeros(n_free);
        r[h_col] = 1.0;
        rows.push(r);
    }
    // representative y row of an arc: constant on bang arcs, so the first
    // interval's row stands for the whole arc
    let arc_y_row = |k: usize, traj: &Trajectory| -> RowDVector<f64> {
        let (a, _) = traj.arc_node_range(&arcs[k]);
        y_rows.row(a.min(n_int - 1)).into_owned()
    };
    if kind == ConeKind::StrictPrimitive {
        // y continuity at bang/constrained junctions (not at singular ones)
        for (k, j) in traj.junctions().iter().enumerate() {
            let pair = (arcs[k].kind, arcs[k + 1].kind);
            let continuity = matches!(
                pair,
                (ArcKind::Bminus | ArcKind::Bplus, ArcKind::C)
                    | (ArcKind::C, ArcKind::Bminus | ArcKind::Bplus)
                    | (ArcKind::Bminus | ArcKind::Bplus, ArcKind::Bminus | ArcKind::Bplus)
            );
            if !continuity {
                continue;
            }
            let left_row = match arc_source[k] {
                YSource::Eliminated => elimination_row(spec, traj, j.node) * &xi_maps[j.node],
                _ => arc_y_row(k, traj),
            };
            let right_row = match arc_source[k + 1] {
                YSource::Eliminated => elimination_row(spec, traj, j.node) * &xi_maps[j.node],
                _ => arc_y_row(k + 1, traj),
            };
            rows.push(left_row - right_row);
        }
    }
    // terminal limit condition lim_{t↑T} y = h when the horizon ends on the
    // constraint: always part of the strict cone; for the extended-star cone
    // only when some multiplier carries a terminal atom
    let ends_on_constraint = arcs.last().unwrap().kind == ArcKind::C;
    let terminal_limit_applied = ends_on_constraint
        && match kind {
            ConeKind::StrictPrimitive => true,
            ConeKind::Extended => false,
            ConeKind::ExtendedStar => lams.iter().any(|l| l.terminal_atom_mass() > tol.beta_tol),
        };
    if terminal_limit_applied {
        let mut row = elimination_row(spec, traj, n_int) * &xi_maps[n_int];
        row[h_col] -= 1.0;
        rows.push(row);
    }
    // linearized endpoint rows: equalities, active inequalities, cost row
    let last = n_nodes - 1;
    let x0 = traj.x[0].as_slice();
    let xt = traj.x[last].as_slice();
    let f1t = spec.f1.eval(xt);
    let mut h_row = RowDVector::zeros(n_free);
    h_row[h_col] = 1.0;
    let zt_map = {
        let mut m = xi_maps[last].clone();
        for c in 0..n_free {
            for rr in 0..n {
                m[(rr, c)] += f1t[rr] * h_row[c];
            }
        }
        m
    };
    let endpoint_row = |g0: RowDVector<f64>, gt: RowDVector<f64>| -> RowDVector<f64> {
        &g0 * &xi_maps[0] + &gt * &zt_map
    };
    for i in 0..spec.n1 {
        let (g0, gt) = spec.endpoint_gradient(i, x0, xt);
        rows.push(endpoint_row(g0, gt));
    }
    for i in spec.n1..spec.n1 + spec.n2 {
        if spec.endpoint_value(i, x0, xt) >= -tol.act_tol {
            let (g0, gt) = spec.endpoint_gradient(i, x0, xt);
            rows.push(endpoint_row(g0, gt));
        }
    }
    let (c0, ct) = spec.cost_gradient(x0, xt);
    rows.push(endpoint_row(c0, ct));

    // drop zero rows, stack, nullspace
    let rows: Vec<RowDVector<f64>> = rows.into_iter().filter(|r| r.amax() > 1e-13).collect();
    let mut constraints = DMatrix::zeros(rows.len(), n_free);
    for (i, r) in rows.iter().enumerate() {
        constraints.set_row(i, r);
    }
    let basis = linalg::orthonormal_nullspace(&constraints);
    let constraint_rank = n_free - basis.ncols();
    let dim = basis.ncols();

    // γ Gram: Σ Δ_i y_iᵀ y_i + hᵀh + |ξ0|² (exact for piecewise-constant y)
    let mut gram_full = DMatrix::<f64>::zeros(n_free, n_free);
    for i in 0..n_int {
        let r = y_rows.row(i);
        let dt = traj.grid.step(i);
        gram_full += r.transpose() * r * dt;
    }
    gram_full += h_row.transpose() * &h_row;
    for k in 0..n {
        gram_full[(xi0_col + k, xi0_col + k)] += 1.0;
    }

    // Ω per multiplier: pull the per-interval engine quadrature back through
    // the (ξ_i, y_i) maps by exact polarization, then add boundary terms
    let mut omegas = Vec::with_capacity(lams.len());
    for lam in lams {
        let fc = FormContext::new(spec, traj, lam);
        let mut omega_full = DMatrix::<f64>::zeros(n_free, n_free);
        for i in 0..n_int {
            let m_local = n + 1;
            let mut w = DMatrix::<f64>::zeros(m_local, m_local);
            let quad = |a: usize, s: f64| -> f64 {
                let mut xi = DVector::zeros(n);
                let mut y = 0.0;
                if a < n {
                    xi[a] = s;
                } else {
                    y = s;
                }
                fc.omega_interval(i, &xi, y, 0.0).1
            };
            let pair = |a: usize, b: usize| -> f64 {
                let mut xi = DVector::zeros(n);
                let mut y = 0.0;
                if a < n {
                    xi[a] += 1.0;
                } else {
                    y += 1.0;
                }
                if b < n {
                    xi[b] += 1.0;
                } else {
                    y += 1.0;
                }
                fc.omega_interval(i, &xi, y, 0.0).1
            };
            let singles: Vec<f64> = (0..m_local).map(|a| quad(a, 1.0)).collect();
            for a in 0..m_local {
                w[(a, a)] = singles[a];
                for b in (a + 1)..m_local {
                    let v = 0.5 * (pair(a, b) - singles[a] - singles[b]);
                    w[(a, b)] = v;
                    w[(b, a)] = v;
                }
            }
            let mut j_map = DMatrix::<f64>::zeros(m_local, n_free);
            for rr in 0..n {
                j_map.set_row(rr, &xi_maps[i].row(rr));
            }
            j_map.set_row(n, &y_rows.row(i));
            omega_full += j_map.transpose() * w * j_map;
        }
        // boundary terms: Ω_T, Ω^E, and measure atoms
        let a_row = &fc.hux_terminal * &xi_maps[last];
        omega_full += h_row.transpose() * &a_row + a_row.transpose() * &h_row;
        omega_full += h_row.transpose() * &h_row * (&fc.hux_terminal * &f1t)[0];
        let ell = spec.endpoint_lagrangian(lam.beta, &lam.psi);
        let hess = ell.hessian_at(&crate::problem::stack_endpoint(x0, xt));
        let mut stacked = DMatrix::<f64>::zeros(2 * n, n_free);
        for rr in 0..n {
            stacked.set_row(rr, &xi_maps[0].row(rr));
            stacked.set_row(n + rr, &zt_map.row(rr));
        }
        omega_full += stacked.transpose() * hess * stacked;
        for atom in &lam.measure.atoms {
            if atom.mass == 0.0 {
                continue;
            }
            let node = atom.node;
            let y_node_row: RowDVector<f64> = if node == 0 {
                RowDVector::zeros(n_free)
            } else if node == last {
                h_row.clone()
            } else {
                (y_rows.row(node - 1) + y_rows.row(node.min(n_int - 1))) * 0.5
            };
            let x = traj.x[node].as_slice();
            let f1n = spec.f1.eval(x);
            let mut z_map = xi_maps[node].clone();
            for c in 0..n_free {
                for rr in 0..n {
                    z_map[(rr, c)] += f1n[rr] * y_node_row[c];
                }
            }
            omega_full += z_map.transpose() * spec.g_hessian(x) * z_map * atom.mass;
        }
        let projected = basis.transpose() * omega_full * &basis;
        omegas.push((&projected + projected.transpose()) * 0.5);
    }

    let gram = basis.transpose() * gram_full * &basis;
    let gram = (&gram + gram.transpose()) * 0.5;

    Ok(ConeBasis {
        kind,
        dim,
        n_free,
        constraint_rank,
        basis,
        gram,
        omega: omegas,
        constraints,
        terminal_limit_applied,
        y_rows,
        xi_maps,
        h_col,
    })
}
