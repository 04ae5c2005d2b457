//! Lagrange multipliers λ = (β, Ψ, p, dμ) for a candidate trajectory.
//!
//! The state-constraint measure dμ is represented by its density ν on
//! constrained arcs plus nonnegative atoms at junction times and endpoints;
//! the costate is integrated backwards with the density evaluated stage-wise
//! from the current costate, and atoms applied as instantaneous jumps
//! `[p] = −mass·g'(x̂)`. A finite-dimensional damped Gauss–Newton fit
//! recovers (β, Ψ, atom masses) from the stationarity and boundary residuals.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::stages::{self, IntervalCtx};
use crate::tolerances::Tolerances;
use crate::trajectory::{ArcKind, Trajectory};

/// Point mass of dμ at a grid node (junction or endpoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub time: f64,
    pub node: usize,
    pub mass: f64,
}

/// dμ = ν·dt on constrained arcs + atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    /// Per-node density values, zero off constrained arcs.
    pub nu: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl Measure {
    pub fn mass_at_node(&self, node: usize) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.node == node)
            .map(|a| a.mass)
            .sum()
    }

    pub fn total_atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}

/// Multiplier with explicit one-sided costate values at every node.
#[derive(Debug, Clone)]
pub struct Multiplier {
    pub beta: f64,
    pub psi: RowDVector<f64>,
    /// Left limits p(t_i−); `p_left[0]` is the boundary value p_0.
    pub p_left: Vec<RowDVector<f64>>,
    /// Right limits p(t_i+); `p_right[N]` is the boundary value p_T.
    pub p_right: Vec<RowDVector<f64>>,
    pub measure: Measure,
    /// (−p_0) − D_{x0}ℓ^{β,Ψ}.
    pub boundary_defect: RowDVector<f64>,
}

impl Multiplier {
    /// Costate value inside interval `i` at its left node.
    pub fn p_at_interval_left(&self, i: usize) -> &RowDVector<f64> {
        &self.p_right[i]
    }

    /// Costate value inside interval `i` at its right node.
    pub fn p_at_interval_right(&self, i: usize) -> &RowDVector<f64> {
        &self.p_left[i + 1]
    }

    /// Nontriviality (β, Ψ, dμ) ≠ 0.
    pub fn is_nontrivial(&self, tol: f64) -> bool {
        self.beta.abs() > tol
            || self.psi.amax() > tol
            || self.measure.total_atom_mass() > tol
            || self.measure.nu.iter().any(|v| v.abs() > tol)
    }

    pub fn terminal_atom_mass(&self) -> f64 {
        let last = self.p_left.len() - 1;
        self.measure.mass_at_node(last)
    }
}

/// Closed-form density of dμ on a constrained arc:
/// `ν = p [f1, f0](x̂) / (g'(x̂) f1(x̂))`.
pub fn compute_nu(spec: &ProblemSpec, traj: &Trajectory, p: &RowDVector<f64>, node: usize) -> Result<f64> {
    let tol = Tolerances::default();
    let x = traj.x[node].as_slice();
    let denom = (spec.g_gradient(x) * spec.f1.eval(x))[0];
    if denom.abs() <= tol.fo_min {
        return Err(Error::FirstOrderDegenerate {
            margin: denom.abs(),
            fo_min: tol.fo_min,
            time: traj.grid.nodes()[node],
        });
    }
    let bracket01 = spec.bracket01();
    Ok(stages::density_at(spec, &bracket01, p, x))
}

/// Resolve (time, mass) atom data onto grid nodes. Atoms are only admitted at
/// junction times and at the endpoints.
fn resolve_atoms(traj: &Trajectory, atoms: &[(f64, f64)]) -> Result<Vec<Atom>> {
    let n_nodes = traj.grid.nodes().len();
    let mut allowed: Vec<usize> = vec![0, n_nodes - 1];
    allowed.extend(traj.junctions().iter().map(|j| j.node));
    let mut out = Vec::new();
    for &(time, mass) in atoms {
        let node = traj
            .grid
            .node_at(time)
            .filter(|n| allowed.contains(n))
            .ok_or_else(|| {
                Error::InvalidTrajectory(format!("atom at t = {time} is not a junction or endpoint node"))
            })?;
        out.push(Atom { time, node, mass });
    }
    out.sort_by(|a, b| a.node.cmp(&b.node));
    Ok(out)
}

/// Backward costate integration driven by (β, Ψ, atoms); the density on
/// constrained arcs is evaluated stage-wise from the current costate.
pub fn integrate_costate(
    spec: &ProblemSpec,
    traj: &Trajectory,
    beta: f64,
    psi: &RowDVector<f64>,
    atoms: &[(f64, f64)],
) -> Result<Multiplier> {
    let ctxs = stages::build_contexts(spec, traj);
    integrate_costate_with(spec, traj, &ctxs, beta, psi, atoms)
}

pub(crate) fn integrate_costate_with(
    spec: &ProblemSpec,
    traj: &Trajectory,
    ctxs: &[IntervalCtx],
    beta: f64,
    psi: &RowDVector<f64>,
    atoms: &[(f64, f64)],
) -> Result<Multiplier> {
    if psi.len() != spec.n1 + spec.n2 {
        return Err(Error::DimensionMismatch(format!(
            "psi has {} entries, expected {}",
            psi.len(),
            spec.n1 + spec.n2
        )));
    }
    let atoms = resolve_atoms(traj, atoms)?;
    let bracket01 = spec.bracket01();
    let n_nodes = traj.grid.nodes().len();
    let last = n_nodes - 1;
    let x0 = traj.x[0].as_slice();
    let xt = traj.x[last].as_slice();
    let (d_x0, d_xt) = spec.lagrangian_boundary(beta, psi, x0, xt);

    let mut p_left = vec![RowDVector::zeros(spec.n); n_nodes];
    let mut p_right = vec![RowDVector::zeros(spec.n); n_nodes];
    let mass_at = |node: usize| -> f64 {
        atoms.iter().filter(|a| a.node == node).map(|a| a.mass).sum()
    };

    p_right[last] = d_xt.clone();
    p_left[last] = &p_right[last] + spec.g_gradient(xt) * mass_at(last);
    for i in (0..traj.num_intervals()).rev() {
        let p = stages::costate_backward_step(spec, &bracket01, &ctxs[i], &p_left[i + 1]);
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteCostate { node: i, time: traj.grid.nodes()[i] });
        }
        p_right[i] = p;
        p_left[i] = if i == 0 {
            &p_right[i] + spec.g_gradient(traj.x[i].as_slice()) * mass_at(i)
        } else {
            let m = mass_at(i);
            if m != 0.0 {
                &p_right[i] + spec.g_gradient(traj.x[i].as_slice()) * m
            } else {
                p_right[i].clone()
            }
        };
    }

    // density on constrained arcs, evaluated with the in-arc costate side
    let mut nu = vec![0.0; n_nodes];
    for arc in traj.arcs.arcs().iter().filter(|a| a.kind == ArcKind::C) {
        let (a, b) = traj.arc_node_range(arc);
        for node in a..=b {
            let p = if node == b { &p_left[node] } else { &p_right[node] };
            nu[node] = stages::density_at(spec, &bracket01, p, traj.x[node].as_slice());
        }
    }

    let boundary_defect = -&p_left[0] - d_x0;
    Ok(Multiplier {
        beta,
        psi: psi.clone(),
        p_left,
        p_right,
        measure: Measure { nu, atoms },
        boundary_defect,
    })
}

/// Outcome of [`fit_multiplier`].
#[derive(Debug, Clone)]
pub struct FitInfo {
    pub iterations: usize,
    pub residual: f64,
    pub rescaled_to_unit_beta: bool,
}

struct FitLayout {
    /// θ slots: β, then the retained Ψ entries, then atom masses.
    psi_slots: Vec<usize>,
    atom_nodes: Vec<usize>,
    atom_times: Vec<f64>,
    /// Inequality rows kept active (Ψ ≥ 0 enforced).
    active_ineq: Vec<usize>,
}

/// Row bundle of the affine residual model (everything is linear in θ).
#[derive(Clone)]
struct RowValues {
    /// H_u at nodes of singular/constrained arcs (want 0).
    stationary: Vec<f64>,
    /// H_u at nodes of lower-bang arcs (want ≥ 0).
    bang_lower: Vec<f64>,
    /// H_u at nodes of upper-bang arcs (want ≤ 0).
    bang_upper: Vec<f64>,
    /// Boundary defect components (want 0).
    boundary: Vec<f64>,
    /// Density at constrained-arc nodes (want ≥ 0).
    density: Vec<f64>,
    /// Trapezoidal ∫ν over constrained arcs (for the normalization).
    density_integral: f64,
}

fn collect_rows(traj: &Trajectory, spec: &ProblemSpec, lam: &Multiplier) -> RowValues {
    let mut stationary = Vec::new();
    let mut bang_lower = Vec::new();
    let mut bang_upper = Vec::new();
    let mut density = Vec::new();
    let mut density_integral = 0.0;
    for arc in traj.arcs.arcs() {
        let (a, b) = traj.arc_node_range(arc);
        for node in a..=b {
            let p = if node == b { &lam.p_left[node] } else { &lam.p_right[node] };
            let hu = (p * spec.f1.eval(traj.x[node].as_slice()))[0];
            match arc.kind {
                ArcKind::S | ArcKind::C => stationary.push(hu),
                ArcKind::Bminus => bang_lower.push(hu),
                ArcKind::Bplus => bang_upper.push(hu),
            }
        }
        if arc.kind == ArcKind::C {
            for node in a..b {
                density.push(lam.measure.nu[node]);
                let dt = traj.grid.step(node);
                density_integral += 0.5 * dt * (lam.measure.nu[node] + lam.measure.nu[node + 1]);
            }
            density.push(lam.measure.nu[b]);
        }
    }
    RowValues {
        stationary,
        bang_lower,
        bang_upper,
        boundary: lam.boundary_defect.iter().copied().collect(),
        density,
        density_integral,
    }
}

fn flatten(rv: &RowValues) -> Vec<f64> {
    let mut v = Vec::new();
    v.extend_from_slice(&rv.stationary);
    v.extend_from_slice(&rv.bang_lower);
    v.extend_from_slice(&rv.bang_upper);
    v.extend_from_slice(&rv.boundary);
    v.extend_from_slice(&rv.density);
    v.push(rv.density_integral);
    v
}

/// Worst constraint violation of a candidate multiplier (∞-norm over the
/// stationarity, sign, boundary and nonnegativity rows).
fn true_residual(rv: &RowValues, theta: &[f64], layout: &FitLayout) -> f64 {
    let mut worst: f64 = 0.0;
    for v in &rv.stationary {
        worst = worst.max(v.abs());
    }
    for v in &rv.bang_lower {
        worst = worst.max((-v).max(0.0));
    }
    for v in &rv.bang_upper {
        worst = worst.max(v.max(0.0));
    }
    for v in &rv.boundary {
        worst = worst.max(v.abs());
    }
    for v in &rv.density {
        worst = worst.max((-v).max(0.0));
    }
    let beta = theta[0];
    worst = worst.max((-beta).max(0.0));
    for k in 0..layout.atom_nodes.len() {
        worst = worst.max((-theta[1 + layout.psi_slots.len() + k]).max(0.0));
    }
    for (slot, &row) in layout.psi_slots.iter().enumerate() {
        if layout.active_ineq.contains(&row) {
            worst = worst.max((-theta[1 + slot]).max(0.0));
        }
    }
    worst
}

fn multiplier_from_theta(
    spec: &ProblemSpec,
    traj: &Trajectory,
    ctxs: &[IntervalCtx],
    layout: &FitLayout,
    theta: &[f64],
) -> Result<Multiplier> {
    let beta = theta[0];
    let mut psi = RowDVector::zeros(spec.n1 + spec.n2);
    for (slot, &row) in layout.psi_slots.iter().enumerate() {
        psi[row] = theta[1 + slot];
    }
    let atoms: Vec<(f64, f64)> = layout
        .atom_times
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, theta[1 + layout.psi_slots.len() + k]))
        .collect();
    integrate_costate_with(spec, traj, ctxs, beta, &psi, &atoms)
}

/// Fit (β, Ψ, atom masses) by damped Gauss–Newton on the stationarity,
/// sign, boundary and nonnegativity residuals, under the scale-fixing
/// normalization `β + Σ masses + ∫ν + Σ|Ψ_i| = 1`; the result is rescaled to
/// β = 1 whenever β is nonzero.
pub fn fit_multiplier(
    spec: &ProblemSpec,
    traj: &Trajectory,
    seed_beta: f64,
    seed_psi: &RowDVector<f64>,
    seed_atoms: &[(f64, f64)],
    tol: &Tolerances,
) -> Result<(Multiplier, FitInfo)> {
    let ctxs = stages::build_contexts(spec, traj);
    let last = traj.grid.nodes().len() - 1;
    let x0 = traj.x[0].as_slice();
    let xt = traj.x[last].as_slice();

    // atom sites: junctions and endpoints where the constraint is active;
    // a junction where the control jumps cannot carry an atom (the measure
    // is continuous there), so those sites are excluded structurally
    let mut sites: Vec<(f64, usize)> = Vec::new();
    for (t, node) in std::iter::once((0.0, 0))
        .chain(traj.junctions().iter().map(|j| (j.time, j.node)))
        .chain(std::iter::once((traj.horizon(), last)))
    {
        if spec.g.eval(traj.x[node].as_slice()).abs() > tol.tol_g {
            continue;
        }
        if node != 0 && node != last {
            let du = traj.control_limit(spec, node, false)? - traj.control_limit(spec, node, true)?;
            if du.abs() >= tol.jump_min {
                continue;
            }
        }
        sites.push((t, node));
    }

    // inequality rows: inactive ones get Ψ_i = 0 and drop out of θ
    let mut psi_slots: Vec<usize> = (0..spec.n1).collect();
    let mut active_ineq = Vec::new();
    for i in spec.n1..spec.n1 + spec.n2 {
        if spec.endpoint_value(i, x0, xt) >= -tol.act_tol {
            psi_slots.push(i);
            active_ineq.push(i);
        }
    }
    let layout = FitLayout {
        psi_slots,
        atom_nodes: sites.iter().map(|s| s.1).collect(),
        atom_times: sites.iter().map(|s| s.0).collect(),
        active_ineq,
    };
    let dim = 1 + layout.psi_slots.len() + layout.atom_nodes.len();

    // affine residual model: columns from unit-parameter responses
    let eval_rows = |theta: &[f64]| -> Result<RowValues> {
        let lam = multiplier_from_theta(spec, traj, &ctxs, &layout, theta)?;
        Ok(collect_rows(traj, spec, &lam))
    };
    let base = flatten(&eval_rows(&vec![0.0; dim])?);
    let n_rows = base.len();
    let mut columns = DMatrix::zeros(n_rows, dim);
    for k in 0..dim {
        let mut theta = vec![0.0; dim];
        theta[k] = 1.0;
        let col = flatten(&eval_rows(&theta)?);
        for r in 0..n_rows {
            columns[(r, k)] = col[r] - base[r];
        }
    }
    let model = |theta: &[f64]| -> Vec<f64> {
        let th = DVector::from_vec(theta.to_vec());
        let v = &columns * th;
        base.iter().zip(v.iter()).map(|(b, c)| b + c).collect()
    };
    let unflatten = |flat: &[f64]| -> RowValues {
        let (n_st, n_bm, n_bp, n_nu) = eval_counts(traj);
        let n_bd = spec.n;
        let o1 = n_st;
        let o2 = o1 + n_bm;
        let o3 = o2 + n_bp;
        let o4 = o3 + n_bd;
        let o5 = o4 + n_nu;
        RowValues {
            stationary: flat[..o1].to_vec(),
            bang_lower: flat[o1..o2].to_vec(),
            bang_upper: flat[o2..o3].to_vec(),
            boundary: flat[o3..o4].to_vec(),
            density: flat[o4..o5].to_vec(),
            density_integral: flat[o5],
        }
    };

    let mut theta = {
        let mut th = vec![0.0; dim];
        th[0] = seed_beta;
        for (slot, &row) in layout.psi_slots.iter().enumerate() {
            if row < seed_psi.len() {
                th[1 + slot] = seed_psi[row];
            }
        }
        for (k, node) in layout.atom_nodes.iter().enumerate() {
            if let Some(&(_, m)) = seed_atoms
                .iter()
                .find(|(t, _)| traj.grid.node_at(*t) == Some(*node))
            {
                th[1 + layout.psi_slots.len() + k] = m;
            }
        }
        th
    };

    // Every residual row is homogeneous in θ (the zero multiplier satisfies
    // all of them), so each Gauss–Newton step solves the active equality
    // system on the unit sphere — the smallest singular direction — and the
    // scale is fixed afterwards by the canonical normalization
    // β + Σ masses + ∫ν + Σ|Ψ_i| = 1.
    let norm_value = |rv: &RowValues, theta: &[f64]| -> f64 {
        let mut v = theta[0] + rv.density_integral;
        for k in 0..layout.atom_nodes.len() {
            v += theta[1 + layout.psi_slots.len() + k];
        }
        for slot in 0..layout.psi_slots.len() {
            v += theta[1 + slot].abs();
        }
        v
    };
    // residual of the equality rows plus hinge violations, at unit scale
    let loop_residual = |rv: &RowValues, theta: &[f64]| -> f64 {
        let scale: f64 = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if scale <= 1e-300 {
            return f64::INFINITY;
        }
        true_residual(rv, theta, &layout) / scale
    };

    let (n_st, n_bm, n_bp, _) = eval_counts(traj);
    let off_bm = n_st;
    let off_bp = off_bm + n_bm;
    let off_bd = off_bp + n_bp;
    let off_nu = off_bd + spec.n;

    let mut best = {
        let rv = unflatten(&model(&theta));
        loop_residual(&rv, &theta)
    };
    let mut best_theta = theta.clone();
    let mut stall = 0usize;
    let mut iterations = 0usize;
    for it in 0..tol.max_iter {
        iterations = it + 1;
        // active set at the current iterate
        let rv = unflatten(&model(&theta));
        let mut rows: Vec<usize> = (0..n_st).collect();
        for (k, v) in rv.bang_lower.iter().enumerate() {
            if *v < 0.0 {
                rows.push(off_bm + k);
            }
        }
        for (k, v) in rv.bang_upper.iter().enumerate() {
            if *v > 0.0 {
                rows.push(off_bp + k);
            }
        }
        rows.extend(off_bd..off_bd + spec.n);
        for (k, v) in rv.density.iter().enumerate() {
            if *v < 0.0 {
                rows.push(off_nu + k);
            }
        }

        let mut system = DMatrix::zeros(rows.len() + dim, dim);
        for (r, &row) in rows.iter().enumerate() {
            for k in 0..dim {
                system[(r, k)] = columns[(row, k)];
            }
        }
        // sign hinges on θ itself (β ≥ 0, masses ≥ 0, active-inequality Ψ ≥ 0)
        let mut r = rows.len();
        let mut theta_hinge = |k: usize, want_nonneg: bool, system: &mut DMatrix<f64>| {
            if want_nonneg && theta[k] < 0.0 {
                system[(r, k)] = 1.0;
            }
            r += 1;
        };
        theta_hinge(0, true, &mut system);
        for (slot, &row) in layout.psi_slots.iter().enumerate() {
            theta_hinge(1 + slot, layout.active_ineq.contains(&row), &mut system);
        }
        for k in 0..layout.atom_nodes.len() {
            theta_hinge(1 + layout.psi_slots.len() + k, true, &mut system);
        }

        // smallest singular direction of the active system
        let gram = system.transpose() * &system;
        let eig = ((&gram + gram.transpose()) * 0.5).symmetric_eigen();
        let mut min_idx = 0;
        for k in 1..dim {
            if eig.eigenvalues[k] < eig.eigenvalues[min_idx] {
                min_idx = k;
            }
        }
        let mut cand: Vec<f64> = eig.eigenvectors.column(min_idx).iter().copied().collect();
        // orient the ray: β ≥ 0 first, then total mass + ∫ν ≥ 0, then the
        // first nonzero entry (pure endpoint multipliers come in ± pairs)
        let mass_sum: f64 = {
            let rv_c = unflatten(&model(&cand));
            cand[1 + layout.psi_slots.len()..].iter().sum::<f64>() + rv_c.density_integral
        };
        let flip = if cand[0].abs() > 1e-12 {
            cand[0] < 0.0
        } else if mass_sum.abs() > 1e-12 {
            mass_sum < 0.0
        } else {
            cand.iter().find(|v| v.abs() > 1e-12).map_or(false, |v| *v < 0.0)
        };
        if flip {
            for v in cand.iter_mut() {
                *v = -*v;
            }
        }

        // damped acceptance on the sphere residual
        let res_cand = {
            let rv = unflatten(&model(&cand));
            loop_residual(&rv, &cand)
        };
        let accepted = if res_cand <= best + 1e-15 {
            theta = cand;
            true
        } else {
            let blend: Vec<f64> = theta.iter().zip(&cand).map(|(a, b)| 0.5 * (a + b)).collect();
            let rv_b = unflatten(&model(&blend));
            if loop_residual(&rv_b, &blend) < best {
                theta = blend;
                true
            } else {
                false
            }
        };
        let res_now = {
            let rv = unflatten(&model(&theta));
            loop_residual(&rv, &theta)
        };
        if res_now < best - 1e-15 {
            best = res_now;
            best_theta = theta.clone();
            stall = 0;
        } else {
            stall += 1;
        }
        if best <= 1e-13 || stall >= 3 || !accepted {
            break;
        }
    }

    theta = best_theta;
    // canonical normalization before the β-rescale
    {
        let rv = unflatten(&model(&theta));
        let nval = norm_value(&rv, &theta);
        if nval > tol.beta_tol {
            for v in theta.iter_mut() {
                *v /= nval;
            }
        }
    }
    let mut rescaled = false;
    if theta[0] > tol.beta_tol {
        let s = 1.0 / theta[0];
        for v in theta.iter_mut() {
            *v *= s;
        }
        rescaled = true;
    }
    let lam = multiplier_from_theta(spec, traj, &ctxs, &layout, &theta)?;
    let rv = collect_rows(traj, spec, &lam);
    let residual = true_residual(&rv, &theta, &layout);
    if !(residual <= tol.fit_tol) {
        return Err(Error::FitDidNotConverge { residual, iterations, fit_tol: tol.fit_tol });
    }
    Ok((lam, FitInfo { iterations, residual, rescaled_to_unit_beta: rescaled }))
}

fn eval_counts(traj: &Trajectory) -> (usize, usize, usize, usize) {
    let mut n_st = 0;
    let mut n_bm = 0;
    let mut n_bp = 0;
    let mut n_nu = 0;
    for arc in traj.arcs.arcs() {
        let (a, b) = traj.arc_node_range(arc);
        let count = b - a + 1;
        match arc.kind {
            ArcKind::S | ArcKind::C => n_st += count,
            ArcKind::Bminus => n_bm += count,
            ArcKind::Bplus => n_bp += count,
        }
        if arc.kind == ArcKind::C {
            n_nu += count;
        }
    }
    (n_st, n_bm, n_bp, n_nu)
}

/// Structural validation of an externally supplied multiplier:
/// nontriviality (β, Ψ, dμ) ≠ 0, β ≥ 0, the sign/complementarity conditions
/// on the inequality rows of Ψ, nonnegativity of the measure, and support of
/// the atoms on active-constraint junction/endpoint nodes.
pub fn validate_multiplier(
    spec: &ProblemSpec,
    traj: &Trajectory,
    lam: &Multiplier,
    tol: &Tolerances,
) -> Vec<String> {
    let mut issues = Vec::new();
    if !lam.is_nontrivial(tol.beta_tol) {
        issues.push("trivial multiplier: (β, Ψ, dμ) = 0".into());
    }
    if lam.beta < -tol.beta_tol {
        issues.push(format!("β = {} is negative", lam.beta));
    }
    let last = traj.x.len() - 1;
    let x0 = traj.x[0].as_slice();
    let xt = traj.x[last].as_slice();
    for i in spec.n1..spec.n1 + spec.n2 {
        let psi_i = lam.psi[i];
        if psi_i < -tol.act_tol {
            issues.push(format!("inequality multiplier Ψ_{} = {psi_i} is negative", i + 1));
        }
        let value = spec.endpoint_value(i, x0, xt);
        if (psi_i * value).abs() > tol.act_tol {
            issues.push(format!("complementarity Ψ_{}·Φ_{} = {} nonzero", i + 1, i + 1, psi_i * value));
        }
    }
    if lam.measure.nu.iter().any(|v| *v < -tol.act_tol) {
        issues.push("measure density has negative entries".into());
    }
    for atom in &lam.measure.atoms {
        if atom.mass < -tol.act_tol {
            issues.push(format!("atom at t = {} has negative mass {}", atom.time, atom.mass));
        }
        if atom.mass > tol.act_tol {
            let g = spec.g.eval(traj.x[atom.node].as_slice());
            if g.abs() > tol.tol_g {
                issues.push(format!(
                    "atom at t = {} sits where the constraint is inactive (g = {g:.3e})",
                    atom.time
                ));
            }
        }
    }
    if lam.boundary_defect.amax() > tol.fit_tol {
        issues.push(format!(
            "boundary condition defect |−p0 − D_x0 ℓ| = {:.3e}",
            lam.boundary_defect.amax()
        ));
    }
    issues
}

/// Verdicts used across reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "VACUOUS")]
    Vacuous,
    #[serde(rename = "NOT_CERTIFIED")]
    NotCertified,
}

impl Verdict {
    pub fn acceptable(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::Vacuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcStationarity {
    pub kind: ArcKind,
    pub t_start: f64,
    pub t_end: f64,
    /// Worst violation of the arc's sign/vanishing condition on H_u.
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub scale: f64,
    pub tolerance: f64,
    pub arcs: Vec<ArcStationarity>,
    pub worst: f64,
    pub verdict: Verdict,
}

/// Classify H_u per node: ≥ −tol on lower-bang arcs, ≤ tol on upper-bang
/// arcs, |H_u| ≤ tol on singular and constrained arcs.
pub fn check_stationarity(
    spec: &ProblemSpec,
    traj: &Trajectory,
    lam: &Multiplier,
    tol: &Tolerances,
) -> StationarityReport {
    let mut scale: f64 = 1.0;
    for (node, x) in traj.x.iter().enumerate() {
        let f1n = spec.f1.eval(x.as_slice()).norm();
        scale = scale.max(lam.p_right[node].norm() * f1n);
    }
    let tolerance = tol.stat_tol * scale;
    let mut arcs = Vec::new();
    let mut worst: f64 = 0.0;
    for arc in traj.arcs.arcs() {
        let (a, b) = traj.arc_node_range(arc);
        let mut arc_worst: f64 = 0.0;
        for node in a..=b {
            let p = if node == b { &lam.p_left[node] } else { &lam.p_right[node] };
            let hu = (p * spec.f1.eval(traj.x[node].as_slice()))[0];
            let violation = match arc.kind {
                ArcKind::Bminus => (-hu).max(0.0),
                ArcKind::Bplus => hu.max(0.0),
                ArcKind::S | ArcKind::C => hu.abs(),
            };
            arc_worst = arc_worst.max(violation);
        }
        worst = worst.max(arc_worst);
        arcs.push(ArcStationarity {
            kind: arc.kind,
            t_start: arc.t_start,
            t_end: arc.t_end,
            worst: arc_worst,
            pass: arc_worst <= tolerance,
        });
    }
    let verdict = if worst <= tolerance { Verdict::Pass } else { Verdict::Fail };
    StationarityReport { scale, tolerance, arcs, worst, verdict }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCheck {
    pub time: f64,
    pub control_jump: f64,
    pub measure_jump: f64,
    pub switching_jump: f64,
    /// ‖[p] + [μ] g'(x̂)‖∞.
    pub costate_identity: f64,
    /// |[û]·[H_u]|.
    pub orthogonality: f64,
    /// |[μ]·[d/dt g]|.
    pub measure_orthogonality: f64,
    /// Required continuity of μ (control jumps while g is active) satisfied.
    pub continuity_required: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub junctions: Vec<JumpCheck>,
    /// ‖[p_T] + [μ_T] g'(x̂_T)‖∞ (and symmetrically at t = 0).
    pub endpoint_identity: f64,
    pub verdict: Verdict,
}

/// Verify the jump identities at every interior junction and at endpoint
/// atoms: `[p] = −[μ] g'`, `[û][H_u] = 0`, `[μ][d/dt g] = 0`, and μ-continuity
/// at active-constraint junctions where the control jumps.
pub fn check_jumps(spec: &ProblemSpec, traj: &Trajectory, lam: &Multiplier, tol: &Tolerances) -> Result<JumpReport> {
    let mut checks = Vec::new();
    let mut all_pass = true;
    for j in traj.junctions() {
        let node = j.node;
        let x = traj.x[node].as_slice();
        let g_grad = spec.g_gradient(x);
        let dp = &lam.p_right[node] - &lam.p_left[node];
        let mass = lam.measure.mass_at_node(node);
        let identity = (&dp + &g_grad * mass).amax();
        let du = traj.control_limit(spec, node, false)? - traj.control_limit(spec, node, true)?;
        let dhu = (&dp * spec.f1.eval(x))[0];
        let gf1 = (&g_grad * spec.f1.eval(x))[0];
        let dtg_jump = du * gf1;
        let orthogonality = (du * dhu).abs();
        let measure_orthogonality = (mass * dtg_jump).abs();
        let g_active = spec.g.eval(x).abs() <= tol.tol_g;
        let continuity_required = du.abs() >= tol.jump_min && g_active;
        let continuity_ok = !continuity_required || mass.abs() <= tol.jump_tol;
        let pass = identity <= tol.jump_tol
            && orthogonality <= tol.jump_tol
            && measure_orthogonality <= tol.jump_tol
            && continuity_ok;
        all_pass &= pass;
        checks.push(JumpCheck {
            time: j.time,
            control_jump: du,
            measure_jump: mass,
            switching_jump: dhu,
            costate_identity: identity,
            orthogonality,
            measure_orthogonality,
            continuity_required,
            pass,
        });
    }
    // endpoint atoms satisfy [p] = −[μ]g' by construction; verify from stored data
    let last = traj.x.len() - 1;
    let mut endpoint_identity: f64 = 0.0;
    for (node, x) in [(0usize, &traj.x[0]), (last, &traj.x[last])] {
        let dp = &lam.p_right[node] - &lam.p_left[node];
        let mass = lam.measure.mass_at_node(node);
        endpoint_identity =
            endpoint_identity.max((&dp + spec.g_gradient(x.as_slice()) * mass).amax());
    }
    all_pass &= endpoint_identity <= tol.jump_tol;
    let verdict = if checks.is_empty() && endpoint_identity <= tol.jump_tol {
        if lam.measure.atoms.iter().all(|a| a.mass == 0.0) {
            Verdict::Vacuous
        } else {
            Verdict::Pass
        }
    } else if all_pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(JumpReport { junctions: checks, endpoint_identity, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityReport {
    /// Worst margin of max_λ H_u over lower-bang interiors (min over nodes).
    pub bang_margin: Option<f64>,
    /// Endpoint margins where an endpoint lies in a bang arc.
    pub endpoint_margin: Option<f64>,
    /// Minimum density over constrained-arc interiors (best multiplier).
    pub support_margin: Option<f64>,
    pub verdict: Verdict,
}

/// Strict complementarity for the control constraints over a finite
/// multiplier list, plus the support condition of dμ on constrained arcs.
pub fn check_strict_complementarity(
    spec: &ProblemSpec,
    traj: &Trajectory,
    lams: &[&Multiplier],
    tol: &Tolerances,
) -> Result<ComplementarityReport> {
    if lams.is_empty() {
        return Err(Error::EmptyMultiplierList);
    }
    let hu = |lam: &Multiplier, node: usize, at_arc_end: bool| -> f64 {
        let p = if at_arc_end { &lam.p_left[node] } else { &lam.p_right[node] };
        (p * spec.f1.eval(traj.x[node].as_slice()))[0]
    };
    let last = traj.x.len() - 1;
    let mut bang_margin: Option<f64> = None;
    let mut endpoint_margin: Option<f64> = None;
    for arc in traj.arcs.arcs().iter().filter(|a| a.kind.is_bang()) {
        let sign = if arc.kind == ArcKind::Bminus { 1.0 } else { -1.0 };
        let (a, b) = traj.arc_node_range(arc);
        // interior margin on closed subintervals excluding one grid step
        // around the arc ends (the interior is open)
        for node in (a + 1)..b {
            let best = lams
                .iter()
                .map(|l| sign * hu(l, node, node == b))
                .fold(f64::NEG_INFINITY, f64::max);
            bang_margin = Some(bang_margin.map_or(best, |m: f64| m.min(best)));
        }
        // endpoint variants when the horizon ends inside a bang arc
        for (node, is_end) in [(a, false), (b, true)] {
            if node == 0 || node == last {
                let best = lams
                    .iter()
                    .map(|l| sign * hu(l, node, is_end))
                    .fold(f64::NEG_INFINITY, f64::max);
                endpoint_margin = Some(endpoint_margin.map_or(best, |m: f64| m.min(best)));
            }
        }
    }

    // support of dμ equals the contact set for at least one multiplier
    let mut support_margin: Option<f64> = None;
    let has_c = traj.arcs.arcs().iter().any(|a| a.kind == ArcKind::C);
    if has_c {
        for lam in lams {
            let mut worst = f64::INFINITY;
            for arc in traj.arcs.arcs().iter().filter(|a| a.kind == ArcKind::C) {
                let (a, b) = traj.arc_node_range(arc);
                for node in (a + 1)..b {
                    worst = worst.min(lam.measure.nu[node]);
                }
            }
            support_margin = Some(support_margin.map_or(worst, |m: f64| m.max(worst)));
        }
    }

    let bang_ok = bang_margin.map_or(true, |m| m > tol.sc_margin);
    let end_ok = endpoint_margin.map_or(true, |m| m > tol.sc_margin);
    let supp_ok = support_margin.map_or(true, |m| m > 0.0);
    let vacuous = bang_margin.is_none() && endpoint_margin.is_none() && support_margin.is_none();
    let verdict = if vacuous {
        Verdict::Vacuous
    } else if bang_ok && end_ok && supp_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ComplementarityReport { bang_margin, endpoint_margin, support_margin, verdict })
}

/// Lagrangian value `ℓ^{β,Ψ}(x0, xT) + ∫ g(x) dμ` of a state-equation
/// solution; the measure (density stages and atoms) is the one attached to
/// the reference trajectory carrying `lam`.
pub fn lagrangian_value(
    spec: &ProblemSpec,
    traj: &Trajectory,
    lam: &Multiplier,
    reference: &Trajectory,
) -> f64 {
    assert_eq!(traj.grid.nodes().len(), reference.grid.nodes().len(), "grids must match");
    let x0 = traj.x[0].as_slice();
    let last = traj.x.len() - 1;
    let xt = traj.x[last].as_slice();
    let ell = spec
        .endpoint_lagrangian(lam.beta, &lam.psi)
        .eval(&crate::problem::stack_endpoint(x0, xt));

    let bracket01 = spec.bracket01();
    let ctxs = stages::build_contexts(spec, traj);
    let ref_ctxs = stages::build_contexts(spec, reference);
    let mut measure_term = 0.0;
    for i in 0..reference.num_intervals() {
        if reference.interval_kind(i) != ArcKind::C {
            continue;
        }
        // density stages from the reference costate, g from the evaluated path
        let p_l = lam.p_at_interval_left(i);
        let p_r = lam.p_at_interval_right(i);
        let rc = &ref_ctxs[i];
        let dl = stages::costate_rhs(spec, &bracket01, rc.u, &rc.x_left, p_l, true);
        let dr = stages::costate_rhs(spec, &bracket01, rc.u, &rc.x_right, p_r, true);
        let p_m = stages::hermite_mid_row(p_l, p_r, &dl, &dr, rc.dt);
        let nu_l = stages::density_at(spec, &bracket01, p_l, rc.x_left.as_slice());
        let nu_m = stages::density_at(spec, &bracket01, &p_m, rc.x_mid.as_slice());
        let nu_r = stages::density_at(spec, &bracket01, p_r, rc.x_right.as_slice());
        let c = &ctxs[i];
        measure_term += stages::simpson(
            c.dt,
            spec.g.eval(c.x_left.as_slice()) * nu_l,
            spec.g.eval(c.x_mid.as_slice()) * nu_m,
            spec.g.eval(c.x_right.as_slice()) * nu_r,
        );
    }
    for atom in &lam.measure.atoms {
        measure_term += atom.mass * spec.g.eval(traj.x[atom.node].as_slice());
    }
    ell + measure_term
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    fn analytic_reg1() -> (ProblemSpec, Trajectory, Multiplier) {
        let (spec, traj, seed) = registry::registry_get("REG1").unwrap();
        let lam = integrate_costate(&spec, &traj, seed.beta, &seed.psi, &seed.atoms).unwrap();
        (spec, traj, lam)
    }

    #[test]
    fn density_on_the_regulator_boundary_arc() {
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        let node = traj.grid.node_at(1.5).unwrap();
        let p = RowDVector::from_vec(vec![0.0, 1.0]);
        assert!((compute_nu(&spec, &traj, &p, node).unwrap() - 1.0).abs() <= 1e-12);
        let zero = RowDVector::zeros(2);
        assert_eq!(compute_nu(&spec, &traj, &zero, node).unwrap(), 0.0);
        // numerator p[f1,f0] vanishes for p aligned with the first axis
        let p = RowDVector::from_vec(vec![3.0, 0.0]);
        assert_eq!(compute_nu(&spec, &traj, &p, node).unwrap(), 0.0);
    }

    #[test]
    fn backward_integration_reproduces_the_analytic_costate() {
        let (spec, traj, lam) = analytic_reg1();
        assert!(lam.boundary_defect.amax() <= 1e-10, "defect {}", lam.boundary_defect);
        for (i, &t) in traj.grid.nodes().iter().enumerate() {
            let p = &lam.p_right[i];
            assert!((p[1] - 1.0).abs() <= 1e-10, "p2 ≡ 1");
            let expected = if t < 1.0 { 1.0 - t } else { 0.0 };
            let side = if i == traj.grid.nodes().len() - 1 { &lam.p_left[i] } else { p };
            assert!(
                (side[0] - expected).abs() <= 1e-10,
                "p1({t}) = {}, expected {expected}",
                side[0]
            );
        }
        // density ≡ 1 on the boundary arc, terminal atom carries the jump
        let c_start = traj.grid.node_at(1.0).unwrap();
        for i in c_start..traj.x.len() {
            assert!((lam.measure.nu[i] - 1.0).abs() <= 1e-10);
        }
        assert_eq!(lam.terminal_atom_mass(), 1.0);
        let last = traj.x.len() - 1;
        assert!((lam.p_right[last][0] - 1.0).abs() <= 1e-12);
        assert!((lam.p_left[last][0]).abs() <= 1e-12);
    }

    #[test]
    fn atoms_must_sit_on_junctions_or_endpoints() {
        let (spec, traj, seed) = registry::registry_get("REG1").unwrap();
        let err = integrate_costate(&spec, &traj, seed.beta, &seed.psi, &[(0.7, 0.5)]);
        assert!(err.is_err());
    }

    #[test]
    fn fit_recovers_the_regulator_multiplier_from_zeros() {
        let tol = Tolerances::default();
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        let (lam, info) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(2), &[], &tol).unwrap();
        assert!(info.residual <= 1e-8, "residual {}", info.residual);
        assert!(info.rescaled_to_unit_beta);
        assert_eq!(lam.beta, 1.0);
        assert!((lam.terminal_atom_mass() - 1.0).abs() <= 1e-8);
        for atom in &lam.measure.atoms {
            if atom.time != traj.horizon() {
                assert!(atom.mass.abs() <= 1e-10, "no interior mass at {}", atom.time);
            }
        }
        for (i, &t) in traj.grid.nodes().iter().enumerate() {
            assert!((lam.p_right[i][1] - 1.0).abs() <= 1e-8);
            if t >= 1.0 && i < traj.x.len() - 1 {
                assert!(lam.p_right[i][0].abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn fit_places_the_interior_atom_on_the_continuous_junction() {
        let tol = Tolerances::default();
        let (spec, traj, seed) = registry::registry_get("CB1").unwrap();
        let (lam, info) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol).unwrap();
        assert!(info.residual <= 1e-6);
        assert_eq!(lam.beta, 1.0);
        let node = traj.grid.node_at(1.5).unwrap();
        assert!((lam.measure.mass_at_node(node) - 0.5).abs() <= 1e-8, "mass 1/2 at t = 3/2");
        // p2 on the lower-bang tail is zero, −3/4 before entry
        let k0 = traj.grid.node_at(0.5).unwrap();
        assert!((lam.p_right[k0][1] + 0.75).abs() <= 1e-8);
        let k1 = traj.grid.node_at(1.75).unwrap();
        assert!(lam.p_right[k1][1].abs() <= 1e-8);
        // switching function stays correctly signed on the bang arcs
        let rep = check_stationarity(&spec, &traj, &lam, &tol);
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
    }

    #[test]
    fn fit_without_active_constraints_recovers_the_plain_adjoint() {
        // inactive state constraint, single bang arc: atoms vanish and the
        // costate is the unconstrained adjoint
        let tol = Tolerances::default();
        let (mut spec, _, _) = registry::registry_get("REG1").unwrap();
        spec.g = crate::poly::Polynomial::from_terms(2, &[(&[1, 0], 1.0), (&[0, 0], -50.0)]);
        let grid = crate::trajectory::Grid::uniform_with_junctions(2.0, 100, &[]).unwrap();
        let u = vec![-1.0; 100];
        let x0 = nalgebra::DVector::from_vec(vec![1.0, 0.0]);
        let x = crate::trajectory::integrate_state(&spec, &u, &x0, &grid).unwrap();
        let arcs = crate::trajectory::ArcStructure::new(
            vec![crate::trajectory::Arc { kind: ArcKind::Bminus, t_start: 0.0, t_end: 2.0 }],
            2.0,
        )
        .unwrap();
        let traj = Trajectory { grid, u, x, arcs };
        let (lam, _) = fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(2), &[], &tol).unwrap();
        assert!(lam.measure.atoms.iter().all(|a| a.mass.abs() <= 1e-12));
        assert!(lam.measure.nu.iter().all(|v| *v == 0.0));
        // adjoint of the free problem: p2 ≡ 1, p1(t) = 3 − t (scaled to β = 1)
        for (i, &t) in traj.grid.nodes().iter().enumerate() {
            assert!((lam.p_right[i][1] - 1.0).abs() <= 1e-9);
            assert!((lam.p_right[i][0] - (3.0 - t)).abs() <= 1e-8);
        }
    }

    #[test]
    fn fit_reports_nonconvergence_on_an_inconsistent_structure() {
        // declaring the boundary arc singular removes the measure, and the
        // switching function cannot vanish there for any scaled multiplier
        let tol = Tolerances::default();
        let (spec, mut traj, _) = registry::registry_get("REG1").unwrap();
        traj.arcs = crate::trajectory::ArcStructure::new(
            vec![
                crate::trajectory::Arc { kind: ArcKind::Bminus, t_start: 0.0, t_end: 1.0 },
                crate::trajectory::Arc { kind: ArcKind::S, t_start: 1.0, t_end: 2.0 },
            ],
            2.0,
        )
        .unwrap();
        match fit_multiplier(&spec, &traj, 0.0, &RowDVector::zeros(2), &[], &tol) {
            Err(Error::FitDidNotConverge { residual, .. }) => assert!(residual > 1e-6),
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn stationarity_flags_a_sign_flipped_costate() {
        let tol = Tolerances::default();
        let (spec, traj, lam) = analytic_reg1();
        let rep = check_stationarity(&spec, &traj, &lam, &tol);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.worst <= 1e-10);

        let mut flipped = lam.clone();
        for p in flipped.p_left.iter_mut().chain(flipped.p_right.iter_mut()) {
            *p = -p.clone();
        }
        let rep = check_stationarity(&spec, &traj, &flipped, &tol);
        assert_eq!(rep.verdict, Verdict::Fail);
        let bang = rep.arcs.iter().find(|a| a.kind == ArcKind::Bminus).unwrap();
        assert!(!bang.pass, "flipped sign must violate the lower-bang condition");
    }

    #[test]
    fn nontriviality_detects_the_zero_multiplier() {
        let (spec, traj, _) = registry::registry_get_on("REG1", 50).unwrap();
        let zero = integrate_costate(&spec, &traj, 0.0, &RowDVector::zeros(2), &[]).unwrap();
        assert!(!zero.is_nontrivial(1e-12));
        let (_, _, lam) = analytic_reg1();
        assert!(lam.is_nontrivial(1e-12));
    }

    #[test]
    fn jump_conditions_on_the_regulator() {
        let tol = Tolerances::default();
        let (spec, traj, lam) = analytic_reg1();
        let rep = check_jumps(&spec, &traj, &lam, &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.junctions.len(), 1);
        let j = &rep.junctions[0];
        assert!((j.control_jump - 1.0).abs() <= 1e-12);
        assert!(j.measure_jump.abs() <= 1e-12, "measure continuous at the entry junction");
        assert!(j.costate_identity <= 1e-12);
        assert!(j.orthogonality <= 1e-12);
        assert!(rep.endpoint_identity <= 1e-12, "terminal atom satisfies the jump identity");
    }

    #[test]
    fn jump_report_is_vacuous_without_junctions_or_atoms() {
        let tol = Tolerances::default();
        let spec = crate::instances::singular_chain_spec(1.0);
        let traj = crate::instances::singular_chain_trajectory(&spec, 20).unwrap();
        let lam = integrate_costate(&spec, &traj, 1.0, &RowDVector::zeros(4), &[]).unwrap();
        let rep = check_jumps(&spec, &traj, &lam, &tol).unwrap();
        assert!(rep.junctions.is_empty());
        assert_eq!(rep.verdict, Verdict::Vacuous);
    }

    #[test]
    fn strict_complementarity_margins() {
        let tol = Tolerances::default();
        let (spec, traj, lam) = analytic_reg1();
        let rep = check_strict_complementarity(&spec, &traj, &[&lam], &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        // interior margin decays to one grid step at the junction
        let step = traj.grid.step(0);
        assert!(rep.bang_margin.unwrap() >= step - 1e-12);
        assert!((rep.endpoint_margin.unwrap() - 1.0).abs() <= 1e-10);
        assert!(rep.support_margin.unwrap() > 0.9);

        // a multiplier with vanishing switching function on the bang arc fails
        let psi = RowDVector::from_vec(vec![0.0, -1.0]);
        let degenerate = integrate_costate(&spec, &traj, 0.0, &psi, &[]).unwrap();
        assert!(degenerate.is_nontrivial(1e-12));
        let rep = check_strict_complementarity(&spec, &traj, &[&degenerate], &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn strict_complementarity_is_vacuous_without_bang_or_constrained_arcs() {
        let tol = Tolerances::default();
        let spec = crate::instances::singular_chain_spec(1.0);
        let traj = crate::instances::singular_chain_trajectory(&spec, 20).unwrap();
        let lam = integrate_costate(&spec, &traj, 1.0, &RowDVector::zeros(4), &[]).unwrap();
        let rep = check_strict_complementarity(&spec, &traj, &[&lam], &tol).unwrap();
        assert_eq!(rep.verdict, Verdict::Vacuous);
        assert!(matches!(check_strict_complementarity(&spec, &traj, &[], &tol), Err(Error::EmptyMultiplierList)));
    }
}

#[cfg(test)]
mod cb1_path {
    use super::*;
    use crate::registry;

    #[test]
    fn costate_follows_the_hand_integrated_path() {
        // p3 ≡ 1; p1 = 1−t / 0 / 2−t across the three arcs;
        // p2 = −3/4 / (t−1)² − 3/4 / 0, with the jump of 1/2 at t = 3/2
        let tol = Tolerances::default();
        let (spec, traj, seed) = registry::registry_get("CB1").unwrap();
        let (lam, _) = fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &tol).unwrap();
        for (i, &t) in traj.grid.nodes().iter().enumerate() {
            let p = if i == traj.x.len() - 1 { &lam.p_left[i] } else { &lam.p_right[i] };
            let (p1, p2) = if t < 1.0 {
                (1.0 - t, -0.75)
            } else if t < 1.5 {
                (0.0, (t - 1.0) * (t - 1.0) - 0.75)
            } else {
                (2.0 - t, 0.0)
            };
            assert!((p[0] - p1).abs() <= 1e-8, "p1({t}) = {}, expected {p1}", p[0]);
            assert!((p[1] - p2).abs() <= 1e-8, "p2({t}) = {}, expected {p2}", p[1]);
            assert!((p[2] - 1.0).abs() <= 1e-9);
        }
        let node = traj.grid.node_at(1.5).unwrap();
        let jump = &lam.p_right[node] - &lam.p_left[node];
        assert!((jump[0] - 0.5).abs() <= 1e-9 && (jump[1] - 0.5).abs() <= 1e-9);
    }
}
