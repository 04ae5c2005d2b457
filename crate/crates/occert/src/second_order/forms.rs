//! The second variation `Q` on control/state directions, its transformed
//! counterpart `Ω` on primitive directions, and the integral identity linking
//! the switching function to the endpoint Lagrangian.
//!
//! Both quadratic forms are integrated per interval with the shared
//! RK4/Simpson stage rule, so they agree with each other (and with the cone
//! matrices assembled from the same engine) far below the verification
//! tolerances.

use nalgebra::{DVector, RowDVector};

use crate::multiplier::Multiplier;
use crate::problem::ProblemSpec;
use crate::stages::{self, IntervalCtx};
use crate::trajectory::{ArcKind, Trajectory};

use super::coeffs::{BracketFields, StageCoeffs};

/// Goh-transformed direction `(y, h, ξ)`.
///
/// `y` holds one value per grid interval (the midpoint sample). Directions
/// produced by [`goh_transform`] additionally carry the in-interval slope of
/// the primitive `y = ∫v`; directions living in the discretized cones are
/// piecewise constant and have no slope.
#[derive(Debug, Clone)]
pub struct GohDirection {
    pub y: Vec<f64>,
    pub y_slope: Option<Vec<f64>>,
    pub h: f64,
    pub xi: Vec<DVector<f64>>,
}

impl GohDirection {
    pub fn xi0(&self) -> &DVector<f64> {
        &self.xi[0]
    }

    /// y at the three stage points of interval `i`.
    pub fn y_stages(&self, i: usize, dt: f64) -> (f64, f64, f64) {
        let s = self.y_slope.as_ref().map_or(0.0, |v| v[i]);
        (self.y[i] - 0.5 * dt * s, self.y[i], self.y[i] + 0.5 * dt * s)
    }

    /// Value of y attributed to a node: 0 at t = 0, `h` at t = T, and the
    /// mean of the adjacent interval limits in between (exact for continuous
    /// piecewise-linear primitives).
    pub fn y_at_node(&self, node: usize, grid: &crate::trajectory::Grid) -> f64 {
        let n_int = self.y.len();
        if node == 0 {
            return 0.0;
        }
        if node == n_int {
            return self.h;
        }
        let (_, _, left_end) = self.y_stages(node - 1, grid.step(node - 1));
        let (right_start, _, _) = self.y_stages(node, grid.step(node));
        0.5 * (left_end + right_start)
    }

    /// `γ(y, h, ξ0) = ∫ y² dt + h² + |ξ0|²` (exact for the stored y classes).
    pub fn gamma(&self, grid: &crate::trajectory::Grid) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.y.len() {
            let dt = grid.step(i);
            let s = self.y_slope.as_ref().map_or(0.0, |v| v[i]);
            acc += dt * (self.y[i] * self.y[i] + s * s * dt * dt / 12.0);
        }
        acc + self.h * self.h + self.xi0().norm_squared()
    }

    pub fn scale(&self, c: f64) -> GohDirection {
        GohDirection {
            y: self.y.iter().map(|v| c * v).collect(),
            y_slope: self.y_slope.as_ref().map(|s| s.iter().map(|v| c * v).collect()),
            h: c * self.h,
            xi: self.xi.iter().map(|v| v * c).collect(),
        }
    }
}

/// Goh transformation of a control direction: `y = ∫v` (exact primitive of
/// the per-interval control), `ξ = z − y f1(x̂)` with `z` the linearized
/// state, `h = y_T`. Returns the direction and the z path.
pub fn goh_transform(
    spec: &ProblemSpec,
    traj: &Trajectory,
    v: &[f64],
    z0: &DVector<f64>,
) -> (GohDirection, Vec<DVector<f64>>) {
    assert_eq!(v.len(), traj.num_intervals());
    let ctxs = stages::build_contexts(spec, traj);
    let mut z = Vec::with_capacity(traj.x.len());
    z.push(z0.clone());
    let mut y_nodes = vec![0.0];
    for (i, ctx) in ctxs.iter().enumerate() {
        let next = stages::linear_forward_step(spec, ctx, &z[i], v[i], 0.0, &|x| spec.f1.eval(x.as_slice()));
        z.push(next);
        y_nodes.push(y_nodes[i] + v[i] * ctx.dt);
    }
    let y_mid: Vec<f64> = (0..v.len()).map(|i| y_nodes[i] + 0.5 * v[i] * ctxs[i].dt).collect();
    let xi: Vec<DVector<f64>> = z
        .iter()
        .zip(traj.x.iter())
        .zip(y_nodes.iter())
        .map(|((zi, xi), yi)| zi - spec.f1.eval(xi.as_slice()) * *yi)
        .collect();
    let h = *y_nodes.last().unwrap();
    (GohDirection { y: y_mid, y_slope: Some(v.to_vec()), h, xi }, z)
}

/// One-step reproduction defect of the stored `ξ` path under the transformed
/// linear system `ξ̇ = A ξ + y E`.
pub fn xi_propagation_defect(spec: &ProblemSpec, traj: &Trajectory, dir: &GohDirection) -> f64 {
    let ctxs = stages::build_contexts(spec, traj);
    let brackets = BracketFields::new(spec);
    let mut worst: f64 = 0.0;
    for (i, ctx) in ctxs.iter().enumerate() {
        let s = dir.y_slope.as_ref().map_or(0.0, |v| v[i]);
        let next = stages::linear_forward_step(spec, ctx, &dir.xi[i], dir.y[i], s, &|x| {
            brackets.bracket01.eval(x.as_slice())
        });
        worst = worst.max((&next - &dir.xi[i + 1]).norm() / (1.0 + dir.xi[i + 1].norm()));
    }
    worst
}

/// Per-interval stage coefficients along a (trajectory, multiplier) pair.
pub struct FormContext<'a> {
    pub spec: &'a ProblemSpec,
    pub traj: &'a Trajectory,
    pub lam: &'a Multiplier,
    pub ctxs: Vec<IntervalCtx>,
    pub stages: Vec<[StageCoeffs; 3]>,
    pub brackets: BracketFields,
    /// `H_ux` at the final time, evaluated with the left limit of the costate.
    pub hux_terminal: RowDVector<f64>,
}

impl<'a> FormContext<'a> {
    pub fn new(spec: &'a ProblemSpec, traj: &'a Trajectory, lam: &'a Multiplier) -> Self {
        let ctxs = stages::build_contexts(spec, traj);
        let brackets = BracketFields::new(spec);
        let mut per_interval = Vec::with_capacity(ctxs.len());
        for (i, ctx) in ctxs.iter().enumerate() {
            let on_c = ctx.kind == ArcKind::C;
            let p_l = lam.p_at_interval_left(i);
            let p_r = lam.p_at_interval_right(i);
            let d_l = stages::costate_rhs(spec, &brackets.bracket01, ctx.u, &ctx.x_left, p_l, on_c);
            let d_r = stages::costate_rhs(spec, &brackets.bracket01, ctx.u, &ctx.x_right, p_r, on_c);
            let p_m = stages::hermite_mid_row(p_l, p_r, &d_l, &d_r, ctx.dt);
            per_interval.push([
                StageCoeffs::at(spec, &brackets, &ctx.x_left, ctx.u, p_l, on_c),
                StageCoeffs::at(spec, &brackets, &ctx.x_mid, ctx.u, &p_m, on_c),
                StageCoeffs::at(spec, &brackets, &ctx.x_right, ctx.u, p_r, on_c),
            ]);
        }
        let last = traj.x.len() - 1;
        let hux_terminal = &lam.p_left[last] * spec.f1.jacobian_at(traj.x[last].as_slice());
        FormContext { spec, traj, lam, ctxs, stages: per_interval, brackets, hux_terminal }
    }

    /// Coefficients at a node, using the in-arc costate side (left limit at
    /// the final node and at arc-closing junctions).
    pub fn node_coeffs(&self, node: usize) -> StageCoeffs {
        let n_int = self.traj.num_intervals();
        if node == 0 {
            self.stages[0][0].clone()
        } else if node >= n_int {
            self.stages[n_int - 1][2].clone()
        } else {
            self.stages[node][0].clone()
        }
    }

    /// RK4 step of `ξ̇ = A ξ + y E` over interval `i` plus the Simpson
    /// contribution of the Ω-integrand
    /// (`ξᵀH_xxξ + 2yMξ + Ry²`, plus the measure term on constrained arcs).
    pub fn omega_interval(
        &self,
        i: usize,
        xi_left: &DVector<f64>,
        y_mid: f64,
        y_slope: f64,
    ) -> (DVector<f64>, f64) {
        let ctx = &self.ctxs[i];
        let [cl, cm, cr] = &self.stages[i];
        let dt = ctx.dt;
        let (y_l, y_m, y_r) = (y_mid - 0.5 * dt * y_slope, y_mid, y_mid + 0.5 * dt * y_slope);

        let k1 = &cl.a * xi_left + &cl.e * y_l;
        let v2 = xi_left + &k1 * (dt / 2.0);
        let k2 = &cm.a * &v2 + &cm.e * y_m;
        let v3 = xi_left + &k2 * (dt / 2.0);
        let k3 = &cm.a * &v3 + &cm.e * y_m;
        let v4 = xi_left + &k3 * dt;
        let k4 = &cr.a * &v4 + &cr.e * y_r;
        let xi_right = xi_left + (k1.clone() + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0);

        let d_l = k1;
        let d_r = &cr.a * &xi_right + &cr.e * y_r;
        let xi_mid = stages::hermite_mid(xi_left, &xi_right, &d_l, &d_r, dt);

        let on_c = ctx.kind == ArcKind::C;
        let integrand = |c: &StageCoeffs, xi: &DVector<f64>, y: f64| -> f64 {
            let mut val = (xi.transpose() * &c.h_xx * xi)[(0, 0)]
                + 2.0 * y * (&c.m_row * xi)[0]
                + c.r * y * y;
            if on_c {
                let z = xi + &c.f1x * y;
                val += (z.transpose() * &c.g_hess * &z)[(0, 0)] * c.nu;
            }
            val
        };
        let contrib = stages::simpson(
            dt,
            integrand(cl, xi_left, y_l),
            integrand(cm, &xi_mid, y_m),
            integrand(cr, &xi_right, y_r),
        );
        (xi_right, contrib)
    }

    fn q_interval(
        &self,
        i: usize,
        z_left: &DVector<f64>,
        v: f64,
    ) -> (DVector<f64>, QAccum) {
        let ctx = &self.ctxs[i];
        let [cl, cm, cr] = &self.stages[i];
        let dt = ctx.dt;

        let k1 = &cl.a * z_left + &cl.f1x * v;
        let v2 = z_left + &k1 * (dt / 2.0);
        let k2 = &cm.a * &v2 + &cm.f1x * v;
        let v3 = z_left + &k2 * (dt / 2.0);
        let k3 = &cm.a * &v3 + &cm.f1x * v;
        let v4 = z_left + &k3 * dt;
        let k4 = &cr.a * &v4 + &cr.f1x * v;
        let z_right = z_left + (k1.clone() + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0);

        let d_l = k1;
        let d_r = &cr.a * &z_right + &cr.f1x * v;
        let z_mid = stages::hermite_mid(z_left, &z_right, &d_l, &d_r, dt);

        let on_c = ctx.kind == ArcKind::C;
        let eval = |c: &StageCoeffs, z: &DVector<f64>| -> (f64, f64, f64, f64) {
            let q0 = (z.transpose() * &c.h_xx * z)[(0, 0)] + 2.0 * v * (&c.h_ux * z)[0];
            let qg = if on_c { (z.transpose() * &c.g_hess * z)[(0, 0)] * c.nu } else { 0.0 };
            let huv = c.h_u * v;
            let gznu = if on_c { (&c.g_grad * z)[0] * c.nu } else { 0.0 };
            (q0, qg, huv, gznu)
        };
        let (a0, ag, ah, az) = eval(cl, z_left);
        let (b0, bg, bh, bz) = eval(cm, &z_mid);
        let (c0, cg, ch, cz) = eval(cr, &z_right);
        let acc = QAccum {
            q0: stages::simpson(dt, a0, b0, c0),
            qg: stages::simpson(dt, ag, bg, cg),
            hu_v: stages::simpson(dt, ah, bh, ch),
            gz_nu: stages::simpson(dt, az, bz, cz),
        };
        (z_right, acc)
    }

    /// The second variation `Q = Q⁰ + Q^E + Q^g` on a control/initial-state
    /// direction, with `z` the linearized state response.
    pub fn eval_q(&self, v: &[f64], z0: &DVector<f64>) -> f64 {
        self.q_parts(v, z0).0
    }

    /// Q together with the two sides of the integral identity
    /// `∫ g'(x̂) z dμ + Dℓ(z0, zT) = ∫ H_u v dt`.
    pub fn q_parts(&self, v: &[f64], z0: &DVector<f64>) -> (f64, f64, f64) {
        assert_eq!(v.len(), self.traj.num_intervals());
        let mut z = z0.clone();
        let mut z_nodes = Vec::with_capacity(self.traj.x.len());
        z_nodes.push(z.clone());
        let mut q0 = 0.0;
        let mut qg = 0.0;
        let mut hu_v = 0.0;
        let mut gz_nu = 0.0;
        for i in 0..v.len() {
            let (z_next, acc) = self.q_interval(i, &z, v[i]);
            q0 += acc.q0;
            qg += acc.qg;
            hu_v += acc.hu_v;
            gz_nu += acc.gz_nu;
            z = z_next;
            z_nodes.push(z.clone());
        }
        let last = z_nodes.len() - 1;
        let x0 = self.traj.x[0].as_slice();
        let xt = self.traj.x[last].as_slice();
        let qe = self.spec.lagrangian_hessian_quad(
            self.lam.beta,
            &self.lam.psi,
            x0,
            xt,
            &z_nodes[0],
            &z_nodes[last],
        );
        let mut atom_g = 0.0;
        let mut atom_gz = 0.0;
        for atom in &self.lam.measure.atoms {
            let x = self.traj.x[atom.node].as_slice();
            let zt = &z_nodes[atom.node];
            atom_g += atom.mass * (zt.transpose() * self.spec.g_hessian(x) * zt)[(0, 0)];
            atom_gz += atom.mass * (self.spec.g_gradient(x) * zt)[0];
        }
        let q = q0 + qe + qg + atom_g;

        let (d_x0, d_xt) = self.spec.lagrangian_boundary(self.lam.beta, &self.lam.psi, x0, xt);
        let d_ell = (&d_x0 * &z_nodes[0])[0] + (&d_xt * &z_nodes[last])[0];
        let lhs = gz_nu + atom_gz + d_ell;
        (q, lhs, hu_v)
    }

    /// The transformed form `Ω = Ω_T + Ω⁰ + Ω^E + Ω^g` on a Goh direction.
    /// The ξ path is re-propagated from `dir.xi[0]` with the shared one-step
    /// scheme; boundary terms use the left limit of the costate at `T`.
    pub fn eval_omega(&self, dir: &GohDirection) -> f64 {
        assert_eq!(dir.y.len(), self.traj.num_intervals());
        let mut xi = dir.xi[0].clone();
        let mut xi_nodes = Vec::with_capacity(self.traj.x.len());
        xi_nodes.push(xi.clone());
        let mut omega0g = 0.0;
        for i in 0..dir.y.len() {
            let s = dir.y_slope.as_ref().map_or(0.0, |v| v[i]);
            let (next, contrib) = self.omega_interval(i, &xi, dir.y[i], s);
            omega0g += contrib;
            xi = next;
            xi_nodes.push(xi.clone());
        }
        let last = xi_nodes.len() - 1;
        let x0 = self.traj.x[0].as_slice();
        let xt = self.traj.x[last].as_slice();
        let f1t = self.spec.f1.eval(xt);
        let xi_t = &xi_nodes[last];

        let omega_t = 2.0 * dir.h * (&self.hux_terminal * xi_t)[0]
            + dir.h * (&self.hux_terminal * &f1t)[0] * dir.h;
        let vt = xi_t + &f1t * dir.h;
        let omega_e = self.spec.lagrangian_hessian_quad(
            self.lam.beta,
            &self.lam.psi,
            x0,
            xt,
            &xi_nodes[0],
            &vt,
        );
        let mut atoms = 0.0;
        for atom in &self.lam.measure.atoms {
            let x = self.traj.x[atom.node].as_slice();
            let y_here = dir.y_at_node(atom.node, &self.traj.grid);
            let z = &xi_nodes[atom.node] + self.spec.f1.eval(x) * y_here;
            atoms += atom.mass * (z.transpose() * self.spec.g_hessian(x) * &z)[(0, 0)];
        }
        omega_t + omega0g + omega_e + atoms
    }

    /// Per-node arrays of the transformed coefficients: `(M, R, R_closed, ν)`
    /// plus the linearized-system data `(A, E)`.
    pub fn assemble_m_r(&self) -> Vec<NodeCoefficients> {
        (0..self.traj.x.len())
            .map(|node| {
                let c = self.node_coeffs(node);
                NodeCoefficients {
                    time: self.traj.grid.nodes()[node],
                    a: c.a,
                    e: c.e,
                    f1: c.f1x,
                    m_row: c.m_row,
                    r: c.r,
                    r_closed: c.r_closed,
                    nu: c.nu,
                }
            })
            .collect()
    }
}

struct QAccum {
    q0: f64,
    qg: f64,
    hu_v: f64,
    gz_nu: f64,
}

/// Node values of the linearized system and the transformed coefficients.
#[derive(Debug, Clone)]
pub struct NodeCoefficients {
    pub time: f64,
    pub a: nalgebra::DMatrix<f64>,
    pub e: DVector<f64>,
    pub f1: DVector<f64>,
    pub m_row: RowDVector<f64>,
    pub r: f64,
    pub r_closed: f64,
    pub nu: f64,
}
