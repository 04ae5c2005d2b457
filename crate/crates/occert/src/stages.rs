//! Per-interval stage data shared by every integrator and quadrature in the
//! crate.
//!
//! All node-to-node propagation is one classical RK4 step per grid interval
//! with the control held at its per-interval value. Midpoint values of any
//! smooth path are recovered by cubic Hermite interpolation from the node
//! values and node derivatives, and integrals are per-interval Simpson sums
//! over (left, midpoint, right) stage values. Using one rule everywhere keeps
//! cross-checks between independently assembled quantities at roundoff level.

use nalgebra::{DVector, RowDVector};

use crate::problem::{ProblemSpec, VectorField};
use crate::trajectory::{ArcKind, Trajectory};

/// Time grid interval with Hermite-interpolated state stages.
#[derive(Debug, Clone)]
pub struct IntervalCtx {
    pub idx: usize,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub u: f64,
    pub kind: ArcKind,
    pub x_left: DVector<f64>,
    pub x_mid: DVector<f64>,
    pub x_right: DVector<f64>,
}

/// Cubic Hermite midpoint from endpoint values and derivatives.
pub fn hermite_mid(v0: &DVector<f64>, v1: &DVector<f64>, d0: &DVector<f64>, d1: &DVector<f64>, dt: f64) -> DVector<f64> {
    (v0 + v1) * 0.5 + (d0 - d1) * (dt / 8.0)
}

pub fn hermite_mid_row(
    v0: &RowDVector<f64>,
    v1: &RowDVector<f64>,
    d0: &RowDVector<f64>,
    d1: &RowDVector<f64>,
    dt: f64,
) -> RowDVector<f64> {
    (v0 + v1) * 0.5 + (d0 - d1) * (dt / 8.0)
}

/// Per-interval Simpson contribution.
pub fn simpson(dt: f64, f_left: f64, f_mid: f64, f_right: f64) -> f64 {
    dt / 6.0 * (f_left + 4.0 * f_mid + f_right)
}

/// Build the interval contexts of a trajectory.
pub fn build_contexts(spec: &ProblemSpec, traj: &Trajectory) -> Vec<IntervalCtx> {
    let mut out = Vec::with_capacity(traj.num_intervals());
    for i in 0..traj.num_intervals() {
        let t0 = traj.grid.nodes()[i];
        let t1 = traj.grid.nodes()[i + 1];
        let dt = t1 - t0;
        let u = traj.u[i];
        let x_left = traj.x[i].clone();
        let x_right = traj.x[i + 1].clone();
        let d0 = spec.eval_dynamics(u, x_left.as_slice()).expect("dims validated");
        let d1 = spec.eval_dynamics(u, x_right.as_slice()).expect("dims validated");
        let x_mid = hermite_mid(&x_left, &x_right, &d0, &d1, dt);
        out.push(IntervalCtx {
            idx: i,
            t0,
            t1,
            dt,
            u,
            kind: traj.interval_kind(i),
            x_left,
            x_mid,
            x_right,
        });
    }
    out
}

impl IntervalCtx {
    /// Stage states ordered (left, mid, right).
    pub fn stages(&self) -> [&DVector<f64>; 3] {
        [&self.x_left, &self.x_mid, &self.x_right]
    }
}

/// Measure density `ν = p [f1, f0](x) / (g'(x) f1(x))` at a point; callers
/// pass `bracket01 = [f0, f1]` so the numerator is `−p·bracket01(x)`.
pub fn density_at(spec: &ProblemSpec, bracket01: &VectorField, p: &RowDVector<f64>, x: &[f64]) -> f64 {
    let numer = -(p * bracket01.eval(x))[0];
    let denom = (spec.g_gradient(x) * spec.f1.eval(x))[0];
    numer / denom
}

/// Right-hand side of the costate equation between atoms:
/// `ṗ = −p A(x) − 1_C ν(p, x) g'(x)`.
pub fn costate_rhs(
    spec: &ProblemSpec,
    bracket01: &VectorField,
    u: f64,
    x: &DVector<f64>,
    p: &RowDVector<f64>,
    on_c: bool,
) -> RowDVector<f64> {
    let a = spec.dynamics_jacobian(u, x.as_slice());
    let mut rhs = -(p * a);
    if on_c {
        let nu = density_at(spec, bracket01, p, x.as_slice());
        rhs -= spec.g_gradient(x.as_slice()) * nu;
    }
    rhs
}

/// One backward RK4 step of the costate across an interval: from the value at
/// the right node (inside the interval) to the value at the left node.
pub fn costate_backward_step(
    spec: &ProblemSpec,
    bracket01: &VectorField,
    ctx: &IntervalCtx,
    p_right: &RowDVector<f64>,
) -> RowDVector<f64> {
    let on_c = ctx.kind == ArcKind::C;
    let h = -ctx.dt;
    let k1 = costate_rhs(spec, bracket01, ctx.u, &ctx.x_right, p_right, on_c);
    let p2 = p_right + &k1 * (h / 2.0);
    let k2 = costate_rhs(spec, bracket01, ctx.u, &ctx.x_mid, &p2, on_c);
    let p3 = p_right + &k2 * (h / 2.0);
    let k3 = costate_rhs(spec, bracket01, ctx.u, &ctx.x_mid, &p3, on_c);
    let p4 = p_right + &k3 * h;
    let k4 = costate_rhs(spec, bracket01, ctx.u, &ctx.x_left, &p4, on_c);
    p_right + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Forward RK4 step of a linear inhomogeneous system
/// `v̇ = A(x(t)) v + s(t) b(x(t))` across an interval, where the scalar source
/// `s` is affine in time (`s(t) = s_mid + slope·(t − t_mid)`).
pub fn linear_forward_step(
    spec: &ProblemSpec,
    ctx: &IntervalCtx,
    v_left: &DVector<f64>,
    s_mid: f64,
    s_slope: f64,
    b: &dyn Fn(&DVector<f64>) -> DVector<f64>,
) -> DVector<f64> {
    let a_of = |x: &DVector<f64>| spec.dynamics_jacobian(ctx.u, x.as_slice());
    let s_left = s_mid - 0.5 * ctx.dt * s_slope;
    let s_right = s_mid + 0.5 * ctx.dt * s_slope;
    let dt = ctx.dt;
    let k1 = a_of(&ctx.x_left) * v_left + b(&ctx.x_left) * s_left;
    let v2 = v_left + &k1 * (dt / 2.0);
    let k2 = a_of(&ctx.x_mid) * v2 + b(&ctx.x_mid) * s_mid;
    let v3 = v_left + &k2 * (dt / 2.0);
    let k3 = a_of(&ctx.x_mid) * v3 + b(&ctx.x_mid) * s_mid;
    let v4 = v_left + &k3 * dt;
    let k4 = a_of(&ctx.x_right) * v4 + b(&ctx.x_right) * s_right;
    v_left + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}
