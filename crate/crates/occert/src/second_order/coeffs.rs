//! Pointwise coefficients of the linearized system and of the transformed
//! quadratic form.
//!
//! Everything here is evaluated at a single (x, u, p, ν) point. The time
//! derivative of the switching-row gradient is taken along the costate flow
//! `ṗ = −pA − ν g'` (density term on constrained arcs only), so the
//! assembled `M` and `R` agree with their closed forms without any finite
//! differencing in time.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::problem::{ProblemSpec, VectorField};

/// Precomputed bracket fields of a problem.
#[derive(Debug, Clone)]
pub struct BracketFields {
    /// `[f0, f1]`; equals `E_t = A_t f1 − d/dt f1(x̂_t)` at every state.
    pub bracket01: VectorField,
    /// `[[f0, f1], f1]`.
    pub double_bracket: VectorField,
}

impl BracketFields {
    pub fn new(spec: &ProblemSpec) -> Self {
        BracketFields { bracket01: spec.bracket01(), double_bracket: spec.double_bracket() }
    }
}

/// Coefficient bundle at one evaluation point.
#[derive(Debug, Clone)]
pub struct StageCoeffs {
    pub a: DMatrix<f64>,
    pub e: DVector<f64>,
    pub f1x: DVector<f64>,
    pub g_grad: RowDVector<f64>,
    pub g_hess: DMatrix<f64>,
    pub h_u: f64,
    pub h_xx: DMatrix<f64>,
    pub h_ux: RowDVector<f64>,
    pub h_ux_dot: RowDVector<f64>,
    /// `M = f1ᵀ H_xx − Ḣ_ux − H_ux A` (row).
    pub m_row: RowDVector<f64>,
    /// `R = f1ᵀ H_xx f1 − 2 H_ux E − d/dt(H_ux f1)`.
    pub r: f64,
    /// Closed form `p [[f0,f1],f1] + g' f1' f1 · ν`.
    pub r_closed: f64,
    pub nu: f64,
}

impl StageCoeffs {
    pub fn at(
        spec: &ProblemSpec,
        brackets: &BracketFields,
        x: &DVector<f64>,
        u: f64,
        p: &RowDVector<f64>,
        on_constrained_arc: bool,
    ) -> Self {
        let xs = x.as_slice();
        let n = spec.n;
        let f1x = spec.f1.eval(xs);
        let f1_jac = spec.f1.jacobian_at(xs);
        let a = spec.dynamics_jacobian(u, xs);
        let e = brackets.bracket01.eval(xs);
        let g_grad = spec.g_gradient(xs);
        let g_hess = spec.g_hessian(xs);
        let nu = if on_constrained_arc {
            crate::stages::density_at(spec, &brackets.bracket01, p, xs)
        } else {
            0.0
        };

        let mut h_xx = DMatrix::zeros(n, n);
        for (k, (h0, h1)) in spec
            .f0
            .hessians_at(xs)
            .into_iter()
            .zip(spec.f1.hessians_at(xs))
            .enumerate()
        {
            h_xx += (h0 + h1 * u) * p[k];
        }
        let h_ux = p * &f1_jac;
        let h_u = (p * &f1x)[0];

        let p_dot = -(p * &a) - &g_grad * nu;
        let f = spec.eval_dynamics(u, xs).expect("dims validated");
        // d/dt (p f1'(x̂)) = ṗ f1' + p · (f1'' ⋅ ẋ)
        let mut curvature = RowDVector::zeros(n);
        for (k, hess) in spec.f1.hessians_at(xs).into_iter().enumerate() {
            curvature += (hess * &f).transpose() * p[k];
        }
        let h_ux_dot = &p_dot * &f1_jac + curvature;

        let m_row = (&h_xx * &f1x).transpose() - &h_ux_dot - &h_ux * &a;
        let d_huxf1 = (&h_ux_dot * &f1x)[0] + (&h_ux * (&f1_jac * &f))[0];
        let r = (f1x.transpose() * &h_xx * &f1x)[(0, 0)] - 2.0 * (&h_ux * &e)[0] - d_huxf1;
        let r_closed =
            (p * brackets.double_bracket.eval(xs))[0] + (&g_grad * (&f1_jac * &f1x))[0] * nu;

        StageCoeffs {
            a,
            e,
            f1x,
            g_grad,
            g_hess,
            h_u,
            h_xx,
            h_ux,
            h_ux_dot,
            m_row,
            r,
            r_closed,
            nu,
        }
    }
}
