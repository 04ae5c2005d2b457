//! Problem class: control-affine dynamics `ẋ = f0(x) + u f1(x)` with a scalar
//! control, bound control constraints, a scalar state constraint `g(x) ≤ 0`,
//! endpoint constraints `Φ(x0, xT) ∈ {0}^n1 × R^n2_-` and a Mayer cost
//! `φ(x0, xT)`.
//!
//! Endpoint polynomials (`cost`, `endpoint`) live in `2n` variables: `x1..xn`
//! is the initial state and `x(n+1)..x(2n)` the final state.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Polynomial vector field on R^n (one polynomial per component).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Polynomial>,
}

impl VectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidProblem("vector field with zero components".into()));
        }
        for c in &components {
            if c.nvars() != n {
                return Err(Error::DimensionMismatch(format!(
                    "field component in {} variables, expected {}",
                    c.nvars(),
                    n
                )));
            }
        }
        Ok(VectorField { components })
    }

    pub fn zero(n: usize) -> Self {
        VectorField { components: vec![Polynomial::zero(n); n] }
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dimension(), self.components.iter().map(|c| c.eval(x)))
    }

    /// Jacobian matrix `∂f_i/∂x_j` at `x` (exact).
    pub fn jacobian_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dimension();
        let mut j = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            for (k, v) in c.gradient_at(x).into_iter().enumerate() {
                j[(i, k)] = v;
            }
        }
        j
    }

    /// Component Hessians `∂²f_i/∂x_j∂x_k` at `x`, one matrix per component.
    pub fn hessians_at(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        self.components.iter().map(|c| c.hessian_at(x)).collect()
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField { components: self.components.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}

/// Lie bracket `[X, Y] := X'Y − Y'X`, assembled exactly at the coefficient
/// level.
pub fn lie_bracket(x_field: &VectorField, y_field: &VectorField) -> Result<VectorField> {
    let n = x_field.dimension();
    if y_field.dimension() != n {
        return Err(Error::DimensionMismatch(format!(
            "lie bracket of fields on R^{} and R^{}",
            n,
            y_field.dimension()
        )));
    }
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Polynomial::zero(n);
        for j in 0..n {
            // (X'Y)_i = Σ_j ∂X_i/∂x_j · Y_j, and symmetrically for Y'X.
            acc = acc.add(&x_field.component(i).partial(j).mul(y_field.component(j)));
            acc = acc.sub(&y_field.component(i).partial(j).mul(x_field.component(j)));
        }
        components.push(acc);
    }
    VectorField::new(components)
}

/// Pre-Hamiltonian `H(u, x, p) = p·(f0(x) + u f1(x))` together with the
/// partial derivatives used by the quadratic forms.
#[derive(Debug, Clone)]
pub struct HamiltonianEval {
    pub h: f64,
    pub h_u: f64,
    pub h_x: RowDVector<f64>,
    pub h_ux: RowDVector<f64>,
    pub h_xx: DMatrix<f64>,
}

/// Problem data. Immutable after construction; all evaluation methods are
/// pure, so values may be shared freely across threads.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub horizon: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub f0: VectorField,
    pub f1: VectorField,
    /// State constraint g(x) ≤ 0, polynomial in n variables.
    pub g: Polynomial,
    /// Mayer cost φ(x0, xT), polynomial in 2n variables.
    pub cost: Polynomial,
    /// Endpoint map Φ(x0, xT): first n1 rows equality, last n2 inequality.
    pub endpoint: Vec<Polynomial>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidProblem("n must be positive".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidProblem("horizon T must be positive".into()));
        }
        if !(self.u_min < self.u_max) {
            return Err(Error::InvalidProblem(format!(
                "u_min = {} must be below u_max = {}",
                self.u_min, self.u_max
            )));
        }
        if self.f0.dimension() != self.n || self.f1.dimension() != self.n {
            return Err(Error::DimensionMismatch("f0/f1 dimension != n".into()));
        }
        if self.g.nvars() != self.n {
            return Err(Error::DimensionMismatch("g must be a polynomial of x (n variables)".into()));
        }
        if self.cost.nvars() != 2 * self.n {
            return Err(Error::DimensionMismatch("cost must be a polynomial of (x0, xT)".into()));
        }
        if self.endpoint.len() != self.n1 + self.n2 {
            return Err(Error::DimensionMismatch(format!(
                "endpoint map has {} rows, expected n1 + n2 = {}",
                self.endpoint.len(),
                self.n1 + self.n2
            )));
        }
        for row in &self.endpoint {
            if row.nvars() != 2 * self.n {
                return Err(Error::DimensionMismatch("endpoint row must be a polynomial of (x0, xT)".into()));
            }
        }
        Ok(())
    }

    /// Dynamics `f(u, x) = f0(x) + u f1(x)`.
    pub fn eval_dynamics(&self, u: f64, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "state has dimension {}, expected {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.f0.eval(x) + self.f1.eval(x) * u)
    }

    /// Jacobian of the dynamics with respect to the state at fixed `u`.
    pub fn dynamics_jacobian(&self, u: f64, x: &[f64]) -> DMatrix<f64> {
        self.f0.jacobian_at(x) + self.f1.jacobian_at(x) * u
    }

    /// Pre-Hamiltonian and its derivatives at `(u, x, p)`.
    pub fn eval_hamiltonian(&self, u: f64, x: &[f64], p: &RowDVector<f64>) -> Result<HamiltonianEval> {
        if x.len() != self.n || p.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "hamiltonian point has (x, p) dims ({}, {}), expected {}",
                x.len(),
                p.len(),
                self.n
            )));
        }
        let f0x = self.f0.eval(x);
        let f1x = self.f1.eval(x);
        let h = p.dot(&(f0x + &f1x * u).transpose());
        let h_u = p.dot(&f1x.transpose());
        let h_x = p * self.dynamics_jacobian(u, x);
        let h_ux = p * self.f1.jacobian_at(x);
        let mut h_xx = DMatrix::zeros(self.n, self.n);
        for (k, (h0, h1)) in self
            .f0
            .hessians_at(x)
            .into_iter()
            .zip(self.f1.hessians_at(x))
            .enumerate()
        {
            h_xx += (h0 + h1 * u) * p[k];
        }
        Ok(HamiltonianEval { h, h_u, h_x, h_ux, h_xx })
    }

    pub fn g_gradient(&self, x: &[f64]) -> RowDVector<f64> {
        RowDVector::from_vec(self.g.gradient_at(x))
    }

    pub fn g_hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.g.hessian_at(x)
    }

    /// Endpoint Lagrangian `ℓ^{β,Ψ} = β φ + Ψ Φ` evaluated as a polynomial of
    /// the stacked point `(x0, xT)`.
    pub fn endpoint_lagrangian(&self, beta: f64, psi: &RowDVector<f64>) -> Polynomial {
        let mut ell = self.cost.scale(beta);
        for (i, row) in self.endpoint.iter().enumerate() {
            ell = ell.add(&row.scale(psi[i]));
        }
        ell
    }

    /// Gradient of ℓ split into the (−p0, pT) boundary pair:
    /// returns (D_{x0}ℓ, D_{xT}ℓ) as rows.
    pub fn lagrangian_boundary(
        &self,
        beta: f64,
        psi: &RowDVector<f64>,
        x0: &[f64],
        xt: &[f64],
    ) -> (RowDVector<f64>, RowDVector<f64>) {
        let ell = self.endpoint_lagrangian(beta, psi);
        let stacked = stack_endpoint(x0, xt);
        let grad = ell.gradient_at(&stacked);
        (
            RowDVector::from_vec(grad[..self.n].to_vec()),
            RowDVector::from_vec(grad[self.n..].to_vec()),
        )
    }

    /// `D²ℓ^{β,Ψ}(v0, vT)²` — the endpoint Hessian applied twice to the
    /// stacked direction.
    pub fn lagrangian_hessian_quad(
        &self,
        beta: f64,
        psi: &RowDVector<f64>,
        x0: &[f64],
        xt: &[f64],
        v0: &DVector<f64>,
        vt: &DVector<f64>,
    ) -> f64 {
        let ell = self.endpoint_lagrangian(beta, psi);
        let stacked = stack_endpoint(x0, xt);
        let h = ell.hessian_at(&stacked);
        let mut v = DVector::zeros(2 * self.n);
        v.rows_mut(0, self.n).copy_from(v0);
        v.rows_mut(self.n, self.n).copy_from(vt);
        (v.transpose() * h * v)[(0, 0)]
    }

    /// Value of one endpoint row at the nominal endpoints.
    pub fn endpoint_value(&self, row: usize, x0: &[f64], xt: &[f64]) -> f64 {
        self.endpoint[row].eval(&stack_endpoint(x0, xt))
    }

    /// Gradient of one endpoint row, split as (w.r.t. x0, w.r.t. xT).
    pub fn endpoint_gradient(&self, row: usize, x0: &[f64], xt: &[f64]) -> (RowDVector<f64>, RowDVector<f64>) {
        let grad = self.endpoint[row].gradient_at(&stack_endpoint(x0, xt));
        (
            RowDVector::from_vec(grad[..self.n].to_vec()),
            RowDVector::from_vec(grad[self.n..].to_vec()),
        )
    }

    pub fn cost_value(&self, x0: &[f64], xt: &[f64]) -> f64 {
        self.cost.eval(&stack_endpoint(x0, xt))
    }

    pub fn cost_gradient(&self, x0: &[f64], xt: &[f64]) -> (RowDVector<f64>, RowDVector<f64>) {
        let grad = self.cost.gradient_at(&stack_endpoint(x0, xt));
        (
            RowDVector::from_vec(grad[..self.n].to_vec()),
            RowDVector::from_vec(grad[self.n..].to_vec()),
        )
    }

    /// `[f0, f1]` as a polynomial field; equals the `E` coefficient of the
    /// transformed linear system at every state.
    pub fn bracket01(&self) -> VectorField {
        lie_bracket(&self.f0, &self.f1).expect("fields validated")
    }

    /// `[[f0, f1], f1]`, the field behind the closed form of `R`.
    pub fn double_bracket(&self) -> VectorField {
        lie_bracket(&self.bracket01(), &self.f1).expect("fields validated")
    }
}

pub fn stack_endpoint(x0: &[f64], xt: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(x0.len() + xt.len());
    s.extend_from_slice(x0);
    s.extend_from_slice(xt);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn dynamics_on_regulator_instance() {
        let (spec, _, _) = registry::registry_get("REG1").unwrap();
        let f = spec.eval_dynamics(-1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(f.as_slice(), &[-1.0, 1.0]);
        // u = 0 reduces to the drift
        let x = [0.3, -0.7];
        let f = spec.eval_dynamics(0.0, &x).unwrap();
        assert_eq!(f, spec.f0.eval(&x));
    }

    #[test]
    fn dynamics_on_augmented_instance() {
        // u = -2(t-1) at t = 1.25 on the constrained arc
        let (spec, _, _) = registry::registry_get("CB1").unwrap();
        let f = spec.eval_dynamics(-0.5, &[-0.0625, 1.25, 0.4]).unwrap();
        assert_eq!(f.as_slice(), &[-0.5, 1.0, -0.0625]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (spec, _, _) = registry::registry_get("REG1").unwrap();
        assert!(spec.eval_dynamics(0.0, &[1.0]).is_err());
    }

    #[test]
    fn bracket_of_field_with_itself_vanishes() {
        let (spec, _, _) = registry::registry_get("CB1").unwrap();
        let b = lie_bracket(&spec.f0, &spec.f0).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn regulator_bracket_is_constant() {
        // [f1, f0] with f1 = (1,0), f0 = (0, x1): f1'f0 − f0'f1 = −(0,1)
        let (spec, _, _) = registry::registry_get("REG1").unwrap();
        let b = lie_bracket(&spec.f1, &spec.f0).unwrap();
        let expected = VectorField::new(vec![
            Polynomial::zero(2),
            Polynomial::constant(2, -1.0),
        ])
        .unwrap();
        assert_eq!(b.components(), expected.components());
    }

    #[test]
    fn bracket_bilinearity_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (reg, _, _) = registry::registry_get("REG1").unwrap();
        let (a, b) = (1.7, -0.4);
        let combo = reg.f0.scale(a).add(&reg.f1.scale(b));
        let lhs = lie_bracket(&combo, &reg.f0).unwrap();
        let rhs = lie_bracket(&reg.f0, &reg.f0)
            .unwrap()
            .scale(a)
            .add(&lie_bracket(&reg.f1, &reg.f0).unwrap().scale(b));
        for _ in 0..10 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let d = (lhs.eval(&x) - rhs.eval(&x)).norm();
            assert!(d <= 1e-12, "bilinearity violated by {d}");
        }
    }

    #[test]
    fn hamiltonian_values_on_regulator() {
        let (spec, _, _) = registry::registry_get("REG1").unwrap();
        let p = RowDVector::from_vec(vec![1.0, 1.0]);
        let he = spec.eval_hamiltonian(0.3, &[1.0, 0.0], &p).unwrap();
        assert_eq!(he.h_u, 1.0);
        // on the constrained arc with p = (0, 1) the switching function vanishes
        let p = RowDVector::from_vec(vec![0.0, 1.0]);
        let he = spec.eval_hamiltonian(0.0, &[0.0, 0.4], &p).unwrap();
        assert_eq!(he.h_u, 0.0);
        // p = 0 zeroes every field
        let p = RowDVector::zeros(2);
        let he = spec.eval_hamiltonian(0.5, &[0.2, -0.1], &p).unwrap();
        assert_eq!(he.h, 0.0);
        assert_eq!(he.h_u, 0.0);
        assert_eq!(he.h_x.norm(), 0.0);
        assert_eq!(he.h_ux.norm(), 0.0);
        assert_eq!(he.h_xx.norm(), 0.0);
    }

    #[test]
    fn hamiltonian_identities_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for name in ["REG1", "CB1"] {
            let (spec, _, _) = registry::registry_get(name).unwrap();
            let n = spec.n;
            for _ in 0..25 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let p = RowDVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.5..1.5)));
                let u: f64 = rng.gen_range(-1.0..1.0);
                let he = spec.eval_hamiltonian(u, &x, &p).unwrap();
                let f = spec.eval_dynamics(u, &x).unwrap();
                assert!((he.h - p.dot(&f.transpose())).abs() <= 1e-12);
                assert!((he.h_u - p.dot(&spec.f1.eval(&x).transpose())).abs() <= 1e-12);
                let hux = &p * spec.f1.jacobian_at(&x);
                assert!((he.h_ux.clone() - hux).norm() <= 1e-12);
                // independent H_xx: contract component Hessians of f = f0 + u f1
                let mut hxx = DMatrix::zeros(n, n);
                for k in 0..n {
                    hxx += (spec.f0.component(k).hessian_at(&x)
                        + spec.f1.component(k).hessian_at(&x) * u)
                        * p[k];
                }
                assert!((he.h_xx.clone() - hxx).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (spec, _, _) = registry::registry_get("CB1").unwrap();
        let n = spec.n;
        let eps = 1e-5;
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let jac = spec.f0.jacobian_at(&x);
            for j in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += eps;
                xm[j] -= eps;
                let col = (spec.f0.eval(&xp) - spec.f0.eval(&xm)) / (2.0 * eps);
                for i in 0..n {
                    let denom = 1.0 + jac[(i, j)].abs();
                    assert!(
                        (jac[(i, j)] - col[i]).abs() / denom < 1e-6,
                        "jacobian mismatch at ({i},{j})"
                    );
                }
            }
        }
    }
}
