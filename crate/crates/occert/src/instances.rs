//! Constructed test instances beyond the builtin registry.
//!
//! These are used by the examples, the property suites and the acceptance
//! tests: a singular-arc chain with a strictly positive (or, for the
//! indefinite variant, strictly negative) transformed Legendre coefficient,
//! and a fully constrained instance with a curved constraint boundary whose
//! multiplier density is a non-polynomial rational function.

use nalgebra::DVector;

use crate::error::Result;
use crate::poly::Polynomial;
use crate::problem::{ProblemSpec, VectorField};
use crate::trajectory::{integrate_state, Arc, ArcKind, ArcStructure, Grid, Trajectory};

/// Integrator chain with quadratic running cost folded into `x3`:
/// `ẋ1 = u`, `ẋ2 = x1`, `ẋ3 = sign·(x1² + x2²)`, minimize `x3(T)` with
/// `x(0) = 0` and `x1(T) = 0`; the whole horizon is one singular arc along
/// `û ≡ 0`, `x̂ ≡ 0`, and `R ≡ 2·sign` there.
pub fn singular_chain_spec(sign: f64) -> ProblemSpec {
    let n = 3;
    let f0 = VectorField::new(vec![
        Polynomial::zero(n),
        Polynomial::var(n, 0),
        Polynomial::from_terms(n, &[(&[2, 0, 0], sign), (&[0, 2, 0], sign)]),
    ])
    .unwrap();
    let f1 = VectorField::new(vec![
        Polynomial::constant(n, 1.0),
        Polynomial::zero(n),
        Polynomial::zero(n),
    ])
    .unwrap();
    // never-active constraint keeps the instance in the problem class
    let g = Polynomial::from_terms(n, &[(&[1, 0, 0], 1.0), (&[0, 0, 0], -10.0)]);
    let cost = Polynomial::var(2 * n, n + 2);
    let endpoint = vec![
        Polynomial::var(2 * n, 0),
        Polynomial::var(2 * n, 1),
        Polynomial::var(2 * n, 2),
        Polynomial::var(2 * n, n), // x1(T) = 0
    ];
    let spec = ProblemSpec {
        name: if sign >= 0.0 { "singular-chain".into() } else { "singular-chain-indefinite".into() },
        n,
        n1: 4,
        n2: 0,
        horizon: 1.0,
        u_min: -5.0,
        u_max: 5.0,
        f0,
        f1,
        g,
        cost,
        endpoint,
    };
    spec.validate().expect("constructed instance is well formed");
    spec
}

pub fn singular_chain_trajectory(spec: &ProblemSpec, intervals: usize) -> Result<Trajectory> {
    let grid = Grid::uniform_with_junctions(spec.horizon, intervals, &[])?;
    let u = vec![0.0; grid.num_intervals()];
    let x0 = DVector::zeros(spec.n);
    let x = integrate_state(spec, &u, &x0, &grid)?;
    let arcs = ArcStructure::new(
        vec![Arc { kind: ArcKind::S, t_start: 0.0, t_end: spec.horizon }],
        spec.horizon,
    )?;
    Ok(Trajectory { grid, u, x, arcs })
}

/// Fully constrained instance on a curved boundary: `ẋ1 = u`, `ẋ2 = x1`,
/// `g = −x1 − x2² ≤ 0` active on all of `[0, 1]` from `x(0) = (−1, 1)`, cost
/// `x1(T) + 2 x2(T)`. Along the boundary `x2 = 1/(1+t)`, `û = 2/(1+t)³`, and
/// the analytic multiplier has `p1 ≡ 0`, `p2 = ν = (1+t)²/4` with a unit
/// terminal atom.
pub fn curved_constraint_spec() -> ProblemSpec {
    let n = 2;
    let f0 = VectorField::new(vec![Polynomial::zero(n), Polynomial::var(n, 0)]).unwrap();
    let f1 = VectorField::new(vec![Polynomial::constant(n, 1.0), Polynomial::zero(n)]).unwrap();
    let g = Polynomial::from_terms(n, &[(&[1, 0], -1.0), (&[0, 2], -1.0)]);
    let cost = Polynomial::var(2 * n, 2).add(&Polynomial::var(2 * n, 3).scale(2.0));
    let endpoint = vec![
        Polynomial::var(2 * n, 0).add(&Polynomial::constant(2 * n, 1.0)),
        Polynomial::var(2 * n, 1).add(&Polynomial::constant(2 * n, -1.0)),
    ];
    let spec = ProblemSpec {
        name: "curved-constraint".into(),
        n,
        n1: 2,
        n2: 0,
        horizon: 1.0,
        u_min: -1.0,
        u_max: 3.0,
        f0,
        f1,
        g,
        cost,
        endpoint,
    };
    spec.validate().expect("constructed instance is well formed");
    spec
}

/// Boundary control `û(t) = 2/(1+t)³` sampled at interval midpoints, state
/// integrated by the shared one-step scheme.
pub fn curved_constraint_trajectory(spec: &ProblemSpec, intervals: usize) -> Result<Trajectory> {
    let grid = Grid::uniform_with_junctions(spec.horizon, intervals, &[])?;
    let u: Vec<f64> = (0..grid.num_intervals())
        .map(|i| {
            let mid = 0.5 * (grid.nodes()[i] + grid.nodes()[i + 1]);
            2.0 / (1.0 + mid).powi(3)
        })
        .collect();
    let x0 = DVector::from_vec(vec![-1.0, 1.0]);
    let x = integrate_state(spec, &u, &x0, &grid)?;
    let arcs = ArcStructure::new(
        vec![Arc { kind: ArcKind::C, t_start: 0.0, t_end: spec.horizon }],
        spec.horizon,
    )?;
    Ok(Trajectory { grid, u, x, arcs })
}
