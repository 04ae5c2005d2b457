//! Builtin example instances.
//!
//! `REG1` is a two-state regulator whose state-constraint multiplier carries
//! an atom at the final time; `CB1` is a three-state instance (running cost
//! folded into an augmented state, so the problem stays in Mayer form) whose
//! optimal control is continuous across the exit junction of the constrained
//! arc and whose critical cone is trivial. Both come with their known optimal
//! trajectory sampled on a default 400-interval grid and with analytic
//! multiplier seed data.

use nalgebra::{DVector, RowDVector};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::problem::{ProblemSpec, VectorField};
use crate::trajectory::{Arc, ArcKind, ArcStructure, Grid, Trajectory};

/// Default number of grid intervals for registry trajectories.
pub const DEFAULT_GRID: usize = 400;

/// Analytic seed for the multiplier fit: (β, Ψ, junction/endpoint atoms).
#[derive(Debug, Clone)]
pub struct MultiplierSeed {
    pub beta: f64,
    pub psi: RowDVector<f64>,
    /// (time, mass) pairs at junction times and endpoints.
    pub atoms: Vec<(f64, f64)>,
}

/// Look up a builtin instance by name.
pub fn registry_get(name: &str) -> Result<(ProblemSpec, Trajectory, MultiplierSeed)> {
    registry_get_on(name, DEFAULT_GRID)
}

/// Same as [`registry_get`] with an explicit interval count.
pub fn registry_get_on(name: &str, intervals: usize) -> Result<(ProblemSpec, Trajectory, MultiplierSeed)> {
    match name {
        "REG1" => {
            let spec = reg1_spec();
            let traj = reg1_trajectory(&spec, intervals)?;
            let seed = MultiplierSeed {
                beta: 1.0,
                psi: RowDVector::from_vec(vec![-1.0, -1.0]),
                atoms: vec![(2.0, 1.0)],
            };
            Ok((spec, traj, seed))
        }
        "CB1" => {
            let spec = cb1_spec();
            let traj = cb1_trajectory(&spec, intervals)?;
            let seed = MultiplierSeed {
                beta: 1.0,
                psi: RowDVector::from_vec(vec![-1.0, 0.75, -1.0]),
                atoms: vec![(1.0, 0.0), (1.5, 0.5)],
            };
            Ok((spec, traj, seed))
        }
        other => Err(Error::UnknownRegistry(other.to_string())),
    }
}

/// Regulator: min x1(T) + x2(T) with ẋ1 = u ∈ [−1, 1], ẋ2 = x1,
/// −x1 ≤ 0, x(0) = (1, 0), T = 2. Optimal control −1 on [0, 1], 0 on (1, 2].
pub fn reg1_spec() -> ProblemSpec {
    let n = 2;
    let f0 = VectorField::new(vec![
        Polynomial::zero(n),
        Polynomial::var(n, 0), // ẋ2 = x1
    ])
    .unwrap();
    let f1 = VectorField::new(vec![Polynomial::constant(n, 1.0), Polynomial::zero(n)]).unwrap();
    let g = Polynomial::var(n, 0).scale(-1.0); // g = −x1
    // endpoint variables: x1, x2 initial; x3, x4 final
    let cost = Polynomial::var(2 * n, 2).add(&Polynomial::var(2 * n, 3));
    let endpoint = vec![
        Polynomial::var(2 * n, 0).add(&Polynomial::constant(2 * n, -1.0)), // x1(0) = 1
        Polynomial::var(2 * n, 1),                                         // x2(0) = 0
    ];
    let spec = ProblemSpec {
        name: "REG1".into(),
        n,
        n1: 2,
        n2: 0,
        horizon: 2.0,
        u_min: -1.0,
        u_max: 1.0,
        f0,
        f1,
        g,
        cost,
        endpoint,
    };
    spec.validate().expect("builtin instance is well formed");
    spec
}

pub fn reg1_trajectory(spec: &ProblemSpec, intervals: usize) -> Result<Trajectory> {
    let grid = Grid::uniform_with_junctions(spec.horizon, intervals, &[1.0])?;
    let u: Vec<f64> = (0..grid.num_intervals())
        .map(|i| {
            let mid = 0.5 * (grid.nodes()[i] + grid.nodes()[i + 1]);
            if mid < 1.0 {
                spec.u_min
            } else {
                0.0
            }
        })
        .collect();
    let x0 = DVector::from_vec(vec![1.0, 0.0]);
    let x = crate::trajectory::integrate_state(spec, &u, &x0, &grid)?;
    let arcs = ArcStructure::new(
        vec![
            Arc { kind: ArcKind::Bminus, t_start: 0.0, t_end: 1.0 },
            Arc { kind: ArcKind::C, t_start: 1.0, t_end: 2.0 },
        ],
        spec.horizon,
    )?;
    Ok(Trajectory { grid, u, x, arcs })
}

/// Constrained instance with continuous control at the exit junction:
/// min ∫ x1 dt (as an augmented state x3 with ẋ3 = x1), ẋ1 = u ∈ [−1, 1],
/// ẋ2 = 1, g = −(x2 − 1)² − x1 ≤ 0, x(0) = (1, 0, 0), T = 2.
pub fn cb1_spec() -> ProblemSpec {
    let n = 3;
    let f0 = VectorField::new(vec![
        Polynomial::zero(n),
        Polynomial::constant(n, 1.0),
        Polynomial::var(n, 0),
    ])
    .unwrap();
    let f1 = VectorField::new(vec![
        Polynomial::constant(n, 1.0),
        Polynomial::zero(n),
        Polynomial::zero(n),
    ])
    .unwrap();
    // g = −(x2 − 1)² − x1 = −x2² + 2 x2 − 1 − x1
    let g = Polynomial::from_terms(n, &[(&[0, 2, 0], -1.0), (&[0, 1, 0], 2.0), (&[0, 0, 0], -1.0), (&[1, 0, 0], -1.0)]);
    let cost = Polynomial::var(2 * n, n + 2); // x3(T)
    let endpoint = vec![
        Polynomial::var(2 * n, 0).add(&Polynomial::constant(2 * n, -1.0)),
        Polynomial::var(2 * n, 1),
        Polynomial::var(2 * n, 2),
    ];
    let spec = ProblemSpec {
        name: "CB1".into(),
        n,
        n1: 3,
        n2: 0,
        horizon: 2.0,
        u_min: -1.0,
        u_max: 1.0,
        f0,
        f1,
        g,
        cost,
        endpoint,
    };
    spec.validate().expect("builtin instance is well formed");
    spec
}

pub fn cb1_trajectory(spec: &ProblemSpec, intervals: usize) -> Result<Trajectory> {
    let grid = Grid::uniform_with_junctions(spec.horizon, intervals, &[1.0, 1.5])?;
    let u: Vec<f64> = (0..grid.num_intervals())
        .map(|i| {
            let mid = 0.5 * (grid.nodes()[i] + grid.nodes()[i + 1]);
            if mid < 1.0 || mid > 1.5 {
                spec.u_min
            } else {
                -2.0 * (mid - 1.0)
            }
        })
        .collect();
    let x0 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let x = crate::trajectory::integrate_state(spec, &u, &x0, &grid)?;
    let arcs = ArcStructure::new(
        vec![
            Arc { kind: ArcKind::Bminus, t_start: 0.0, t_end: 1.0 },
            Arc { kind: ArcKind::C, t_start: 1.0, t_end: 1.5 },
            Arc { kind: ArcKind::Bminus, t_start: 1.5, t_end: 2.0 },
        ],
        spec.horizon,
    )?;
    Ok(Trajectory { grid, u, x, arcs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_errors() {
        assert!(matches!(registry_get("REG9"), Err(Error::UnknownRegistry(_))));
    }

    #[test]
    fn reg1_shape() {
        let (spec, traj, seed) = registry_get("REG1").unwrap();
        assert_eq!(spec.horizon, 2.0);
        assert_eq!((spec.u_min, spec.u_max), (-1.0, 1.0));
        assert_eq!(traj.num_intervals(), DEFAULT_GRID);
        // û = −1 on [0,1], 0 on (1,2]
        for i in 0..traj.num_intervals() {
            let mid = 0.5 * (traj.grid.nodes()[i] + traj.grid.nodes()[i + 1]);
            if mid < 1.0 {
                assert_eq!(traj.u[i], -1.0);
            } else {
                assert_eq!(traj.u[i], 0.0);
            }
        }
        assert_eq!(seed.atoms, vec![(2.0, 1.0)]);
    }

    #[test]
    fn cb1_control_profile() {
        let (_, traj, _) = registry_get("CB1").unwrap();
        let k = traj.grid.node_at(1.25).unwrap();
        // interval starting at 1.25 holds the midpoint sample of −2(t−1)
        let mid = 0.5 * (traj.grid.nodes()[k] + traj.grid.nodes()[k + 1]);
        assert!((traj.u[k] - (-2.0 * (mid - 1.0))).abs() <= 1e-12);
        assert_eq!(traj.u[0], -1.0);
        assert_eq!(*traj.u.last().unwrap(), -1.0);
    }
}
