//! Grid-sampled trajectories with a declared arc structure.
//!
//! The control is stored per interval (piecewise constant between nodes; on
//! constrained and singular arcs the stored value is the midpoint sample of
//! the underlying control). Arc structure is declared and validated, never
//! inferred. Junction times must be grid nodes so that one-sided limits of
//! jump quantities are well defined.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::tolerances::Tolerances;

/// Strictly increasing time grid `t_0 = 0 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidTrajectory("grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidTrajectory("grid must start at t = 0".into()));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidTrajectory("grid nodes must be strictly increasing".into()));
        }
        Ok(Grid { nodes })
    }

    /// Uniform grid on `[0, T]` with every junction time snapped onto the
    /// nearest node (nodes are moved, not inserted, so the count is exact).
    pub fn uniform_with_junctions(horizon: f64, intervals: usize, junctions: &[f64]) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::InvalidTrajectory("need at least two intervals".into()));
        }
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|i| horizon * i as f64 / intervals as f64)
            .collect();
        for &tau in junctions {
            if !(0.0 < tau && tau < horizon) {
                return Err(Error::InvalidTrajectory(format!(
                    "junction {tau} outside (0, {horizon})"
                )));
            }
            let k = ((tau / horizon) * intervals as f64).round() as usize;
            let k = k.clamp(1, intervals - 1);
            nodes[k] = tau;
        }
        Grid::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the node equal to `t` (within absolute slack 1e-12·(1+T)).
    pub fn node_at(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * (1.0 + self.horizon());
        self.nodes.iter().position(|&s| (s - t).abs() <= tol)
    }
}

/// Arc kinds of the declared control structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcKind {
    /// Control at the lower bound.
    Bminus,
    /// Control at the upper bound.
    Bplus,
    /// State constraint active.
    C,
    /// Interior control, inactive state constraint.
    S,
}

impl ArcKind {
    pub fn is_bang(self) -> bool {
        matches!(self, ArcKind::Bminus | ArcKind::Bplus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub kind: ArcKind,
    pub t_start: f64,
    pub t_end: f64,
}

/// Ordered list of arcs partitioning `[0, T]`; consecutive kinds differ.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcStructure {
    arcs: Vec<Arc>,
}

impl ArcStructure {
    pub fn new(arcs: Vec<Arc>, horizon: f64) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::InvalidTrajectory("empty arc structure".into()));
        }
        let tol = 1e-12 * (1.0 + horizon);
        if arcs[0].t_start.abs() > tol || (arcs.last().unwrap().t_end - horizon).abs() > tol {
            return Err(Error::InvalidTrajectory("arcs must cover [0, T]".into()));
        }
        for w in arcs.windows(2) {
            if (w[0].t_end - w[1].t_start).abs() > tol {
                return Err(Error::InvalidTrajectory("arcs must partition [0, T] without gaps".into()));
            }
            if w[0].kind == w[1].kind {
                return Err(Error::InvalidTrajectory("consecutive arcs must have different kinds".into()));
            }
        }
        for a in &arcs {
            if !(a.t_start < a.t_end) {
                return Err(Error::InvalidTrajectory("arc with nonpositive length".into()));
            }
        }
        Ok(ArcStructure { arcs })
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Interior junction times (arc boundaries strictly inside (0, T)).
    pub fn junction_times(&self) -> Vec<f64> {
        self.arcs.iter().skip(1).map(|a| a.t_start).collect()
    }
}

/// Grid-sampled control/state pair with declared arcs.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    /// Per-interval control samples (length = number of intervals).
    pub u: Vec<f64>,
    /// Per-node states (length = number of nodes).
    pub x: Vec<DVector<f64>>,
    pub arcs: ArcStructure,
}

/// One interior junction, resolved onto the grid.
#[derive(Debug, Clone)]
pub struct Junction {
    pub node: usize,
    pub time: f64,
    pub left: ArcKind,
    pub right: ArcKind,
}

impl Trajectory {
    pub fn num_intervals(&self) -> usize {
        self.grid.num_intervals()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    /// Arc kind of interval `i`, resolved from the declared structure.
    pub fn interval_kind(&self, i: usize) -> ArcKind {
        let mid = 0.5 * (self.grid.nodes()[i] + self.grid.nodes()[i + 1]);
        for a in self.arcs.arcs() {
            if mid >= a.t_start && mid <= a.t_end {
                return a.kind;
            }
        }
        // partition is validated at construction, so the last arc catches T
        self.arcs.arcs().last().unwrap().kind
    }

    /// Node indices spanned by a given arc (inclusive on both ends).
    pub fn arc_node_range(&self, arc: &Arc) -> (usize, usize) {
        let a = self.grid.node_at(arc.t_start).expect("arc start is a node");
        let b = self.grid.node_at(arc.t_end).expect("arc end is a node");
        (a, b)
    }

    pub fn junctions(&self) -> Vec<Junction> {
        let arcs = self.arcs.arcs();
        let mut out = Vec::new();
        for k in 1..arcs.len() {
            let time = arcs[k].t_start;
            let node = self.grid.node_at(time).expect("junction snapped to grid");
            out.push(Junction { node, time, left: arcs[k - 1].kind, right: arcs[k].kind });
        }
        out
    }

    /// One-sided control limit at a node, taken from the arc law on the given
    /// side: the bound value on bang arcs, the constraint feedback on C arcs,
    /// and linear extrapolation of the interval samples on singular arcs.
    pub fn control_limit(&self, spec: &ProblemSpec, node: usize, from_left: bool) -> Result<f64> {
        let n_int = self.num_intervals();
        let iv = if from_left {
            if node == 0 {
                0
            } else {
                node - 1
            }
        } else if node >= n_int {
            n_int - 1
        } else {
            node
        };
        let kind = self.interval_kind(iv);
        match kind {
            ArcKind::Bminus => Ok(self.u[iv]),
            ArcKind::Bplus => Ok(self.u[iv]),
            ArcKind::C => constrained_control(spec, self.x[node].as_slice()),
            ArcKind::S => {
                // extrapolate the two nearest midpoint samples to the node
                let neighbor = if from_left {
                    if iv > 0 && self.interval_kind(iv - 1) == ArcKind::S { Some(iv - 1) } else { None }
                } else if iv + 1 < n_int && self.interval_kind(iv + 1) == ArcKind::S {
                    Some(iv + 1)
                } else {
                    None
                };
                Ok(match neighbor {
                    Some(j) => 1.5 * self.u[iv] - 0.5 * self.u[j],
                    None => self.u[iv],
                })
            }
        }
    }

    /// Max over intervals of the one-step defect |RK4(x_i) − x_{i+1}| scaled
    /// by 1 + |x|.
    pub fn dynamics_residual(&self, spec: &ProblemSpec) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.num_intervals() {
            let dt = self.grid.step(i);
            let pred = rk4_step(spec, self.u[i], &self.x[i], dt)?;
            let scale = 1.0 + self.x[i + 1].norm();
            worst = worst.max((&pred - &self.x[i + 1]).norm() / scale);
        }
        Ok(worst)
    }
}

fn rk4_step(spec: &ProblemSpec, u: f64, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    let k1 = spec.eval_dynamics(u, x.as_slice())?;
    let k2 = spec.eval_dynamics(u, (x + &k1 * (dt / 2.0)).as_slice())?;
    let k3 = spec.eval_dynamics(u, (x + &k2 * (dt / 2.0)).as_slice())?;
    let k4 = spec.eval_dynamics(u, (x + &k3 * dt).as_slice())?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Classical RK4 with the control held at its per-interval value. The arc
/// structure is attached afterwards by the caller.
pub fn integrate_state(
    spec: &ProblemSpec,
    u: &[f64],
    x0: &DVector<f64>,
    grid: &Grid,
) -> Result<Vec<DVector<f64>>> {
    if u.len() != grid.num_intervals() {
        return Err(Error::DimensionMismatch(format!(
            "{} control samples for {} intervals",
            u.len(),
            grid.num_intervals()
        )));
    }
    let mut x = Vec::with_capacity(grid.nodes().len());
    x.push(x0.clone());
    for i in 0..grid.num_intervals() {
        let next = rk4_step(spec, u[i], &x[i], grid.step(i))?;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteState { node: i + 1, time: grid.nodes()[i + 1] });
        }
        x.push(next);
    }
    Ok(x)
}

/// Kinds of findings produced by [`validate_arcs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Finding {
    /// Control not exactly at its bound on a declared bang interval.
    BangValue { interval: usize, value: f64, bound: f64 },
    /// Control too close to a bound on a C or S interval.
    BoundsDistance { interval: usize, distance: f64, required: f64 },
    /// Missing control discontinuity at a CS or SC junction.
    JunctionJump { time: f64, jump: f64, required: f64 },
    /// State constraint violated, or not active where declared active.
    ConstraintValue { node: usize, value: f64, on_c_arc: bool },
    /// Informational: control is continuous at a junction where the
    /// geometric hypotheses do not require a jump (e.g. a CB junction).
    ContinuousJunction { time: f64, left: ArcKind, right: ArcKind },
    /// One-step integration defect above tolerance.
    DynamicsDefect { residual: f64, tolerance: f64 },
}

/// Check the declared structure against the geometric control hypotheses:
/// finite partition (structural), uniform distance from the bounds on C and S
/// arcs, and control discontinuity at CS/SC junctions. Returns findings, not
/// errors; an empty vector of violations means the hypotheses hold.
pub fn validate_arcs(spec: &ProblemSpec, traj: &Trajectory, tol: &Tolerances) -> Result<Vec<Finding>> {
    let mut findings = Vec::new();

    let residual = traj.dynamics_residual(spec)?;
    if residual > tol.tol_dyn {
        findings.push(Finding::DynamicsDefect { residual, tolerance: tol.tol_dyn });
    }

    let dist_min = if spec.u_min.is_finite() && spec.u_max.is_finite() {
        tol.dist_min_frac * (spec.u_max - spec.u_min)
    } else {
        tol.dist_min_frac
    };

    for i in 0..traj.num_intervals() {
        let kind = traj.interval_kind(i);
        let u = traj.u[i];
        match kind {
            ArcKind::Bminus => {
                if u != spec.u_min {
                    findings.push(Finding::BangValue { interval: i, value: u, bound: spec.u_min });
                }
            }
            ArcKind::Bplus => {
                if u != spec.u_max {
                    findings.push(Finding::BangValue { interval: i, value: u, bound: spec.u_max });
                }
            }
            ArcKind::C | ArcKind::S => {
                let mut d = f64::INFINITY;
                if spec.u_min.is_finite() {
                    d = d.min(u - spec.u_min);
                }
                if spec.u_max.is_finite() {
                    d = d.min(spec.u_max - u);
                }
                if d < dist_min {
                    findings.push(Finding::BoundsDistance { interval: i, distance: d, required: dist_min });
                }
            }
        }
    }

    // state constraint: |g| ≤ tol_g on C nodes, g ≤ tol_g elsewhere
    for arc in traj.arcs.arcs() {
        let (a, b) = traj.arc_node_range(arc);
        for node in a..=b {
            let gval = spec.g.eval(traj.x[node].as_slice());
            match arc.kind {
                ArcKind::C => {
                    if gval.abs() > tol.tol_g {
                        findings.push(Finding::ConstraintValue { node, value: gval, on_c_arc: true });
                    }
                }
                _ => {
                    // interior of the arc only; shared junction nodes belong to the C side
                    let interior = node > a || arc.t_start == 0.0;
                    if interior && gval > tol.tol_g {
                        findings.push(Finding::ConstraintValue { node, value: gval, on_c_arc: false });
                    }
                }
            }
        }
    }

    for j in traj.junctions() {
        let ul = traj.control_limit(spec, j.node, true)?;
        let ur = traj.control_limit(spec, j.node, false)?;
        let jump = (ur - ul).abs();
        let cs_or_sc = matches!(
            (j.left, j.right),
            (ArcKind::C, ArcKind::S) | (ArcKind::S, ArcKind::C)
        );
        if cs_or_sc {
            if jump < tol.jump_min {
                findings.push(Finding::JunctionJump { time: j.time, jump, required: tol.jump_min });
            }
        } else if jump < tol.jump_min {
            findings.push(Finding::ContinuousJunction { time: j.time, left: j.left, right: j.right });
        }
    }

    Ok(findings)
}

/// True when a finding is merely informational.
pub fn finding_is_violation(f: &Finding) -> bool {
    !matches!(f, Finding::ContinuousJunction { .. })
}

/// Margin of the first-order condition `g'(x̂) f1(x̂) ≠ 0` on constrained
/// arcs: the minimum of |g'f1| over C nodes, `None` when no C arc exists.
pub fn check_first_order(spec: &ProblemSpec, traj: &Trajectory) -> Option<f64> {
    let mut margin: Option<f64> = None;
    for arc in traj.arcs.arcs() {
        if arc.kind != ArcKind::C {
            continue;
        }
        let (a, b) = traj.arc_node_range(arc);
        for node in a..=b {
            let x = traj.x[node].as_slice();
            let v = (spec.g_gradient(x) * spec.f1.eval(x))[0].abs();
            margin = Some(margin.map_or(v, |m: f64| m.min(v)));
        }
    }
    margin
}

/// Feedback control keeping `d/dt g(x) = 0`:
/// `u = −(g'f0)/(g'f1)`, defined where the first-order margin holds.
pub fn constrained_control(spec: &ProblemSpec, x: &[f64]) -> Result<f64> {
    let gx = spec.g_gradient(x);
    let denom = (&gx * spec.f1.eval(x))[0];
    let tol = Tolerances::default();
    if denom.abs() <= tol.fo_min {
        return Err(Error::FirstOrderDegenerate { margin: denom.abs(), fo_min: tol.fo_min, time: f64::NAN });
    }
    let numer = (&gx * spec.f0.eval(x))[0];
    Ok(-numer / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::problem::VectorField;
    use crate::registry;

    #[test]
    fn regulator_state_reaches_known_endpoints() {
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        let x = integrate_state(&spec, &traj.u, &traj.x[0], &traj.grid).unwrap();
        let mid = traj.grid.node_at(1.0).unwrap();
        assert!((x[mid][0]).abs() <= 1e-8);
        assert!((x[mid][1] - 0.5).abs() <= 1e-8);
        let last = x.last().unwrap();
        assert!((last[0]).abs() <= 1e-8);
        assert!((last[1] - 0.5).abs() <= 1e-8);
        // registry cost φ = x1(T) + x2(T) = 1/2
        let cost = spec.cost_value(traj.x[0].as_slice(), last.as_slice());
        assert!((cost - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn zero_drift_keeps_state_constant() {
        let spec = ProblemSpec {
            name: "drift-free".into(),
            n: 2,
            n1: 0,
            n2: 0,
            horizon: 1.0,
            u_min: -1.0,
            u_max: 1.0,
            f0: VectorField::zero(2),
            f1: VectorField::new(vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)]).unwrap(),
            g: Polynomial::from_terms(2, &[(&[1, 0], 1.0), (&[0, 0], -10.0)]),
            cost: Polynomial::var(4, 2),
            endpoint: vec![],
        };
        let grid = Grid::uniform_with_junctions(1.0, 10, &[]).unwrap();
        let x0 = DVector::from_vec(vec![0.3, -0.7]);
        let x = integrate_state(&spec, &vec![0.0; 10], &x0, &grid).unwrap();
        for xi in &x {
            assert_eq!(xi, &x0);
        }
    }

    #[test]
    fn augmented_instance_hits_derived_values_on_fine_grid() {
        let (spec, _, _) = registry::registry_get("CB1").unwrap();
        let traj = registry::cb1_trajectory(&spec, 4000).unwrap();
        let mid = traj.grid.node_at(1.5).unwrap();
        assert!((traj.x[mid][0] + 0.25).abs() <= 1e-7, "x1(3/2) = {}", traj.x[mid][0]);
        assert!((traj.x.last().unwrap()[2] - 5.0 / 24.0).abs() <= 1e-7);
    }

    #[test]
    fn reintegration_reproduces_registry_nodes() {
        for name in ["REG1", "CB1"] {
            let (spec, traj, _) = registry::registry_get(name).unwrap();
            let x = integrate_state(&spec, &traj.u, &traj.x[0], &traj.grid).unwrap();
            for (a, b) in x.iter().zip(&traj.x) {
                assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn registry_structures_validate() {
        let tol = Tolerances::default();
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        let findings = validate_arcs(&spec, &traj, &tol).unwrap();
        assert!(findings.iter().all(|f| !finding_is_violation(f)), "{findings:?}");
        let j = traj.junctions();
        assert_eq!(j.len(), 1);
        let ul = traj.control_limit(&spec, j[0].node, true).unwrap();
        let ur = traj.control_limit(&spec, j[0].node, false).unwrap();
        assert!((ur - ul - 1.0).abs() <= 1e-12, "declared jump of the registry control");

        let (spec, traj, _) = registry::registry_get("CB1").unwrap();
        let findings = validate_arcs(&spec, &traj, &tol).unwrap();
        // the CB junction at t = 3/2 is continuous; that is a note, not a violation
        assert!(findings.iter().all(|f| !finding_is_violation(f)), "{findings:?}");
        assert!(findings
            .iter()
            .any(|f| matches!(f, Finding::ContinuousJunction { time, .. } if (*time - 1.5).abs() < 1e-12)));
        let j2 = traj.junctions()[1].clone();
        let ul = traj.control_limit(&spec, j2.node, true).unwrap();
        let ur = traj.control_limit(&spec, j2.node, false).unwrap();
        assert!((ur - ul).abs() <= 1e-9, "control limit jump at t=3/2 is zero, got {}", ur - ul);
    }

    #[test]
    fn state_blow_up_reports_the_offending_node() {
        // ẋ1 = 1 + x1² escapes in finite time; the integrator reports where
        let spec = ProblemSpec {
            name: "blow-up".into(),
            n: 1,
            n1: 0,
            n2: 0,
            horizon: 40.0,
            u_min: -1.0,
            u_max: 1.0,
            f0: VectorField::new(vec![Polynomial::from_terms(1, &[(&[0], 1.0), (&[2], 1.0)])]).unwrap(),
            f1: VectorField::new(vec![Polynomial::zero(1)]).unwrap(),
            g: Polynomial::from_terms(1, &[(&[1], 1.0), (&[0], -1e9)]),
            cost: Polynomial::var(2, 1),
            endpoint: vec![],
        };
        let grid = Grid::uniform_with_junctions(40.0, 400, &[]).unwrap();
        match integrate_state(&spec, &vec![0.0; 400], &DVector::from_vec(vec![0.0]), &grid) {
            Err(crate::error::Error::NonFiniteState { node, .. }) => assert!(node > 0),
            other => panic!("expected a blow-up report, got {other:?}"),
        }
    }

    #[test]
    fn pinned_singular_arc_is_flagged() {
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        let mut bad = traj.clone();
        // redeclare the constrained arc as singular and pin the control at the bound
        bad.arcs = ArcStructure::new(
            vec![
                Arc { kind: ArcKind::Bminus, t_start: 0.0, t_end: 1.0 },
                Arc { kind: ArcKind::S, t_start: 1.0, t_end: 2.0 },
            ],
            2.0,
        )
        .unwrap();
        for i in 0..bad.num_intervals() {
            if bad.grid.nodes()[i] >= 1.0 {
                bad.u[i] = spec.u_min;
            }
        }
        // state no longer matches; rebuild so only the bounds check can fire
        bad.x = integrate_state(&spec, &bad.u, &bad.x[0], &bad.grid).unwrap();
        let findings = validate_arcs(&spec, &bad, &Tolerances::default()).unwrap();
        assert!(findings.iter().any(|f| matches!(f, Finding::BoundsDistance { .. })));
    }

    #[test]
    fn first_order_margins() {
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        assert_eq!(check_first_order(&spec, &traj), Some(1.0));
        let (spec, traj, _) = registry::registry_get("CB1").unwrap();
        assert_eq!(check_first_order(&spec, &traj), Some(1.0));
        // no constrained arc: no margin
        let mut free = traj.clone();
        free.arcs = ArcStructure::new(
            vec![Arc { kind: ArcKind::Bminus, t_start: 0.0, t_end: 2.0 }],
            2.0,
        )
        .unwrap();
        assert_eq!(check_first_order(&spec, &free), None);
    }

    #[test]
    fn degenerate_first_order_direction_fails() {
        // f1 orthogonal to g' everywhere: g = -x2, f1 = (1, 0)
        let spec = ProblemSpec {
            name: "degenerate".into(),
            n: 2,
            n1: 0,
            n2: 0,
            horizon: 1.0,
            u_min: -1.0,
            u_max: 1.0,
            f0: VectorField::zero(2),
            f1: VectorField::new(vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)]).unwrap(),
            g: Polynomial::from_terms(2, &[(&[0, 1], -1.0)]),
            cost: Polynomial::var(4, 2),
            endpoint: vec![],
        };
        assert!(constrained_control(&spec, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn constraint_feedback_on_registry_instances() {
        let (spec, traj, _) = registry::registry_get("REG1").unwrap();
        let node = traj.grid.node_at(1.5).unwrap();
        let u = constrained_control(&spec, traj.x[node].as_slice()).unwrap();
        assert!(u.abs() <= 1e-12);

        let (spec, traj, _) = registry::registry_get("CB1").unwrap();
        let node = traj.grid.node_at(1.25).unwrap();
        let u = constrained_control(&spec, traj.x[node].as_slice()).unwrap();
        assert!((u + 0.5).abs() <= 1e-9, "feedback −2(t−1) at t = 1.25, got {u}");
    }

    #[test]
    fn declared_control_consistent_with_feedback_on_c_arcs() {
        let tol = Tolerances::default();
        for name in ["REG1", "CB1"] {
            let (spec, traj, _) = registry::registry_get(name).unwrap();
            let bound = 10.0 * tol.tol_g / tol.fo_min;
            for arc in traj.arcs.arcs().iter().filter(|a| a.kind == ArcKind::C) {
                let (a, b) = traj.arc_node_range(arc);
                for i in a..b {
                    let fb = constrained_control(&spec, traj.x[i].as_slice()).unwrap();
                    assert!((traj.u[i] - fb).abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn validate_is_idempotent() {
        let tol = Tolerances::default();
        let (spec, traj, _) = registry::registry_get("CB1").unwrap();
        let a = validate_arcs(&spec, &traj, &tol).unwrap();
        let b = validate_arcs(&spec, &traj, &tol).unwrap();
        assert_eq!(a, b);
    }
}
