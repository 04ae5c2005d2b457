//! Declarative text formats for problems, trajectories and multipliers.
//!
//! All three documents are TOML (key/value pairs plus nested tables), written
//! canonically so that parse → serialize is the identity on emitted files.
//!
//! Polynomial tables map monomial keys to coefficients. The key grammar is
//! `1` for the constant term or `x<i>[^<e>]` factors joined by `*`, e.g.
//! `"x1^2*x3"`; factors appear with ascending variable index and table keys
//! are ordered graded-lexicographically (total degree first, then
//! lexicographic with `x1` most significant). Vector fields map each key to a
//! coefficient vector of length `n`; scalar polynomials map keys to scalars.
//! Endpoint polynomials (`cost`, `endpoint`) live in `2n` variables: `x1..xn`
//! is the initial state, `x(n+1)..x(2n)` the final state.

use std::path::Path;

use nalgebra::{DVector, RowDVector};
use toml::map::Map;
use toml::Value;

use crate::error::{Error, Result};
use crate::multiplier::{Atom, Measure, Multiplier};
use crate::poly::{MultiIndex, Polynomial};
use crate::problem::{ProblemSpec, VectorField};
use crate::trajectory::{Arc, ArcKind, ArcStructure, Grid, Trajectory};

pub const PROBLEM_SCHEMA: &str = "occert/problem/v1";
pub const TRAJECTORY_SCHEMA: &str = "occert/trajectory/v1";
pub const MULTIPLIER_SCHEMA: &str = "occert/multiplier/v1";

fn parse_toml(text: &str) -> Result<Value> {
    text.parse::<Value>().map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| offset_to_line_col(text, s.start))
            .unwrap_or((0, 0));
        Error::Parse { line, column, message: e.message().to_string() }
    })
}

fn offset_to_line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in text.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

// ---------------------------------------------------------------------------
// polynomial tables

/// Graded-lexicographic key list of a set of polynomials.
fn ordered_keys(polys: &[&Polynomial]) -> Vec<MultiIndex> {
    let mut keys: Vec<MultiIndex> = Vec::new();
    for p in polys {
        for (idx, _) in p.terms() {
            if !keys.contains(idx) {
                keys.push(idx.clone());
            }
        }
    }
    keys.sort();
    keys
}

fn scalar_table(p: &Polynomial) -> Value {
    let mut map = Map::new();
    for key in ordered_keys(&[p]) {
        let c = p.terms().find(|(i, _)| **i == key).map(|(_, c)| *c).unwrap_or(0.0);
        map.insert(key.to_key(), Value::Float(c));
    }
    Value::Table(map)
}

fn field_table(f: &VectorField) -> Value {
    let refs: Vec<&Polynomial> = f.components().iter().collect();
    let mut map = Map::new();
    for key in ordered_keys(&refs) {
        let coeffs: Vec<Value> = f
            .components()
            .iter()
            .map(|p| {
                let c = p.terms().find(|(i, _)| **i == key).map(|(_, c)| *c).unwrap_or(0.0);
                Value::Float(c)
            })
            .collect();
        map.insert(key.to_key(), Value::Array(coeffs));
    }
    Value::Table(map)
}

fn scalar_from_table(v: &Value, nvars: usize, what: &str) -> Result<Polynomial> {
    let table = v
        .as_table()
        .ok_or_else(|| Error::InvalidProblem(format!("{what} must be a table")))?;
    let mut p = Polynomial::zero(nvars);
    for (key, val) in table {
        let idx = MultiIndex::parse_key(key, nvars)?;
        let c = val
            .as_float()
            .or_else(|| val.as_integer().map(|i| i as f64))
            .ok_or_else(|| Error::InvalidProblem(format!("{what}: coefficient of `{key}` must be a number")))?;
        p.add_term(idx, c);
    }
    Ok(p)
}

fn field_from_table(v: &Value, n: usize, what: &str) -> Result<VectorField> {
    let table = v
        .as_table()
        .ok_or_else(|| Error::InvalidProblem(format!("{what} must be a table")))?;
    let mut comps = vec![Polynomial::zero(n); n];
    for (key, val) in table {
        let idx = MultiIndex::parse_key(key, n)?;
        let arr = val
            .as_array()
            .ok_or_else(|| Error::InvalidProblem(format!("{what}: `{key}` must map to a coefficient vector")))?;
        if arr.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{what}: `{key}` has {} coefficients, expected {n}",
                arr.len()
            )));
        }
        for (k, c) in arr.iter().enumerate() {
            let c = c
                .as_float()
                .or_else(|| c.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::InvalidProblem(format!("{what}: `{key}` entries must be numbers")))?;
            comps[k].add_term(idx.clone(), c);
        }
    }
    VectorField::new(comps)
}

// ---------------------------------------------------------------------------
// problem files

pub fn problem_to_string(spec: &ProblemSpec) -> String {
    let mut root = Map::new();
    root.insert("schema".into(), Value::String(PROBLEM_SCHEMA.into()));
    root.insert("name".into(), Value::String(spec.name.clone()));
    root.insert("n".into(), Value::Integer(spec.n as i64));
    root.insert("n1".into(), Value::Integer(spec.n1 as i64));
    root.insert("n2".into(), Value::Integer(spec.n2 as i64));
    root.insert("horizon".into(), Value::Float(spec.horizon));
    root.insert("u_min".into(), Value::Float(spec.u_min));
    root.insert("u_max".into(), Value::Float(spec.u_max));
    root.insert("f0".into(), field_table(&spec.f0));
    root.insert("f1".into(), field_table(&spec.f1));
    root.insert("g".into(), scalar_table(&spec.g));
    root.insert("cost".into(), scalar_table(&spec.cost));
    root.insert(
        "endpoint".into(),
        Value::Array(spec.endpoint.iter().map(scalar_table).collect()),
    );
    toml::to_string_pretty(&Value::Table(root)).expect("toml serialization of a plain table")
}

pub fn problem_from_str(text: &str) -> Result<ProblemSpec> {
    let root = parse_toml(text)?;
    let get = |key: &str| -> Result<&Value> {
        root.get(key)
            .ok_or_else(|| Error::InvalidProblem(format!("missing key `{key}`")))
    };
    let schema = get("schema")?.as_str().unwrap_or_default();
    if schema != PROBLEM_SCHEMA {
        return Err(Error::InvalidProblem(format!(
            "unsupported problem schema `{schema}` (expected {PROBLEM_SCHEMA})"
        )));
    }
    let as_usize = |key: &str| -> Result<usize> {
        get(key)?
            .as_integer()
            .filter(|v| *v >= 0)
            .map(|v| v as usize)
            .ok_or_else(|| Error::InvalidProblem(format!("`{key}` must be a nonnegative integer")))
    };
    let as_float = |key: &str| -> Result<f64> {
        let v = get(key)?;
        v.as_float()
            .or_else(|| v.as_integer().map(|i| i as f64))
            .ok_or_else(|| Error::InvalidProblem(format!("`{key}` must be a number")))
    };
    let n = as_usize("n")?;
    let endpoint_rows = match get("endpoint")? {
        Value::Array(rows) => rows
            .iter()
            .map(|r| scalar_from_table(r, 2 * n, "endpoint"))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::InvalidProblem("`endpoint` must be an array of tables".into())),
    };
    let spec = ProblemSpec {
        name: get("name")?.as_str().unwrap_or("unnamed").to_string(),
        n,
        n1: as_usize("n1")?,
        n2: as_usize("n2")?,
        horizon: as_float("horizon")?,
        u_min: as_float("u_min")?,
        u_max: as_float("u_max")?,
        f0: field_from_table(get("f0")?, n, "f0")?,
        f1: field_from_table(get("f1")?, n, "f1")?,
        g: scalar_from_table(get("g")?, n, "g")?,
        cost: scalar_from_table(get("cost")?, 2 * n, "cost")?,
        endpoint: endpoint_rows,
    };
    spec.validate()?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// trajectory files

fn float_array(values: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(values.into_iter().map(Value::Float).collect())
}

pub fn trajectory_to_string(traj: &Trajectory) -> String {
    let mut root = Map::new();
    root.insert("schema".into(), Value::String(TRAJECTORY_SCHEMA.into()));
    root.insert("nodes".into(), float_array(traj.grid.nodes().iter().copied()));
    root.insert("u".into(), float_array(traj.u.iter().copied()));
    root.insert(
        "x".into(),
        Value::Array(traj.x.iter().map(|xi| float_array(xi.iter().copied())).collect()),
    );
    let arcs: Vec<Value> = traj
        .arcs
        .arcs()
        .iter()
        .map(|a| {
            let mut t = Map::new();
            t.insert("kind".into(), Value::String(arc_kind_name(a.kind).into()));
            t.insert("t_start".into(), Value::Float(a.t_start));
            t.insert("t_end".into(), Value::Float(a.t_end));
            Value::Table(t)
        })
        .collect();
    root.insert("arcs".into(), Value::Array(arcs));
    toml::to_string_pretty(&Value::Table(root)).expect("toml serialization of a plain table")
}

fn arc_kind_name(kind: ArcKind) -> &'static str {
    match kind {
        ArcKind::Bminus => "Bminus",
        ArcKind::Bplus => "Bplus",
        ArcKind::C => "C",
        ArcKind::S => "S",
    }
}

fn arc_kind_from(name: &str) -> Result<ArcKind> {
    match name {
        "Bminus" => Ok(ArcKind::Bminus),
        "Bplus" => Ok(ArcKind::Bplus),
        "C" => Ok(ArcKind::C),
        "S" => Ok(ArcKind::S),
        other => Err(Error::InvalidTrajectory(format!("unknown arc kind `{other}`"))),
    }
}

fn floats(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidTrajectory(format!("{what} must be an array")))?
        .iter()
        .map(|x| {
            x.as_float()
                .or_else(|| x.as_integer().map(|i| i as f64))
                .ok_or_else(|| Error::InvalidTrajectory(format!("{what} entries must be numbers")))
        })
        .collect()
}

pub fn trajectory_from_str(text: &str) -> Result<Trajectory> {
    let root = parse_toml(text)?;
    let get = |key: &str| -> Result<&Value> {
        root.get(key)
            .ok_or_else(|| Error::InvalidTrajectory(format!("missing key `{key}`")))
    };
    let schema = get("schema")?.as_str().unwrap_or_default();
    if schema != TRAJECTORY_SCHEMA {
        return Err(Error::InvalidTrajectory(format!(
            "unsupported trajectory schema `{schema}`"
        )));
    }
    let nodes = floats(get("nodes")?, "nodes")?;
    let grid = Grid::new(nodes)?;
    let u = floats(get("u")?, "u")?;
    if u.len() != grid.num_intervals() {
        return Err(Error::DimensionMismatch(format!(
            "{} control samples for {} intervals",
            u.len(),
            grid.num_intervals()
        )));
    }
    let x: Vec<DVector<f64>> = get("x")?
        .as_array()
        .ok_or_else(|| Error::InvalidTrajectory("`x` must be an array of state rows".into()))?
        .iter()
        .map(|row| floats(row, "x").map(DVector::from_vec))
        .collect::<Result<Vec<_>>>()?;
    if x.len() != grid.nodes().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} state rows for {} nodes",
            x.len(),
            grid.nodes().len()
        )));
    }
    let arcs: Vec<Arc> = get("arcs")?
        .as_array()
        .ok_or_else(|| Error::InvalidTrajectory("`arcs` must be an array of tables".into()))?
        .iter()
        .map(|a| -> Result<Arc> {
            let t = a
                .as_table()
                .ok_or_else(|| Error::InvalidTrajectory("arc entries must be tables".into()))?;
            let kind = arc_kind_from(
                t.get("kind")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| Error::InvalidTrajectory("arc missing `kind`".into()))?,
            )?;
            let num = |key: &str| -> Result<f64> {
                t.get(key)
                    .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                    .ok_or_else(|| Error::InvalidTrajectory(format!("arc missing `{key}`")))
            };
            Ok(Arc { kind, t_start: num("t_start")?, t_end: num("t_end")? })
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon = *grid.nodes().last().unwrap();
    let arcs = ArcStructure::new(arcs, horizon)?;
    for tau in arcs.junction_times() {
        if grid.node_at(tau).is_none() {
            return Err(Error::InvalidTrajectory(format!(
                "junction time {tau} is not a grid node"
            )));
        }
    }
    Ok(Trajectory { grid, u, x, arcs })
}

// ---------------------------------------------------------------------------
// multiplier files

/// Serialize a multiplier: β, Ψ, the atom list, per-node costate (right
/// limits; left limits are implied by the atoms) and the per-node density.
pub fn multiplier_to_string(lam: &Multiplier) -> String {
    let mut root = Map::new();
    root.insert("schema".into(), Value::String(MULTIPLIER_SCHEMA.into()));
    root.insert("beta".into(), Value::Float(lam.beta));
    root.insert("psi".into(), float_array(lam.psi.iter().copied()));
    let atoms: Vec<Value> = lam
        .measure
        .atoms
        .iter()
        .map(|a| {
            let mut t = Map::new();
            t.insert("time".into(), Value::Float(a.time));
            t.insert("node".into(), Value::Integer(a.node as i64));
            t.insert("mass".into(), Value::Float(a.mass));
            Value::Table(t)
        })
        .collect();
    root.insert("atoms".into(), Value::Array(atoms));
    root.insert(
        "p".into(),
        Value::Array(lam.p_right.iter().map(|p| float_array(p.iter().copied())).collect()),
    );
    root.insert("nu".into(), float_array(lam.measure.nu.iter().copied()));
    toml::to_string_pretty(&Value::Table(root)).expect("toml serialization of a plain table")
}

/// Parse a multiplier against its problem and trajectory (needed to rebuild
/// the one-sided costate values from the atom jumps).
pub fn multiplier_from_str(text: &str, spec: &ProblemSpec, traj: &Trajectory) -> Result<Multiplier> {
    let root = parse_toml(text)?;
    let get = |key: &str| -> Result<&Value> {
        root.get(key)
            .ok_or_else(|| Error::InvalidProblem(format!("multiplier file missing `{key}`")))
    };
    let schema = get("schema")?.as_str().unwrap_or_default();
    if schema != MULTIPLIER_SCHEMA {
        return Err(Error::InvalidProblem(format!("unsupported multiplier schema `{schema}`")));
    }
    let beta = get("beta")?
        .as_float()
        .ok_or_else(|| Error::InvalidProblem("`beta` must be a number".into()))?;
    let psi = RowDVector::from_vec(floats(get("psi")?, "psi")?);
    let nu = floats(get("nu")?, "nu")?;
    let p_right: Vec<RowDVector<f64>> = get("p")?
        .as_array()
        .ok_or_else(|| Error::InvalidProblem("`p` must be an array of rows".into()))?
        .iter()
        .map(|row| floats(row, "p").map(RowDVector::from_vec))
        .collect::<Result<Vec<_>>>()?;
    let n_nodes = traj.grid.nodes().len();
    if p_right.len() != n_nodes || nu.len() != n_nodes {
        return Err(Error::DimensionMismatch(
            "multiplier arrays do not match the trajectory grid".into(),
        ));
    }
    let atoms: Vec<Atom> = get("atoms")?
        .as_array()
        .ok_or_else(|| Error::InvalidProblem("`atoms` must be an array".into()))?
        .iter()
        .map(|a| -> Result<Atom> {
            let t = a
                .as_table()
                .ok_or_else(|| Error::InvalidProblem("atom entries must be tables".into()))?;
            let time = t
                .get("time")
                .and_then(|v| v.as_float())
                .ok_or_else(|| Error::InvalidProblem("atom missing `time`".into()))?;
            let node = t
                .get("node")
                .and_then(|v| v.as_integer())
                .ok_or_else(|| Error::InvalidProblem("atom missing `node`".into()))? as usize;
            let mass = t
                .get("mass")
                .and_then(|v| v.as_float())
                .ok_or_else(|| Error::InvalidProblem("atom missing `mass`".into()))?;
            Ok(Atom { time, node, mass })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut p_left = p_right.clone();
    for (node, pl) in p_left.iter_mut().enumerate() {
        let mass: f64 = atoms.iter().filter(|a| a.node == node).map(|a| a.mass).sum();
        if mass != 0.0 {
            *pl += spec.g_gradient(traj.x[node].as_slice()) * mass;
        }
    }
    let (d_x0, _) = spec.lagrangian_boundary(beta, &psi, traj.x[0].as_slice(), traj.x[n_nodes - 1].as_slice());
    let boundary_defect = -&p_left[0] - d_x0;
    Ok(Multiplier { beta, psi, p_left, p_right, measure: Measure { nu, atoms }, boundary_defect })
}

// ---------------------------------------------------------------------------
// path helpers

pub fn load_problem(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    problem_from_str(&text)
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    trajectory_from_str(&text)
}

pub fn load_multiplier(path: &Path, spec: &ProblemSpec, traj: &Trajectory) -> Result<Multiplier> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    multiplier_from_str(&text, spec, traj)
}

pub fn save(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;
    use crate::tolerances::Tolerances;

    #[test]
    fn problem_round_trip_is_byte_identical() {
        for name in ["REG1", "CB1"] {
            let (spec, _, _) = registry::registry_get(name).unwrap();
            let once = problem_to_string(&spec);
            let parsed = problem_from_str(&once).unwrap();
            let twice = problem_to_string(&parsed);
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn trajectory_round_trip_is_byte_identical() {
        let (_, traj, _) = registry::registry_get_on("CB1", 40).unwrap();
        let once = trajectory_to_string(&traj);
        let parsed = trajectory_from_str(&once).unwrap();
        let twice = trajectory_to_string(&parsed);
        assert_eq!(once, twice);
        assert_eq!(parsed.u, traj.u);
    }

    #[test]
    fn multiplier_round_trip_preserves_one_sided_values() {
        let (spec, traj, seed) = registry::registry_get_on("REG1", 80).unwrap();
        let (lam, _) =
            crate::multiplier::fit_multiplier(&spec, &traj, seed.beta, &seed.psi, &seed.atoms, &Tolerances::default())
                .unwrap();
        let once = multiplier_to_string(&lam);
        let parsed = multiplier_from_str(&once, &spec, &traj).unwrap();
        let twice = multiplier_to_string(&parsed);
        assert_eq!(once, twice);
        for (a, b) in lam.p_left.iter().zip(&parsed.p_left) {
            assert!((a - b).amax() <= 1e-14);
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let bad = "schema = occert";
        match problem_from_str(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn infinite_bounds_survive_the_format() {
        let (mut spec, _, _) = registry::registry_get("REG1").unwrap();
        spec.u_min = f64::NEG_INFINITY;
        let text = problem_to_string(&spec);
        let parsed = problem_from_str(&text).unwrap();
        assert_eq!(parsed.u_min, f64::NEG_INFINITY);
    }
}

#[cfg(test)]
mod golden {
    use super::*;
    use crate::registry;

    // the canonical document of the regulator instance; pins the emitted
    // grammar (key order, quoting, section shapes)
    const REG1_DOC: &str = r#"schema = "occert/problem/v1"
name = "REG1"
n = 2
n1 = 2
n2 = 0
horizon = 2.0
u_min = -1.0
u_max = 1.0

[f0]
x1 = [
    0.0,
    1.0,
]

[f1]
1 = [
    1.0,
    0.0,
]

[g]
x1 = -1.0

[cost]
x3 = 1.0
x4 = 1.0

[[endpoint]]
1 = -1.0
x1 = 1.0

[[endpoint]]
x2 = 1.0
"#;

    #[test]
    fn regulator_problem_document_is_stable() {
        let (spec, _, _) = registry::registry_get("REG1").unwrap();
        assert_eq!(problem_to_string(&spec), REG1_DOC);
        let parsed = problem_from_str(REG1_DOC).unwrap();
        assert_eq!(parsed.n, 2);
        assert_eq!(parsed.endpoint.len(), 2);
    }
}
