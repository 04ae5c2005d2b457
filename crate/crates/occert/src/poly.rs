//! Sparse multivariate polynomials with exact derivative tables.
//!
//! All vector fields, constraints and endpoint functions in this crate are
//! polynomial, so gradients and Hessians are assembled symbolically and
//! evaluated exactly — no finite differences anywhere on the primary path.
//! Terms are keyed by exponent multi-indices ordered graded-lexicographically,
//! which fixes a canonical serialization order.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::Error;

/// Exponent multi-index over a fixed variable set `x1..xk`.
///
/// Ordering is graded lexicographic: first by total degree, then
/// lexicographically with `x1` most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn constant(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    /// Canonical string form, e.g. `x1^2*x3`; the constant index prints as `1`.
    pub fn to_key(&self) -> String {
        let mut parts = Vec::new();
        for (i, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("x{}", i + 1)),
                _ => parts.push(format!("x{}^{}", i + 1, e)),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    /// Parse the key grammar `1 | factor (* factor)*` with `factor = x<i>[^<e>]`.
    pub fn parse_key(key: &str, nvars: usize) -> Result<Self, Error> {
        let key = key.trim();
        let mut exps = vec![0u32; nvars];
        if key == "1" {
            return Ok(MultiIndex(exps));
        }
        for factor in key.split('*') {
            let factor = factor.trim();
            let rest = factor
                .strip_prefix('x')
                .ok_or_else(|| Error::BadMonomial(factor.to_string()))?;
            let (var, exp) = match rest.split_once('^') {
                Some((v, e)) => (v, e.trim().parse::<u32>().map_err(|_| Error::BadMonomial(factor.into()))?),
                None => (rest, 1),
            };
            let var: usize = var.trim().parse().map_err(|_| Error::BadMonomial(factor.into()))?;
            if var == 0 || var > nvars {
                return Err(Error::BadMonomial(format!("{factor} (only x1..x{nvars} allowed)")));
            }
            exps[var - 1] += exp;
        }
        Ok(MultiIndex(exps))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // graded: total degree first; ties broken so that monomials in
        // earlier variables come first (x1 before x2, x1^2 before x1*x2)
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_key())
    }
}

/// Sparse polynomial in `nvars` variables. Zero coefficients are pruned, so
/// structural equality of the term maps is exact algebraic equality.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(MultiIndex::constant(nvars), c);
        p
    }

    /// The coordinate polynomial `x(var)` (zero-based index).
    pub fn var(nvars: usize, var: usize) -> Self {
        assert!(var < nvars);
        let mut exps = vec![0u32; nvars];
        exps[var] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(MultiIndex(exps), 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, idx: MultiIndex, c: f64) {
        assert_eq!(idx.0.len(), self.nvars);
        let entry = self.terms.entry(idx).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            let key = self
                .terms
                .iter()
                .find(|(_, &v)| v == 0.0)
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn from_terms(nvars: usize, terms: &[(&[u32], f64)]) -> Self {
        let mut p = Self::zero(nvars);
        for (idx, c) in terms {
            p.add_term(MultiIndex(idx.to_vec()), *c);
        }
        p
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_term(idx.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        if s == 0.0 {
            return Polynomial::zero(self.nvars);
        }
        let mut out = Polynomial::zero(self.nvars);
        for (idx, c) in &self.terms {
            out.add_term(idx.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let idx: Vec<u32> = ia.0.iter().zip(&ib.0).map(|(a, b)| a + b).collect();
                out.add_term(MultiIndex(idx), ca * cb);
            }
        }
        out
    }

    /// Partial derivative with respect to variable `var` (zero-based).
    pub fn partial(&self, var: usize) -> Polynomial {
        assert!(var < self.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (idx, c) in &self.terms {
            let e = idx.0[var];
            if e == 0 {
                continue;
            }
            let mut lowered = idx.0.clone();
            lowered[var] = e - 1;
            out.add_term(MultiIndex(lowered), c * e as f64);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "evaluation point has wrong dimension");
        let mut acc = 0.0;
        for (idx, c) in &self.terms {
            let mut m = *c;
            for (xi, &e) in x.iter().zip(&idx.0) {
                if e > 0 {
                    m *= xi.powi(e as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Gradient as a row of values at `x`.
    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nvars).map(|j| self.partial(j).eval(x)).collect()
    }

    /// Dense symmetric Hessian at `x`.
    pub fn hessian_at(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        let n = self.nvars;
        let mut h = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let pj = self.partial(j);
            for k in j..n {
                let v = pj.partial(k).eval(x);
                h[(j, k)] = v;
                h[(k, j)] = v;
            }
        }
        h
    }
}
