//! Tolerance profile shared by the certification stages.
//!
//! Every threshold used by a verdict is pinned here with its default value.
//! The environment variable `OCCERT_TOL_PROFILE` selects a profile
//! (`default`, `strict` = 10× tighter, `loose` = 10× looser) and individual
//! values can still be overridden per run.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// One-step dynamics defect, scaled by 1 + |x|.
    pub tol_dyn: f64,
    /// Activity band for the state constraint.
    pub tol_g: f64,
    /// Bound-distance fraction of (u_max − u_min) required on C and S arcs.
    pub dist_min_frac: f64,
    /// Minimum control jump at CS/SC junctions.
    pub jump_min: f64,
    /// First-order margin |g'f1| required on C arcs.
    pub fo_min: f64,
    /// Multiplier fit residual target.
    pub fit_tol: f64,
    /// Gauss–Newton iteration cap for the fit.
    pub max_iter: usize,
    /// Stationarity tolerance (multiplied by the switching-function scale).
    pub stat_tol: f64,
    /// Jump-condition tolerance.
    pub jump_tol: f64,
    /// Strict-complementarity margin on bang arcs.
    pub sc_margin: f64,
    /// Pointwise Legendre threshold.
    pub leg_tol: f64,
    /// Coercivity threshold on the smallest pencil eigenvalue.
    pub suf_tol: f64,
    /// Negativity tolerance for the necessary test.
    pub nec_tol: f64,
    /// Endpoint-inequality activity band.
    pub act_tol: f64,
    /// Smallest β treated as nonzero when rescaling a multiplier.
    pub beta_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_dyn: 1e-8,
            tol_g: 1e-7,
            dist_min_frac: 1e-3,
            jump_min: 1e-6,
            fo_min: 1e-6,
            fit_tol: 1e-6,
            max_iter: 100,
            stat_tol: 1e-6,
            jump_tol: 1e-7,
            sc_margin: 1e-6,
            leg_tol: 1e-8,
            suf_tol: 1e-8,
            nec_tol: 1e-8,
            act_tol: 1e-7,
            beta_tol: 1e-9,
        }
    }
}

impl Tolerances {
    /// Profile from `OCCERT_TOL_PROFILE`, defaulting to `default`.
    pub fn from_env() -> Self {
        match std::env::var("OCCERT_TOL_PROFILE").as_deref() {
            Ok("strict") => Self::default().scaled(0.1),
            Ok("loose") => Self::default().scaled(10.0),
            _ => Self::default(),
        }
    }

    /// Scale every residual-type tolerance by `s` (iteration caps and
    /// structural fractions are left alone).
    pub fn scaled(&self, s: f64) -> Self {
        Tolerances {
            tol_dyn: self.tol_dyn * s,
            tol_g: self.tol_g * s,
            dist_min_frac: self.dist_min_frac,
            jump_min: self.jump_min,
            fo_min: self.fo_min,
            fit_tol: self.fit_tol * s,
            max_iter: self.max_iter,
            stat_tol: self.stat_tol * s,
            jump_tol: self.jump_tol * s,
            sc_margin: self.sc_margin,
            leg_tol: self.leg_tol,
            suf_tol: self.suf_tol,
            nec_tol: self.nec_tol,
            act_tol: self.act_tol,
            beta_tol: self.beta_tol,
        }
    }

    /// Apply `key=value` overrides (the CLI `--tol` flag).
    pub fn apply_override(&mut self, key: &str, value: f64) -> Result<(), String> {
        match key {
            "tol_dyn" => self.tol_dyn = value,
            "tol_g" => self.tol_g = value,
            "dist_min_frac" => self.dist_min_frac = value,
            "jump_min" => self.jump_min = value,
            "fo_min" => self.fo_min = value,
            "fit_tol" => self.fit_tol = value,
            "max_iter" => self.max_iter = value as usize,
            "stat_tol" => self.stat_tol = value,
            "jump_tol" => self.jump_tol = value,
            "sc_margin" => self.sc_margin = value,
            "leg_tol" => self.leg_tol = value,
            "suf_tol" => self.suf_tol = value,
            "nec_tol" => self.nec_tol = value,
            "act_tol" => self.act_tol = value,
            "beta_tol" => self.beta_tol = value,
            other => return Err(format!("unknown tolerance `{other}`")),
        }
        Ok(())
    }
}
