use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    GD,
    PGD,
    LBFGS,
    GN,
    PGN,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::GD, Method::PGD, Method::LBFGS, Method::GN, Method::PGN];

    pub fn is_projected(self) -> bool {
        matches!(self, Method::PGD | Method::PGN)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::GD => "gd",
            Method::PGD => "pgd",
            Method::LBFGS => "lbfgs",
            Method::GN => "gn",
            Method::PGN => "pgn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("l-bfgs") && *m == Method::LBFGS))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// How Gauss–Newton solves for its step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GnSolver {
    /// Reuse one ichol(0) factorization when the Hessian is an assembled
    /// sparse matrix, CG otherwise.
    Auto,
    /// Always CG on the Hessian action.
    Cg,
}

/// Element-wise box `[lower, upper]`, the same for every variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const NONNEGATIVE: Bounds = Bounds { lower: 0.0, upper: f64::INFINITY };

    pub fn project(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn at_lower(&self, x: f64) -> bool {
        self.lower.is_finite() && (x - self.lower).abs() <= 1e-12 * self.lower.abs().max(1.0)
    }

    pub fn at_upper(&self, x: f64) -> bool {
        self.upper.is_finite() && (x - self.upper).abs() <= 1e-12 * self.upper.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iter: usize,
    /// Relative to the initial objective.
    pub tol_obj_change: f64,
    /// Relative to `1 + ‖y‖`.
    pub tol_step_norm: f64,
    /// Relative to `sqrt(E(y⁰))`.
    pub tol_newton_decrement: f64,
    pub armijo_c: f64,
    pub armijo_max_backtracks: usize,
    pub armijo_shrink: f64,
    pub lbfgs_memory: usize,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
    pub gn_solver: GnSolver,
    /// Only used by the projected methods.
    pub bounds: Option<Bounds>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::GN,
            max_iter: 100,
            tol_obj_change: 1e-4,
            tol_step_norm: 1e-4,
            tol_newton_decrement: 1e-3,
            armijo_c: 1e-4,
            armijo_max_backtracks: 25,
            armijo_shrink: 0.5,
            lbfgs_memory: 5,
            cg_rel_tol: 1e-1,
            cg_max_iter: 50,
            gn_solver: GnSolver::Auto,
            bounds: None,
        }
    }
}

impl OptimizerConfig {
    pub fn for_method(method: Method) -> Self {
        let bounds = method.is_projected().then_some(Bounds::NONNEGATIVE);
        Self { method, bounds, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [
            ("tol_obj_change", self.tol_obj_change),
            ("tol_step_norm", self.tol_step_norm),
            ("tol_newton_decrement", self.tol_newton_decrement),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number, got {v}"));
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad(format!("armijo_shrink must lie in (0, 1), got {}", self.armijo_shrink));
        }
        if !(self.cg_rel_tol > 0.0 && self.cg_rel_tol < 1.0) {
            return bad(format!("cg_rel_tol must lie in (0, 1), got {}", self.cg_rel_tol));
        }
        if let Some(b) = self.bounds {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper {
                return bad(format!("empty box [{}, {}]", b.lower, b.upper));
            }
        }
        if self.method.is_projected() && self.bounds.is_none() {
            return bad(format!("method {} requires bounds", self.method));
        }
        Ok(())
    }
}
