use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{Regularizer, Variant};
use crate::optim::{Method, OptimizerConfig};
use crate::speckle::SimulationConfig;

/// Unknowns and data term of a recovery problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formulation {
    E1Phi,
    E2Phi,
    E1Obj,
    E2Obj,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [Formulation::E1Phi, Formulation::E2Phi, Formulation::E1Obj, Formulation::E2Obj];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::E1Phi => "e1phi",
            Formulation::E2Phi => "e2phi",
            Formulation::E1Obj => "e1obj",
            Formulation::E2Obj => "e2obj",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Formulation::E1Phi | Formulation::E1Obj => Variant::E1,
            Formulation::E2Phi | Formulation::E2Obj => Variant::E2,
        }
    }

    /// True when the unknowns are pixels rather than phases.
    pub fn is_image(self) -> bool {
        matches!(self, Formulation::E1Obj | Formulation::E2Obj)
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formulation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let key = key.replace("obj", "o").replace("phi", "p");
        Formulation::ALL
            .into_iter()
            .find(|f| f.name().replace("obj", "o").replace("phi", "p") == key)
            .ok_or_else(|| Error::Config(format!("unknown formulation '{s}'")))
    }
}

/// Regularizer choice before its parameters are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegKind {
    None,
    Penalty,
    Grad,
    Tv,
}

impl RegKind {
    pub const ALL: [RegKind; 4] = [RegKind::None, RegKind::Penalty, RegKind::Grad, RegKind::Tv];

    pub fn name(self) -> &'static str {
        match self {
            RegKind::None => "none",
            RegKind::Penalty => "penalty",
            RegKind::Grad => "grad",
            RegKind::Tv => "tv",
        }
    }

    /// Weight used when none is configured, picked by grid search on the
    /// default 64 × 64 problem with 3e6 photons per frame.
    pub fn default_alpha(self) -> f64 {
        match self {
            RegKind::None => 0.0,
            RegKind::Penalty => 1e-7,
            RegKind::Grad => 1e-8,
            RegKind::Tv => 3e-5,
        }
    }

    /// Weights for the 256 × 256, 100-frame reference setup. Regularizer weights scale
    /// with pixel units and problem size, so these do not transfer to other grids.
    pub fn reference_alpha(self) -> f64 {
        match self {
            RegKind::None => 0.0,
            RegKind::Penalty => 1e3,
            RegKind::Grad => 1e-2,
            RegKind::Tv => 1e4,
        }
    }

    pub fn resolve(self, tv_eps: f64) -> Regularizer {
        match self {
            RegKind::None => Regularizer::None,
            RegKind::Penalty => Regularizer::Penalty,
            RegKind::Grad => Regularizer::DiscreteGradient,
            RegKind::Tv => Regularizer::TotalVariation { eps: tv_eps },
        }
    }
}

impl fmt::Display for RegKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "none" => Ok(RegKind::None),
            "penalty" | "pen" | "+" => Ok(RegKind::Penalty),
            "grad" | "gradient" | "discrete_gradient" => Ok(RegKind::Grad),
            "tv" | "total_variation" => Ok(RegKind::Tv),
            _ => Err(Error::Config(format!("unknown regularizer '{s}'"))),
        }
    }
}

/// One solver configuration: formulation, method and regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub formulation: Formulation,
    pub method: Method,
    pub reg: RegKind,
}

impl MethodSpec {
    pub fn new(formulation: Formulation, method: Method, reg: RegKind) -> Self {
        Self { formulation, method, reg }
    }

    /// Rejects combinations outside the supported roster.
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::Config(format!("{} with {} and {}: {why}", self.formulation, self.method, self.reg)));
        if !self.formulation.is_image() {
            if self.method.is_projected() {
                return bad("bound constraints need pixel unknowns");
            }
            if self.reg != RegKind::None {
                return bad("phase formulations take no regularizer");
            }
        } else if self.reg == RegKind::Penalty && self.method.is_projected() {
            return bad("the penalty pairs with unconstrained methods");
        }
        Ok(())
    }

    /// Short table label such as `GN`, `GN+`, `PGN-TV`.
    pub fn label(&self) -> String {
        let m = match self.method {
            Method::GD => "GD",
            Method::PGD => "PGD",
            Method::LBFGS => "LBFGS",
            Method::GN => "GN",
            Method::PGN => "PGN",
        };
        match self.reg {
            RegKind::None => m.to_string(),
            RegKind::Penalty => format!("{m}+"),
            RegKind::Grad => format!("{m}-grad"),
            RegKind::Tv => format!("{m}-TV"),
        }
    }

    /// Directory name `<formulation>_<method>_<reg>`.
    pub fn dir_name(&self) -> String {
        format!("{}_{}_{}", self.formulation, self.method, self.reg)
    }

    /// The comparison roster for one formulation.
    pub fn roster(formulation: Formulation) -> Vec<MethodSpec> {
        let pairs: &[(Method, RegKind)] = if formulation.is_image() {
            &[
                (Method::GD, RegKind::Penalty),
                (Method::LBFGS, RegKind::Penalty),
                (Method::GN, RegKind::Penalty),
                (Method::PGD, RegKind::Grad),
                (Method::PGD, RegKind::Tv),
                (Method::PGN, RegKind::Grad),
                (Method::PGN, RegKind::Tv),
            ]
        } else {
            &[(Method::GD, RegKind::None), (Method::LBFGS, RegKind::None), (Method::GN, RegKind::None)]
        };
        pairs.iter().map(|&(m, r)| MethodSpec::new(formulation, m, r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sim: SimulationConfig,
    pub recovery_radius: f64,
    pub inner_radius: f64,
    pub formulation: Formulation,
    pub method: Method,
    pub reg: RegKind,
    /// `None` uses [`RegKind::default_alpha`].
    pub alpha: Option<f64>,
    /// `None` uses `1e-3 · max(initial image)`.
    pub tv_eps: Option<f64>,
    /// Method and bounds are overwritten from `method`.
    pub optimizer: OptimizerConfig,
    /// Added to every pixel of the projected initial image.
    pub projection_epsilon: f64,
    /// Use the object's own spectrum as a single noiseless frame.
    pub noiseless: bool,
    pub n_repeats: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimulationConfig::default(),
            recovery_radius: 24.0,
            inner_radius: 5.0,
            formulation: Formulation::E1Phi,
            method: Method::GN,
            reg: RegKind::None,
            alpha: None,
            tv_eps: None,
            optimizer: OptimizerConfig::default(),
            projection_epsilon: 1e-4,
            noiseless: false,
            n_repeats: 1,
            output_dir: PathBuf::from("results"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

impl ExperimentConfig {
    pub fn spec(&self) -> MethodSpec {
        MethodSpec::new(self.formulation, self.method, self.reg)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| self.reg.default_alpha())
    }

    /// Optimizer settings for `method`, keeping the tolerance overrides.
    pub fn optimizer_for(&self, method: Method) -> OptimizerConfig {
        let base = OptimizerConfig::for_method(method);
        OptimizerConfig { method, bounds: base.bounds, ..self.optimizer.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate().map_err(|e| Error::Config(e.to_string()))?;
        let half = self.sim.image_side as f64 / 2.0;
        if !(self.recovery_radius > 0.0 && self.recovery_radius < half) {
            return Err(Error::Config(format!("radius {} must lie in (0, {half})", self.recovery_radius)));
        }
        if !(self.inner_radius > 0.0 && self.inner_radius <= self.recovery_radius) {
            return Err(Error::Config(format!("inner radius {} must lie in (0, radius]", self.inner_radius)));
        }
        if self.n_repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if let Some(a) = self.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("alpha must be nonnegative, got {a}")));
            }
        }
        if let Some(e) = self.tv_eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("tv_eps must be positive, got {e}")));
            }
        }
        if !(self.projection_epsilon >= 0.0 && self.projection_epsilon.is_finite()) {
            return Err(Error::Config("projection epsilon must be nonnegative".into()));
        }
        self.optimizer_for(self.method).validate()?;
        self.spec().validate()
    }

    /// Sets one field from its config-file key. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('-', "_").to_ascii_lowercase();
        let v = value.trim();
        match k.as_str() {
            "image_side" | "n" => self.sim.image_side = parse(&k, v)?,
            "frames" | "n_frames" => self.sim.n_frames = parse(&k, v)?,
            "fried" | "d_r0" => self.sim.fried = parse(&k, v)?,
            "photons_object" => self.sim.photons_object = parse(&k, v)?,
            "photons_star" => self.sim.photons_star = parse(&k, v)?,
            "sigma_rn" | "noise" => self.sim.sigma_rn = parse(&k, v)?,
            "seed" | "rng_seed" => self.sim.rng_seed = parse(&k, v)?,
            "radius" | "recovery_radius" => self.recovery_radius = parse(&k, v)?,
            "inner_radius" => self.inner_radius = parse(&k, v)?,
            "formulation" => self.formulation = v.parse()?,
            "method" => self.method = v.parse()?,
            "reg" | "regularizer" => self.reg = v.parse()?,
            "alpha" => self.alpha = Some(parse(&k, v)?),
            "tv_eps" => self.tv_eps = Some(parse(&k, v)?),
            "max_iter" => self.optimizer.max_iter = parse(&k, v)?,
            "tol_obj" | "tol_obj_change" => self.optimizer.tol_obj_change = parse(&k, v)?,
            "tol_step" | "tol_step_norm" => self.optimizer.tol_step_norm = parse(&k, v)?,
            "tol_dec" | "tol_newton_decrement" => self.optimizer.tol_newton_decrement = parse(&k, v)?,
            "armijo_c" => self.optimizer.armijo_c = parse(&k, v)?,
            "armijo_max_backtracks" => self.optimizer.armijo_max_backtracks = parse(&k, v)?,
            "lbfgs_memory" => self.optimizer.lbfgs_memory = parse(&k, v)?,
            "cg_tol" | "cg_rel_tol" => self.optimizer.cg_rel_tol = parse(&k, v)?,
            "cg_max_iter" => self.optimizer.cg_max_iter = parse(&k, v)?,
            "epsilon" | "projection_epsilon" => self.projection_epsilon = parse(&k, v)?,
            "noiseless" => self.noiseless = parse(&k, v)?,
            "repeats" | "n_repeats" => self.n_repeats = parse(&k, v)?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!("E1phi".parse::<Formulation>().unwrap(), Formulation::E1Phi);
        assert_eq!("e2o".parse::<Formulation>().unwrap(), Formulation::E2Obj);
        assert_eq!("E2obj".parse::<Formulation>().unwrap(), Formulation::E2Obj);
        assert!("e3phi".parse::<Formulation>().is_err());
        assert_eq!("TV".parse::<RegKind>().unwrap(), RegKind::Tv);
    }

    #[test]
    fn text_overrides_fields() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# desk run\nimage-side = 32\nradius=10 # smaller\nmethod = pgn\nformulation=e1obj\nreg = tv\nalpha=5\n")
            .unwrap();
        assert_eq!(c.sim.image_side, 32);
        assert_eq!(c.recovery_radius, 10.0);
        assert_eq!(c.spec(), MethodSpec::new(Formulation::E1Obj, Method::PGN, RegKind::Tv));
        assert_eq!(c.alpha(), 5.0);
        c.validate().unwrap();
        assert!(matches!(c.apply_text("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("radius"), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_pairs_name_the_offenders() {
        for (f, m, r) in [
            (Formulation::E1Phi, Method::PGN, RegKind::None),
            (Formulation::E2Phi, Method::GN, RegKind::Tv),
            (Formulation::E1Obj, Method::PGD, RegKind::Penalty),
        ] {
            let err = MethodSpec::new(f, m, r).validate().unwrap_err();
            let msg = err.to_string();
            assert!(matches!(err, Error::Config(_)));
            assert!(msg.contains(f.name()) && msg.contains(m.name()) && msg.contains(r.name()), "{msg}");
        }
        for f in Formulation::ALL {
            for s in MethodSpec::roster(f) {
                s.validate().unwrap();
            }
        }
    }

    #[test]
    fn radius_bounds_are_checked() {
        let c = ExperimentConfig { recovery_radius: 32.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        ExperimentConfig::default().validate().unwrap();
    }
}
