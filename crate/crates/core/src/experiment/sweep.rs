use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Formulation, MethodSpec, RegKind};
use super::pipeline::{evaluate, MetricsRow};
use crate::error::{Error, Result};
use crate::optim::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    Fried,
    Radius,
    Noise,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Fried => "fried",
            SweepParameter::Radius => "radius",
            SweepParameter::Noise => "noise",
        }
    }

    /// Desk-scale sweep values for a 64 × 64 grid.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParameter::Fried => vec![10.0, 20.0, 30.0, 40.0, 50.0],
            SweepParameter::Radius => vec![16.0, 20.0, 24.0, 28.0, 32.0],
            SweepParameter::Noise => vec![1.0, 3.0, 5.0, 7.0, 9.0],
        }
    }

    fn apply(self, cfg: &mut ExperimentConfig, value: f64) {
        match self {
            SweepParameter::Fried => cfg.sim.fried = value,
            SweepParameter::Radius => cfg.recovery_radius = value,
            SweepParameter::Noise => cfg.sim.sigma_rn = value,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fried" | "d_r0" => Ok(SweepParameter::Fried),
            "radius" => Ok(SweepParameter::Radius),
            "noise" | "sigma_rn" => Ok(SweepParameter::Noise),
            _ => Err(Error::Config(format!("unknown sweep parameter '{s}'"))),
        }
    }
}

/// Mean relative errors at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub init: f64,
    pub projected: f64,
    pub gn_e1phi: f64,
    pub gn_e2phi: f64,
    pub pgn_tv_e1obj: f64,
    pub pgn_tv_e2obj: f64,
}

impl SweepRow {
    /// RE of the four optimized solutions.
    pub fn solutions(&self) -> [f64; 4] {
        [self.gn_e1phi, self.gn_e2phi, self.pgn_tv_e1obj, self.pgn_tv_e2obj]
    }
}

/// Methods evaluated at each sweep point.
pub fn sweep_methods(tv_alpha: f64) -> [(MethodSpec, f64); 4] {
    [
        (MethodSpec::new(Formulation::E1Phi, Method::GN, RegKind::None), 0.0),
        (MethodSpec::new(Formulation::E2Phi, Method::GN, RegKind::None), 0.0),
        (MethodSpec::new(Formulation::E1Obj, Method::PGN, RegKind::Tv), tv_alpha),
        (MethodSpec::new(Formulation::E2Obj, Method::PGN, RegKind::Tv), tv_alpha),
    ]
}

/// One row per value; every value reuses the seeds of `cfg`. The TV weight is
/// `cfg.alpha` when `cfg.reg` is TV, otherwise the TV default.
pub fn run_robustness_sweep(cfg: &ExperimentConfig, parameter: SweepParameter, values: &[f64]) -> Result<Vec<SweepRow>> {
    let tv_alpha = if cfg.reg == RegKind::Tv { cfg.alpha() } else { RegKind::Tv.default_alpha() };
    values
        .iter()
        .map(|&value| {
            let mut c = cfg.clone();
            parameter.apply(&mut c, value);
            let ev = evaluate(&c, &sweep_methods(tv_alpha), None)?;
            let r = &ev.rows;
            Ok(SweepRow {
                parameter: parameter.to_string(),
                value,
                init: r[0].init_re,
                projected: r[0].projected_re,
                gn_e1phi: r[0].min_re,
                gn_e2phi: r[1].min_re,
                pgn_tv_e1obj: r[2].min_re,
                pgn_tv_e2obj: r[3].min_re,
            })
        })
        .collect()
}

/// Runs `cfg.spec()` for every weight in `alphas`; rows come back in input
/// order with the smallest mean min-RE index.
pub fn gridsearch(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<(Vec<MetricsRow>, usize)> {
    if alphas.is_empty() {
        return Err(Error::Config("grid search needs at least one alpha".into()));
    }
    let specs: Vec<(MethodSpec, f64)> = alphas.iter().map(|&a| (cfg.spec(), a)).collect();
    let rows = evaluate(cfg, &specs, None)?.rows;
    let best = (0..rows.len()).min_by(|&a, &b| rows[a].min_re.total_cmp(&rows[b].min_re)).unwrap_or(0);
    Ok((rows, best))
}

/// Logarithmic grid `10^lo, …, 10^hi`.
pub fn log_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 10f64.powi(k)).collect()
}

pub fn write_sweep<W: std::io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep<R: std::io::Read>(r: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(r).deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_known_values() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        // Pearson on ranks [1,2,3,4,5] vs [2,1,4,3,5]: 1 - 6·4/120
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in [SweepParameter::Fried, SweepParameter::Radius, SweepParameter::Noise] {
            assert_eq!(p.name().parse::<SweepParameter>().unwrap(), p);
            assert_eq!(p.default_values().len(), 5);
        }
    }
}
