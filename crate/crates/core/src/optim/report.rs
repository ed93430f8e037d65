use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Why an optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Newton decrement below tolerance.
    Decrement,
    /// Objective change and step norm both below tolerance.
    ObjAndStep,
    MaxIter,
    LineSearchFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Decrement => "decrement",
            Termination::ObjAndStep => "obj+step",
            Termination::MaxIter => "max_iter",
            Termination::LineSearchFailure => "line_search_failure",
        })
    }
}

/// One row of the per-iteration log. Row 0 is the initial guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    pub rof: f64,
    pub re: Option<f64>,
    pub step_norm: f64,
    pub ls_iters: usize,
    pub cum_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    /// Sparse factorizations built during the run.
    pub factorizations: usize,
    pub cg_iterations: usize,
    /// `‖∇ᴾE‖∞` at the returned point (plain gradient when unconstrained).
    pub final_kkt_residual: f64,
}

impl RunReport {
    /// Accepted steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn min_rof(&self) -> f64 {
        self.records.iter().map(|r| r.rof).fold(f64::INFINITY, f64::min)
    }

    /// Smallest RE over iterates after the initial guess, or the initial RE
    /// when no step was taken.
    pub fn min_re(&self) -> Option<f64> {
        let later = self.records.iter().skip(1).filter_map(|r| r.re).fold(f64::INFINITY, f64::min);
        if later.is_finite() {
            Some(later)
        } else {
            self.records.first().and_then(|r| r.re)
        }
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_seconds)
    }

    pub fn mean_ls_iters(&self) -> f64 {
        let n = self.iterations();
        if n == 0 {
            0.0
        } else {
            self.records.iter().skip(1).map(|r| r.ls_iters as f64).sum::<f64>() / n as f64
        }
    }

    /// CSV with columns `iter, objective, rof, re, step_norm, ls_iters, cum_seconds`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<IterRecord>> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = Vec::new();
        for rec in rd.deserialize() {
            out.push(rec?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_lossless() {
        let records = vec![
            IterRecord { iter: 0, objective: 12.5, rof: 1.0, re: Some(0.8), step_norm: 0.0, ls_iters: 0, cum_seconds: 0.0 },
            IterRecord { iter: 1, objective: 0.1 + 0.2, rof: 0.3 / 12.5, re: None, step_norm: 1e-17, ls_iters: 3, cum_seconds: 0.123456789 },
        ];
        let rep = RunReport { records: records.clone(), termination: Termination::MaxIter, factorizations: 0, cg_iterations: 0, final_kkt_residual: 0.0 };
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iter,objective,rof,re,step_norm,ls_iters,cum_seconds\n"));
        assert_eq!(RunReport::read_csv(&buf[..]).unwrap(), records);
    }

    #[test]
    fn summary_statistics() {
        let mk = |iter, re| IterRecord { iter, objective: 1.0, rof: 1.0 / (iter + 1) as f64, re, step_norm: 0.0, ls_iters: iter, cum_seconds: iter as f64 };
        let rep = RunReport {
            records: vec![mk(0, Some(0.1)), mk(1, Some(0.5)), mk(2, Some(0.3))],
            termination: Termination::ObjAndStep,
            factorizations: 1,
            cg_iterations: 0,
            final_kkt_residual: 0.0,
        };
        assert_eq!(rep.iterations(), 2);
        assert_eq!(rep.min_re(), Some(0.3));
        assert!((rep.min_rof() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rep.mean_ls_iters(), 1.5);
        assert_eq!(rep.total_seconds(), 2.0);
    }
}
