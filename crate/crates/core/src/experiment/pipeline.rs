use std::cell::Cell;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MethodSpec};
use super::metrics::{raw_relative_error, relative_error};
use crate::bispectrum::{accumulate_bispectrum, build_index, build_phase_map, BispectrumData, BispectrumIndex};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::init::{project_energy_preserving, recursive_phase, synthesize_image};
use crate::io::{write_bimg, write_pgm, Image};
use crate::objectives::{ImageProblem, Objective, PhaseProblem};
use crate::optim::{minimize, OptimizerConfig, RunReport, Termination};
use crate::speckle::{point_source, recover_modulus, satellite_object, simulate_frames, FrameKind, SimulationConfig};

/// Simulated data, truth and initial guesses for one seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub truth: Vec<f64>,
    pub data: BispectrumData,
    pub phi0: Vec<f64>,
    pub init_image: Vec<f64>,
    pub projected_init: Vec<f64>,
    pub init_re: f64,
    pub projected_re: f64,
}

/// The satellite test object carrying the configured object flux.
pub fn satellite_truth(sim: &SimulationConfig) -> Vec<f64> {
    satellite_object(sim.image_side, sim.photons_object)
}

pub fn problem_index(cfg: &ExperimentConfig) -> Result<BispectrumIndex> {
    build_index(build_phase_map(cfg.sim.image_side, cfg.recovery_radius)?, cfg.inner_radius)
}

/// Simulate, accumulate, recover the modulus and build the recursive initial guess.
pub fn prepare_instance(sim: &SimulationConfig, index: &BispectrumIndex, epsilon: f64) -> Result<Instance> {
    let n = sim.image_side;
    let truth = satellite_truth(sim);
    let obj = simulate_frames(&truth, sim, FrameKind::Object)?;
    let star = simulate_frames(&point_source(n), sim, FrameKind::Star)?;
    let modulus = recover_modulus(&obj, &star)?;
    let data = accumulate_bispectrum(&obj.spectra(), index)?.with_modulus(modulus)?;
    Instance::from_data(sim.rng_seed, truth, data, index, epsilon)
}

/// Data from the truth's own transform as one frame: exact phases, unit
/// weights and the true modulus.
pub fn noiseless_instance(truth: Vec<f64>, index: &BispectrumIndex, epsilon: f64) -> Result<Instance> {
    let side = index.image_side();
    if truth.len() != side * side {
        return Err(Error::InvalidArgument(format!("truth has {} pixels, expected {}", truth.len(), side * side)));
    }
    let spectrum = Fft2::new(side).forward_real(&truth);
    let data = accumulate_bispectrum(&[spectrum], index)?;
    Instance::from_data(0, truth, data, index, epsilon)
}

impl Instance {
    fn from_data(seed: u64, truth: Vec<f64>, data: BispectrumData, index: &BispectrumIndex, epsilon: f64) -> Result<Self> {
        let phi0 = recursive_phase(&data, index);
        let init_image = synthesize_image(&phi0, &data.modulus, index.map())?.image;
        let projected_init = project_energy_preserving(&init_image, epsilon)?;
        let init_re = relative_error(&init_image, &truth)?;
        let projected_re = relative_error(&projected_init, &truth)?;
        Ok(Instance { seed, truth, data, phi0, init_image, projected_init, init_re, projected_re })
    }
}

/// Prepares `cfg.n_repeats` instances with seeds `seed, seed + 1, …`.
pub fn prepare_instances(cfg: &ExperimentConfig, index: &BispectrumIndex) -> Result<Vec<Instance>> {
    (0..cfg.n_repeats as u64)
        .into_par_iter()
        .map(|k| {
            let sim = SimulationConfig { rng_seed: cfg.sim.rng_seed + k, ..cfg.sim.clone() };
            if cfg.noiseless {
                noiseless_instance(satellite_truth(&sim), index, cfg.projection_epsilon)
            } else {
                prepare_instance(&sim, index, cfg.projection_epsilon)
            }
        })
        .collect()
}

/// Result of one optimization run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub spec: MethodSpec,
    pub alpha: f64,
    /// Recovered image; synthesized from the phases for phase formulations.
    pub image: Vec<f64>,
    /// Final unknowns, phases or pixels.
    pub solution: Vec<f64>,
    pub report: RunReport,
    pub final_re: f64,
    pub raw_re: f64,
    /// Smallest entry over all iterates, initial point included.
    pub min_iterate_value: f64,
}

/// Runs one method on one instance.
pub fn solve_instance(
    inst: &Instance,
    index: &BispectrumIndex,
    spec: MethodSpec,
    alpha: f64,
    tv_eps: Option<f64>,
    opt: &OptimizerConfig,
) -> Result<Outcome> {
    spec.validate()?;
    let variant = spec.formulation.variant();
    let lowest = Cell::new(f64::INFINITY);
    let track = |y: &[f64]| lowest.set(y.iter().fold(lowest.get(), |m, &v| m.min(v)));
    let (solution, report, image) = if spec.formulation.is_image() {
        let eps = tv_eps.unwrap_or_else(|| 1e-3 * inst.projected_init.iter().cloned().fold(0.0, f64::max));
        let prob = ImageProblem::new(index, &inst.data, variant, spec.reg.resolve(eps), alpha)?;
        let mon = |o: &[f64]| {
            track(o);
            relative_error(o, &inst.truth).unwrap_or(f64::NAN)
        };
        // bound-constrained methods need the feasible start
        let start = if spec.method.is_projected() { &inst.projected_init } else { &inst.init_image };
        let (o, rep) = minimize(&prob as &dyn Objective, start, opt, Some(&mon))?;
        (o.clone(), rep, o)
    } else {
        let prob = PhaseProblem::new(index, &inst.data, variant)?;
        let image_of = |phi: &[f64]| synthesize_image(phi, &inst.data.modulus, index.map()).map(|s| s.image);
        let mon = |phi: &[f64]| {
            track(phi);
            image_of(phi).and_then(|o| relative_error(&o, &inst.truth)).unwrap_or(f64::NAN)
        };
        let (phi, rep) = minimize(&prob as &dyn Objective, &inst.phi0, opt, Some(&mon))?;
        let img = image_of(&phi)?;
        (phi, rep, img)
    };
    let final_re = relative_error(&image, &inst.truth)?;
    let raw_re = raw_relative_error(&image, &inst.truth);
    Ok(Outcome { spec, alpha, image, solution, report, final_re, raw_re, min_iterate_value: lowest.get() })
}

/// Averages over repeats of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub label: String,
    pub formulation: String,
    pub method: String,
    pub reg: String,
    pub alpha: f64,
    pub repeats: usize,
    pub init_re: f64,
    pub projected_re: f64,
    pub min_rof: f64,
    pub min_re: f64,
    pub final_re: f64,
    pub raw_re: f64,
    pub iterations: f64,
    pub total_seconds: f64,
    pub seconds_per_iter: f64,
    pub mean_ls_iters: f64,
    /// Fraction of runs stopped by a convergence test.
    pub converged: f64,
}

impl MetricsRow {
    pub fn aggregate(spec: MethodSpec, alpha: f64, instances: &[Instance], outcomes: &[&Outcome]) -> Self {
        let k = outcomes.len().max(1) as f64;
        let mean = |f: &dyn Fn(&Outcome) -> f64| outcomes.iter().map(|o| f(o)).sum::<f64>() / k;
        let ki = instances.len().max(1) as f64;
        let iterations = mean(&|o| o.report.iterations() as f64);
        let total_seconds = mean(&|o| o.report.total_seconds());
        Self {
            label: spec.label(),
            formulation: spec.formulation.to_string(),
            method: spec.method.to_string(),
            reg: spec.reg.to_string(),
            alpha,
            repeats: outcomes.len(),
            init_re: instances.iter().map(|i| i.init_re).sum::<f64>() / ki,
            projected_re: instances.iter().map(|i| i.projected_re).sum::<f64>() / ki,
            min_rof: mean(&|o| o.report.min_rof()),
            min_re: mean(&|o| o.report.min_re().unwrap_or(o.final_re)),
            final_re: mean(&|o| o.final_re),
            raw_re: mean(&|o| o.raw_re),
            iterations,
            total_seconds,
            seconds_per_iter: if iterations > 0.0 { total_seconds / iterations } else { 0.0 },
            mean_ls_iters: mean(&|o| o.report.mean_ls_iters()),
            converged: mean(&|o| matches!(o.report.termination, Termination::Decrement | Termination::ObjAndStep) as u8 as f64),
        }
    }
}

pub fn write_rows<W: std::io::Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(r: R) -> Result<Vec<MetricsRow>> {
    csv::Reader::from_reader(r).deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `report.csv`, `solution.pgm` and `solution.bimg` into `dir`.
pub fn write_run(dir: &Path, outcome: &Outcome, side: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    outcome.report.write_csv(fs::File::create(dir.join("report.csv"))?)?;
    let img = Image::square(side, outcome.image.clone())?;
    write_pgm(&img, fs::File::create(dir.join("solution.pgm"))?)?;
    write_bimg(&img, fs::File::create(dir.join("solution.bimg"))?)?;
    Ok(())
}

/// Full results of a set of methods on shared instances.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub instances: Vec<Instance>,
    /// `outcomes[s][k]` is method `s` on instance `k`.
    pub outcomes: Vec<Vec<Outcome>>,
    pub rows: Vec<MetricsRow>,
}

/// Runs every method in `specs` on the same `cfg.n_repeats` instances, with
/// `alphas[s]` for method `s`. Writes artifacts when `out` is given.
pub fn evaluate(cfg: &ExperimentConfig, specs: &[(MethodSpec, f64)], out: Option<&Path>) -> Result<Evaluation> {
    cfg.validate()?;
    for (s, _) in specs {
        s.validate()?;
    }
    let index = problem_index(cfg)?;
    let instances = prepare_instances(cfg, &index)?;
    evaluate_on(cfg, &index, instances, specs, out)
}

/// [`evaluate`] on already prepared instances.
pub fn evaluate_on(
    cfg: &ExperimentConfig,
    index: &BispectrumIndex,
    instances: Vec<Instance>,
    specs: &[(MethodSpec, f64)],
    out: Option<&Path>,
) -> Result<Evaluation> {
    for (s, _) in specs {
        s.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|s| (0..instances.len()).map(move |k| (s, k))).collect();
    let flat: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(s, k)| {
            let (spec, alpha) = specs[s];
            solve_instance(&instances[k], index, spec, alpha, cfg.tv_eps, &cfg.optimizer_for(spec.method))
        })
        .collect::<Result<_>>()?;
    let mut outcomes: Vec<Vec<Outcome>> = vec![Vec::new(); specs.len()];
    for ((s, _), o) in jobs.iter().zip(flat) {
        outcomes[*s].push(o);
    }
    let rows: Vec<MetricsRow> = specs
        .iter()
        .zip(&outcomes)
        .map(|(&(spec, alpha), os)| MetricsRow::aggregate(spec, alpha, &instances, &os.iter().collect::<Vec<_>>()))
        .collect();
    if let Some(root) = out {
        for ((spec, _), os) in specs.iter().zip(&outcomes) {
            for (k, o) in os.iter().enumerate() {
                write_run(&root.join(spec.dir_name()).join(format!("run{k}")), o, cfg.sim.image_side)?;
            }
        }
        fs::create_dir_all(root)?;
        write_rows(&rows, fs::File::create(root.join("summary.csv"))?)?;
    }
    Ok(Evaluation { instances, outcomes, rows })
}

/// The configured method, averaged over repeats, with artifacts under `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    Ok(evaluate(cfg, &[(cfg.spec(), cfg.alpha())], Some(&cfg.output_dir))?.rows)
}

/// The full method roster for `cfg.formulation`. Regularized methods use
/// `cfg.alpha` when their regularizer matches `cfg.reg`, otherwise their default.
pub fn run_comparison(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<MetricsRow>> {
    let specs: Vec<(MethodSpec, f64)> = MethodSpec::roster(cfg.formulation)
        .into_iter()
        .map(|s| {
            let alpha = if s.reg == cfg.reg { cfg.alpha() } else { s.reg.default_alpha() };
            (s, alpha)
        })
        .collect();
    Ok(evaluate(cfg, &specs, out)?.rows)
}
