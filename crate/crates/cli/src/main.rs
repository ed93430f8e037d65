//! `bispec`: simulate speckle data and run phase/image recovery experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bispec_core::bispectrum::write_index;
use bispec_core::experiment::{
    gridsearch, log_grid, noiseless_instance, problem_index, run_comparison, run_experiment, run_robustness_sweep,
    satellite_truth, solve_instance, write_rows, write_sweep, ExperimentConfig, Formulation, MethodSpec, MetricsRow,
    RegKind, SweepParameter,
};
use bispec_core::fft::Fft2;
use bispec_core::io::{write_bimg, write_pgm, Image};
use bispec_core::objectives::PhaseJacobian;
use bispec_core::optim::{Method, OptimizerConfig};
use bispec_core::speckle::{point_source, recover_modulus, simulate_frames, FrameKind};
use bispec_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bispec", version, about = "Bispectrum phase recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate frames and write the truth, a sample frame, the modulus and the index.
    Simulate(Common),
    /// Run the configured formulation, method and regularizer.
    Recover(Common),
    /// Run the method roster on shared data.
    Compare {
        #[command(flatten)]
        common: Common,
        /// All four formulations instead of the configured one.
        #[arg(long)]
        all: bool,
    },
    /// Vary one data parameter and report relative errors.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// fried, radius or noise.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values; defaults to the desk-scale grid.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Pick the regularization weight with the smallest mean min-RE.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        /// Comma-separated weights; defaults to 1e-4, 1e-3, ..., 1e6.
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
    },
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Args, Default)]
struct Common {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image_side: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Turbulence strength D/r0.
    #[arg(long)]
    fried: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    inner_radius: Option<f64>,
    #[arg(long)]
    sigma_rn: Option<f64>,
    #[arg(long)]
    photons: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    formulation: Option<String>,
    #[arg(long)]
    reg: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tv_eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    noiseless: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        let pairs: [(&str, Option<String>); 17] = [
            ("image_side", self.image_side.map(|v| v.to_string())),
            ("frames", self.frames.map(|v| v.to_string())),
            ("fried", self.fried.map(|v| v.to_string())),
            ("radius", self.radius.map(|v| v.to_string())),
            ("inner_radius", self.inner_radius.map(|v| v.to_string())),
            ("sigma_rn", self.sigma_rn.map(|v| v.to_string())),
            ("photons_object", self.photons.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("method", self.method.clone()),
            ("formulation", self.formulation.clone()),
            ("reg", self.reg.clone()),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("tv_eps", self.tv_eps.map(|v| v.to_string())),
            ("max_iter", self.max_iter.map(|v| v.to_string())),
            ("repeats", self.repeats.map(|v| v.to_string())),
            ("noiseless", self.noiseless.then(|| "true".to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_rows(rows: &[MetricsRow]) {
    println!(
        "{:<8} {:<10} {:>9} {:>9} {:>9} {:>9} {:>7} {:>9} {:>9} {:>6}",
        "form", "method", "alpha", "init_re", "min_rof", "min_re", "iters", "seconds", "s/iter", "ls/it"
    );
    for r in rows {
        println!(
            "{:<8} {:<10} {:>9.2e} {:>9.4} {:>9.3e} {:>9.4} {:>7.1} {:>9.3} {:>9.4} {:>6.2}",
            r.formulation,
            r.label,
            r.alpha,
            r.init_re,
            r.min_rof,
            r.min_re,
            r.iterations,
            r.total_seconds,
            r.seconds_per_iter,
            r.mean_ls_iters
        );
    }
}

fn write_image(dir: &Path, stem: &str, side: usize, data: Vec<f64>) -> Result<()> {
    let img = Image::square(side, data)?;
    write_pgm(&img, fs::File::create(dir.join(format!("{stem}.pgm")))?)?;
    write_bimg(&img, fs::File::create(dir.join(format!("{stem}.bimg")))?)
}

fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let n = cfg.sim.image_side;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let truth = satellite_truth(&cfg.sim);
    let obj = simulate_frames(&truth, &cfg.sim, FrameKind::Object)?;
    let star = simulate_frames(&point_source(n), &cfg.sim, FrameKind::Star)?;
    let modulus = recover_modulus(&obj, &star)?;
    let mean: Vec<f64> = (0..n * n).map(|p| obj.frames.iter().map(|f| f[p]).sum::<f64>() / obj.len() as f64).collect();
    write_image(dir, "truth", n, truth)?;
    write_image(dir, "frame0", n, obj.frames[0].clone())?;
    write_image(dir, "mean_frame", n, mean)?;
    write_image(dir, "modulus", n, modulus)?;
    let index = problem_index(cfg)?;
    write_index(&index, fs::File::create(dir.join("index.bidx"))?)?;
    println!("{} frames, {} unknowns, {} triplets -> {}", obj.len(), index.n_unknowns(), index.len(), dir.display());
    Ok(())
}

fn compare(cfg: &ExperimentConfig, all: bool) -> Result<()> {
    let forms: Vec<Formulation> = if all { Formulation::ALL.to_vec() } else { vec![cfg.formulation] };
    let mut rows = Vec::new();
    for f in forms {
        let c = ExperimentConfig { formulation: f, ..cfg.clone() };
        rows.extend(run_comparison(&c, Some(&cfg.output_dir))?);
    }
    fs::create_dir_all(&cfg.output_dir)?;
    write_rows(&rows, fs::File::create(cfg.output_dir.join("summary.csv"))?)?;
    print_rows(&rows);
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, parameter: &str, values: &[f64]) -> Result<()> {
    let p: SweepParameter = parameter.parse()?;
    let values = if values.is_empty() { p.default_values() } else { values.to_vec() };
    let rows = run_robustness_sweep(cfg, p, &values)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_sweep(&rows, fs::File::create(cfg.output_dir.join(format!("sweep_{p}.csv")))?)?;
    println!(
        "{:<8} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10}",
        p.name(),
        "init",
        "proj",
        "GN-E1p",
        "GN-E2p",
        "PGN-TV-E1o",
        "PGN-TV-E2o"
    );
    for r in &rows {
        println!(
            "{:<8} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10.4} {:>10.4}",
            r.value, r.init, r.projected, r.gn_e1phi, r.gn_e2phi, r.pgn_tv_e1obj, r.pgn_tv_e2obj
        );
    }
    Ok(())
}

fn grid(cfg: &ExperimentConfig, alphas: &[f64]) -> Result<()> {
    let alphas = if alphas.is_empty() { log_grid(-4, 6) } else { alphas.to_vec() };
    let (rows, best) = gridsearch(cfg, &alphas)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_rows(&rows, fs::File::create(cfg.output_dir.join("gridsearch.csv"))?)?;
    print_rows(&rows);
    println!("best alpha: {:e} (min RE {:.4})", rows[best].alpha, rows[best].min_re);
    Ok(())
}

fn selftest() -> Result<bool> {
    let mut ok = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("{name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        ok &= pass;
    };

    let cfg = ExperimentConfig { recovery_radius: 6.0, inner_radius: 3.0, ..Default::default() };
    let cfg = ExperimentConfig { sim: bispec_core::speckle::SimulationConfig { image_side: 16, ..cfg.sim.clone() }, ..cfg };
    let index = problem_index(&cfg)?;
    let fft = Fft2::new(16);
    let o: Vec<f64> = (0..256).map(|p| 2.0 + ((p as f64 * 12.9898).sin() * 43758.5453).fract()).collect();
    let q: Vec<f64> = (0..256).map(|p| (p as f64 * 0.37).sin()).collect();
    let r: Vec<f64> = (0..index.n_unknowns()).map(|k| (k as f64 * 0.91).cos()).collect();
    let jac = PhaseJacobian::new(&o, index.map(), &fft);
    let lhs: f64 = jac.forward(&q).iter().zip(&r).map(|(a, b)| a * b).sum();
    let rhs: f64 = jac.adjoint(&r).iter().zip(&q).map(|(a, b)| a * b).sum();
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt() * r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = (lhs - rhs).abs() / norm;
    report("adjoint", rel <= 1e-10, format!("{rel:.2e}"));

    let inst = noiseless_instance(satellite_truth(&cfg.sim), &index, 1e-4)?;
    let opt = OptimizerConfig { max_iter: 15, tol_newton_decrement: 1e-14, ..OptimizerConfig::for_method(Method::GN) };
    let spec = MethodSpec::new(Formulation::E1Phi, Method::GN, RegKind::None);
    let out = solve_instance(&inst, &index, spec, 0.0, None, &opt)?;
    let e = out.report.final_objective();
    report("noiseless GN", e < 1e-12, format!("objective {e:.2e}, RE {:.2e}", out.final_re));
    Ok(ok)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::LineSearchFailure(_) | Error::NumericalBreakdown(_) => 3,
        Error::Format(_) | Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(c) => simulate(&c.resolve()?)?,
        Command::Recover(c) => {
            let cfg = c.resolve()?;
            let rows = run_experiment(&cfg)?;
            print_rows(&rows);
        }
        Command::Compare { common, all } => compare(&common.resolve()?, all)?,
        Command::Sweep { common, parameter, values } => sweep(&common.resolve()?, &parameter, &values)?,
        Command::Gridsearch { common, alphas } => grid(&common.resolve()?, &alphas)?,
        Command::Selftest => {
            if !selftest()? {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
