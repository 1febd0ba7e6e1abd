//! `spinprobe`: temperature and coupling sweeps, figure pipelines, truncation
//! checks and reaction-coordinate parameters from the command line.
//!
//! Energies and temperatures are read in units of the spin splitting. Every
//! run that writes files also writes `manifest.toml` next to them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use spinprobe::sweep::{log_grid, workers_from_env, write_csv, FigureOptions};
use spinprobe::{
    convergence_check, figure_pipeline, rc_parameters, run_sweep, CouplingKind, Error, FigureName, Scheme,
    SpectralDensity, SweepConfig, SweepFailure, SweepOutput,
};

#[derive(Debug, Parser)]
#[command(name = "spinprobe", version, about = "Strong-coupling thermometry with N-spin probes")]
struct Cli {
    /// Worker threads for sweeps (overrides SPINPROBE_WORKERS and config files).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Relative tolerance of the spectral-density quadrature.
    #[arg(long, global = true, default_value_t = 1e-10)]
    quad_tol: f64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Energy unit: reported temperatures and energies are multiplied by this.
    #[arg(long, global = true, default_value_t = 1.0)]
    delta: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SNR of every measurement scheme on a log-spaced temperature grid.
    SnrCurve(CurveArgs),
    /// SNR as a function of the coupling at fixed temperatures.
    SweepLambda(LambdaArgs),
    /// Regenerate the data of a named figure.
    Figure(FigureArgs),
    /// Compare a temperature sweep against a run with more boson levels.
    ConvergeM(ConvergeArgs),
    /// Reaction-coordinate frequency and coupling of a spectral density.
    RcParams(RcArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// TOML file with a sweep configuration; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of spins N.
    #[arg(long = "n")]
    n_spins: Option<usize>,
    /// Boson levels M kept for the reaction coordinate.
    #[arg(long = "m")]
    boson_levels: Option<usize>,
    /// Reaction-coordinate frequency.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<CouplingKind>,
    /// Measurement schemes to evaluate (comma separated).
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
    schemes: Option<Vec<Scheme>>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Couplings (comma separated).
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct LambdaArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    lambda_min: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 60)]
    points: usize,
    /// Fixed temperatures (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.5")]
    temperatures: Vec<f64>,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// One of fig2, fig3, fig4, fig5, figA1, figA2.
    #[arg(value_parser = parse_figure)]
    name: FigureName,
    /// Grid points per curve.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Boson levels, replacing the figure's default.
    #[arg(long = "m")]
    boson_levels: Option<usize>,
    /// Skip probes with more spins than this.
    #[arg(long)]
    max_spins: Option<usize>,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    curve: CurveArgs,
    /// Extra boson levels for the refined run.
    #[arg(long, default_value_t = 10)]
    delta_m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum DensityKind {
    Brownian,
    OhmicExp,
}

#[derive(Debug, Args)]
struct RcArgs {
    #[arg(long, value_enum)]
    kind: DensityKind,
    /// Dimensionless width (Brownian) or coupling prefactor (Ohmic).
    #[arg(long, default_value_t = spinprobe::spectral::DEFAULT_BROWNIAN_GAMMA)]
    gamma: f64,
    /// Brownian peak frequency.
    #[arg(long)]
    omega0: Option<f64>,
    /// Brownian coupling.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Ohmic high-frequency cutoff.
    #[arg(long)]
    cutoff: Option<f64>,
}

fn parse_kind(s: &str) -> Result<CouplingKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_figure(s: &str) -> Result<FigureName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    created_unix: u64,
    delta: f64,
    outputs: Vec<String>,
    failures: usize,
    config: C,
}

fn write_manifest<C: Serialize>(out: &Path, command: &str, delta: f64, outputs: &[PathBuf], failures: usize, config: C) -> Result<(), Error> {
    let manifest = Manifest {
        tool: "spinprobe",
        version: env!("CARGO_PKG_VERSION"),
        command,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        delta,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
        failures,
        config,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("manifest.toml"), text)?;
    Ok(())
}

impl ModelArgs {
    /// Starts from the config file (or built-in defaults) and applies flags.
    fn resolve(&self, lambdas: Option<&Vec<f64>>, workers: Option<usize>) -> Result<SweepConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::from_path(path)?,
            None => SweepConfig::new(1, 50, 15.0, vec![0.0]),
        };
        if let Some(n) = self.n_spins {
            cfg.n_spins = n;
        }
        if let Some(m) = self.boson_levels {
            cfg.boson_levels = m;
        }
        if let Some(w) = self.omega {
            cfg.omega = w;
        }
        if let Some(k) = self.kind {
            cfg.coupling_kind = k;
        }
        if let Some(s) = &self.schemes {
            cfg.schemes = s.clone();
        }
        if let Some(l) = lambdas {
            cfg.lambdas = l.clone();
        }
        let mut cfg = cfg.with_env_overrides()?;
        if workers.is_some() {
            cfg.workers = workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl CurveArgs {
    fn resolve(&self, workers: Option<usize>) -> Result<SweepConfig, Error> {
        let mut cfg = self.model.resolve(self.lambda.as_ref(), workers)?;
        if let Some(t) = self.t_min {
            cfg.t_min = t;
        }
        if let Some(t) = self.t_max {
            cfg.t_max = t;
        }
        if let Some(n) = self.points {
            cfg.n_points = n;
        }
        if self.t_min.is_some() || self.t_max.is_some() || self.points.is_some() {
            cfg.temperatures = None;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_delta(delta: f64) -> Result<(), Error> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be positive and finite, got {delta}"),
        })
    }
}

fn write_sweep(out_dir: &Path, file: &str, output: &SweepOutput, delta: f64) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(file);
    let records: Vec<_> = output.records.iter().map(|r| r.rescaled(delta)).collect();
    write_csv(&records, std::fs::File::create(&path)?)?;
    report_failures(&output.failures);
    Ok(path)
}

fn report_failures(failures: &[SweepFailure]) {
    for f in failures {
        let line = serde_json::json!({
            "warning": "point_failed",
            "kind": f.kind,
            "lambda": f.params.lambda,
            "temperature": f.temperature,
            "message": f.message,
        });
        eprintln!("{line}");
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    check_delta(cli.delta)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::SnrCurve(args) => {
            let cfg = args.resolve(cli.workers)?;
            let output = run_sweep(&cfg)?;
            let path = write_sweep(out, "snr_curve.csv", &output, cli.delta)?;
            write_manifest(out, "snr-curve", cli.delta, &[path], output.failures.len(), &cfg)?;
        }
        Command::SweepLambda(args) => {
            if !(args.lambda_min > 0.0) || !(args.lambda_max >= args.lambda_min) {
                return Err(Error::InvalidParameter {
                    name: "lambda_min",
                    reason: "need 0 < lambda-min <= lambda-max".into(),
                });
            }
            let lambdas = log_grid(args.lambda_min, args.lambda_max, args.points);
            let mut cfg = args.model.resolve(Some(&lambdas), cli.workers)?;
            cfg.temperatures = Some(args.temperatures.clone());
            cfg.validate()?;
            let output = run_sweep(&cfg)?;
            let path = write_sweep(out, "sweep_lambda.csv", &output, cli.delta)?;
            write_manifest(out, "sweep-lambda", cli.delta, &[path], output.failures.len(), &cfg)?;
        }
        Command::Figure(args) => {
            let workers = match cli.workers {
                Some(w) => Some(w),
                None => workers_from_env()?,
            };
            let opts = FigureOptions {
                out_dir: out.to_path_buf(),
                workers,
                n_points: args.points,
                boson_levels: args.boson_levels,
                max_spins: args.max_spins,
            };
            let run = figure_pipeline(args.name, &opts)?;
            if cli.delta != 1.0 {
                for path in &run.files {
                    rescale_csv(path, cli.delta)?;
                }
            }
            report_failures(&run.failures);
            #[derive(Serialize)]
            struct Sweep<'a> {
                file: String,
                #[serde(flatten)]
                config: &'a SweepConfig,
            }
            #[derive(Serialize)]
            struct FigureManifest<'a> {
                figure: &'static str,
                sweeps: Vec<Sweep<'a>>,
            }
            let sweeps = run
                .configs
                .iter()
                .map(|(stem, config)| Sweep {
                    file: format!("{stem}.csv"),
                    config,
                })
                .collect();
            let config = FigureManifest {
                figure: args.name.as_str(),
                sweeps,
            };
            write_manifest(out, "figure", cli.delta, &run.files, run.failures.len(), config)?;
        }
        Command::ConvergeM(args) => {
            let cfg = args.curve.resolve(cli.workers)?;
            let report = convergence_check(&cfg, args.delta_m)?;
            std::fs::create_dir_all(out)?;
            let path = out.join("convergence.csv");
            let mut writer = csv::Writer::from_path(&path).map_err(Error::from)?;
            writer.write_record(["lambda", "boson_levels", "refined_levels", "max_relative_change", "temperature"])?;
            for c in &report.curves {
                writer.write_record([
                    spinprobe::sweep::fmt_float(c.lambda * cli.delta),
                    report.boson_levels.to_string(),
                    report.refined_levels.to_string(),
                    spinprobe::sweep::fmt_float(c.max_relative_change),
                    spinprobe::sweep::fmt_float(c.temperature * cli.delta),
                ])?;
            }
            writer.flush()?;
            report_failures(&report.refined.failures);
            let summary = serde_json::json!({
                "boson_levels": report.boson_levels,
                "refined_levels": report.refined_levels,
                "max_relative_change": report.max_relative_change(),
            });
            println!("{summary}");
            write_manifest(out, "converge-m", cli.delta, &[path], report.refined.failures.len(), &cfg)?;
        }
        Command::RcParams(args) => {
            let density = match args.kind {
                DensityKind::Brownian => SpectralDensity::brownian(
                    args.gamma,
                    args.omega0.ok_or_else(|| missing("omega0"))?,
                    args.lambda0.ok_or_else(|| missing("lambda0"))?,
                )?,
                DensityKind::OhmicExp => {
                    SpectralDensity::ohmic_exp(args.gamma, args.cutoff.ok_or_else(|| missing("cutoff"))?)?
                }
            };
            let rc = rc_parameters(&density, cli.quad_tol)?;
            let result = serde_json::json!({
                "lambda": rc.lambda * cli.delta,
                "omega": rc.omega * cli.delta,
                "first_moment": rc.first_moment.value,
                "third_moment": rc.third_moment.value,
                "relative_error": rc.relative_error(),
            });
            println!("{result}");
        }
    }
    Ok(())
}

fn missing(name: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        reason: "required for this spectral density".into(),
    }
}

/// Rewrites a figure CSV in units where the spin splitting equals `delta`.
fn rescale_csv(path: &Path, delta: f64) -> Result<(), Error> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row?;
        let fields: Vec<String> = header
            .iter()
            .zip(row.iter())
            .map(|(name, value)| {
                let factor = match name {
                    "delta" | "omega" | "lambda" | "temperature" => delta,
                    "beta" => 1.0 / delta,
                    _ => return value.to_string(),
                };
                value
                    .parse::<f64>()
                    .map(|x| spinprobe::sweep::fmt_float(x * factor))
                    .unwrap_or_else(|_| value.to_string())
            })
            .collect();
        rows.push(fields);
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(&header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{}", e.render());
            let line = serde_json::json!({"error": "usage", "message": e.kind().to_string()});
            eprintln!("{line}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            eprintln!("{line}");
            ExitCode::from(1)
        }
    }
}
