//! Parameter sweeps over temperature and coupling grids.
//!
//! A sweep performs one eigendecomposition per distinct extended Hamiltonian and
//! evaluates every temperature against it on a worker pool. Records are sorted
//! by their key before they are returned, so the output does not depend on the
//! number of workers or on scheduling.

mod figures;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology::{
    classical_fi_diagonal, coherence_l1, observable_snr, qfi_spectral, snr_from_qfi, total_polarization,
    weak_coupling_snr,
};
use crate::model::{extended_hamiltonian_on, CouplingKind, ModelParams};
use crate::operators::{HermitianMatrix, SpaceLayout, DEFAULT_DIMENSION_CAP};
use crate::thermal::{eigendecompose, reduced_probe_state, ProbeState, SpectralDecomposition};

pub use figures::{figure_configs, figure_pipeline, FigureName, FigureOptions, FigureRun};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "SPINPROBE_WORKERS";

/// CSV header shared by every sweep output.
pub const CSV_HEADER: [&str; 13] = [
    "n_spins",
    "boson_levels",
    "delta",
    "omega",
    "lambda",
    "coupling_kind",
    "temperature",
    "beta",
    "snr_optimal",
    "snr_dephased",
    "snr_polarization",
    "snr_weak_reference",
    "coherence_l1",
];

/// Figure of merit evaluated at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// QFI bound of the reduced state.
    Optimal,
    /// Population measurement in the spin basis.
    Dephased,
    /// Total z-polarization.
    Polarization,
    /// Canonical Gibbs state of the uncoupled probe.
    WeakReference,
    /// l1 coherence of the reduced state.
    Coherence,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Optimal,
        Scheme::Dephased,
        Scheme::Polarization,
        Scheme::WeakReference,
        Scheme::Coherence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Optimal => "optimal",
            Scheme::Dephased => "dephased",
            Scheme::Polarization => "polarization",
            Scheme::WeakReference => "weak-reference",
            Scheme::Coherence => "coherence",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| Error::Unknown {
                what: "scheme",
                name: s.to_string(),
            })
    }
}

fn default_delta() -> f64 {
    1.0
}
fn default_kind() -> CouplingKind {
    CouplingKind::X
}
fn default_t_min() -> f64 {
    1e-2
}
fn default_t_max() -> f64 {
    1e2
}
fn default_n_points() -> usize {
    100
}
fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}
fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

/// Worker count from `SPINPROBE_WORKERS`, if set.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{WORKERS_ENV}={raw:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// One sweep: a list of couplings crossed with a temperature grid, all other
/// model parameters fixed. Energies and temperatures are in units of `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_spins: usize,
    pub boson_levels: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub omega: f64,
    pub lambdas: Vec<f64>,
    #[serde(default = "default_kind")]
    pub coupling_kind: CouplingKind,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    /// Explicit temperatures; replaces the log-spaced grid when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperatures: Option<Vec<f64>>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    /// Increment of `boson_levels` used by the convergence check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
}

impl SweepConfig {
    /// A log-spaced temperature sweep with every scheme enabled.
    pub fn new(n_spins: usize, boson_levels: usize, omega: f64, lambdas: Vec<f64>) -> Self {
        Self {
            n_spins,
            boson_levels,
            delta: default_delta(),
            omega,
            lambdas,
            coupling_kind: default_kind(),
            t_min: default_t_min(),
            t_max: default_t_max(),
            n_points: default_n_points(),
            temperatures: None,
            schemes: default_schemes(),
            convergence_step: None,
            output: None,
            workers: None,
            dimension_cap: default_cap(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies the `SPINPROBE_WORKERS` override, if set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Some(n) = workers_from_env()? {
            self.workers = Some(n);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::invalid("lambdas", "need at least one coupling"));
        }
        for &lambda in &self.lambdas {
            self.params(lambda).validate()?;
        }
        match &self.temperatures {
            Some(ts) => {
                if ts.is_empty() {
                    return Err(Error::invalid("temperatures", "list is empty"));
                }
                if let Some(t) = ts.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
                    return Err(Error::invalid("temperatures", format!("{t} is not a positive finite value")));
                }
            }
            None => {
                if !(self.t_min > 0.0) || !self.t_min.is_finite() {
                    return Err(Error::invalid("t_min", format!("must be > 0, got {}", self.t_min)));
                }
                if !(self.t_max >= self.t_min) || !self.t_max.is_finite() {
                    return Err(Error::invalid(
                        "t_max",
                        format!("must be finite and >= t_min, got {}", self.t_max),
                    ));
                }
                if self.n_points < 2 {
                    return Err(Error::invalid("n_points", format!("must be >= 2, got {}", self.n_points)));
                }
            }
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes", "need at least one scheme"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be >= 1"));
        }
        if self.convergence_step == Some(0) {
            return Err(Error::invalid("convergence_step", "must be >= 1"));
        }
        self.space()?;
        Ok(())
    }

    pub fn params(&self, lambda: f64) -> ModelParams {
        ModelParams {
            delta: self.delta,
            omega: self.omega,
            lambda,
            coupling_kind: self.coupling_kind,
            n_spins: self.n_spins,
            boson_levels: self.boson_levels,
        }
    }

    pub fn space(&self) -> Result<SpaceLayout> {
        SpaceLayout::with_cap(self.n_spins, self.boson_levels, self.dimension_cap)
    }

    pub fn temperature_grid(&self) -> Vec<f64> {
        match &self.temperatures {
            Some(ts) => ts.clone(),
            None => log_grid(self.t_min, self.t_max, self.n_points),
        }
    }

    fn wants(&self, scheme: Scheme) -> bool {
        self.schemes.contains(&scheme)
    }
}

/// `n` points spaced uniformly in `log10` from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

/// Result at one `(params, T)` grid point. Schemes that were not requested are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub params: ModelParams,
    pub temperature: f64,
    pub beta: f64,
    pub snr_optimal: Option<f64>,
    pub snr_dephased: Option<f64>,
    pub snr_polarization: Option<f64>,
    pub snr_weak_reference: Option<f64>,
    pub coherence_l1: Option<f64>,
    /// Relative change of `snr_optimal` under a raised truncation, when checked.
    pub convergence_delta: Option<f64>,
}

impl SweepRecord {
    /// Sort key; records are unique per key within a sweep.
    fn key(&self) -> (usize, usize, u64, u64, u64, CouplingKind, u64) {
        let p = &self.params;
        (
            p.n_spins,
            p.boson_levels,
            order_bits(p.delta),
            order_bits(p.omega),
            order_bits(p.lambda),
            p.coupling_kind,
            order_bits(self.temperature),
        )
    }

    /// Converts every energy-valued field from units of `delta` to units where
    /// `delta` has the given value. SNRs are dimensionless and unchanged.
    pub fn rescaled(&self, delta: f64) -> Self {
        let mut out = *self;
        out.params.delta *= delta;
        out.params.omega *= delta;
        out.params.lambda *= delta;
        out.temperature *= delta;
        out.beta /= delta;
        out
    }

    fn csv_row(&self) -> Vec<String> {
        let p = &self.params;
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        vec![
            p.n_spins.to_string(),
            p.boson_levels.to_string(),
            fmt_float(p.delta),
            fmt_float(p.omega),
            fmt_float(p.lambda),
            p.coupling_kind.as_str().to_string(),
            fmt_float(self.temperature),
            fmt_float(self.beta),
            opt(self.snr_optimal),
            opt(self.snr_dephased),
            opt(self.snr_polarization),
            opt(self.snr_weak_reference),
            opt(self.coherence_l1),
        ]
    }
}

/// Monotone map from non-negative floats to integers, for sorting keys.
fn order_bits(x: f64) -> u64 {
    let bits = x.to_bits();
    if x.is_sign_negative() {
        !bits
    } else {
        bits | (1 << 63)
    }
}

/// Floats are written with 17 significant digits, enough to round-trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A grid point (or a whole curve, when `temperature` is `None`) that could not
/// be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub params: ModelParams,
    pub temperature: Option<f64>,
    pub kind: String,
    pub message: String,
}

impl SweepFailure {
    fn new(params: ModelParams, temperature: Option<f64>, err: &Error) -> Self {
        Self {
            params,
            temperature,
            kind: err.kind().to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
    /// Number of eigendecompositions performed.
    pub decompositions: usize,
}

impl SweepOutput {
    pub fn extend(&mut self, other: SweepOutput) {
        self.records.extend(other.records);
        self.failures.extend(other.failures);
        self.decompositions += other.decompositions;
        self.sort();
    }

    fn sort(&mut self) {
        self.records.sort_by_key(|r| r.key());
        self.failures.sort_by(|a, b| {
            let ka = (a.params.n_spins, a.params.boson_levels, order_bits(a.params.omega), order_bits(a.params.lambda));
            let kb = (b.params.n_spins, b.params.boson_levels, order_bits(b.params.omega), order_bits(b.params.lambda));
            ka.cmp(&kb)
                .then(a.temperature.map(order_bits).cmp(&b.temperature.map(order_bits)))
        });
    }

    /// Records of one coupling, in ascending temperature.
    pub fn curve(&self, lambda: f64) -> Vec<&SweepRecord> {
        self.records.iter().filter(|r| r.params.lambda == lambda).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.records, out)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for record in records {
        writer.write_record(record.csv_row())?;
    }
    writer.flush()?;
    Ok(())
}

/// Everything a grid point needs besides its temperature.
struct PointContext<'a> {
    config: &'a SweepConfig,
    params: ModelParams,
    space: SpaceLayout,
    decomp: Option<&'a SpectralDecomposition>,
    polarization: Option<&'a HermitianMatrix>,
}

impl PointContext<'_> {
    fn evaluate(&self, temperature: f64) -> Result<SweepRecord> {
        let beta = 1.0 / temperature;
        let config = self.config;
        let mut record = SweepRecord {
            params: self.params,
            temperature,
            beta,
            snr_optimal: None,
            snr_dephased: None,
            snr_polarization: None,
            snr_weak_reference: None,
            coherence_l1: None,
            convergence_delta: None,
        };
        if config.wants(Scheme::WeakReference) {
            record.snr_weak_reference = Some(weak_coupling_snr(config.n_spins, config.delta, temperature)?);
        }
        let Some(decomp) = self.decomp else {
            return Ok(record);
        };
        let state = reduced_probe_state(decomp, beta, &self.space)?;
        if config.wants(Scheme::Optimal) {
            record.snr_optimal = Some(snr_from_qfi(beta, qfi_spectral(&state), 1)?);
        }
        if config.wants(Scheme::Dephased) {
            record.snr_dephased = Some(dephased_snr(&state)?);
        }
        if let Some(pol) = self.polarization {
            record.snr_polarization = Some(observable_snr(&state, pol)?);
        }
        if config.wants(Scheme::Coherence) {
            record.coherence_l1 = Some(coherence_l1(state.rho().as_ref()));
        }
        Ok(record)
    }
}

fn dephased_snr(state: &ProbeState) -> Result<f64> {
    let n = state.dim();
    let p: Vec<f64> = (0..n).map(|i| state.rho().get(i, i).re.max(0.0)).collect();
    let dp: Vec<f64> = (0..n).map(|i| state.drho_dbeta().get(i, i).re).collect();
    snr_from_qfi(state.beta(), classical_fi_diagonal(&p, &dp)?, 1)
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs the sweep. Invalid configurations are rejected up front; failures at
/// individual grid points are collected in [`SweepOutput::failures`].
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let space = config.space()?;
    let temperatures = config.temperature_grid();
    let pool = worker_pool(config.workers)?;
    let needs_state = config
        .schemes
        .iter()
        .any(|s| !matches!(s, Scheme::WeakReference));
    let polarization = config
        .wants(Scheme::Polarization)
        .then(|| total_polarization(&space));

    let mut out = SweepOutput::default();
    let mut lambdas = config.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    for lambda in lambdas {
        let params = config.params(lambda);
        let decomp = if needs_state {
            let h = extended_hamiltonian_on(&space, &params);
            match eigendecompose(&h) {
                Ok(d) => {
                    out.decompositions += 1;
                    Some(d.with_params(params))
                }
                Err(e) => {
                    out.failures.push(SweepFailure::new(params, None, &e));
                    continue;
                }
            }
        } else {
            None
        };
        let ctx = PointContext {
            config,
            params,
            space,
            decomp: decomp.as_ref(),
            polarization: polarization.as_ref(),
        };
        let results: Vec<(f64, Result<SweepRecord>)> =
            pool.install(|| temperatures.par_iter().map(|&t| (t, ctx.evaluate(t))).collect());
        for (t, result) in results {
            match result {
                Ok(record) => out.records.push(record),
                Err(e) => out.failures.push(SweepFailure::new(params, Some(t), &e)),
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Largest relative change of `snr_optimal` along one coupling curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveConvergence {
    pub lambda: f64,
    pub max_relative_change: f64,
    /// Temperature where the largest change occurs.
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub boson_levels: usize,
    pub refined_levels: usize,
    pub curves: Vec<CurveConvergence>,
    /// Records at the refined truncation, with `convergence_delta` filled in.
    pub refined: SweepOutput,
}

impl ConvergenceReport {
    pub fn max_relative_change(&self) -> f64 {
        self.curves
            .iter()
            .map(|c| c.max_relative_change)
            .fold(0.0, f64::max)
    }
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    let scale = coarse.abs().max(fine.abs());
    if scale == 0.0 {
        0.0
    } else {
        (fine - coarse).abs() / scale
    }
}

/// Reruns the grid at `boson_levels + delta_m` and compares `snr_optimal`.
pub fn convergence_check(config: &SweepConfig, delta_m: usize) -> Result<ConvergenceReport> {
    if delta_m == 0 {
        return Err(Error::invalid("delta_m", "must be >= 1"));
    }
    let mut coarse_cfg = config.clone();
    if !coarse_cfg.wants(Scheme::Optimal) {
        coarse_cfg.schemes.push(Scheme::Optimal);
    }
    let refined_cfg = SweepConfig {
        boson_levels: config.boson_levels + delta_m,
        ..coarse_cfg.clone()
    };
    refined_cfg.space()?;
    let coarse = run_sweep(&coarse_cfg)?;
    let mut refined = run_sweep(&refined_cfg)?;

    let mut curves: Vec<CurveConvergence> = Vec::new();
    for record in refined.records.iter_mut() {
        let lambda = record.params.lambda;
        let matching = coarse
            .records
            .iter()
            .find(|c| c.params.lambda == lambda && c.temperature == record.temperature);
        let (Some(c), Some(fine)) = (matching.and_then(|c| c.snr_optimal), record.snr_optimal) else {
            continue;
        };
        let change = relative_change(c, fine);
        record.convergence_delta = Some(change);
        match curves.iter_mut().find(|cv| cv.lambda == lambda) {
            Some(cv) if change > cv.max_relative_change => {
                cv.max_relative_change = change;
                cv.temperature = record.temperature;
            }
            Some(_) => {}
            None => curves.push(CurveConvergence {
                lambda,
                max_relative_change: change,
                temperature: record.temperature,
            }),
        }
    }
    refined.failures.extend(coarse.failures);
    Ok(ConvergenceReport {
        boson_levels: config.boson_levels,
        refined_levels: refined_cfg.boson_levels,
        curves,
        refined,
    })
}
