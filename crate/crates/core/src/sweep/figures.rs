//! Named pipelines producing the CSV data behind each published figure.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{log_grid, run_sweep, SweepConfig, SweepFailure, SweepOutput};
use crate::error::{Error, Result};
use crate::model::CouplingKind;

/// Temperatures of the fixed-T panels in the coupling sweep.
pub const FIG4_TEMPERATURES: [f64; 4] = [0.05, 0.1, 0.2, 0.5];

/// Reaction-coordinate frequencies of the frequency sweep.
pub const FIGA2_OMEGAS: [f64; 5] = [1.0, 2.5, 5.0, 10.0, 15.0];

/// Couplings used for the measurement-scheme comparison, per probe size.
pub const FIG5_COUPLINGS: [(usize, f64); 3] = [(2, 5.0), (4, 2.5), (8, 1.5)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureName {
    #[serde(rename = "fig2")]
    Fig2,
    #[serde(rename = "fig3")]
    Fig3,
    #[serde(rename = "fig4")]
    Fig4,
    #[serde(rename = "fig5")]
    Fig5,
    #[serde(rename = "figA1")]
    FigA1,
    #[serde(rename = "figA2")]
    FigA2,
}

impl FigureName {
    pub const ALL: [FigureName; 6] = [
        FigureName::Fig2,
        FigureName::Fig3,
        FigureName::Fig4,
        FigureName::Fig5,
        FigureName::FigA1,
        FigureName::FigA2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureName::Fig2 => "fig2",
            FigureName::Fig3 => "fig3",
            FigureName::Fig4 => "fig4",
            FigureName::Fig5 => "fig5",
            FigureName::FigA1 => "figA1",
            FigureName::FigA2 => "figA2",
        }
    }

    /// Truncation used when none is given.
    pub fn default_boson_levels(self) -> usize {
        match self {
            FigureName::Fig2 | FigureName::FigA1 => 50,
            FigureName::Fig3 | FigureName::Fig4 | FigureName::Fig5 => 30,
            FigureName::FigA2 => 2000,
        }
    }
}

impl fmt::Display for FigureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureName::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unknown {
                what: "figure",
                name: s.to_string(),
            })
    }
}

/// Knobs shared by all pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOptions {
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
    /// Points of each temperature (or, for fig4, coupling) grid.
    pub n_points: usize,
    /// Overrides the figure's default truncation.
    pub boson_levels: Option<usize>,
    /// Drops probe sizes above this, for desk-scale runs.
    pub max_spins: Option<usize>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("."),
            workers: None,
            n_points: 100,
            boson_levels: None,
            max_spins: None,
        }
    }
}

/// Files written by one pipeline, with the sweeps that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRun {
    pub files: Vec<PathBuf>,
    pub configs: Vec<(String, SweepConfig)>,
    pub failures: Vec<SweepFailure>,
    pub decompositions: usize,
}

fn temperature_sweep(n: usize, m: usize, lambdas: Vec<f64>, t_max: f64, opts: &FigureOptions) -> SweepConfig {
    SweepConfig {
        t_min: 1e-2,
        t_max,
        n_points: opts.n_points,
        workers: opts.workers,
        ..SweepConfig::new(n, m, 15.0, lambdas)
    }
}

/// The sweeps behind a figure, each tagged with the file stem it is written to.
/// Several sweeps may share a stem; their records are concatenated.
pub fn figure_configs(name: FigureName, opts: &FigureOptions) -> Vec<(String, SweepConfig)> {
    let m = opts.boson_levels.unwrap_or(name.default_boson_levels());
    let keep = |n: usize| opts.max_spins.is_none_or(|cap| n <= cap);
    let multi = [1usize, 2, 4, 6, 8];
    let mut out = Vec::new();
    match name {
        FigureName::Fig2 => {
            out.push(("fig2".into(), temperature_sweep(1, m, vec![5.0, 10.0, 15.0, 20.0], 1e2, opts)));
        }
        FigureName::FigA1 => {
            let cfg = SweepConfig {
                coupling_kind: CouplingKind::XzMix,
                ..temperature_sweep(1, m, vec![5.0, 10.0, 15.0, 20.0], 1e2, opts)
            };
            out.push(("figA1".into(), cfg));
        }
        FigureName::Fig3 => {
            for lambda in [1.0, 2.5, 5.0] {
                for n in multi.into_iter().filter(|&n| keep(n)) {
                    out.push((format!("fig3_lambda{lambda}"), temperature_sweep(n, m, vec![lambda], 10.0, opts)));
                }
            }
        }
        FigureName::Fig4 => {
            for n in [2usize, 4, 8].into_iter().filter(|&n| keep(n)) {
                let cfg = SweepConfig {
                    temperatures: Some(FIG4_TEMPERATURES.to_vec()),
                    workers: opts.workers,
                    ..SweepConfig::new(n, m, 15.0, log_grid(0.1, 10.0, opts.n_points))
                };
                out.push((format!("fig4_n{n}"), cfg));
            }
        }
        FigureName::Fig5 => {
            for (n, lambda) in FIG5_COUPLINGS.into_iter().filter(|&(n, _)| keep(n)) {
                out.push((format!("fig5_n{n}"), temperature_sweep(n, m, vec![lambda], 10.0, opts)));
            }
        }
        FigureName::FigA2 => {
            for omega in FIGA2_OMEGAS {
                let cfg = SweepConfig {
                    omega,
                    ..temperature_sweep(2, m, vec![5.0], 1e2, opts)
                };
                out.push(("figA2".into(), cfg));
            }
        }
    }
    out
}

/// Runs every sweep of the figure and writes one CSV per file stem into
/// `opts.out_dir`.
pub fn figure_pipeline(name: FigureName, opts: &FigureOptions) -> Result<FigureRun> {
    let configs = figure_configs(name, opts);
    for (_, cfg) in &configs {
        cfg.validate()?;
    }
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut stems: Vec<String> = Vec::new();
    for (stem, _) in &configs {
        if !stems.contains(stem) {
            stems.push(stem.clone());
        }
    }
    let mut run = FigureRun {
        files: Vec::new(),
        configs: configs.clone(),
        failures: Vec::new(),
        decompositions: 0,
    };
    for stem in stems {
        let mut merged = SweepOutput::default();
        for (_, cfg) in configs.iter().filter(|(s, _)| *s == stem) {
            merged.extend(run_sweep(cfg)?);
        }
        let path = opts.out_dir.join(format!("{stem}.csv"));
        merged.write_csv_file(&path)?;
        run.failures.extend(merged.failures);
        run.decompositions += merged.decompositions;
        run.files.push(path);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in FigureName::ALL {
            assert_eq!(f.as_str().parse::<FigureName>().unwrap(), f);
        }
        assert!(matches!("fig9".parse::<FigureName>(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn figure_grids() {
        let opts = FigureOptions::default();
        let fig2 = figure_configs(FigureName::Fig2, &opts);
        assert_eq!(fig2.len(), 1);
        assert_eq!(fig2[0].1.lambdas, vec![5.0, 10.0, 15.0, 20.0]);
        assert_eq!(fig2[0].1.boson_levels, 50);

        let fig3 = figure_configs(FigureName::Fig3, &opts);
        assert_eq!(fig3.len(), 15);
        assert!(fig3.iter().all(|(_, c)| c.boson_levels == 30));

        let fig4 = figure_configs(FigureName::Fig4, &opts);
        assert!(fig4.iter().all(|(_, c)| c.temperatures.as_deref() == Some(&FIG4_TEMPERATURES[..])));

        let a1 = figure_configs(FigureName::FigA1, &opts);
        assert_eq!(a1[0].1.coupling_kind, CouplingKind::XzMix);

        let a2 = figure_configs(FigureName::FigA2, &opts);
        assert!(a2.iter().all(|(_, c)| c.n_spins == 2 && c.boson_levels == 2000));
        assert_eq!(a2.len(), FIGA2_OMEGAS.len());

        let small = FigureOptions {
            max_spins: Some(4),
            boson_levels: Some(8),
            ..FigureOptions::default()
        };
        assert!(figure_configs(FigureName::Fig3, &small)
            .iter()
            .all(|(_, c)| c.n_spins <= 4 && c.boson_levels == 8));
    }
}
