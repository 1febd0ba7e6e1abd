//! Thermometry of N-spin probes strongly coupled to a bosonic sample.
//!
//! The sample is represented by a single reaction coordinate (a truncated
//! harmonic mode) coupled to the probe; the probe's equilibrium state is the
//! reduced state of the probe-plus-mode Gibbs state. From it we compute the
//! quantum Fisher information for the inverse temperature and the
//! signal-to-noise ratio `T / dT` of optimal and suboptimal measurements.
//!
//! ```
//! use spinprobe::{CouplingKind, ModelParams, eigendecompose, extended_hamiltonian,
//!                 reduced_probe_state, snr_report};
//!
//! let params = ModelParams {
//!     delta: 1.0,
//!     omega: 15.0,
//!     lambda: 5.0,
//!     coupling_kind: CouplingKind::X,
//!     n_spins: 1,
//!     boson_levels: 20,
//! };
//! let space = params.space().unwrap();
//! let decomp = eigendecompose(&extended_hamiltonian(&params).unwrap()).unwrap();
//! let state = reduced_probe_state(&decomp, 1.0 / 0.8, &space).unwrap();
//! let report = snr_report(&state, &space, params.delta).unwrap();
//! assert!(report.snr_optimal > 0.0 && report.snr_optimal < report.snr_weak_reference);
//! ```

pub mod error;
pub mod metrology;
pub mod model;
pub mod operators;
pub mod quadrature;
pub mod spectral;
pub mod sweep;
pub mod thermal;

pub use error::{Error, Result};
pub use metrology::{
    classical_fi_diagonal, coherence_l1, dephase, lyapunov_residual, observable_snr, qfi, qfi_spectral,
    sld, snr_from_qfi, snr_report, total_polarization, weak_coupling_snr, SnrReport,
};
pub use model::{
    bare_probe_hamiltonian, coupling_operator, extended_hamiltonian, parity_operator, probe_hamiltonian,
    CouplingKind, ModelParams,
};
pub use operators::{
    boson_operators, partial_trace_rc, probe_spin_operator, spin_operator, Axis, BosonOperators,
    HermitianMatrix, SpaceLayout, DEFAULT_DIMENSION_CAP,
};
pub use spectral::{rc_parameters, RcParameters, SpectralDensity};
pub use sweep::{
    convergence_check, figure_pipeline, run_sweep, ConvergenceReport, FigureName, Scheme, SweepConfig,
    SweepFailure, SweepOutput, SweepRecord,
};
pub use thermal::{
    canonical_probe_state, eigendecompose, finite_difference_drho, gibbs_weights, reduced_probe_state,
    ProbeState, SpectralDecomposition,
};

pub use faer::{c64, Mat, MatRef};
