//! Probe Hamiltonian, probe-sample coupling operator and the extended
//! (probe + reaction coordinate) Hamiltonian.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    add_number_term, add_spin_term, probe_layout, Axis, BosonFactor, HermitianMatrix, SpaceLayout,
    DEFAULT_DIMENSION_CAP,
};

/// Spin operator through which the probe couples to the reaction coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CouplingKind {
    /// `S = sum_i sigma^x_i`
    #[serde(rename = "x")]
    X,
    /// `S = sum_i (sigma^x_i + sigma^z_i) / sqrt(2)`
    #[serde(rename = "xz-mix")]
    XzMix,
}

impl CouplingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CouplingKind::X => "x",
            CouplingKind::XzMix => "xz-mix",
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(CouplingKind::X),
            "xz-mix" | "xz_mix" | "xzmix" => Ok(CouplingKind::XzMix),
            _ => Err(Error::Unknown {
                what: "coupling kind",
                name: s.to_string(),
            }),
        }
    }
}

/// Parameters of the extended Hamiltonian. Energies are in units of `delta`
/// unless `delta` itself is changed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub omega: f64,
    pub lambda: f64,
    pub coupling_kind: CouplingKind,
    pub n_spins: usize,
    pub boson_levels: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be positive, got {}", self.delta)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid("omega", format!("must be positive, got {}", self.omega)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be non-negative, got {}", self.lambda),
            ));
        }
        Ok(())
    }

    /// Validated layout under the default dimension cap.
    pub fn space(&self) -> Result<SpaceLayout> {
        self.space_with_cap(DEFAULT_DIMENSION_CAP)
    }

    pub fn space_with_cap(&self, cap: usize) -> Result<SpaceLayout> {
        self.validate()?;
        SpaceLayout::with_cap(self.n_spins, self.boson_levels, cap)
    }
}

/// `H_p = sum_i delta sigma^z_i` on the composite space.
pub fn probe_hamiltonian(space: &SpaceLayout, delta: f64) -> HermitianMatrix {
    let mut out = Mat::zeros(space.total_dim(), space.total_dim());
    for site in 0..space.n_spins() {
        add_spin_term(&mut out, space, site, Axis::Z, BosonFactor::Identity, delta);
    }
    HermitianMatrix::from_trusted(out)
}

/// `H_p` on the bare `2^N`-dimensional probe space.
pub fn bare_probe_hamiltonian(space: &SpaceLayout, delta: f64) -> HermitianMatrix {
    probe_hamiltonian(&probe_layout(space), delta)
}

fn add_coupling(
    out: &mut Mat<c64>,
    space: &SpaceLayout,
    kind: CouplingKind,
    boson: BosonFactor,
    coeff: f64,
) {
    for site in 0..space.n_spins() {
        match kind {
            CouplingKind::X => add_spin_term(out, space, site, Axis::X, boson, coeff),
            CouplingKind::XzMix => {
                let c = coeff * std::f64::consts::FRAC_1_SQRT_2;
                add_spin_term(out, space, site, Axis::X, boson, c);
                add_spin_term(out, space, site, Axis::Z, boson, c);
            }
        }
    }
}

/// Sample-coupling operator `S` on the composite space (identity on the boson).
pub fn coupling_operator(space: &SpaceLayout, kind: CouplingKind) -> HermitianMatrix {
    let mut out = Mat::zeros(space.total_dim(), space.total_dim());
    add_coupling(&mut out, space, kind, BosonFactor::Identity, 1.0);
    HermitianMatrix::from_trusted(out)
}

/// `H_S = H_p + omega a^dagger a + lambda S (a^dagger + a)`.
///
/// Terms are accumulated in place, so only one `2^N M`-dimensional matrix is
/// ever allocated.
pub fn extended_hamiltonian(params: &ModelParams) -> Result<HermitianMatrix> {
    let space = params.space()?;
    Ok(extended_hamiltonian_on(&space, params))
}

pub(crate) fn extended_hamiltonian_on(space: &SpaceLayout, params: &ModelParams) -> HermitianMatrix {
    let n = space.total_dim();
    let mut out = Mat::zeros(n, n);
    for site in 0..space.n_spins() {
        add_spin_term(&mut out, space, site, Axis::Z, BosonFactor::Identity, params.delta);
    }
    add_number_term(&mut out, space, params.omega);
    if params.lambda != 0.0 {
        add_coupling(
            &mut out,
            space,
            params.coupling_kind,
            BosonFactor::Displacement,
            params.lambda,
        );
    }
    HermitianMatrix::from_trusted(out)
}

/// Composite parity `(prod_i sigma^z_i) (-1)^{a^dagger a}`, diagonal.
pub fn parity_operator(space: &SpaceLayout) -> HermitianMatrix {
    let diag: Vec<f64> = (0..space.total_dim())
        .map(|idx| {
            let (s, k) = space.split(idx);
            let flips = s.count_ones() as usize + k;
            if flips % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    HermitianMatrix::from_diagonal(&diag)
}
