//! Spectral densities of the sample and extraction of the reaction-coordinate
//! frequency and coupling from their moments:
//!
//! ```text
//! Omega^2  = int w^3 J(w) dw / int w J(w) dw
//! lambda^2 = (1 / Omega) int w J(w) dw
//! ```
//!
//! A Brownian density decays as `w^-3`, so its third moment diverges linearly.
//! The divergent part `c_inf * W` (with `c_inf = lim w^3 J(w)`) carries no
//! information about the resonance and is removed: the third moment used here is
//! the finite part `lim_W [int_0^W w^3 J - c_inf W]`. For the Brownian form this
//! gives `Omega^2 = Omega0^2 (1 - 4 pi^2 gamma^2)`, exact as `gamma -> 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Integral};

/// Width used when a Brownian sample has to be instantiated without an explicit value.
pub const DEFAULT_BROWNIAN_GAMMA: f64 = 0.01;

/// Upper end of the explicitly subdivided domain, in units of the density's scale.
const DOMAIN_SCALE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralDensity {
    /// `4 gamma Omega0^2 lambda0^2 w / ((w^2 - Omega0^2)^2 + (2 pi gamma Omega0 w)^2)`
    Brownian {
        gamma: f64,
        omega0: f64,
        lambda0: f64,
    },
    /// `gamma w e^{-w / cutoff}`
    OhmicExp { gamma: f64, cutoff: f64 },
}

impl SpectralDensity {
    pub fn brownian(gamma: f64, omega0: f64, lambda0: f64) -> Result<Self> {
        let j = SpectralDensity::Brownian {
            gamma,
            omega0,
            lambda0,
        };
        j.validate()?;
        Ok(j)
    }

    pub fn ohmic_exp(gamma: f64, cutoff: f64) -> Result<Self> {
        let j = SpectralDensity::OhmicExp { gamma, cutoff };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            SpectralDensity::Brownian {
                gamma,
                omega0,
                lambda0,
            } => {
                positive("gamma", gamma)?;
                positive("omega0", omega0)?;
                positive("lambda0", lambda0)
            }
            SpectralDensity::OhmicExp { gamma, cutoff } => {
                positive("gamma", gamma)?;
                positive("cutoff", cutoff)
            }
        }
    }

    /// `J(w)` for `w >= 0`.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::invalid("omega", format!("must be >= 0, got {omega}")));
        }
        Ok(self.value(omega))
    }

    fn value(&self, w: f64) -> f64 {
        match *self {
            SpectralDensity::Brownian {
                gamma,
                omega0,
                lambda0,
            } => {
                let detuning = w * w - omega0 * omega0;
                let damping = 2.0 * PI * gamma * omega0 * w;
                4.0 * gamma * omega0 * omega0 * lambda0 * lambda0 * w
                    / (detuning * detuning + damping * damping)
            }
            SpectralDensity::OhmicExp { gamma, cutoff } => gamma * w * (-w / cutoff).exp(),
        }
    }

    /// `lim_{w -> inf} w^3 J(w)`.
    pub fn cubic_asymptote(&self) -> f64 {
        match *self {
            SpectralDensity::Brownian {
                gamma,
                omega0,
                lambda0,
            } => 4.0 * gamma * omega0 * omega0 * lambda0 * lambda0,
            SpectralDensity::OhmicExp { .. } => 0.0,
        }
    }

    /// Characteristic frequency (resonance or cutoff).
    fn scale(&self) -> f64 {
        match *self {
            SpectralDensity::Brownian { omega0, .. } => omega0,
            SpectralDensity::OhmicExp { cutoff, .. } => cutoff,
        }
    }

    /// Subdivision points clustered around the Brownian resonance.
    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            SpectralDensity::Brownian { gamma, omega0, .. } => {
                let width = PI * gamma * omega0;
                [-30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0]
                    .iter()
                    .map(|k| omega0 + k * width)
                    .filter(|x| *x > 0.0)
                    .collect()
            }
            SpectralDensity::OhmicExp { cutoff, .. } => vec![cutoff, 4.0 * cutoff],
        }
    }
}

/// Reaction-coordinate parameters and the moments they were computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcParameters {
    pub lambda: f64,
    pub omega: f64,
    /// `int w J(w) dw`
    pub first_moment: Integral,
    /// Finite part of `int w^3 J(w) dw`.
    pub third_moment: Integral,
}

impl RcParameters {
    /// First-order bound on the relative error of both `omega` and `lambda`.
    pub fn relative_error(&self) -> f64 {
        self.first_moment.relative_error() + self.third_moment.relative_error()
    }
}

fn moment<F: Fn(f64) -> f64>(f: F, j: &SpectralDensity, quad_tol: f64) -> Result<Integral> {
    let upper = DOMAIN_SCALE * j.scale();
    let body = integrate(&f, 0.0, upper, &j.breakpoints(), quad_tol * 0.5, 0.0)?;
    // the tail is small; an absolute target tied to the body keeps it from dominating the budget
    let tail = integrate_to_infinity(&f, upper, quad_tol * 0.5, quad_tol * 0.5 * body.value.abs())?;
    Ok(Integral {
        value: body.value + tail.value,
        error: body.error + tail.error,
        evaluations: body.evaluations + tail.evaluations,
    })
}

/// `(lambda, Omega)` of the reaction coordinate for spectral density `j`.
pub fn rc_parameters(j: &SpectralDensity, quad_tol: f64) -> Result<RcParameters> {
    j.validate()?;
    if !(quad_tol > 0.0 && quad_tol < 1.0) {
        return Err(Error::invalid("quad_tol", format!("must lie in (0, 1), got {quad_tol}")));
    }
    let first_moment = moment(|w| w * j.value(w), j, quad_tol)?;

    let c_inf = j.cubic_asymptote();
    let s = j.scale();
    // w^3 J(w) - c_inf w^2/(w^2 + s^2) decays as w^-2; the subtracted term has
    // finite part -c_inf s pi / 2.
    let regular = moment(
        |w| w * w * w * j.value(w) - c_inf * w * w / (w * w + s * s),
        j,
        quad_tol,
    )?;
    let third_moment = Integral {
        value: regular.value - c_inf * s * PI / 2.0,
        ..regular
    };
    if !(first_moment.value > 0.0) || !(third_moment.value > 0.0) {
        return Err(Error::invalid(
            "spectral density",
            format!(
                "moments must be positive (first {:e}, third {:e})",
                first_moment.value, third_moment.value
            ),
        ));
    }
    let omega = (third_moment.value / first_moment.value).sqrt();
    let lambda = (first_moment.value / omega).sqrt();
    Ok(RcParameters {
        lambda,
        omega,
        first_moment,
        third_moment,
    })
}
