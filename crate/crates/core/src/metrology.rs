//! Symmetric logarithmic derivative, quantum Fisher information and the
//! signal-to-noise ratios of the optimal and suboptimal measurement schemes.
//!
//! All Fisher-information sums are evaluated in the eigenbasis of `rho`: in the
//! spin basis, terms of order `p_min` are lost to roundoff once the excited
//! populations fall below machine precision, which happens routinely at low T.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{probe_layout, HermitianMatrix, SpaceLayout};
use crate::model::bare_probe_hamiltonian;
use crate::thermal::{ProbeState, POPULATION_FLOOR};

/// Support cutoff relative to the largest population.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Below this, a standard deviation or susceptibility counts as vanishing.
pub const VANISHING: f64 = 1e-14;

fn support_threshold(populations: &[f64]) -> f64 {
    SUPPORT_CUTOFF * populations.iter().copied().fold(0.0, f64::max)
}

/// `U^dagger A U`.
fn to_eigenbasis(u: MatRef<'_, c64>, a: MatRef<'_, c64>) -> Mat<c64> {
    u.adjoint() * a * u
}

/// SLD matrix elements in the eigenbasis of `rho`.
fn sld_eigenbasis(state: &ProbeState) -> Mat<c64> {
    let p = state.populations();
    let eps = support_threshold(p);
    let d = to_eigenbasis(state.eigenvectors(), state.drho_dbeta().as_ref());
    Mat::from_fn(p.len(), p.len(), |i, j| {
        let s = p[i] + p[j];
        if s > eps {
            d[(i, j)] * (2.0 / s)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Hermitian solution of `d rho / d beta = {L, rho} / 2` on the support of `rho`,
/// returned in the spin basis.
pub fn sld(state: &ProbeState) -> HermitianMatrix {
    let u = state.eigenvectors();
    let l = u * sld_eigenbasis(state) * u.adjoint();
    let n = l.nrows();
    HermitianMatrix::from_trusted(Mat::from_fn(n, n, |i, j| (l[(i, j)] + l[(j, i)].conj()) * 0.5))
}

/// `||d rho - {L, rho}/2||_F / ||d rho||_F`, restricted to eigenpairs of `rho`
/// with `p_i + p_j` above the support cutoff.
pub fn lyapunov_residual(state: &ProbeState, l: &HermitianMatrix) -> Result<f64> {
    check_dim(state, l)?;
    let rho = state.rho().matrix();
    let drho = state.drho_dbeta().matrix();
    let anti = &(l.matrix() * rho) + &(rho * l.matrix());
    let residual = Mat::from_fn(anti.nrows(), anti.ncols(), |i, j| drho[(i, j)] - anti[(i, j)] * 0.5);
    let r = to_eigenbasis(state.eigenvectors(), residual.as_ref());
    let p = state.populations();
    let eps = support_threshold(p);
    let mut sq = 0.0;
    for j in 0..p.len() {
        for i in 0..p.len() {
            if p[i] + p[j] > eps {
                sq += r[(i, j)].norm_sqr();
            }
        }
    }
    let scale = drho.norm_l2();
    Ok(if scale == 0.0 { sq.sqrt() } else { sq.sqrt() / scale })
}

fn check_dim(state: &ProbeState, o: &HermitianMatrix) -> Result<()> {
    if o.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: o.dim(),
        });
    }
    Ok(())
}

/// `F = Tr[L^2 rho]`, evaluated as `sum_ij |L_ij|^2 p_i` in the eigenbasis of `rho`.
pub fn qfi(state: &ProbeState, l: &HermitianMatrix) -> Result<f64> {
    check_dim(state, l)?;
    let lt = to_eigenbasis(state.eigenvectors(), l.as_ref());
    let p = state.populations();
    let mut f = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            f += lt[(i, j)].norm_sqr() * p[i];
        }
    }
    Ok(f)
}

/// Off-diagonal elements of `rho` and `d rho` below this fraction of their
/// largest diagonal element count as roundoff.
pub const DIAGONAL_TOL: f64 = 1e-13;

/// `F = sum_{p_i + p_j > eps} 2 |(d rho)_ij|^2 / (p_i + p_j)` without forming the SLD.
///
/// When `rho` and `d rho` are diagonal in the spin basis to working precision,
/// the sum reduces to `sum_{p_k > 0} (d rho)_kk^2 / p_k` over the diagonal
/// entries. Those carry full relative accuracy even for populations far below
/// the eigenbasis support cutoff, so no cutoff is applied on that branch.
pub fn qfi_spectral(state: &ProbeState) -> f64 {
    if let Some(f) = diagonal_fisher(state) {
        return f;
    }
    let p = state.populations();
    let eps = support_threshold(p);
    let d = to_eigenbasis(state.eigenvectors(), state.drho_dbeta().as_ref());
    let mut f = 0.0;
    for j in 0..p.len() {
        for i in 0..p.len() {
            let s = p[i] + p[j];
            if s > eps {
                f += 2.0 * d[(i, j)].norm_sqr() / s;
            }
        }
    }
    f
}

fn diagonal_fisher(state: &ProbeState) -> Option<f64> {
    let n = state.dim();
    let rho = state.rho();
    let d = state.drho_dbeta();
    let rho_scale = (0..n).map(|i| rho.get(i, i).re.abs()).fold(0.0, f64::max);
    let d_scale = (0..n).map(|i| d.get(i, i).re.abs()).fold(0.0, f64::max);
    for j in 0..n {
        for i in 0..n {
            if i != j && (rho.get(i, j).norm() > DIAGONAL_TOL * rho_scale || d.get(i, j).norm() > DIAGONAL_TOL * d_scale)
            {
                return None;
            }
        }
    }
    Some(
        (0..n)
            .map(|k| (rho.get(k, k).re, d.get(k, k).re))
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, dp)| dp * dp / p)
            .sum(),
    )
}

/// `sqrt(m beta^2 F)`.
pub fn snr_from_qfi(beta: f64, fisher: f64, shots: u32) -> Result<f64> {
    if shots < 1 {
        return Err(Error::invalid("m", "need at least one measurement"));
    }
    if !(fisher >= 0.0) {
        return Err(Error::invalid("F", format!("Fisher information must be >= 0, got {fisher}")));
    }
    Ok((shots as f64 * beta * beta * fisher).sqrt())
}

/// Heat-capacity bound of `n` uncorrelated spins, `sqrt(N) 2 x e^x / (1 + e^{2x})` with `x = delta / T`.
pub fn weak_coupling_snr(n_spins: usize, delta: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", format!("must be > 0, got {temperature}")));
    }
    let x = (delta / temperature).abs();
    // 2 x e^{-x} / (1 + e^{-2x}) avoids overflow for large x
    let single = 2.0 * x * (-x).exp() / (1.0 + (-2.0 * x).exp());
    Ok((n_spins as f64).sqrt() * single)
}

/// Zeroes every off-diagonal element in the spin basis.
pub fn dephase(rho: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        if i == j {
            rho[(i, i)]
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Classical Fisher information of a population family, `sum_{p_k > eps} dp_k^2 / p_k`.
pub fn classical_fi_diagonal(p: &[f64], dp: &[f64]) -> Result<f64> {
    if p.len() != dp.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: dp.len(),
        });
    }
    if let Some(&bad) = p.iter().find(|&&x| x < POPULATION_FLOOR || !x.is_finite()) {
        return Err(Error::NegativePopulation { value: bad });
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("p", format!("populations sum to {total}")));
    }
    let eps = support_threshold(p);
    Ok(p
        .iter()
        .zip(dp)
        .filter(|(p, _)| **p > eps)
        .map(|(p, d)| d * d / p)
        .sum())
}

/// `T |chi_T(O)| / delta O` with `chi_T = d<O>/dT = -beta^2 Tr[d rho/d beta O]`.
pub fn observable_snr(state: &ProbeState, o: &HermitianMatrix) -> Result<f64> {
    check_dim(state, o)?;
    let beta = state.beta();
    let p = state.populations();
    let ot = to_eigenbasis(state.eigenvectors(), o.as_ref());
    let dt = to_eigenbasis(state.eigenvectors(), state.drho_dbeta().as_ref());
    let mean: f64 = p.iter().enumerate().map(|(i, p)| p * ot[(i, i)].re).sum();
    let mut variance = 0.0;
    let mut slope = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            let centered = if i == j { ot[(i, j)] - mean } else { ot[(i, j)] };
            variance += p[i] * centered.norm_sqr();
            slope += (dt[(i, j)] * ot[(j, i)]).re;
        }
    }
    let chi = -beta * beta * slope;
    let spread = variance.max(0.0).sqrt();
    if spread <= VANISHING {
        if chi.abs() <= VANISHING {
            return Ok(0.0);
        }
        return Err(Error::DegenerateObservable {
            variance,
            susceptibility: chi,
        });
    }
    Ok(chi.abs() / (beta * spread))
}

/// `sum_k sigma^z_k` on the bare probe space.
pub fn total_polarization(space: &SpaceLayout) -> HermitianMatrix {
    bare_probe_hamiltonian(&probe_layout(space), 1.0)
}

/// `sum_{i != j} |rho_ij|` in the spin basis.
pub fn coherence_l1(rho: MatRef<'_, c64>) -> f64 {
    let mut total = 0.0;
    for j in 0..rho.ncols() {
        for i in 0..rho.nrows() {
            if i != j {
                total += rho[(i, j)].norm();
            }
        }
    }
    total
}

/// Figures of merit of one probe state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub temperature: f64,
    pub snr_optimal: f64,
    pub snr_dephased: f64,
    pub snr_polarization: f64,
    pub snr_weak_reference: f64,
    pub coherence_l1: f64,
}

/// Evaluates every measurement scheme on `state`.
pub fn snr_report(state: &ProbeState, space: &SpaceLayout, delta: f64) -> Result<SnrReport> {
    let beta = state.beta();
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "SNR needs a finite temperature"));
    }
    if state.dim() != space.probe_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.probe_dim(),
            actual: state.dim(),
        });
    }
    let temperature = 1.0 / beta;
    let n = state.dim();
    let p: Vec<f64> = (0..n).map(|i| state.rho().get(i, i).re.max(0.0)).collect();
    let dp: Vec<f64> = (0..n).map(|i| state.drho_dbeta().get(i, i).re).collect();
    Ok(SnrReport {
        temperature,
        snr_optimal: snr_from_qfi(beta, qfi_spectral(state), 1)?,
        snr_dephased: snr_from_qfi(beta, classical_fi_diagonal(&p, &dp)?, 1)?,
        snr_polarization: observable_snr(state, &total_polarization(space))?,
        snr_weak_reference: weak_coupling_snr(space.n_spins(), delta, temperature)?,
        coherence_l1: coherence_l1(state.rho().as_ref()),
    })
}
