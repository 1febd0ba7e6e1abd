//! Gibbs states of the extended system and the reduced probe state.
//!
//! One eigendecomposition of `H_S` serves every temperature: the Gibbs state is
//! `V diag(w) V^dagger` and its beta-derivative is `V diag(w (<E> - E)) V^dagger`,
//! both traced over the reaction coordinate without forming the full state.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors, EvdError};
use faer::diag::Diag;
use faer::{c64, Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::operators::{HermitianMatrix, SpaceLayout};

/// Eigenvalues below this (absolute) are treated as genuine negativity rather
/// than roundoff.
pub const POPULATION_FLOOR: f64 = -1e-12;

/// Allowed deviation of `trace(rho)` from one and of `trace(drho)` from zero.
pub const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum EigenBasis {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    basis: EigenBasis,
    params: Option<ModelParams>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Model parameters the decomposed Hamiltonian was built from, if known.
    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = Some(params);
        self
    }

    /// Eigenvector matrix (columns), materialized as complex.
    pub fn eigenvectors(&self) -> Mat<c64> {
        match &self.basis {
            EigenBasis::Real(v) => {
                Mat::from_fn(v.nrows(), v.ncols(), |i, j| c64::new(v[(i, j)], 0.0))
            }
            EigenBasis::Complex(v) => v.clone(),
        }
    }

    /// `||V diag(E) V^dagger - H||_F / ||H||_F`.
    pub fn reconstruction_residual(&self, h: &HermitianMatrix) -> f64 {
        let v = self.eigenvectors();
        let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        let rebuilt = &scaled * v.adjoint();
        let norm = h.matrix().norm_l2();
        let diff = (&rebuilt - h.matrix()).norm_l2();
        if norm == 0.0 {
            diff
        } else {
            diff / norm
        }
    }

    /// `||V^dagger V - 1||_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let v = self.eigenvectors();
        let gram = v.adjoint() * &v;
        let n = v.ncols();
        (&gram - &Mat::<c64>::identity(n, n)).norm_l2()
    }

    /// `sum_i coeffs[i] Tr_RC |v_i><v_i|` over the listed columns.
    fn traced_sum(&self, space: &SpaceLayout, columns: &[usize], coeffs: &[&[f64]]) -> Vec<Mat<c64>> {
        let p = space.probe_dim();
        let m = space.boson_levels();
        let kept = columns.len();
        // sequential so that results do not depend on the worker pool size
        let par = Par::Seq;
        match &self.basis {
            EigenBasis::Real(v) => {
                let mut acc: Vec<Mat<f64>> = coeffs.iter().map(|_| Mat::zeros(p, p)).collect();
                for k in 0..m {
                    let block = Mat::from_fn(p, kept, |s, j| v[(s * m + k, columns[j])]);
                    for (out, c) in acc.iter_mut().zip(coeffs) {
                        let weighted = Mat::from_fn(p, kept, |s, j| block[(s, j)] * c[columns[j]]);
                        triangular::matmul(
                            out.as_mut(),
                            BlockStructure::TriangularLower,
                            Accum::Add,
                            weighted.as_ref(),
                            BlockStructure::Rectangular,
                            block.transpose(),
                            BlockStructure::Rectangular,
                            1.0,
                            par,
                        );
                    }
                }
                acc.into_iter()
                    .map(|a| Mat::from_fn(p, p, |i, j| c64::new(a[(i.max(j), i.min(j))], 0.0)))
                    .collect()
            }
            EigenBasis::Complex(v) => {
                let mut acc: Vec<Mat<c64>> = coeffs.iter().map(|_| Mat::zeros(p, p)).collect();
                for k in 0..m {
                    let block = Mat::from_fn(p, kept, |s, j| v[(s * m + k, columns[j])]);
                    for (out, c) in acc.iter_mut().zip(coeffs) {
                        let weighted = Mat::from_fn(p, kept, |s, j| block[(s, j)] * c[columns[j]]);
                        triangular::matmul(
                            out.as_mut(),
                            BlockStructure::TriangularLower,
                            Accum::Add,
                            weighted.as_ref(),
                            BlockStructure::Rectangular,
                            block.adjoint(),
                            BlockStructure::Rectangular,
                            c64::new(1.0, 0.0),
                            par,
                        );
                    }
                }
                acc.into_iter().map(|a| lower_to_hermitian(a.as_ref())).collect()
            }
        }
    }

    fn check_space(&self, space: &SpaceLayout) -> Result<()> {
        if self.dim() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

/// Completes a matrix of which only the lower triangle is meaningful.
fn lower_to_hermitian(a: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => a[(i, j)],
        std::cmp::Ordering::Less => a[(j, i)].conj(),
        std::cmp::Ordering::Equal => c64::new(a[(i, i)].re, 0.0),
    })
}

/// Full eigendecomposition. Real-symmetric inputs take the real solver path.
pub fn eigendecompose(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = h.dim();
    let eig_err = |reason: String| Error::Eigensolver { dim: n, reason };
    let finite = (0..n).all(|j| (0..n).all(|i| {
        let z = h.get(i, j);
        z.re.is_finite() && z.im.is_finite()
    }));
    if !finite {
        return Err(eig_err("non-finite matrix entry".into()));
    }
    let (eigenvalues, basis) = if h.is_real() {
        let real = Mat::from_fn(n, n, |i, j| h.get(i, j).re);
        let evd = real
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| eig_err(format!("{e:?}")))?;
        let values: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
        (values, EigenBasis::Real(evd.U().to_owned()))
    } else {
        let evd = h
            .matrix()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| eig_err(format!("{e:?}")))?;
        let values: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
        (values, EigenBasis::Complex(evd.U().to_owned()))
    };
    if let Some(bad) = eigenvalues.iter().find(|e| !e.is_finite()) {
        return Err(eig_err(format!("non-finite eigenvalue {bad}")));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        basis,
        params: None,
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || beta.is_infinite() {
        return Err(Error::invalid("beta", format!("must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// Normalized Boltzmann weights, shifted by the minimum energy before exponentiation.
pub fn gibbs_weights(eigenvalues: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    if eigenvalues.is_empty() {
        return Err(Error::invalid("eigenvalues", "empty spectrum"));
    }
    if beta == 0.0 {
        let u = 1.0 / eigenvalues.len() as f64;
        return Ok(vec![u; eigenvalues.len()]);
    }
    let e_min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = eigenvalues.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    Ok(w)
}

/// Eigendecomposition of a small Hermitian matrix on the calling thread, so the
/// result does not depend on the size of the enclosing worker pool.
fn eigh_sequential(a: MatRef<'_, c64>) -> std::result::Result<(Vec<f64>, Mat<c64>), EvdError> {
    let n = a.nrows();
    let mut s = Diag::<c64>::zeros(n);
    let mut u = Mat::<c64>::zeros(n, n);
    let scratch = evd::self_adjoint_evd_scratch::<c64>(n, ComputeEigenvectors::Yes, Par::Seq, Default::default());
    let mut buf = MemBuffer::new(scratch);
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )?;
    let values = s.column_vector().iter().map(|z| z.re).collect();
    Ok((values, u))
}

/// Reduced probe state at one inverse temperature, with its exact beta-derivative
/// and the spectral data of `rho` used downstream.
#[derive(Debug, Clone)]
pub struct ProbeState {
    beta: f64,
    rho: HermitianMatrix,
    drho_dbeta: HermitianMatrix,
    populations: Vec<f64>,
    eigenvectors: Mat<c64>,
}

impl ProbeState {
    /// Validates trace, positivity and Hermiticity; eigenvalues of `rho` in
    /// `[-1e-12, 0)` are clipped to zero.
    pub fn new(beta: f64, rho: Mat<c64>, drho_dbeta: Mat<c64>) -> Result<Self> {
        check_beta(beta)?;
        if rho.nrows() != drho_dbeta.nrows() || rho.ncols() != drho_dbeta.ncols() {
            return Err(Error::DimensionMismatch {
                expected: rho.nrows(),
                actual: drho_dbeta.nrows(),
            });
        }
        let rho = HermitianMatrix::new(rho)?;
        let drho_dbeta = HermitianMatrix::new(drho_dbeta)?;
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid("rho", format!("trace {tr} differs from 1")));
        }
        let dtr = drho_dbeta.trace();
        if dtr.abs() > TRACE_TOL {
            return Err(Error::invalid("drho_dbeta", format!("trace {dtr:e} differs from 0")));
        }
        let (values, eigenvectors) = eigh_sequential(rho.as_ref()).map_err(|e| Error::Eigensolver {
            dim: rho.dim(),
            reason: format!("{e:?}"),
        })?;
        let mut populations = Vec::with_capacity(rho.dim());
        for &p in &values {
            if p < POPULATION_FLOOR || !p.is_finite() {
                return Err(Error::NegativePopulation { value: p });
            }
            populations.push(p.max(0.0));
        }
        Ok(Self {
            beta,
            rho,
            drho_dbeta,
            populations,
            eigenvectors,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn drho_dbeta(&self) -> &HermitianMatrix {
        &self.drho_dbeta
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// Eigenvalues of `rho`, ascending, clipped at zero.
    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    /// Eigenvectors of `rho` (columns), matching [`populations`](Self::populations).
    pub fn eigenvectors(&self) -> MatRef<'_, c64> {
        self.eigenvectors.as_ref()
    }

    pub fn purity(&self) -> f64 {
        self.populations.iter().map(|p| p * p).sum()
    }

    /// Largest off-diagonal modulus of `rho` in the spin basis.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    worst = worst.max(self.rho.get(i, j).norm());
                }
            }
        }
        worst
    }
}

/// `rho_p = Tr_RC[e^{-beta H_S}] / Z_S` and its exact beta-derivative.
pub fn reduced_probe_state(
    decomp: &SpectralDecomposition,
    beta: f64,
    space: &SpaceLayout,
) -> Result<ProbeState> {
    decomp.check_space(space)?;
    let w = gibbs_weights(&decomp.eigenvalues, beta)?;
    let mean: f64 = w.iter().zip(&decomp.eigenvalues).map(|(w, e)| w * e).sum();
    let dw: Vec<f64> = w
        .iter()
        .zip(&decomp.eigenvalues)
        .map(|(w, e)| w * (mean - e))
        .collect();
    let columns: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let mut parts = decomp.traced_sum(space, &columns, &[&w, &dw]).into_iter();
    let rho = parts.next().expect("two contractions");
    let drho = parts.next().expect("two contractions");
    ProbeState::new(beta, rho, drho)
}

fn reduced_rho(decomp: &SpectralDecomposition, beta: f64, space: &SpaceLayout) -> Result<Mat<c64>> {
    let w = gibbs_weights(&decomp.eigenvalues, beta)?;
    let columns: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    Ok(decomp.traced_sum(space, &columns, &[&w]).remove(0))
}

/// Central difference `[rho_p(beta + h) - rho_p(beta - h)] / 2h`.
pub fn finite_difference_drho(
    decomp: &SpectralDecomposition,
    beta: f64,
    space: &SpaceLayout,
    h: f64,
) -> Result<Mat<c64>> {
    decomp.check_space(space)?;
    if !(h > 0.0) || !(beta - h > 0.0) {
        return Err(Error::invalid("h", format!("need h > 0 and beta - h > 0 (beta={beta}, h={h})")));
    }
    let plus = reduced_rho(decomp, beta + h, space)?;
    let minus = reduced_rho(decomp, beta - h, space)?;
    let scale = 1.0 / (2.0 * h);
    Ok(Mat::from_fn(plus.nrows(), plus.ncols(), |i, j| {
        (plus[(i, j)] - minus[(i, j)]) * scale
    }))
}

/// Canonical Gibbs state of the bare probe, `e^{-beta H_p} / Z_p`, with its derivative.
pub fn canonical_probe_state(space: &SpaceLayout, delta: f64, beta: f64) -> Result<ProbeState> {
    let n = space.n_spins();
    let energies: Vec<f64> = (0..space.probe_dim())
        .map(|s| {
            let down = s.count_ones() as f64;
            delta * (n as f64 - 2.0 * down)
        })
        .collect();
    let w = gibbs_weights(&energies, beta)?;
    let mean: f64 = w.iter().zip(&energies).map(|(w, e)| w * e).sum();
    let dw: Vec<f64> = w.iter().zip(&energies).map(|(w, e)| w * (mean - e)).collect();
    let rho = HermitianMatrix::from_diagonal(&w).into_inner();
    let drho = HermitianMatrix::from_diagonal(&dw).into_inner();
    ProbeState::new(beta, rho, drho)
}

#[cfg(test)]
fn hermiticity_ok(a: MatRef<'_, c64>) -> bool {
    crate::operators::hermiticity_residual(a) <= 1e-12 * crate::operators::max_abs(a).max(f64::MIN_POSITIVE)
}
