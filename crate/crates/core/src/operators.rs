//! Spin and truncated-boson operators on the composite probe + reaction-coordinate space.
//!
//! The composite index of a basis state is `spin_config * M + boson_level`, where the
//! spin configuration is a big-endian bitstring (site 0 is the most significant bit)
//! and bit value 0 is the `sigma^z = +1` state. Tracing out the boson is therefore a
//! sum over the diagonal of each `M x M` block.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Default cap on the composite dimension `2^N * M`.
pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Index bookkeeping for `N` two-level spins tensored with an `M`-level boson mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    n_spins: usize,
    boson_levels: usize,
    total_dim: usize,
}

impl SpaceLayout {
    pub fn new(n_spins: usize, boson_levels: usize) -> Result<Self> {
        Self::with_cap(n_spins, boson_levels, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(n_spins: usize, boson_levels: usize, cap: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::invalid("n_spins", "need at least one spin"));
        }
        if boson_levels < 2 {
            return Err(Error::invalid(
                "boson_levels",
                format!("need at least 2 levels, got {boson_levels}"),
            ));
        }
        let total_dim = u32::try_from(n_spins)
            .ok()
            .and_then(|n| 1usize.checked_shl(n))
            .and_then(|p| p.checked_mul(boson_levels))
            .unwrap_or(usize::MAX);
        if total_dim > cap {
            return Err(Error::DimensionCap {
                dim: total_dim,
                cap,
                n_spins,
                boson_levels,
            });
        }
        Ok(Self {
            n_spins,
            boson_levels,
            total_dim,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn boson_levels(&self) -> usize {
        self.boson_levels
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Dimension of the spin factor, `2^N`.
    pub fn probe_dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn index(&self, spin_config: usize, boson_level: usize) -> usize {
        debug_assert!(spin_config < self.probe_dim() && boson_level < self.boson_levels);
        spin_config * self.boson_levels + boson_level
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.total_dim);
        (index / self.boson_levels, index % self.boson_levels)
    }

    /// Bit of `site` in a spin configuration (0 means `sigma^z = +1`).
    pub fn spin_bit(&self, spin_config: usize, site: usize) -> usize {
        (spin_config >> (self.n_spins - 1 - site)) & 1
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_spins {
            return Err(Error::invalid(
                "site",
                format!("site {site} out of range for {} spins", self.n_spins),
            ));
        }
        Ok(())
    }
}

/// Dense complex matrix carrying a Hermiticity guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(Mat<c64>);

/// Relative Hermiticity tolerance applied by [`HermitianMatrix::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

impl HermitianMatrix {
    /// Wraps `mat`, rejecting it when `max |A_ij - conj(A_ji)| > 1e-12 * max |A_ij|`.
    pub fn new(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        let residual = hermiticity_residual(mat.as_ref());
        let scale = max_abs(mat.as_ref());
        if residual > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self(mat))
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_trusted(mat: Mat<c64>) -> Self {
        debug_assert!(hermiticity_residual(mat.as_ref()) <= 1e-10 * max_abs(mat.as_ref()).max(1.0));
        Self(mat)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Mat::identity(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(diag[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.0
    }

    pub fn into_inner(self) -> Mat<c64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.0[(row, col)]
    }

    /// True when every entry has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.0[(i, j)].im == 0.0))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Real linear combination `self + coeff * other`.
    pub fn add_scaled(&self, coeff: f64, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let n = self.dim();
        Ok(Self(Mat::from_fn(n, n, |i, j| {
            self.0[(i, j)] + other.0[(i, j)] * coeff
        })))
    }

    pub fn scaled(&self, coeff: f64) -> HermitianMatrix {
        let n = self.dim();
        Self(Mat::from_fn(n, n, |i, j| self.0[(i, j)] * coeff))
    }
}

/// `max |A_ij - conj(A_ji)|`.
pub fn hermiticity_residual(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max(a[(i, j)].norm());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Image of the single-spin basis state `bit` under this Pauli matrix:
    /// returns `(amplitude, new_bit)`.
    fn act(self, bit: usize) -> (c64, usize) {
        match self {
            Axis::X => (c64::new(1.0, 0.0), bit ^ 1),
            Axis::Y => {
                if bit == 0 {
                    (c64::new(0.0, 1.0), 1)
                } else {
                    (c64::new(0.0, -1.0), 0)
                }
            }
            Axis::Z => {
                if bit == 0 {
                    (c64::new(1.0, 0.0), 0)
                } else {
                    (c64::new(-1.0, 0.0), 1)
                }
            }
        }
    }
}

/// Pauli matrix on `site` embedded in the composite space.
pub fn spin_operator(space: &SpaceLayout, site: usize, axis: Axis) -> Result<HermitianMatrix> {
    space.check_site(site)?;
    let mut out = Mat::zeros(space.total_dim(), space.total_dim());
    add_spin_term(&mut out, space, site, axis, BosonFactor::Identity, 1.0);
    Ok(HermitianMatrix::from_trusted(out))
}

/// Pauli matrix on `site` acting on the bare `2^N`-dimensional probe space.
pub fn probe_spin_operator(space: &SpaceLayout, site: usize, axis: Axis) -> Result<HermitianMatrix> {
    space.check_site(site)?;
    let probe = probe_layout(space);
    let mut out = Mat::zeros(space.probe_dim(), space.probe_dim());
    add_spin_term(&mut out, &probe, site, axis, BosonFactor::Identity, 1.0);
    Ok(HermitianMatrix::from_trusted(out))
}

/// The spin factor viewed as a layout with a one-level boson.
pub(crate) fn probe_layout(space: &SpaceLayout) -> SpaceLayout {
    SpaceLayout {
        n_spins: space.n_spins,
        boson_levels: 1,
        total_dim: space.probe_dim(),
    }
}

/// Boson-side factor of a product term `sigma_site^axis (x) B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BosonFactor {
    Identity,
    /// `a + a^dagger`
    Displacement,
}

/// Accumulates `coeff * sigma_site^axis (x) B` into `out` without forming either factor.
pub(crate) fn add_spin_term(
    out: &mut Mat<c64>,
    space: &SpaceLayout,
    site: usize,
    axis: Axis,
    boson: BosonFactor,
    coeff: f64,
) {
    let m = space.boson_levels;
    let shift = space.n_spins - 1 - site;
    for s in 0..space.probe_dim() {
        let bit = (s >> shift) & 1;
        let (amp, new_bit) = axis.act(bit);
        let t = (s & !(1 << shift)) | (new_bit << shift);
        let amp = amp * coeff;
        match boson {
            BosonFactor::Identity => {
                for k in 0..m {
                    out[(t * m + k, s * m + k)] += amp;
                }
            }
            BosonFactor::Displacement => {
                for k in 1..m {
                    let root = (k as f64).sqrt();
                    // a|k> = sqrt(k)|k-1>, a^dagger|k-1> = sqrt(k)|k>
                    out[(t * m + k - 1, s * m + k)] += amp * root;
                    out[(t * m + k, s * m + k - 1)] += amp * root;
                }
            }
        }
    }
}

/// Accumulates `coeff * (1 (x) a^dagger a)` into `out`.
pub(crate) fn add_number_term(out: &mut Mat<c64>, space: &SpaceLayout, coeff: f64) {
    let m = space.boson_levels;
    for s in 0..space.probe_dim() {
        for k in 0..m {
            out[(s * m + k, s * m + k)] += c64::new(coeff * k as f64, 0.0);
        }
    }
}

/// Truncated harmonic-oscillator operators embedded in the composite space.
#[derive(Debug, Clone)]
pub struct BosonOperators {
    /// `1 (x) a`, entries `sqrt(k)` on the boson superdiagonal.
    pub lowering: Mat<c64>,
    /// `1 (x) a^dagger a`
    pub number: HermitianMatrix,
    /// `1 (x) (a + a^dagger)`
    pub displacement: HermitianMatrix,
}

pub fn boson_operators(space: &SpaceLayout) -> BosonOperators {
    let n = space.total_dim();
    let m = space.boson_levels;
    let mut lowering = Mat::zeros(n, n);
    for s in 0..space.probe_dim() {
        for k in 1..m {
            lowering[(s * m + k - 1, s * m + k)] = c64::new((k as f64).sqrt(), 0.0);
        }
    }
    let mut number = Mat::zeros(n, n);
    add_number_term(&mut number, space, 1.0);
    let displacement = Mat::from_fn(n, n, |i, j| lowering[(i, j)] + lowering[(j, i)].conj());
    BosonOperators {
        lowering,
        number: HermitianMatrix::from_trusted(number),
        displacement: HermitianMatrix::from_trusted(displacement),
    }
}

/// Traces out the reaction coordinate: `B_{s,s'} = sum_k A_{(s,k),(s',k)}`.
pub fn partial_trace_rc(space: &SpaceLayout, a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    if a.nrows() != space.total_dim() || a.ncols() != space.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            actual: a.nrows().max(a.ncols()),
        });
    }
    let m = space.boson_levels;
    let p = space.probe_dim();
    Ok(Mat::from_fn(p, p, |s, t| {
        (0..m).map(|k| a[(s * m + k, t * m + k)]).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: MatRef<'_, c64>, b: MatRef<'_, c64>, tol: f64) -> bool {
        (&a.to_owned() - &b.to_owned()).norm_l2() <= tol
    }

    #[test]
    fn layout_dimensions() {
        assert_eq!(SpaceLayout::new(1, 50).unwrap().total_dim(), 100);
        assert_eq!(SpaceLayout::new(8, 30).unwrap().total_dim(), 7680);
        assert_eq!(SpaceLayout::new(2, 2000).unwrap().total_dim(), 8000);
    }

    #[test]
    fn layout_rejects_bad_arguments() {
        assert!(matches!(
            SpaceLayout::new(0, 10),
            Err(Error::InvalidParameter { name: "n_spins", .. })
        ));
        assert!(SpaceLayout::new(1, 1).is_err());
        assert!(matches!(
            SpaceLayout::new(10, 30),
            Err(Error::DimensionCap { dim: 30720, .. })
        ));
        assert!(SpaceLayout::new(200, 30).is_err());
        assert!(SpaceLayout::with_cap(10, 30, 40_000).is_ok());
    }

    #[test]
    fn index_maps_are_inverse() {
        let space = SpaceLayout::new(3, 7).unwrap();
        for idx in 0..space.total_dim() {
            let (s, k) = space.split(idx);
            assert_eq!(space.index(s, k), idx);
        }
        assert_eq!(space.spin_bit(0b100, 0), 1);
        assert_eq!(space.spin_bit(0b100, 2), 0);
    }

    #[test]
    fn sigma_z_single_spin_ordering() {
        let space = SpaceLayout::new(1, 2).unwrap();
        let z = spin_operator(&space, 0, Axis::Z).unwrap();
        let expected = HermitianMatrix::from_diagonal(&[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(z, expected);
    }

    #[test]
    fn pauli_involution_traceless_and_algebra() {
        let space = SpaceLayout::new(3, 3).unwrap();
        let n = space.total_dim();
        let id = Mat::<c64>::identity(n, n);
        for site in 0..3 {
            let x = spin_operator(&space, site, Axis::X).unwrap();
            let y = spin_operator(&space, site, Axis::Y).unwrap();
            let z = spin_operator(&space, site, Axis::Z).unwrap();
            for op in [&x, &y, &z] {
                assert!(close((op.matrix() * op.matrix()).as_ref(), id.as_ref(), 1e-14));
                assert_eq!(op.trace(), 0.0);
            }
            // sigma^x sigma^y = i sigma^z
            let xy = x.matrix() * y.matrix();
            let iz = Mat::from_fn(n, n, |i, j| z.get(i, j) * c64::new(0.0, 1.0));
            assert!(close(xy.as_ref(), iz.as_ref(), 1e-14));
        }
    }

    #[test]
    fn disjoint_sites_commute() {
        let space = SpaceLayout::new(3, 2).unwrap();
        for (a, b) in [(Axis::X, Axis::Y), (Axis::Z, Axis::X), (Axis::Y, Axis::Y)] {
            let p = spin_operator(&space, 0, a).unwrap();
            let q = spin_operator(&space, 2, b).unwrap();
            let comm = &(p.matrix() * q.matrix()) - &(q.matrix() * p.matrix());
            assert_eq!(comm.norm_l2(), 0.0);
        }
    }

    #[test]
    fn site_out_of_range() {
        let space = SpaceLayout::new(2, 2).unwrap();
        assert!(spin_operator(&space, 2, Axis::X).is_err());
    }

    #[test]
    fn boson_truncation_defect() {
        let m = 6;
        let space = SpaceLayout::new(1, m).unwrap();
        let ops = boson_operators(&space);
        let a = &ops.lowering;
        let adag = a.adjoint().to_owned();
        let comm = &(a * &adag) - &(&adag * a);
        let n = space.total_dim();
        for i in 0..n {
            for j in 0..n {
                let (_, k) = space.split(i);
                let expected = if i != j {
                    0.0
                } else if k == m - 1 {
                    -((m - 1) as f64)
                } else {
                    1.0
                };
                assert!((comm[(i, j)] - c64::new(expected, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn two_level_number_spectrum() {
        let space = SpaceLayout::new(1, 2).unwrap();
        let ops = boson_operators(&space);
        let diag: Vec<f64> = (0..4).map(|i| ops.number.get(i, i).re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 0.0, 1.0]);
        assert!(hermiticity_residual(ops.displacement.as_ref()) == 0.0);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let space = SpaceLayout::new(1, 3).unwrap();
        let spin = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(0.7, 0.0),
            (1, 1) => c64::new(0.3, 0.0),
            (0, 1) => c64::new(0.1, 0.2),
            _ => c64::new(0.1, -0.2),
        });
        let boson = [0.5, 0.3, 0.2];
        let product = Mat::from_fn(6, 6, |i, j| {
            let (s, k) = space.split(i);
            let (t, l) = space.split(j);
            if k == l {
                spin[(s, t)] * boson[k]
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let reduced = partial_trace_rc(&space, product.as_ref()).unwrap();
        assert!(close(reduced.as_ref(), spin.as_ref(), 1e-15));
    }

    #[test]
    fn partial_trace_of_maximally_correlated_state() {
        let space = SpaceLayout::new(1, 2).unwrap();
        // (|0,0> + |1,1>)/sqrt(2): composite indices 0 and 3
        let mut rho = Mat::<c64>::zeros(4, 4);
        for i in [0, 3] {
            for j in [0, 3] {
                rho[(i, j)] = c64::new(0.5, 0.0);
            }
        }
        let reduced = partial_trace_rc(&space, rho.as_ref()).unwrap();
        let half = Mat::from_fn(2, 2, |i, j| c64::new(if i == j { 0.5 } else { 0.0 }, 0.0));
        assert!(close(reduced.as_ref(), half.as_ref(), 1e-15));
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let space = SpaceLayout::new(1, 3).unwrap();
        let a = Mat::<c64>::zeros(4, 4);
        assert!(matches!(
            partial_trace_rc(&space, a.as_ref()),
            Err(Error::DimensionMismatch { expected: 6, .. })
        ));
    }

    #[test]
    fn hermitian_matrix_contract() {
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 1)] = c64::new(1.0, 1.0);
        m[(1, 0)] = c64::new(1.0, -1.0);
        assert!(HermitianMatrix::new(m.clone()).is_ok());
        m[(1, 0)] = c64::new(1.0, 1.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }
}
