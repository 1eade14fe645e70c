//! Complex linear-algebra substrate: pure states, Hermitian observables and
//! their spectral data, occupation analysis, and qubit Bloch/Rabi maps.
//!
//! Units are such that hbar = 1. The Pauli operators follow the convention
//! `sigma_z = |1><1| - |0><0|`, so `|0>` sits at the south pole of the Bloch
//! sphere.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances::{Tolerances, TOL_NORM};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Unit-norm pure state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    /// Normalizes `amps` into a state. Fails on zero norm or dim < 2.
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension(amps.len()));
        }
        let norm = amps.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let amps = amps.unscale(norm);
        debug_assert!((amps.norm() - 1.0).abs() <= TOL_NORM);
        Ok(StateVector { amps })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(CVector::from_iterator(
            amps.len(),
            amps.iter().map(|&a| C64::new(a, 0.0)),
        ))
    }

    /// Computational basis vector `|k>`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[k] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// The same ray with an extra global phase `e^{i alpha}`.
    pub fn with_phase(&self, alpha: f64) -> StateVector {
        StateVector {
            amps: self.amps.map(|a| a * C64::from_polar(1.0, alpha)),
        }
    }

    pub fn projector(&self) -> Projector {
        Projector {
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

/// Rank-one orthogonal projector `|psi><psi|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: CMatrix,
}

impl Projector {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Largest entrywise deviation between two projectors.
    pub fn distance_max(&self, other: &Projector) -> f64 {
        (&self.matrix - &other.matrix).camax()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// Hermitian matrix together with its spectral decomposition, eigenvalues
/// in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    matrix: CMatrix,
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
}

/// Largest entry of `|M - M^dagger|`.
pub fn max_asymmetry(matrix: &CMatrix) -> f64 {
    (matrix - matrix.adjoint()).camax()
}

/// Diagonalizes a Hermitian matrix. Rejects inputs whose asymmetry exceeds
/// the default Hermiticity tolerance.
pub fn spectral_decompose(matrix: CMatrix) -> Result<HermitianObservable> {
    spectral_decompose_with(matrix, Tolerances::default().hermitian)
}

pub fn spectral_decompose_with(matrix: CMatrix, tol_hermitian: f64) -> Result<HermitianObservable> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let asym = max_asymmetry(&matrix);
    if !(asym <= tol_hermitian) {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    // Symmetrize so that rounding-level asymmetry does not leak into the
    // eigensolver.
    let matrix = (&matrix + matrix.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(matrix.clone());

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(rows, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = CMatrix::zeros(rows, rows);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    Ok(HermitianObservable {
        matrix,
        eigenvalues,
        eigenvectors,
    })
}

impl HermitianObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        spectral_decompose(matrix)
    }

    /// Real diagonal observable.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        spectral_decompose(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Largest entrywise error of `V diag(lambda) V^dagger` against the matrix.
    pub fn reconstruction_error(&self) -> f64 {
        let d = self.eigenvalues.map(|v| C64::new(v, 0.0));
        let rebuilt = &self.eigenvectors * CMatrix::from_diagonal(&d) * self.eigenvectors.adjoint();
        (rebuilt - &self.matrix).camax()
    }

    /// Largest entrywise error of `V^dagger V` against the identity.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        (self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(n, n)).camax()
    }

    /// Groups eigenvalue indices whose consecutive gaps are within `tol`.
    /// Each group is reported with its mean eigenvalue.
    pub fn levels(&self, tol: f64) -> Vec<(f64, Vec<usize>)> {
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        for (k, &val) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some((_, members)) if val - prev <= tol => members.push(k),
                _ => groups.push((0.0, vec![k])),
            }
            prev = val;
        }
        for (energy, members) in groups.iter_mut() {
            *energy = members.iter().map(|&k| self.eigenvalues[k]).sum::<f64>() / members.len() as f64;
        }
        groups
    }

    /// Amplitudes of `psi` in the eigenbasis, `V^dagger psi`.
    pub fn eigen_coefficients(&self, psi: &StateVector) -> Result<CVector> {
        psi.check_dim(self.dim())?;
        Ok(self.eigenvectors.ad_mul(psi.amplitudes()))
    }

    /// `e^{-i H t}` as a dense matrix.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let phases = self.eigenvalues.map(|e| C64::from_polar(1.0, -e * t));
        let scaled = CMatrix::from_fn(self.dim(), self.dim(), |r, c| self.eigenvectors[(r, c)] * phases[c]);
        scaled * self.eigenvectors.adjoint()
    }

    /// Unitary conjugation `U H U^dagger`; the eigenvectors are rotated
    /// rather than recomputed.
    pub fn conjugated(&self, unitary: &CMatrix) -> HermitianObservable {
        let eigenvectors = unitary * &self.eigenvectors;
        let d = self.eigenvalues.map(|v| C64::new(v, 0.0));
        let matrix = &eigenvectors * CMatrix::from_diagonal(&d) * eigenvectors.adjoint();
        let matrix = (&matrix + matrix.adjoint()).unscale(2.0);
        HermitianObservable {
            matrix,
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors,
        }
    }
}

/// One distinct occupied energy level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub occupation: f64,
}

/// Occupied levels of a state and the derived reference energies.
///
/// `eps_bar` is the largest occupied energy strictly below the expected
/// energy and `eps_underbar` the smallest strictly above; both are `None`
/// for a stationary state.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationProfile {
    pub levels: Vec<Level>,
    pub expected_energy: f64,
    pub eps_bar: Option<f64>,
    pub eps_underbar: Option<f64>,
    pub eps_min: f64,
    pub eps_max: f64,
}

impl OccupationProfile {
    pub fn is_stationary(&self) -> bool {
        self.eps_bar.is_none() || self.eps_underbar.is_none()
    }

    pub fn total_occupation(&self) -> f64 {
        self.levels.iter().map(|l| l.occupation).sum()
    }

    pub fn occupied_energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.iter().map(|l| l.energy)
    }

    /// `<H - eps_min><eps_max - H>`, the Bhatia-Davies upper bound on the variance.
    pub fn bhatia_davies_product(&self) -> f64 {
        ((self.expected_energy - self.eps_min) * (self.eps_max - self.expected_energy)).max(0.0)
    }
}

pub fn occupation_profile(h: &HermitianObservable, psi: &StateVector, tol_occ: f64) -> Result<OccupationProfile> {
    let tol = Tolerances {
        occupation: tol_occ,
        ..Tolerances::default()
    };
    occupation_profile_with(h, psi, &tol)
}

pub fn occupation_profile_with(
    h: &HermitianObservable,
    psi: &StateVector,
    tol: &Tolerances,
) -> Result<OccupationProfile> {
    let coeffs = h.eigen_coefficients(psi)?;
    let levels: Vec<Level> = h
        .levels(tol.degenerate)
        .into_iter()
        .map(|(energy, members)| Level {
            energy,
            occupation: members.iter().map(|&k| coeffs[k].norm_sqr()).sum(),
        })
        .filter(|l| l.occupation > tol.occupation)
        .collect();

    let expected_energy = expectation(h, psi)?;
    let eps_bar = levels
        .iter()
        .rev()
        .map(|l| l.energy)
        .find(|&e| e < expected_energy - tol.equality);
    let eps_underbar = levels
        .iter()
        .map(|l| l.energy)
        .find(|&e| e > expected_energy + tol.equality);
    // A normalized state always has at least one level above tol_occ.
    let eps_min = levels.first().map_or(expected_energy, |l| l.energy);
    let eps_max = levels.last().map_or(expected_energy, |l| l.energy);

    Ok(OccupationProfile {
        levels,
        expected_energy,
        eps_bar,
        eps_underbar,
        eps_min,
        eps_max,
    })
}

/// `<psi|H|psi>`.
pub fn expectation(h: &HermitianObservable, psi: &StateVector) -> Result<f64> {
    expectation_matrix(h.matrix(), psi)
}

pub(crate) fn expectation_matrix(h: &CMatrix, psi: &StateVector) -> Result<f64> {
    psi.check_dim(h.nrows())?;
    Ok(psi.amplitudes().dotc(&(h * psi.amplitudes())).re)
}

/// Energy variance `<H^2> - <H>^2`, evaluated as `||(H - <H>) psi||^2` so the
/// result is never negative.
pub fn variance(h: &HermitianObservable, psi: &StateVector) -> Result<f64> {
    variance_matrix(h.matrix(), psi)
}

pub(crate) fn variance_matrix(h: &CMatrix, psi: &StateVector) -> Result<f64> {
    psi.check_dim(h.nrows())?;
    let hpsi = h * psi.amplitudes();
    let mean = psi.amplitudes().dotc(&hpsi).re;
    let centered = hpsi - psi.amplitudes() * C64::new(mean, 0.0);
    Ok(centered.norm_squared())
}

/// Energy uncertainty, the square root of [`variance`].
pub fn uncertainty(h: &HermitianObservable, psi: &StateVector) -> Result<f64> {
    variance(h, psi).map(f64::sqrt)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// `sigma_y = i(|0><1| - |1><0|)`.
pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, I, -I, ZERO])
}

/// `sigma_z = |1><1| - |0><0|`.
pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[-ONE, ZERO, ZERO, ONE])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Rabi vector of a qubit Hamiltonian, in energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &BlochVector) -> BlochVector {
        BlochVector {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    /// Polar angle from the positive z-axis.
    pub fn polar_angle(&self) -> f64 {
        (self.z / self.norm()).clamp(-1.0, 1.0).acos()
    }
}

impl RabiVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

fn require_qubit(dim: usize) -> Result<()> {
    if dim != 2 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

/// `(tr(rho sigma_x), tr(rho sigma_y), tr(rho sigma_z))` for `rho = |psi><psi|`.
pub fn bloch_vector(psi: &StateVector) -> Result<BlochVector> {
    require_qubit(psi.dim())?;
    Ok(BlochVector {
        x: expectation_matrix(&pauli_x(), psi)?,
        y: expectation_matrix(&pauli_y(), psi)?,
        z: expectation_matrix(&pauli_z(), psi)?,
    })
}

/// `(tr(H sigma_x), tr(H sigma_y), tr(H sigma_z))`.
pub fn rabi_vector(h: &HermitianObservable) -> Result<RabiVector> {
    require_qubit(h.dim())?;
    let tr = |p: CMatrix| (h.matrix() * p).trace().re;
    Ok(RabiVector {
        x: tr(pauli_x()),
        y: tr(pauli_y()),
        z: tr(pauli_z()),
    })
}
