//! Positive-frequency dressed operators and normal-ordered correlators.
//!
//! A photodetector coupled to the cavity responds to `x^+`, the part of the
//! quadrature `x = a + a^dagger` that lowers the dressed energy. The
//! normal-ordered moments `G_m = <(x^-)^m (x^+)^m>` therefore count
//! physical photons, while `<(a^dagger)^m a^m>` counts bare ones, virtual
//! photons of the dressed ground state included.

use crate::linalg;
use crate::model::{annihilation_op, HilbertSpace, OperatorMatrix};
use crate::spectrum::{dressed_coefficients, EigenSystem};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Highest correlation order supported.
pub const MAX_ORDER: usize = 3;
/// Largest imaginary part tolerated when reading off a real expectation value.
pub const IMAG_GUARD: f64 = 1e-10;
/// Negative values down to this are treated as rounding noise and clipped.
pub const NEGATIVE_CLIP: f64 = -1e-10;

const NORM_TOL: f64 = 1e-10;
const MIN_EIGEN_TOL: f64 = -1e-8;

/// The energy-lowering and energy-raising parts of an operator.
///
/// `x^+ = sum_{i<j} <E_i|x|E_j> |E_i><E_j|` over the energy-sorted eigenbasis.
/// In that basis `x^+` has nonzero entries only above the diagonal, and its
/// first column vanishes identically, so `x^+ |E_0> = 0` holds exactly.
#[derive(Clone, Debug)]
pub struct DressedOperator {
    plus: OperatorMatrix,
    minus: OperatorMatrix,
    dressed_plus: CMatrix,
    basis: CMatrix,
}

impl DressedOperator {
    /// `x^+` in the bare basis.
    pub fn plus_part(&self) -> &OperatorMatrix {
        &self.plus
    }

    /// `x^- = (x^+)^dagger` in the bare basis.
    pub fn minus_part(&self) -> &OperatorMatrix {
        &self.minus
    }

    /// `x^+` in the eigenbasis it was built from.
    pub fn dressed_plus(&self) -> &CMatrix {
        &self.dressed_plus
    }

    pub fn space(&self) -> HilbertSpace {
        self.plus.space()
    }

    /// `(x^-)^m (x^+)^m` in the eigenbasis.
    pub fn normal_ordered_dressed(&self, m: usize) -> Result<CMatrix> {
        check_order(m)?;
        let mut power = self.dressed_plus.clone();
        for _ in 1..m {
            power = &power * &self.dressed_plus;
        }
        Ok(power.adjoint() * power)
    }

    /// `(x^-)^m (x^+)^m` in the bare basis.
    pub fn normal_ordered(&self, m: usize) -> Result<CMatrix> {
        let d = self.normal_ordered_dressed(m)?;
        Ok(&self.basis * d * self.basis.adjoint())
    }
}

fn check_order(m: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&m) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "correlation order must be in 1..={MAX_ORDER}, got {m}"
        )))
    }
}

/// Split `op` into its dressed-energy-lowering part.
///
/// Matrix elements between degenerate eigenstates are assigned by sorted
/// index, like every other pair.
pub fn positive_frequency_part(op: &OperatorMatrix, eig: &EigenSystem) -> Result<DressedOperator> {
    let dressed = eig.to_dressed(op)?;
    let d = dressed.nrows();
    let dressed_plus =
        CMatrix::from_fn(d, d, |i, j| if i < j { dressed[(i, j)] } else { linalg::ZERO });
    let plus_bare = eig.from_dressed(&dressed_plus);
    let plus = OperatorMatrix::new(eig.space(), plus_bare)?;
    let minus = plus.adjoint();
    Ok(DressedOperator {
        plus,
        minus,
        dressed_plus,
        basis: eig.states().clone(),
    })
}

/// A normalised pure state or a density matrix on a given space.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure { space: HilbertSpace, vector: CVector },
    Density { space: HilbertSpace, matrix: CMatrix },
}

impl QuantumState {
    pub fn pure(space: HilbertSpace, vector: CVector) -> Result<Self> {
        if vector.len() != space.dimension() {
            return Err(Error::invalid(format!(
                "state vector has length {}, space {space} needs {}",
                vector.len(),
                space.dimension()
            )));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state vector norm {norm} is not 1")));
        }
        Ok(QuantumState::Pure { space, vector })
    }

    pub fn density(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dimension();
        if matrix.shape() != (d, d) {
            return Err(Error::invalid(format!(
                "density matrix has shape {:?}, space {space} needs ({d}, {d})",
                matrix.shape()
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > NORM_TOL {
            return Err(Error::invalid(format!("density matrix not Hermitian ({herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::invalid(format!("density matrix trace {tr} is not 1")));
        }
        let min = linalg::min_eigenvalue(&matrix);
        if min < MIN_EIGEN_TOL {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(QuantumState::Density { space, matrix })
    }

    pub fn space(&self) -> HilbertSpace {
        match self {
            QuantumState::Pure { space, .. } | QuantumState::Density { space, .. } => *space,
        }
    }

    pub fn to_density(&self) -> CMatrix {
        match self {
            QuantumState::Pure { vector, .. } => vector * vector.adjoint(),
            QuantumState::Density { matrix, .. } => matrix.clone(),
        }
    }

    /// `Tr[rho O]` for a matrix in the same (bare) basis.
    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        match self {
            QuantumState::Pure { vector, .. } => vector.dotc(&(op * vector)),
            QuantumState::Density { matrix, .. } => linalg::trace_product(matrix, op),
        }
    }

    fn check_space(&self, space: HilbertSpace) -> Result<()> {
        if self.space() != space {
            return Err(Error::invalid(format!(
                "state lives on {}, operator on {space}",
                self.space()
            )));
        }
        Ok(())
    }
}

/// Read off a real, non-negative expectation value.
pub(crate) fn real_nonnegative(value: Complex64, what: &str) -> Result<f64> {
    if value.im.abs() > IMAG_GUARD {
        return Err(Error::Consistency(format!(
            "{what} has imaginary part {:.3e}",
            value.im
        )));
    }
    if value.re < NEGATIVE_CLIP {
        return Err(Error::Consistency(format!(
            "{what} is negative ({:.3e})",
            value.re
        )));
    }
    Ok(value.re.max(0.0))
}

/// `G_m = Tr[rho (x^-)^m (x^+)^m]`.
pub fn physical_correlation(state: &QuantumState, dressed: &DressedOperator, m: usize) -> Result<f64> {
    state.check_space(dressed.space())?;
    let op = dressed.normal_ordered(m)?;
    real_nonnegative(state.expectation(&op), "physical correlation")
}

/// `Tr[rho (a^dagger)^m a^m]`.
pub fn bare_correlation(state: &QuantumState, m: usize) -> Result<f64> {
    check_order(m)?;
    let space = state.space();
    let a = annihilation_op(&space).into_entries();
    let mut power = a.clone();
    for _ in 1..m {
        power = &power * &a;
    }
    let op = power.adjoint() * power;
    real_nonnegative(state.expectation(&op), "bare correlation")
}

/// Virtual photon number of the interacting ground state from its bare
/// expansion: `sum_k 2k |c_{g,2k}|^2 + (2k+1) |d_{e,2k+1}|^2`.
pub fn ground_state_photon_number(eig: &EigenSystem) -> Result<f64> {
    let c = dressed_coefficients(eig, eig.rabi_index(0)?)?;
    let even: f64 = c.c_g.iter().enumerate().step_by(2).map(|(k, z)| k as f64 * z.norm_sqr()).sum();
    let odd: f64 = c
        .d_e
        .iter()
        .enumerate()
        .skip(1)
        .step_by(2)
        .map(|(k, z)| k as f64 * z.norm_sqr())
        .sum();
    Ok(even + odd)
}

/// Photon flux leaking out of the cavity, `gamma_c <x^- x^+>`.
pub fn output_flux(state: &QuantumState, dressed: &DressedOperator, gamma_c: f64) -> Result<f64> {
    if gamma_c.is_nan() || gamma_c < 0.0 {
        return Err(Error::invalid(format!("gamma_c must be >= 0, got {gamma_c}")));
    }
    Ok(gamma_c * physical_correlation(state, dressed, 1)?)
}
