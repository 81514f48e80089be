//! Truncated Hilbert space, bare operators and model Hamiltonians.
//!
//! Basis ordering is atom-major, Fock-minor: the state `|q, n>` lives at
//! index `pos(q) * (N_max + 1) + n`, with atom order `(g, e)` for the
//! two-level atom and `(s, g, e)` for the three-level atom.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::linalg::{self, ONE, ZERO};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Physical constants, all in units of the cavity frequency.
/// Missing fields take their [`Default`] values when deserialising.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub omega_c: f64,
    /// `omega_e - omega_g`; `omega_g = 0` fixes the energy zero.
    pub omega_eg: f64,
    /// Energy of the cavity-decoupled level `|s>` (negative).
    pub omega_s: f64,
    pub rabi_coupling: f64,
    pub mu_sg: f64,
    pub mu_se: f64,
    pub gamma_c: f64,
    pub gamma_eg: f64,
    pub gamma_gs: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            omega_c: 1.0,
            omega_eg: 1.0,
            omega_s: -10.0,
            rabi_coupling: 0.15,
            mu_sg: 1.0,
            mu_se: 1.0,
            gamma_c: 2e-5,
            gamma_eg: 2e-5,
            gamma_gs: 2e-5,
        }
    }
}

/// Minimum separation `-omega_s` (in units of `omega_c`) for `|s>` to count
/// as far detuned.
pub const DEFAULT_DETUNING_MARGIN: f64 = 5.0;

impl ModelParams {
    /// Resonant (`omega_eg = omega_c = 1`) parameters at the given coupling,
    /// everything else at defaults.
    pub fn resonant(rabi_coupling: f64) -> Self {
        ModelParams {
            rabi_coupling,
            ..Default::default()
        }
    }

    pub fn with_coupling(mut self, rabi_coupling: f64) -> Self {
        self.rabi_coupling = rabi_coupling;
        self
    }

    /// Invariant violations, each prefixed with the offending field name.
    pub fn violations(&self, detuning_margin: f64) -> Vec<String> {
        let mut out = Vec::new();
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_eg", self.omega_eg),
            ("omega_s", self.omega_s),
            ("rabi_coupling", self.rabi_coupling),
            ("mu_sg", self.mu_sg),
            ("mu_se", self.mu_se),
            ("gamma_c", self.gamma_c),
            ("gamma_eg", self.gamma_eg),
            ("gamma_gs", self.gamma_gs),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                out.push(format!("{name}: must be finite, got {value}"));
            } else if name != "omega_s" && value < 0.0 {
                out.push(format!("{name}: must be non-negative, got {value}"));
            }
        }
        if self.omega_c <= 0.0 {
            out.push(format!("omega_c: must be positive, got {}", self.omega_c));
        }
        if self.omega_s.is_finite() && -self.omega_s < detuning_margin * self.omega_c {
            out.push(format!(
                "omega_s: must be <= -{detuning_margin} * omega_c so that |s> is far detuned, got {}",
                self.omega_s
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations(DEFAULT_DETUNING_MARGIN);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }

    /// The closed-form perturbative results assume `rabi_coupling < omega_c`.
    pub fn is_perturbative(&self) -> bool {
        self.rabi_coupling < self.omega_c
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega_eg - self.omega_c).abs() <= 1e-12 * self.omega_c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomState {
    S,
    G,
    E,
}

impl fmt::Display for AtomState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AtomState::S => "s",
            AtomState::G => "g",
            AtomState::E => "e",
        })
    }
}

const TWO_LEVEL: [AtomState; 2] = [AtomState::G, AtomState::E];
const THREE_LEVEL: [AtomState; 3] = [AtomState::S, AtomState::G, AtomState::E];

/// Truncated product space of the atom and one cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    photon_cutoff: usize,
    three_level: bool,
}

pub const MIN_PHOTON_CUTOFF: usize = 3;

impl HilbertSpace {
    /// `photon_cutoff` is the largest Fock occupation kept; it must be at
    /// least 3 so three-photon observables are representable.
    pub fn new(photon_cutoff: usize, atom_levels: usize) -> Result<Self> {
        if photon_cutoff < MIN_PHOTON_CUTOFF {
            return Err(Error::invalid(format!(
                "photon_cutoff must be >= {MIN_PHOTON_CUTOFF}, got {photon_cutoff}"
            )));
        }
        let three_level = match atom_levels {
            2 => false,
            3 => true,
            other => {
                return Err(Error::invalid(format!(
                    "atom_levels must be 2 or 3, got {other}"
                )))
            }
        };
        Ok(HilbertSpace {
            photon_cutoff,
            three_level,
        })
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn fock_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn atom_levels(&self) -> usize {
        self.atoms().len()
    }

    pub fn is_three_level(&self) -> bool {
        self.three_level
    }

    pub fn atoms(&self) -> &'static [AtomState] {
        if self.three_level {
            &THREE_LEVEL
        } else {
            &TWO_LEVEL
        }
    }

    pub fn dimension(&self) -> usize {
        self.atom_levels() * self.fock_dim()
    }

    fn atom_pos(&self, q: AtomState) -> Option<usize> {
        self.atoms().iter().position(|&a| a == q)
    }

    /// Basis index of `|q, n>`, if representable.
    pub fn index(&self, q: AtomState, n: usize) -> Option<usize> {
        if n > self.photon_cutoff {
            return None;
        }
        self.atom_pos(q).map(|p| p * self.fock_dim() + n)
    }

    /// Inverse of [`index`](Self::index).
    pub fn label(&self, idx: usize) -> (AtomState, usize) {
        (self.atoms()[idx / self.fock_dim()], idx % self.fock_dim())
    }

    /// Normalised bare basis vector `|q, n>`.
    pub fn basis_vector(&self, q: AtomState, n: usize) -> Result<CVector> {
        let idx = self
            .index(q, n)
            .ok_or_else(|| Error::invalid(format!("|{q},{n}> not in space {self}")))?;
        let mut v = CVector::zeros(self.dimension());
        v[idx] = ONE;
        Ok(v)
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-level atom x Fock(0..={})",
            self.atom_levels(),
            self.photon_cutoff
        )
    }
}

/// Dense operator on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpace,
    entries: CMatrix,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpace, entries: CMatrix) -> Result<Self> {
        let d = space.dimension();
        if entries.shape() != (d, d) {
            return Err(Error::invalid(format!(
                "operator shape {:?} does not match space dimension {d}",
                entries.shape()
            )));
        }
        Ok(OperatorMatrix { space, entries })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.dimension();
        OperatorMatrix {
            space,
            entries: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dimension();
        OperatorMatrix {
            space,
            entries: CMatrix::identity(d, d),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// `<q', n'| O |q, n>`.
    pub fn element(&self, bra: (AtomState, usize), ket: (AtomState, usize)) -> Complex64 {
        match (
            self.space.index(bra.0, bra.1),
            self.space.index(ket.0, ket.1),
        ) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            space: self.space,
            entries: self.entries.adjoint(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        OperatorMatrix {
            space: self.space,
            entries: self.entries.scale(factor),
        }
    }

    pub fn scale_complex(&self, factor: Complex64) -> Self {
        OperatorMatrix {
            space: self.space,
            entries: &self.entries * factor,
        }
    }

    /// Largest entrywise deviation `|O - O^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.entries)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check_same_space(other)?;
        Ok(OperatorMatrix {
            space: self.space,
            entries: linalg::commutator(&self.entries, &other.entries),
        })
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.entries)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    fn check_same_space(&self, other: &OperatorMatrix) -> Result<()> {
        if self.space != other.space {
            return Err(Error::invalid(format!(
                "operators live on different spaces ({} vs {})",
                self.space, other.space
            )));
        }
        Ok(())
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        OperatorMatrix {
            space: self.space,
            entries: &self.entries * &rhs.entries,
        }
    }
}

pub fn build_space(photon_cutoff: usize, atom_levels: usize) -> Result<HilbertSpace> {
    HilbertSpace::new(photon_cutoff, atom_levels)
}

fn photon_lowering(fock_dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn atom_identity(space: &HilbertSpace) -> CMatrix {
    CMatrix::identity(space.atom_levels(), space.atom_levels())
}

/// Cavity annihilation operator `a`, identity on the atom. The top Fock
/// state is truncated, so `[a, a^dagger]` deviates from the identity in the
/// `(N_max, N_max)` corner, where it equals `-N_max`.
pub fn annihilation_op(space: &HilbertSpace) -> OperatorMatrix {
    OperatorMatrix {
        space: *space,
        entries: linalg::kron(&atom_identity(space), &photon_lowering(space.fock_dim())),
    }
}

pub fn creation_op(space: &HilbertSpace) -> OperatorMatrix {
    annihilation_op(space).adjoint()
}

/// Photon number `a^dagger a`.
pub fn number_op(space: &HilbertSpace) -> OperatorMatrix {
    let a = annihilation_op(space);
    &a.adjoint() * &a
}

/// Quadrature `x = a + a^dagger`.
pub fn quadrature_x(space: &HilbertSpace) -> OperatorMatrix {
    let a = annihilation_op(space);
    &a + &a.adjoint()
}

/// Conjugate quadrature `y = i (a^dagger - a)`.
pub fn quadrature_y(space: &HilbertSpace) -> OperatorMatrix {
    let a = annihilation_op(space);
    (&a.adjoint() - &a).scale_complex(Complex64::i())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomOp {
    /// `|e><g|`
    SigmaPlus,
    /// `|g><e|`
    SigmaMinus,
    SigmaX,
    ProjE,
    ProjG,
    ProjS,
    /// `|g><s| + |s><g|`
    SgFlip,
    /// `|e><s| + |s><e|`
    SeFlip,
}

impl AtomOp {
    fn needs_s(self) -> bool {
        matches!(self, AtomOp::ProjS | AtomOp::SgFlip | AtomOp::SeFlip)
    }

    /// `(bra, ket)` pairs with unit amplitude.
    fn transitions(self) -> &'static [(AtomState, AtomState)] {
        use AtomState::*;
        match self {
            AtomOp::SigmaPlus => &[(E, G)],
            AtomOp::SigmaMinus => &[(G, E)],
            AtomOp::SigmaX => &[(E, G), (G, E)],
            AtomOp::ProjE => &[(E, E)],
            AtomOp::ProjG => &[(G, G)],
            AtomOp::ProjS => &[(S, S)],
            AtomOp::SgFlip => &[(G, S), (S, G)],
            AtomOp::SeFlip => &[(E, S), (S, E)],
        }
    }
}

/// Atomic operator tensored with the photon identity.
pub fn atom_op(space: &HilbertSpace, kind: AtomOp) -> Result<OperatorMatrix> {
    if kind.needs_s() && !space.is_three_level() {
        return Err(Error::invalid(format!(
            "{kind:?} needs a three-level atom, space is {space}"
        )));
    }
    let levels = space.atom_levels();
    let mut atom = CMatrix::zeros(levels, levels);
    for &(bra, ket) in kind.transitions() {
        let i = space.atom_pos(bra).expect("level checked above");
        let j = space.atom_pos(ket).expect("level checked above");
        atom[(i, j)] = ONE;
    }
    let photon_id = CMatrix::identity(space.fock_dim(), space.fock_dim());
    Ok(OperatorMatrix {
        space: *space,
        entries: linalg::kron(&atom, &photon_id),
    })
}

/// Total excitation number `a^dagger a + |e><e|`.
pub fn excitation_number_op(space: &HilbertSpace) -> OperatorMatrix {
    let pe = atom_op(space, AtomOp::ProjE).expect("e exists in every space");
    &number_op(space) + &pe
}

/// Diagonal parity operator with eigenvalue `(-1)^(n + [q = e])` on `|q, n>`.
/// The decoupled `|s, n>` states get `(-1)^n`.
pub fn parity_op(space: &HilbertSpace) -> OperatorMatrix {
    let d = space.dimension();
    let mut m = CMatrix::zeros(d, d);
    for idx in 0..d {
        let (q, n) = space.label(idx);
        let excitations = n + usize::from(q == AtomState::E);
        m[(idx, idx)] = if excitations % 2 == 0 { ONE } else { -ONE };
    }
    OperatorMatrix { space: *space, entries: m }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianPart {
    /// `omega_c a^dagger a + omega_eg |e><e|` (+ `omega_s |s><s|` if present).
    H0,
    /// Rotating terms `Omega_R (a^dagger sigma_- + a sigma_+)`.
    Vr,
    /// Counter-rotating terms `Omega_R (a^dagger sigma_+ + a sigma_-)`.
    Vnr,
    /// `H0 + Vr + Vnr`.
    RabiFull,
    /// `RabiFull` on the three-level space.
    ThreeLevelFull,
}

pub fn build_hamiltonian(
    params: &ModelParams,
    space: &HilbertSpace,
    part: HamiltonianPart,
) -> Result<OperatorMatrix> {
    let op = |k| atom_op(space, k);
    let a = annihilation_op(space);
    let ad = a.adjoint();
    let coupling = params.rabi_coupling;
    let h = match part {
        HamiltonianPart::H0 => {
            let mut h = &number_op(space).scale(params.omega_c)
                + &op(AtomOp::ProjE)?.scale(params.omega_eg);
            if space.is_three_level() {
                h = &h + &op(AtomOp::ProjS)?.scale(params.omega_s);
            }
            h
        }
        HamiltonianPart::Vr => {
            (&(&ad * &op(AtomOp::SigmaMinus)?) + &(&a * &op(AtomOp::SigmaPlus)?)).scale(coupling)
        }
        HamiltonianPart::Vnr => {
            (&(&ad * &op(AtomOp::SigmaPlus)?) + &(&a * &op(AtomOp::SigmaMinus)?)).scale(coupling)
        }
        HamiltonianPart::RabiFull => {
            let h0 = build_hamiltonian(params, space, HamiltonianPart::H0)?;
            let vr = build_hamiltonian(params, space, HamiltonianPart::Vr)?;
            let vnr = build_hamiltonian(params, space, HamiltonianPart::Vnr)?;
            &(&h0 + &vr) + &vnr
        }
        HamiltonianPart::ThreeLevelFull => {
            if !space.is_three_level() {
                return Err(Error::invalid(format!(
                    "three_level_full needs a three-level space, got {space}"
                )));
            }
            build_hamiltonian(params, space, HamiltonianPart::RabiFull)?
        }
    };
    Ok(h)
}

/// `(V_sg, V_se) = (mu_sg (|g><s| + h.c.), mu_se (|e><s| + h.c.))`.
///
/// The direct `g <-> e` dipole term is left out: the drive is taken far off
/// resonance with that transition.
pub fn build_drive_ops(
    params: &ModelParams,
    space: &HilbertSpace,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if !space.is_three_level() {
        return Err(Error::invalid(format!(
            "drive operators need a three-level space, got {space}"
        )));
    }
    Ok((
        atom_op(space, AtomOp::SgFlip)?.scale(params.mu_sg),
        atom_op(space, AtomOp::SeFlip)?.scale(params.mu_se),
    ))
}
