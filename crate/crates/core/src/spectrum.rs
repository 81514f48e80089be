//! Dressed eigensystems and the Jaynes-Cummings ladder.

use std::fmt;

use crate::linalg;
use crate::model::{
    build_hamiltonian, build_space, parity_op, AtomState, HamiltonianPart, HilbertSpace,
    ModelParams, OperatorMatrix,
};
use crate::par::{self, Execution};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Energies closer than this are treated as degenerate when ordering states.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Maximum weight outside `|s, n>` for a state to count as decoupled.
pub const SECTOR_LEAKAGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
    /// States of the decoupled `|s, n>` sector.
    SSector,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::SSector => "s-sector",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sector {
    Rabi,
    Decoupled,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Rabi => "rabi",
            Sector::Decoupled => "decoupled",
        })
    }
}

/// Energy-sorted eigenpairs with parity and sector labels.
///
/// Eigenvectors are stored as columns of `states`. Each column is
/// phase-fixed so that its largest-magnitude bare amplitude is real and
/// positive.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    space: HilbertSpace,
    energies: Vec<f64>,
    states: CMatrix,
    parity: Vec<Parity>,
    sector: Vec<Sector>,
}

impl EigenSystem {
    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    /// Unitary whose columns are the eigenvectors.
    pub fn states(&self) -> &CMatrix {
        &self.states
    }

    pub fn state(&self, i: usize) -> CVector {
        self.states.column(i).into_owned()
    }

    pub fn parity(&self, i: usize) -> Parity {
        self.parity[i]
    }

    pub fn sector(&self, i: usize) -> Sector {
        self.sector[i]
    }

    /// Global indices of the interacting-sector states, in energy order.
    /// Entry `k` is the state the physics calls `|E_k>`.
    pub fn rabi_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.sector[i] == Sector::Rabi)
            .collect()
    }

    /// Global index of `|E_k>`.
    pub fn rabi_index(&self, k: usize) -> Result<usize> {
        self.rabi_indices().get(k).copied().ok_or_else(|| {
            Error::invalid(format!("no interacting-sector state E_{k} in {}", self.space))
        })
    }

    /// Global index of the decoupled state `|s, n>`.
    pub fn decoupled_index(&self, n: usize) -> Result<usize> {
        let basis = self
            .space
            .index(AtomState::S, n)
            .ok_or_else(|| Error::invalid(format!("|s,{n}> not in {}", self.space)))?;
        (0..self.len())
            .find(|&i| self.sector[i] == Sector::Decoupled && self.states[(basis, i)].norm() > 0.5)
            .ok_or_else(|| Error::invalid(format!("|s,{n}> not found among eigenstates")))
    }

    /// Matrix of `op` in the eigenbasis, `U^dagger O U`.
    pub fn to_dressed(&self, op: &OperatorMatrix) -> Result<CMatrix> {
        self.check_space(op.space())?;
        Ok(self.states.adjoint() * op.entries() * &self.states)
    }

    /// Inverse of [`to_dressed`](Self::to_dressed).
    pub fn from_dressed(&self, m: &CMatrix) -> CMatrix {
        &self.states * m * self.states.adjoint()
    }

    /// CSV dump: `index,energy,parity,sector,dominant`, where `dominant` is
    /// the bare state with the largest amplitude.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["index", "energy", "parity", "sector", "dominant"])?;
        for i in 0..self.len() {
            let col = self.states.column(i);
            let dom = col.iter().enumerate().fold((0, 0.0), |best, (k, z)| {
                if z.norm() > best.1 {
                    (k, z.norm())
                } else {
                    best
                }
            });
            let (q, n) = self.space.label(dom.0);
            w.write_record([
                i.to_string(),
                self.energies[i].to_string(),
                self.parity[i].to_string(),
                self.sector[i].to_string(),
                format!("{q}{n}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn check_space(&self, space: HilbertSpace) -> Result<()> {
        if space != self.space {
            return Err(Error::invalid(format!(
                "space mismatch: eigensystem on {}, operand on {space}",
                self.space
            )));
        }
        Ok(())
    }
}

/// Partition basis indices into connected components of the nonzero
/// pattern of `m`.
fn connected_components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if !seen[j] && (m[(i, j)] != linalg::ZERO || m[(j, i)] != linalg::ZERO) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

struct Pair {
    energy: f64,
    vector: CVector,
    parity: Parity,
    sector: Sector,
    anchor: usize,
}

/// Diagonalise a Hermitian operator.
///
/// The matrix is first split into blocks that it leaves invariant (connected
/// components of its nonzero pattern), so exact symmetries such as parity
/// and the decoupled `|s, n>` sector survive into the eigenvectors without
/// rounding leakage. Eigenpairs are sorted by energy; energies within
/// [`DEGENERACY_TOL`] are ordered by parity label (even, odd, s-sector) and
/// then by the bare index of the dominant amplitude.
pub fn diagonalize(h: &OperatorMatrix) -> Result<EigenSystem> {
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > 1e-12 * scale {
        return Err(Error::invalid(format!(
            "diagonalize needs a Hermitian operator, |H - H^dagger| = {defect:.3e}"
        )));
    }
    let space = h.space();
    let d = space.dimension();
    let parity = parity_op(&space);
    let mut pairs = Vec::with_capacity(d);

    for comp in connected_components(h.entries()) {
        let k = comp.len();
        let block = CMatrix::from_fn(k, k, |r, c| h.entries()[(comp[r], comp[c])]);
        let (values, vectors) = linalg::eigh(&block);
        for (col, &energy) in values.iter().enumerate() {
            let mut v = CVector::zeros(d);
            for (r, &idx) in comp.iter().enumerate() {
                v[idx] = vectors[(r, col)];
            }
            let anchor = fix_phase(&mut v);
            let leakage: f64 = (0..d)
                .filter(|&i| space.label(i).0 != AtomState::S)
                .map(|i| v[i].norm_sqr())
                .sum();
            let (sector, par) = if space.is_three_level() && leakage <= SECTOR_LEAKAGE_TOL {
                (Sector::Decoupled, Parity::SSector)
            } else {
                let expect: f64 = (0..d)
                    .map(|i| parity.entries()[(i, i)].re * v[i].norm_sqr())
                    .sum();
                let p = if expect >= 0.0 { Parity::Even } else { Parity::Odd };
                (Sector::Rabi, p)
            };
            pairs.push(Pair {
                energy,
                vector: v,
                parity: par,
                sector,
                anchor,
            });
        }
    }

    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    // Reorder runs of (near-)degenerate energies by the documented tie-break.
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].energy - pairs[end - 1].energy <= DEGENERACY_TOL {
            end += 1;
        }
        pairs[start..end].sort_by_key(|p| (p.parity, p.anchor));
        start = end;
    }

    let mut states = CMatrix::zeros(d, d);
    for (c, p) in pairs.iter().enumerate() {
        states.set_column(c, &p.vector);
    }
    Ok(EigenSystem {
        space,
        energies: pairs.iter().map(|p| p.energy).collect(),
        states,
        parity: pairs.iter().map(|p| p.parity).collect(),
        sector: pairs.iter().map(|p| p.sector).collect(),
    })
}

/// Rotate `v` so its largest-magnitude amplitude is real positive; returns
/// that amplitude's index (first one on ties).
fn fix_phase(v: &mut CVector) -> usize {
    let max = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let anchor = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let a = v[anchor];
    if a.norm() > 0.0 {
        let phase = a.conj() / a.norm();
        v.iter_mut().for_each(|z| *z *= phase);
        v[anchor] = Complex64::new(v[anchor].norm(), 0.0);
    }
    anchor
}

/// Full Rabi (two-level) or three-level Hamiltonian diagonalised in one go.
pub fn solve(params: &ModelParams, space: &HilbertSpace) -> Result<EigenSystem> {
    let part = if space.is_three_level() {
        HamiltonianPart::ThreeLevelFull
    } else {
        HamiltonianPart::RabiFull
    };
    diagonalize(&build_hamiltonian(params, space, part)?)
}

/// One rung of the Jaynes-Cummings ladder: the doublet spanned by
/// `{|g, n>, |e, n-1>}`.
///
/// `|E+_n> = C_n |g,n> + S_n |e,n-1>` and `|E-_n> = -S_n |g,n> + C_n |e,n-1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JcLevel {
    pub n: usize,
    pub c: f64,
    pub s: f64,
    pub energy_plus: f64,
    pub energy_minus: f64,
}

impl JcLevel {
    pub fn plus_state(&self, space: &HilbertSpace) -> Result<CVector> {
        self.combine(space, self.c, self.s)
    }

    pub fn minus_state(&self, space: &HilbertSpace) -> Result<CVector> {
        self.combine(space, -self.s, self.c)
    }

    fn combine(&self, space: &HilbertSpace, g_amp: f64, e_amp: f64) -> Result<CVector> {
        let g = space.basis_vector(AtomState::G, self.n)?;
        let e = space.basis_vector(AtomState::E, self.n - 1)?;
        Ok(g * Complex64::new(g_amp, 0.0) + e * Complex64::new(e_amp, 0.0))
    }
}

/// Exact diagonalisation of the `n`-excitation Jaynes-Cummings doublet.
pub fn jc_level(params: &ModelParams, n: usize) -> Result<JcLevel> {
    if n == 0 {
        return Err(Error::invalid(
            "jc_level needs n >= 1; the ground state |g,0> has no doublet",
        ));
    }
    let nf = n as f64;
    let diag_g = nf * params.omega_c;
    let diag_e = params.omega_eg + (nf - 1.0) * params.omega_c;
    let off = nf.sqrt() * params.rabi_coupling;
    let delta = diag_g - diag_e;
    let r = delta.hypot(2.0 * off);
    let (c, s) = if r == 0.0 {
        (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
    } else {
        let c = (0.5 * (1.0 + delta / r)).sqrt();
        let s = (0.5 * (1.0 - delta / r)).sqrt().copysign(off);
        (c, s)
    };
    let mean = 0.5 * (diag_g + diag_e);
    Ok(JcLevel {
        n,
        c,
        s,
        energy_plus: mean + 0.5 * r,
        energy_minus: mean - 0.5 * r,
    })
}

/// Bare-basis amplitudes `c_{g,k} = <g,k|E_i>` and `d_{e,k} = <e,k|E_i>`.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedCoefficients {
    pub c_g: Vec<Complex64>,
    pub d_e: Vec<Complex64>,
}

impl DressedCoefficients {
    pub fn norm_sqr(&self) -> f64 {
        self.c_g.iter().chain(&self.d_e).map(|z| z.norm_sqr()).sum()
    }
}

/// Expansion coefficients of eigenstate `i` (global index) over `|g,k>`,
/// `|e,k>`, `k = 0..=N_max`.
pub fn dressed_coefficients(eig: &EigenSystem, i: usize) -> Result<DressedCoefficients> {
    if i >= eig.len() {
        return Err(Error::invalid(format!("state index {i} out of range")));
    }
    if eig.sector(i) != Sector::Rabi {
        return Err(Error::invalid(format!(
            "state {i} belongs to the decoupled sector"
        )));
    }
    let space = eig.space();
    let amp = |q, k| {
        space
            .index(q, k)
            .map(|idx| eig.states()[(idx, i)])
            .unwrap_or(linalg::ZERO)
    };
    let ks = 0..space.fock_dim();
    Ok(DressedCoefficients {
        c_g: ks.clone().map(|k| amp(AtomState::G, k)).collect(),
        d_e: ks.map(|k| amp(AtomState::E, k)).collect(),
    })
}

/// Quantities compared between two photon cutoffs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvergenceObservable {
    /// Energy of `|E_k>` in the two-level model.
    Energy(usize),
    /// `<E_0| a^dagger a |E_0>`.
    GroundPhotonNumber,
}

impl fmt::Display for ConvergenceObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvergenceObservable::Energy(k) => write!(f, "E_{k}"),
            ConvergenceObservable::GroundPhotonNumber => f.write_str("ground_photon_number"),
        }
    }
}

pub fn default_convergence_observables() -> Vec<ConvergenceObservable> {
    (0..6).map(ConvergenceObservable::Energy).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceEntry {
    pub observable: ConvergenceObservable,
    pub low: f64,
    pub high: f64,
}

impl ConvergenceEntry {
    pub fn change(&self) -> f64 {
        (self.high - self.low).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub cutoffs: (usize, usize),
    pub entries: Vec<ConvergenceEntry>,
    pub max_change: f64,
    /// Set when `max_change` exceeds [`CONVERGENCE_FLAG`].
    pub flagged: bool,
}

pub const CONVERGENCE_FLAG: f64 = 1e-6;

/// Compare observables of the two-level Rabi model between two cutoffs.
pub fn convergence_check(
    params: &ModelParams,
    observables: &[ConvergenceObservable],
    cutoffs: (usize, usize),
) -> Result<ConvergenceReport> {
    let (low, high) = cutoffs;
    if low >= high {
        return Err(Error::invalid(format!(
            "convergence_check needs low < high cutoff, got ({low}, {high})"
        )));
    }
    let evaluate = |cutoff: usize| -> Result<Vec<f64>> {
        let space = build_space(cutoff, 2)?;
        let eig = solve(params, &space)?;
        observables
            .iter()
            .map(|obs| match *obs {
                ConvergenceObservable::Energy(k) => Ok(eig.energy(eig.rabi_index(k)?)),
                ConvergenceObservable::GroundPhotonNumber => {
                    let coeffs = dressed_coefficients(&eig, eig.rabi_index(0)?)?;
                    Ok(photon_number_from_coefficients(&coeffs))
                }
            })
            .collect()
    };
    let (lo, hi) = par::join(Execution::Parallel, || evaluate(low), || evaluate(high));
    let (lo, hi) = (lo?, hi?);
    let entries: Vec<_> = observables
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&observable, (&low, &high))| ConvergenceEntry {
            observable,
            low,
            high,
        })
        .collect();
    let max_change = entries.iter().map(ConvergenceEntry::change).fold(0.0, f64::max);
    Ok(ConvergenceReport {
        cutoffs,
        entries,
        max_change,
        flagged: max_change > CONVERGENCE_FLAG,
    })
}

/// `sum_k k (|c_{g,k}|^2 + |d_{e,k}|^2)`.
pub(crate) fn photon_number_from_coefficients(c: &DressedCoefficients) -> f64 {
    c.c_g
        .iter()
        .zip(&c.d_e)
        .enumerate()
        .map(|(k, (cg, de))| k as f64 * (cg.norm_sqr() + de.norm_sqr()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_space;
    use approx::assert_abs_diff_eq;

    fn rabi(coupling: f64, cutoff: usize) -> EigenSystem {
        let sp = build_space(cutoff, 2).unwrap();
        solve(&ModelParams::resonant(coupling), &sp).unwrap()
    }

    fn check_invariants(h: &OperatorMatrix, eig: &EigenSystem) {
        let d = eig.len();
        for i in 0..d {
            let v = eig.state(i);
            let resid = h.apply(&v) - &v * Complex64::new(eig.energy(i), 0.0);
            assert!(resid.norm() <= 1e-9, "residual {i}: {}", resid.norm());
            let anchor = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
            let first = v.iter().find(|z| z.norm() >= anchor * (1.0 - 1e-12)).unwrap();
            assert!(first.re > 0.0 && first.im == 0.0);
        }
        let gram = eig.states().adjoint() * eig.states();
        let id = CMatrix::identity(d, d);
        assert!(linalg::max_abs(&(gram - id)) <= 1e-10);
        for w in eig.energies().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn bare_ladder_without_coupling() {
        let eig = rabi(0.0, 10);
        let e = eig.energies();
        assert_eq!(e[0], 0.0);
        for k in 1..8 {
            // |g,k> and |e,k-1> are degenerate at k*omega_c
            assert_abs_diff_eq!(e[2 * k - 1], k as f64, epsilon = 1e-14);
            assert_abs_diff_eq!(e[2 * k], k as f64, epsilon = 1e-14);
        }
        let c = dressed_coefficients(&eig, 0).unwrap();
        assert_eq!(c.c_g[0].re, 1.0);
        assert_eq!(c.norm_sqr(), 1.0);
    }

    #[test]
    fn jc_first_doublet_on_resonance() {
        let p = ModelParams::resonant(0.15);
        let sp = build_space(12, 2).unwrap();
        let h0 = build_hamiltonian(&p, &sp, HamiltonianPart::H0).unwrap();
        let vr = build_hamiltonian(&p, &sp, HamiltonianPart::Vr).unwrap();
        let eig = diagonalize(&(&h0 + &vr)).unwrap();
        assert_abs_diff_eq!(eig.energy(1), 1.0 - 0.15, epsilon = 1e-13);
        assert_abs_diff_eq!(eig.energy(2), 1.0 + 0.15, epsilon = 1e-13);
        check_invariants(&(&h0 + &vr), &eig);
    }

    #[test]
    fn invariants_hold_for_three_level_model() {
        let p = ModelParams::resonant(0.3);
        let sp = build_space(15, 3).unwrap();
        let h = build_hamiltonian(&p, &sp, HamiltonianPart::ThreeLevelFull).unwrap();
        let eig = diagonalize(&h).unwrap();
        check_invariants(&h, &eig);
        let parity = parity_op(&sp);
        for i in 0..eig.len() {
            let v = eig.state(i);
            match eig.sector(i) {
                Sector::Decoupled => {
                    let leak: f64 = (sp.fock_dim()..sp.dimension()).map(|j| v[j].norm_sqr()).sum();
                    assert!(leak <= SECTOR_LEAKAGE_TOL);
                }
                Sector::Rabi => {
                    let p = v.dotc(&parity.apply(&v)).re;
                    assert_abs_diff_eq!(p.abs(), 1.0, epsilon = 1e-10);
                    let want = if p > 0.0 { Parity::Even } else { Parity::Odd };
                    assert_eq!(eig.parity(i), want);
                }
            }
        }
        for n in 0..=15 {
            let i = eig.decoupled_index(n).unwrap();
            assert_abs_diff_eq!(eig.energy(i), -10.0 + n as f64, epsilon = 1e-10);
        }
        assert_eq!(eig.rabi_indices().len(), 32);
        assert_eq!(eig.parity(eig.rabi_index(0).unwrap()), Parity::Even);
        assert_eq!(eig.parity(eig.rabi_index(1).unwrap()), Parity::Odd);
    }

    #[test]
    fn degenerate_states_ordered_by_parity_then_index() {
        // At zero coupling with omega_s = -10, |s,10> and |g,0> share E = 0.
        let p = ModelParams::resonant(0.0);
        let sp = build_space(12, 3).unwrap();
        let eig = solve(&p, &sp).unwrap();
        let g0 = eig.rabi_index(0).unwrap();
        let s10 = eig.decoupled_index(10).unwrap();
        assert_abs_diff_eq!(eig.energy(g0), eig.energy(s10), epsilon = 1e-12);
        assert_eq!(s10, g0 + 1);
        // |g,1> (odd) and |e,0> (odd) at E = 1: bare index order g before e
        let e1 = eig.rabi_index(1).unwrap();
        let e2 = eig.rabi_index(2).unwrap();
        assert!(eig.states()[(sp.index(AtomState::G, 1).unwrap(), e1)].norm() > 0.99);
        assert!(eig.states()[(sp.index(AtomState::E, 0).unwrap(), e2)].norm() > 0.99);
    }

    #[test]
    fn rejects_non_hermitian() {
        let sp = build_space(4, 2).unwrap();
        let a = crate::model::annihilation_op(&sp);
        assert!(matches!(diagonalize(&a), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn jc_level_examples() {
        let p = ModelParams::resonant(0.15);
        let l1 = jc_level(&p, 1).unwrap();
        assert_abs_diff_eq!(l1.c, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(l1.s, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(l1.energy_plus, 1.15, epsilon = 1e-12);
        assert_abs_diff_eq!(l1.energy_minus, 0.85, epsilon = 1e-12);
        for n in 1..8 {
            let l = jc_level(&p, n).unwrap();
            assert_abs_diff_eq!(
                l.energy_plus - l.energy_minus,
                2.0 * (n as f64).sqrt() * 0.15,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(l.c * l.c + l.s * l.s, 1.0, epsilon = 1e-12);
        }
        let detuned = ModelParams {
            omega_eg: 0.8,
            rabi_coupling: 0.0,
            ..Default::default()
        };
        let l = jc_level(&detuned, 2).unwrap();
        assert_eq!((l.c, l.s), (1.0, 0.0));
        assert!(jc_level(&p, 0).is_err());
    }

    #[test]
    fn jc_level_matches_block_diagonalisation() {
        let p = ModelParams {
            omega_eg: 1.13,
            rabi_coupling: 0.21,
            ..Default::default()
        };
        let sp = build_space(6, 2).unwrap();
        let h0 = build_hamiltonian(&p, &sp, HamiltonianPart::H0).unwrap();
        let vr = build_hamiltonian(&p, &sp, HamiltonianPart::Vr).unwrap();
        let h = &h0 + &vr;
        for n in 1..5 {
            let l = jc_level(&p, n).unwrap();
            for (v, e) in [
                (l.plus_state(&sp).unwrap(), l.energy_plus),
                (l.minus_state(&sp).unwrap(), l.energy_minus),
            ] {
                let r = h.apply(&v) - &v * Complex64::new(e, 0.0);
                assert!(r.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn ground_state_parity_selection() {
        let eig = rabi(0.15, 20);
        let c = dressed_coefficients(&eig, 0).unwrap();
        assert_abs_diff_eq!(c.norm_sqr(), 1.0, epsilon = 1e-10);
        for k in 0..=20 {
            if k % 2 == 1 {
                assert_eq!(c.c_g[k], linalg::ZERO);
            } else {
                assert_eq!(c.d_e[k], linalg::ZERO);
            }
        }
        let sp = build_space(5, 3).unwrap();
        let eig3 = solve(&ModelParams::default(), &sp).unwrap();
        let s0 = eig3.decoupled_index(0).unwrap();
        assert!(dressed_coefficients(&eig3, s0).is_err());
    }

    #[test]
    fn dressed_states_approach_jc_states_linearly() {
        // Deviation from the JC doublet is first order in the
        // counter-rotating coupling, about Omega_R / 2.
        let mut devs = Vec::new();
        for coupling in [1e-3, 1e-4] {
            let eig = rabi(coupling, 20);
            let sp = eig.space();
            let p = ModelParams::resonant(coupling);
            let jc = jc_level(&p, 1).unwrap().minus_state(&sp).unwrap();
            let e1 = eig.state(eig.rabi_index(1).unwrap());
            let amax = |v: CVector| v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
            let dev = amax(&e1 - &jc).min(amax(&e1 + &jc));
            assert!(dev <= 0.6 * coupling, "dev {dev} at {coupling}");
            devs.push(dev);
        }
        assert!(devs[0] / devs[1] > 9.0);
    }

    #[test]
    fn convergence_examples() {
        let obs = default_convergence_observables();
        let r = convergence_check(&ModelParams::resonant(0.15), &obs, (20, 30)).unwrap();
        assert!(r.max_change <= 1e-8, "{}", r.max_change);
        assert!(!r.flagged);
        let r0 = convergence_check(&ModelParams::resonant(0.0), &obs, (10, 20)).unwrap();
        assert_eq!(r0.max_change, 0.0);
        let r5 = convergence_check(&ModelParams::resonant(0.5), &obs, (5, 40)).unwrap();
        assert!(r5.max_change > 0.0);
        assert!(convergence_check(&ModelParams::default(), &obs, (10, 10)).is_err());
    }
}
