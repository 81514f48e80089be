use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{atom_op, quadrature_x, AtomOp, OperatorMatrix};
use crate::spectrum::EigenSystem;
use crate::{CMatrix, Complex64, Error, Result};

/// Dressed matrix elements below this magnitude open no decay channel.
pub const JUMP_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipationChannel {
    /// Cavity loss through `x = a + a^dagger`.
    Cavity,
    /// Atomic relaxation through `|g><e| + |e><g|`.
    AtomEg,
    /// Atomic relaxation through `|s><g| + |g><s|`.
    AtomGs,
}

impl DissipationChannel {
    pub fn coupling_operator(self, eig: &EigenSystem) -> Result<OperatorMatrix> {
        let space = eig.space();
        match self {
            DissipationChannel::Cavity => Ok(quadrature_x(&space)),
            DissipationChannel::AtomEg => atom_op(&space, AtomOp::SigmaX),
            DissipationChannel::AtomGs => atom_op(&space, AtomOp::SgFlip),
        }
    }
}

impl fmt::Display for DissipationChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DissipationChannel::Cavity => "cavity",
            DissipationChannel::AtomEg => "atom_eg",
            DissipationChannel::AtomGs => "atom_gs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSpec {
    pub channel: DissipationChannel,
    pub rate: f64,
}

impl DissipationSpec {
    pub fn new(channel: DissipationChannel, rate: f64) -> Self {
        DissipationSpec { channel, rate }
    }
}

/// Zero-temperature, flat-spectrum dissipator in the secular dressed form.
///
/// Every channel with operator `O` and rate `gamma` contributes a jump
/// `|E_j><E_k|` at rate `W_jk = gamma |<E_j|O|E_k>|^2` for each downward pair
/// `E_j < E_k`. In the eigenbasis,
///
/// ```text
/// D(rho)_ab = -(Gamma_a + Gamma_b)/2 rho_ab + delta_ab sum_k W_ak rho_kk,
/// Gamma_k = sum_j W_jk.
/// ```
///
/// The ground state of every closed sector has no downward partner through
/// `x` or `sigma_x`, so it is stationary.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    energies: Vec<f64>,
    /// `(j, k, W_jk)` for every open downward channel `k -> j`.
    jumps: Vec<(usize, usize, f64)>,
    decay: Vec<f64>,
}

pub fn build_liouvillian(eig: &EigenSystem, specs: &[DissipationSpec]) -> Result<Liouvillian> {
    let d = eig.len();
    let mut rates = vec![0.0; d * d];
    for spec in specs {
        if !(spec.rate >= 0.0 && spec.rate.is_finite()) {
            return Err(Error::invalid(format!(
                "{} rate must be >= 0, got {}",
                spec.channel, spec.rate
            )));
        }
        if spec.rate == 0.0 {
            continue;
        }
        let op = spec.channel.coupling_operator(eig)?;
        let dressed = eig.to_dressed(&op)?;
        for k in 0..d {
            for j in 0..d {
                let el = dressed[(j, k)].norm();
                if eig.energy(j) < eig.energy(k) && el > JUMP_THRESHOLD {
                    rates[j * d + k] += spec.rate * el * el;
                }
            }
        }
    }
    let mut jumps = Vec::new();
    let mut decay = vec![0.0; d];
    for j in 0..d {
        for k in 0..d {
            let w = rates[j * d + k];
            if w > 0.0 {
                jumps.push((j, k, w));
                decay[k] += w;
            }
        }
    }
    Ok(Liouvillian {
        energies: eig.energies().to_vec(),
        jumps,
        decay,
    })
}

impl Liouvillian {
    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    /// Total decay rate `Gamma_k` out of each eigenstate.
    pub fn decay_rates(&self) -> &[f64] {
        &self.decay
    }

    /// `W_jk` for `k -> j`, zero if the channel is closed.
    pub fn rate(&self, j: usize, k: usize) -> f64 {
        self.jumps
            .iter()
            .filter(|&&(a, b, _)| a == j && b == k)
            .map(|&(_, _, w)| w)
            .sum()
    }

    pub(crate) fn jumps(&self) -> &[(usize, usize, f64)] {
        &self.jumps
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `D(rho)` for a density matrix in the eigenbasis.
    pub fn dissipator(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dimension();
        if rho.shape() != (d, d) {
            return Err(Error::invalid(format!(
                "density matrix shape {:?} does not match Liouvillian dimension {d}",
                rho.shape()
            )));
        }
        let mut out = CMatrix::from_fn(d, d, |a, b| {
            rho[(a, b)] * (-0.5 * (self.decay[a] + self.decay[b]))
        });
        for &(j, k, w) in &self.jumps {
            out[(j, j)] += rho[(k, k)] * w;
        }
        Ok(out)
    }

    /// Full undriven generator `-i [H_C, rho] + D(rho)` in the eigenbasis.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let mut out = self.dissipator(rho)?;
        let minus_i = Complex64::new(0.0, -1.0);
        for b in 0..self.dimension() {
            for a in 0..self.dimension() {
                out[(a, b)] += minus_i * (self.energies[a] - self.energies[b]) * rho[(a, b)];
            }
        }
        Ok(out)
    }

    /// Rate matrix `R = W - diag(Gamma)` acting on populations.
    pub(crate) fn population_generator(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dimension();
        let mut r = nalgebra::DMatrix::<f64>::zeros(d, d);
        for &(j, k, w) in &self.jumps {
            r[(j, k)] += w;
        }
        for k in 0..d {
            r[(k, k)] -= self.decay[k];
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::model::{build_space, ModelParams};
    use crate::spectrum::solve;

    fn system(coupling: f64) -> EigenSystem {
        let sp = build_space(10, 3).unwrap();
        solve(&ModelParams::resonant(coupling), &sp).unwrap()
    }

    #[test]
    fn zero_rates_leave_pure_commutator() {
        let eig = system(0.15);
        let l = build_liouvillian(&eig, &[DissipationSpec::new(DissipationChannel::Cavity, 0.0)]).unwrap();
        assert!(l.jumps().is_empty());
        let d = eig.len();
        let rho = CMatrix::from_fn(d, d, |a, b| Complex64::new((a + b) as f64, a as f64 - b as f64));
        assert_eq!(l.dissipator(&rho).unwrap(), CMatrix::zeros(d, d));
    }

    #[test]
    fn dressed_ground_state_is_dark() {
        for coupling in [0.05, 0.15, 0.5] {
            let eig = system(coupling);
            let l = build_liouvillian(
                &eig,
                &[
                    DissipationSpec::new(DissipationChannel::Cavity, 2e-5),
                    DissipationSpec::new(DissipationChannel::AtomEg, 3e-5),
                ],
            )
            .unwrap();
            let e0 = eig.rabi_index(0).unwrap();
            let d = eig.len();
            let mut rho = CMatrix::zeros(d, d);
            rho[(e0, e0)] = linalg::ONE;
            assert!(linalg::max_abs(&l.apply(&rho).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn ground_state_feeds_lower_sector_through_gs_channel() {
        let eig = system(0.15);
        let g = 2e-5;
        let l = build_liouvillian(&eig, &[DissipationSpec::new(DissipationChannel::AtomGs, g)]).unwrap();
        let e0 = eig.rabi_index(0).unwrap();
        let s2 = eig.decoupled_index(2).unwrap();
        let c02 = crate::spectrum::dressed_coefficients(&eig, e0).unwrap().c_g[2].norm();
        approx::assert_relative_eq!(l.rate(s2, e0), g * c02 * c02, max_relative = 1e-12);
    }

    #[test]
    fn bare_cavity_decay_without_coupling() {
        let eig = system(0.0);
        let l = build_liouvillian(&eig, &[DissipationSpec::new(DissipationChannel::Cavity, 1.0)]).unwrap();
        let sp = eig.space();
        for n in 1..=10 {
            let k = (0..eig.len())
                .find(|&i| eig.states()[(sp.index(crate::model::AtomState::G, n).unwrap(), i)].norm() > 0.5)
                .unwrap();
            approx::assert_relative_eq!(l.decay_rates()[k], n as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let eig = system(0.3);
        let l = build_liouvillian(
            &eig,
            &[
                DissipationSpec::new(DissipationChannel::Cavity, 0.1),
                DissipationSpec::new(DissipationChannel::AtomEg, 0.2),
                DissipationSpec::new(DissipationChannel::AtomGs, 0.3),
            ],
        )
        .unwrap();
        let d = eig.len();
        let rho = CMatrix::from_fn(d, d, |a, b| Complex64::new(1.0 / (1 + a + b) as f64, 0.0));
        assert!(l.apply(&rho).unwrap().trace().norm() < 1e-13);
        assert!(build_liouvillian(&eig, &[DissipationSpec::new(DissipationChannel::Cavity, -1.0)]).is_err());
    }
}
