use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::liouvillian::{build_liouvillian, DissipationSpec, Liouvillian};
use super::pulse::{pulse_amplitude_for_pi, Carrier, PulseAmplitude, PulseSpec, ResolvedPulse};
use super::series::TimeSeries;
use crate::linalg;
use crate::model::{
    build_drive_ops, build_hamiltonian, number_op, quadrature_x, AtomState, HamiltonianPart,
    HilbertSpace, ModelParams,
};
use crate::observables::{positive_frequency_part, DressedOperator, QuantumState};
use crate::par::{self, Execution};
use crate::perturbation::Transition;
use crate::spectrum::{diagonalize, EigenSystem};
use crate::{CMatrix, Complex64, Error, Result};

/// Maximum change of any sampled observable allowed between a run and its
/// half-step rerun.
pub const HALVING_TOL: f64 = 1e-6;

/// Dressed drive elements smaller than this fraction of the largest one are
/// dropped from the integration.
pub const DRIVE_ELEMENT_CUTOFF: f64 = 1e-14;

/// A state picked out by name: `E<k>` for the `k`-th interacting-sector
/// eigenstate, `<q><n>` (for example `s2`, `g1`) for the bare state `|q,n>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateLabel {
    Dressed(usize),
    Bare(AtomState, usize),
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Dressed(k) => write!(f, "E{k}"),
            StateLabel::Bare(q, n) => write!(f, "{q}{n}"),
        }
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown state label `{s}` (expected E<k>, s<n>, g<n> or e<n>)"));
        let mut chars = s.chars();
        let head = chars.next().ok_or_else(bad)?;
        let n: usize = chars.as_str().parse().map_err(|_| bad())?;
        match head {
            'E' => Ok(StateLabel::Dressed(n)),
            's' => Ok(StateLabel::Bare(AtomState::S, n)),
            'g' => Ok(StateLabel::Bare(AtomState::G, n)),
            'e' => Ok(StateLabel::Bare(AtomState::E, n)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for StateLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StateLabel> for String {
    fn from(l: StateLabel) -> String {
        l.to_string()
    }
}

/// Pure state for a label; dressed labels resolve through `eig`.
pub fn prepare_state(eig: &EigenSystem, label: StateLabel) -> Result<QuantumState> {
    let space = eig.space();
    let v = match label {
        StateLabel::Dressed(k) => eig.state(eig.rabi_index(k)?),
        StateLabel::Bare(q, n) => space.basis_vector(q, n)?,
    };
    QuantumState::pure(space, v)
}

/// Sampled quantity of a [`TimeSeries`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Observable {
    /// Sum of the pulse envelopes `A(t)`.
    Envelope,
    /// `<x^- x^+>`, the physical photon number.
    PhotonNumber,
    G2,
    G3,
    /// `<a^dagger a>`, virtual photons included.
    BarePhotonNumber,
    Population(StateLabel),
    Trace,
    MinEigenvalue,
}

impl Observable {
    pub fn defaults() -> Vec<Observable> {
        let mut v = vec![
            Observable::Envelope,
            Observable::PhotonNumber,
            Observable::G2,
            Observable::G3,
            Observable::Population(StateLabel::Dressed(0)),
            Observable::Population(StateLabel::Dressed(1)),
        ];
        v.extend((0..4).map(|n| Observable::Population(StateLabel::Bare(AtomState::S, n))));
        v.extend([Observable::Trace, Observable::MinEigenvalue]);
        v
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Envelope => f.write_str("envelope"),
            Observable::PhotonNumber => f.write_str("photon_number"),
            Observable::G2 => f.write_str("g2"),
            Observable::G3 => f.write_str("g3"),
            Observable::BarePhotonNumber => f.write_str("bare_photon_number"),
            Observable::Population(l) => write!(f, "pop_{l}"),
            Observable::Trace => f.write_str("trace"),
            Observable::MinEigenvalue => f.write_str("min_eig"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "envelope" => Observable::Envelope,
            "photon_number" => Observable::PhotonNumber,
            "g2" => Observable::G2,
            "g3" => Observable::G3,
            "bare_photon_number" => Observable::BarePhotonNumber,
            "trace" => Observable::Trace,
            "min_eig" => Observable::MinEigenvalue,
            _ => match s.strip_prefix("pop_") {
                Some(label) => Observable::Population(label.parse()?),
                None => return Err(Error::invalid(format!("unknown observable `{s}`"))),
            },
        })
    }
}

impl TryFrom<String> for Observable {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Observable> for String {
    fn from(o: Observable) -> String {
        o.to_string()
    }
}

/// Undriven three-level system together with its drive operators and
/// dissipator, all expressed in the eigenbasis of `H_C`.
#[derive(Clone, Debug)]
pub struct DrivenSystem {
    params: ModelParams,
    eig: EigenSystem,
    v_sg: CMatrix,
    v_se: CMatrix,
    liouvillian: Liouvillian,
    x: DressedOperator,
}

impl DrivenSystem {
    pub fn new(params: &ModelParams, space: &HilbertSpace, dissipation: &[DissipationSpec]) -> Result<Self> {
        params.validate()?;
        let h = build_hamiltonian(params, space, HamiltonianPart::ThreeLevelFull)?;
        let eig = diagonalize(&h)?;
        let liouvillian = build_liouvillian(&eig, dissipation)?;
        Self::from_parts(params, eig, liouvillian)
    }

    pub fn from_parts(params: &ModelParams, eig: EigenSystem, liouvillian: Liouvillian) -> Result<Self> {
        let space = eig.space();
        if liouvillian.dimension() != space.dimension() {
            return Err(Error::invalid("Liouvillian and eigensystem dimensions differ"));
        }
        let (sg, se) = build_drive_ops(params, &space)?;
        let x = positive_frequency_part(&quadrature_x(&space), &eig)?;
        Ok(DrivenSystem {
            params: *params,
            v_sg: eig.to_dressed(&sg)?,
            v_se: eig.to_dressed(&se)?,
            eig,
            liouvillian,
            x,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        &self.liouvillian
    }

    pub fn quadrature(&self) -> &DressedOperator {
        &self.x
    }

    fn transition_indices(&self, t: Transition) -> Result<(usize, usize)> {
        Ok((
            self.eig.rabi_index(t.dressed_level())?,
            self.eig.decoupled_index(t.target_photons())?,
        ))
    }

    /// `E_k - E(s, n)` in the exact spectrum.
    pub fn transition_frequency(&self, t: Transition) -> Result<f64> {
        let (from, to) = self.transition_indices(t)?;
        Ok(self.eig.energy(from) - self.eig.energy(to))
    }

    /// Exact `<s,n|V|E_k>` with `V` the transition's drive operator.
    pub fn transition_matrix_element(&self, t: Transition) -> Result<Complex64> {
        let (from, to) = self.transition_indices(t)?;
        let v = match t.atom() {
            AtomState::G => &self.v_sg,
            _ => &self.v_se,
        };
        Ok(v[(to, from)])
    }

    /// Fix carrier and amplitude of a pulse against the exact spectrum.
    pub fn resolve(&self, spec: &PulseSpec) -> Result<ResolvedPulse> {
        let lookup = |name: &str| {
            Transition::from_name(name).ok_or_else(|| Error::invalid(format!("unknown transition `{name}`")))
        };
        let carrier = match &spec.carrier {
            Carrier::Frequency(w) => *w,
            Carrier::Resonant { transition } => self.transition_frequency(lookup(transition)?)?,
        };
        let amplitude = match spec.amplitude_spec()? {
            PulseAmplitude::Peak(a) => a,
            PulseAmplitude::Area(target) => {
                let el = self.transition_matrix_element(lookup(&target.transition)?)?.norm();
                pulse_amplitude_for_pi(el, spec.width, target.multiple)?
            }
        };
        ResolvedPulse::new(carrier, spec.center, spec.width, amplitude, spec.channel)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Largest Runge-Kutta step; each sampling interval is split evenly.
    pub max_step: f64,
    /// Rerun at half the step and fail if any observable moves by more
    /// than 1e-6. The finer run is returned.
    pub verify_halving: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            max_step: 0.01,
            verify_halving: false,
        }
    }
}

/// Health of an evolution, collected over all samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub rk_steps: usize,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    /// Largest `|rho - rho^dagger|` entry removed by the per-step symmetrisation.
    pub max_hermiticity_defect: f64,
    /// Largest observable change against the half-step rerun, if performed.
    pub halving_change: Option<f64>,
}

/// Integrate the master equation from `initial` and sample `observables`
/// at `times`.
pub fn evolve(
    system: &DrivenSystem,
    initial: &QuantumState,
    pulses: &[ResolvedPulse],
    times: &[f64],
    observables: &[Observable],
    options: &EvolveOptions,
) -> Result<TimeSeries> {
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time grid must be finite and strictly increasing"));
    }
    if !(options.max_step > 0.0 && options.max_step.is_finite()) {
        return Err(Error::invalid(format!("max_step must be > 0, got {}", options.max_step)));
    }
    if initial.space() != system.eig.space() {
        return Err(Error::invalid(format!(
            "initial state on {}, system on {}",
            initial.space(),
            system.eig.space()
        )));
    }
    let (t_first, t_last) = (times[0], times[times.len() - 1]);
    for (i, p) in pulses.iter().enumerate() {
        if p.center - 5.0 * p.width < t_first || p.center + 5.0 * p.width > t_last {
            warn!("pulse {i}: t0 +- 5 sigma extends beyond the time window [{t_first}, {t_last}]");
        }
    }
    if !options.verify_halving {
        return run(system, initial, pulses, times, observables, options.max_step);
    }
    let (coarse, fine) = par::join(
        Execution::Parallel,
        || run(system, initial, pulses, times, observables, options.max_step),
        || run(system, initial, pulses, times, observables, 0.5 * options.max_step),
    );
    let (coarse, mut fine) = (coarse?, fine?);
    let (change, column, at) = coarse.max_difference(&fine)?;
    debug!("step halving: max change {change:.3e} in `{column}` at t = {at}");
    if change.is_nan() || change > HALVING_TOL {
        return Err(Error::Integration(format!(
            "halving max_step {} changed `{column}` by {change:.3e} at t = {at} (limit {HALVING_TOL:e}); \
             reduce max_step",
            options.max_step
        )));
    }
    fine.diagnostics.halving_change = Some(change);
    Ok(fine)
}

struct Integrator<'a> {
    d: usize,
    energies: &'a [f64],
    /// `(a, b, V_sg[a,b], V_se[a,b])` for every nonzero drive element.
    drive: Vec<(usize, usize, Complex64, Complex64)>,
    half_decay: Vec<f64>,
    jumps: &'a [(usize, usize, f64)],
    pulses: &'a [ResolvedPulse],
    population_generator: DMatrix<f64>,
    free_cache: HashMap<u64, DMatrix<f64>>,
    scratch: Scratch,
    hermiticity: f64,
    steps: usize,
}

struct Scratch {
    phase: Vec<Complex64>,
    coupling: Vec<Complex64>,
    m: Vec<Complex64>,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl<'a> Integrator<'a> {
    fn new(system: &'a DrivenSystem, pulses: &'a [ResolvedPulse]) -> Self {
        let d = system.eig.len();
        let use_sg = pulses.iter().any(|p| p.channel.drives_sg());
        let use_se = pulses.iter().any(|p| p.channel.drives_se());
        let keep = |v: Complex64, on: bool, scale: f64| {
            if on && v.norm() > DRIVE_ELEMENT_CUTOFF * scale {
                v
            } else {
                linalg::ZERO
            }
        };
        let (sg_scale, se_scale) = (linalg::max_abs(&system.v_sg), linalg::max_abs(&system.v_se));
        let mut drive = Vec::new();
        for b in 0..d {
            for a in 0..d {
                let sg = keep(system.v_sg[(a, b)], use_sg, sg_scale);
                let se = keep(system.v_se[(a, b)], use_se, se_scale);
                if sg != linalg::ZERO || se != linalg::ZERO {
                    drive.push((a, b, sg, se));
                }
            }
        }
        let decay = system.liouvillian.decay_rates();
        let half_decay = (0..d * d)
            .map(|i| -0.5 * (decay[i % d] + decay[i / d]))
            .collect();
        let zeros = || vec![linalg::ZERO; d * d];
        Integrator {
            d,
            energies: system.liouvillian.energies(),
            scratch: Scratch {
                phase: vec![linalg::ZERO; d],
                coupling: vec![linalg::ZERO; drive.len()],
                m: zeros(),
                k: [zeros(), zeros(), zeros(), zeros()],
                tmp: zeros(),
            },
            drive,
            half_decay,
            jumps: system.liouvillian.jumps(),
            pulses,
            population_generator: system.liouvillian.population_generator(),
            free_cache: HashMap::new(),
            hermiticity: 0.0,
            steps: 0,
        }
    }

    fn fields(&self, t: f64) -> (f64, f64) {
        self.pulses.iter().fold((0.0, 0.0), |(sg, se), p| {
            let f = p.field(t);
            (
                sg + if p.channel.drives_sg() { f } else { 0.0 },
                se + if p.channel.drives_se() { f } else { 0.0 },
            )
        })
    }

    /// `d rho_I / dt` with `rho` stored column-major.
    #[allow(clippy::too_many_arguments)]
    fn rhs(
        d: usize,
        energies: &[f64],
        drive: &[(usize, usize, Complex64, Complex64)],
        half_decay: &[f64],
        jumps: &[(usize, usize, f64)],
        fields: (f64, f64),
        t: f64,
        s: &mut Scratch,
        rho: &[Complex64],
        out: &mut [Complex64],
    ) {
        let (f_sg, f_se) = fields;
        for (p, e) in s.phase.iter_mut().zip(energies) {
            *p = Complex64::from_polar(1.0, e * t);
        }
        s.m.fill(linalg::ZERO);
        if f_sg != 0.0 || f_se != 0.0 {
            for (c, &(a, b, sg, se)) in s.coupling.iter_mut().zip(drive) {
                *c = (sg * f_sg + se * f_se) * s.phase[a] * s.phase[b].conj();
            }
            for col in 0..d {
                let r = &rho[col * d..(col + 1) * d];
                let m = &mut s.m[col * d..(col + 1) * d];
                for (&(a, b, _, _), &c) in drive.iter().zip(&s.coupling) {
                    m[a] += c * r[b];
                }
            }
        }
        // rho V = (V rho)^dagger, so -i[V, rho] = -i (M - M^dagger).
        let minus_i = Complex64::new(0.0, -1.0);
        for b in 0..d {
            for a in 0..d {
                let i = b * d + a;
                out[i] = minus_i * (s.m[i] - s.m[a * d + b].conj()) + rho[i] * half_decay[i];
            }
        }
        for &(j, k, w) in jumps {
            out[j * d + j] += rho[k * d + k] * w;
        }
    }

    fn rk4_step(&mut self, t: f64, h: f64, rho: &mut [Complex64]) {
        let (d, e, dr, hd, jp) = (self.d, self.energies, &self.drive[..], &self.half_decay[..], self.jumps);
        let f0 = self.fields(t);
        let fm = self.fields(t + 0.5 * h);
        let f1 = self.fields(t + h);
        let s = &mut self.scratch;
        let mut k = std::mem::take(&mut s.k);
        let mut tmp = std::mem::take(&mut s.tmp);

        Self::rhs(d, e, dr, hd, jp, f0, t, s, rho, &mut k[0]);
        for (x, (r, k0)) in tmp.iter_mut().zip(rho.iter().zip(&k[0])) {
            *x = r + k0 * (0.5 * h);
        }
        Self::rhs(d, e, dr, hd, jp, fm, t + 0.5 * h, s, &tmp, &mut k[1]);
        for (x, (r, k1)) in tmp.iter_mut().zip(rho.iter().zip(&k[1])) {
            *x = r + k1 * (0.5 * h);
        }
        Self::rhs(d, e, dr, hd, jp, fm, t + 0.5 * h, s, &tmp, &mut k[2]);
        for (x, (r, k2)) in tmp.iter_mut().zip(rho.iter().zip(&k[2])) {
            *x = r + k2 * h;
        }
        Self::rhs(d, e, dr, hd, jp, f1, t + h, s, &tmp, &mut k[3]);
        let w = h / 6.0;
        for (i, r) in rho.iter_mut().enumerate() {
            *r += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * w;
        }
        s.k = k;
        s.tmp = tmp;
        self.steps += 1;
        self.symmetrize(rho);
    }

    fn symmetrize(&mut self, rho: &mut [Complex64]) {
        let d = self.d;
        for b in 0..d {
            let diag = &mut rho[b * d + b];
            self.hermiticity = self.hermiticity.max(2.0 * diag.im.abs());
            diag.im = 0.0;
            for a in b + 1..d {
                let (upper, lower) = (rho[b * d + a], rho[a * d + b]);
                let defect = (upper - lower.conj()).norm();
                self.hermiticity = self.hermiticity.max(defect);
                let avg = (upper + lower.conj()) * 0.5;
                rho[b * d + a] = avg;
                rho[a * d + b] = avg.conj();
            }
        }
    }

    /// Exact propagation over `dt` with the drive off.
    fn free_step(&mut self, dt: f64, rho: &mut [Complex64]) {
        let d = self.d;
        let generator = &self.population_generator;
        let prop = self
            .free_cache
            .entry(dt.to_bits())
            .or_insert_with(|| (generator * dt).exp());
        let pops: Vec<f64> = (0..d).map(|k| rho[k * d + k].re).collect();
        for (i, r) in rho.iter_mut().enumerate() {
            *r *= (self.half_decay[i] * dt).exp();
        }
        for j in 0..d {
            let p: f64 = (0..d).map(|k| prop[(j, k)] * pops[k]).sum();
            rho[j * d + j] = Complex64::new(p, 0.0);
        }
    }

    fn advance(&mut self, t0: f64, t1: f64, max_step: f64, rho: &mut [Complex64]) {
        if self.pulses.iter().all(|p| p.is_off(t0, t1)) {
            self.free_step(t1 - t0, rho);
            return;
        }
        let n = ((t1 - t0) / max_step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for i in 0..n {
            self.rk4_step(t0 + i as f64 * h, h, rho);
        }
    }
}

fn run(
    system: &DrivenSystem,
    initial: &QuantumState,
    pulses: &[ResolvedPulse],
    times: &[f64],
    observables: &[Observable],
    max_step: f64,
) -> Result<TimeSeries> {
    let eig = &system.eig;
    let d = eig.len();
    let energies = eig.energies();
    let u = eig.states();

    // Every non-envelope observable is Tr[rho_S O] with O in the eigenbasis.
    let mut operators: Vec<Option<CMatrix>> = Vec::with_capacity(observables.len());
    for obs in observables {
        let op = match *obs {
            Observable::PhotonNumber => Some(system.x.normal_ordered_dressed(1)?),
            Observable::G2 => Some(system.x.normal_ordered_dressed(2)?),
            Observable::G3 => Some(system.x.normal_ordered_dressed(3)?),
            Observable::BarePhotonNumber => Some(eig.to_dressed(&number_op(&eig.space()))?),
            Observable::Population(label) => {
                let v = prepare_state(eig, label)?;
                let QuantumState::Pure { vector, .. } = v else {
                    unreachable!("prepare_state returns pure states")
                };
                let w = u.adjoint() * vector;
                Some(&w * w.adjoint())
            }
            Observable::Envelope | Observable::Trace | Observable::MinEigenvalue => None,
        };
        operators.push(op);
    }

    let rho_bare = initial.to_density();
    let rho_dressed = u.adjoint() * rho_bare * u;
    let t_start = times[0];
    let mut rho: Vec<Complex64> = (0..d * d)
        .map(|i| {
            let (a, b) = (i % d, i / d);
            rho_dressed[(a, b)] * Complex64::from_polar(1.0, (energies[a] - energies[b]) * t_start)
        })
        .collect();

    let mut integrator = Integrator::new(system, pulses);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); observables.len()];
    let mut diagnostics = Diagnostics {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };

    for (step, &t) in times.iter().enumerate() {
        if step > 0 {
            integrator.advance(times[step - 1], t, max_step, &mut rho);
        }
        let rho_i = CMatrix::from_column_slice(d, d, &rho);
        let trace = rho_i.trace().re;
        let min_eig = linalg::min_eigenvalue(&rho_i);
        diagnostics.max_trace_drift = diagnostics.max_trace_drift.max((trace - 1.0).abs());
        diagnostics.min_eigenvalue = diagnostics.min_eigenvalue.min(min_eig);
        if !trace.is_finite() {
            return Err(Error::Integration(format!(
                "state became non-finite at t = {t}; reduce max_step"
            )));
        }
        let phase: Vec<Complex64> = energies
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * t))
            .collect();
        let rho_s = CMatrix::from_fn(d, d, |a, b| phase[a] * rho_i[(a, b)] * phase[b].conj());
        for ((obs, op), col) in observables.iter().zip(&operators).zip(columns.iter_mut()) {
            let value = match obs {
                Observable::Envelope => pulses.iter().map(|p| p.envelope(t)).sum(),
                Observable::Trace => trace,
                Observable::MinEigenvalue => min_eig,
                _ => {
                    let op = op.as_ref().expect("operator prepared above");
                    linalg::trace_product(&rho_s, op).re
                }
            };
            col.push(value);
        }
    }
    diagnostics.rk_steps = integrator.steps;
    diagnostics.max_hermiticity_defect = integrator.hermiticity;
    debug!(
        "evolution done: {} RK4 steps, trace drift {:.2e}, min eigenvalue {:.2e}, hermiticity defect {:.2e}",
        diagnostics.rk_steps,
        diagnostics.max_trace_drift,
        diagnostics.min_eigenvalue,
        diagnostics.max_hermiticity_defect
    );
    Ok(TimeSeries {
        times: times.to_vec(),
        columns: observables
            .iter()
            .map(|o| o.to_string())
            .zip(columns)
            .collect(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DissipationChannel, DriveChannel};
    use crate::model::build_space;
    use approx::assert_abs_diff_eq;

    fn system(coupling: f64, dissipation: &[DissipationSpec]) -> DrivenSystem {
        let sp = build_space(8, 3).unwrap();
        DrivenSystem::new(&ModelParams::resonant(coupling), &sp, dissipation).unwrap()
    }

    #[test]
    fn labels_round_trip() {
        for s in ["E0", "E12", "s2", "g0", "e5"] {
            assert_eq!(s.parse::<StateLabel>().unwrap().to_string(), s);
        }
        assert!("x1".parse::<StateLabel>().is_err());
        assert!("E".parse::<StateLabel>().is_err());
        for o in Observable::defaults() {
            assert_eq!(o.to_string().parse::<Observable>().unwrap(), o);
        }
        assert!("pop_q1".parse::<Observable>().is_err());
    }

    #[test]
    fn prepared_states() {
        let sys = system(0.0, &[]);
        let eig = sys.eigensystem();
        let sp = eig.space();
        let e0 = prepare_state(eig, StateLabel::Dressed(0)).unwrap();
        assert_eq!(e0, QuantumState::pure(sp, sp.basis_vector(AtomState::G, 0).unwrap()).unwrap());
        let s2 = prepare_state(eig, StateLabel::Bare(AtomState::S, 2)).unwrap();
        assert_eq!(s2, QuantumState::pure(sp, sp.basis_vector(AtomState::S, 2).unwrap()).unwrap());
        assert!(prepare_state(eig, StateLabel::Bare(AtomState::G, 9)).is_err());
        assert!(prepare_state(eig, StateLabel::Dressed(99)).is_err());
    }

    #[test]
    fn transitions_resolve_against_exact_spectrum() {
        let sys = system(0.15, &[]);
        let w = sys.transition_frequency(Transition::SgE0S2).unwrap();
        let e0 = sys.eigensystem().energy(sys.eigensystem().rabi_index(0).unwrap());
        assert_abs_diff_eq!(w, e0 + 10.0 - 2.0, epsilon = 1e-10);
        let el = sys.transition_matrix_element(Transition::SgE0S2).unwrap().norm();
        let pert = crate::perturbation::transition_element(sys.params(), Transition::SgE0S2).unwrap();
        assert!((el - pert.abs()).abs() < 0.05 * el);
    }

    #[test]
    fn eigenstate_is_stationary_without_drive_or_loss() {
        let sys = system(0.15, &[]);
        let init = prepare_state(sys.eigensystem(), StateLabel::Dressed(1)).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 5.0).collect();
        let ts = evolve(&sys, &init, &[], &times, &Observable::defaults(), &EvolveOptions::default()).unwrap();
        let n = ts.column("photon_number").unwrap();
        for v in n {
            assert_abs_diff_eq!(*v, n[0], epsilon = 1e-12);
        }
        assert!(n[0] > 0.5);
        assert!(ts.column("g2").unwrap().iter().all(|v| v.abs() <= 1e-14));
    }

    #[test]
    fn rk4_agrees_with_exact_free_propagation() {
        // A pulse far outside the window forces Runge-Kutta steps while
        // contributing nothing; compare to the exact drive-free solution.
        let diss = [
            DissipationSpec::new(DissipationChannel::Cavity, 0.02),
            DissipationSpec::new(DissipationChannel::AtomEg, 0.01),
            DissipationSpec::new(DissipationChannel::AtomGs, 0.01),
        ];
        let sys = system(0.2, &diss);
        let eig = sys.eigensystem();
        let sp = eig.space();
        let v = (sp.basis_vector(AtomState::G, 2).unwrap() + sp.basis_vector(AtomState::E, 1).unwrap())
            .unscale(2f64.sqrt());
        let init = QuantumState::pure(sp, v).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 2.0).collect();
        let obs = Observable::defaults();
        let free = evolve(&sys, &init, &[], &times, &obs, &EvolveOptions::default()).unwrap();
        let dummy = ResolvedPulse::new(1.0, 10.0, 1.0, 0.0, DriveChannel::Sg).unwrap();
        let zero_amp = ResolvedPulse { amplitude: 1e-300, ..dummy };
        let rk = evolve(&sys, &init, &[zero_amp], &times, &obs, &EvolveOptions::default()).unwrap();
        assert!(rk.diagnostics.rk_steps > 0);
        assert_eq!(free.diagnostics.rk_steps, 0);
        let (diff, col, _) = free.max_difference(&rk).unwrap();
        assert!(diff < 1e-9, "{col}: {diff}");
    }

    #[test]
    fn driven_run_is_trace_preserving_and_converged() {
        let sys = system(0.15, &[DissipationSpec::new(DissipationChannel::Cavity, 1e-3)]);
        let init = prepare_state(sys.eigensystem(), StateLabel::Dressed(0)).unwrap();
        let spec = PulseSpec {
            carrier: Carrier::Resonant {
                transition: "se_E0_s1".into(),
            },
            center: 60.0,
            width: 12.0,
            amplitude: None,
            area_target: Some(super::super::AreaTarget {
                transition: "se_E0_s1".into(),
                multiple: 0.5,
            }),
            channel: DriveChannel::Se,
        };
        let pulse = sys.resolve(&spec).unwrap();
        let times: Vec<f64> = (0..=24).map(|k| k as f64 * 5.0).collect();
        let opts = EvolveOptions {
            max_step: 0.01,
            verify_halving: true,
        };
        let ts = evolve(&sys, &init, &[pulse], &times, &Observable::defaults(), &opts).unwrap();
        let diag = &ts.diagnostics;
        assert!(diag.max_trace_drift <= 1e-8);
        assert!(diag.min_eigenvalue >= -1e-7);
        assert!(diag.halving_change.unwrap() <= HALVING_TOL);
        assert!(ts.at("pop_s1", 120.0).unwrap() > 0.05);
    }

    #[test]
    fn coarse_steps_fail_the_halving_contract() {
        let sys = system(0.15, &[]);
        let init = prepare_state(sys.eigensystem(), StateLabel::Dressed(0)).unwrap();
        let pulse = ResolvedPulse::new(8.9, 20.0, 4.0, 1.0, DriveChannel::Both).unwrap();
        let times = [0.0, 20.0, 40.0];
        let opts = EvolveOptions {
            max_step: 0.2,
            verify_halving: true,
        };
        let err = evolve(&sys, &init, &[pulse], &times, &[Observable::PhotonNumber], &opts).unwrap_err();
        assert!(matches!(err, Error::Integration(_)), "{err}");
    }

    #[test]
    fn bad_grids_rejected() {
        let sys = system(0.1, &[]);
        let init = prepare_state(sys.eigensystem(), StateLabel::Dressed(0)).unwrap();
        let o = EvolveOptions::default();
        assert!(evolve(&sys, &init, &[], &[], &[], &o).is_err());
        assert!(evolve(&sys, &init, &[], &[0.0, 0.0], &[], &o).is_err());
        let bad = EvolveOptions { max_step: 0.0, ..o };
        assert!(evolve(&sys, &init, &[], &[0.0, 1.0], &[], &bad).is_err());
    }
}
