//! Jaynes-Cummings Green's functions and second-order counter-rotating
//! corrections.
//!
//! The rotating-wave Hamiltonian `H_0 + V_r` splits into doublets
//! `{|e,n>, |g,n+1>}`, so its resolvent `G(z) = (z - H_0 - V_r)^{-1}` is
//! known in closed form. The counter-rotating part `V_nr` is then treated to
//! second order around the Jaynes-Cummings states:
//!
//! - `V_nr |g,0> = Omega |e,1>`, so the ground-state shift is
//!   `Omega^2 <e,1|G(0)|e,1>` and the admixture of `|g,2>` is
//!   `Omega <g,2|G(0)|e,1>`.
//! - `V_nr |E-_1> = -sqrt(2) S_1 Omega |e,2>`: the `|g,1>` part is raised to
//!   `|e,2>` and the `|e,0>` part is annihilated. The first excited level
//!   shifts by `2 S_1^2 Omega^2 <e,2|G(E-_1)|e,2>`, and its `|g,3>` and
//!   `|e,2>` admixtures follow from `<g,3|G|e,2>` and `<e,2|G|e,2>`.
//!
//! Projecting those admixtures onto the drive operators gives the four
//! conversion matrix elements of [`Transition`]. Energies are measured from
//! `|g>` in units of the cavity frequency, and every Green's function takes
//! an explicit complex argument `z`.

use std::fmt;

use num_complex::Complex64;

use crate::model::{AtomState, ModelParams};
use crate::spectrum::jc_level;
use crate::{Error, Result};

/// Relative distance to a pole below which evaluation is refused.
pub const POLE_TOL: f64 = 1e-9;
/// Denominators smaller than this are treated as singular.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Matrix element of `G(z)` within the doublet `{|e,n>, |g,n+1>}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GreensElement {
    /// `<e,n|G|e,n>`
    Ee(usize),
    /// `<e,n|G|g,n+1>`, equal to `<g,n+1|G|e,n>`
    Eg(usize),
    /// `<g,n+1|G|g,n+1>`
    Gg(usize),
}

impl GreensElement {
    pub fn block(self) -> usize {
        match self {
            GreensElement::Ee(n) | GreensElement::Eg(n) | GreensElement::Gg(n) => n,
        }
    }

    pub fn is_diagonal(self) -> bool {
        !matches!(self, GreensElement::Eg(_))
    }
}

impl fmt::Display for GreensElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreensElement::Ee(n) => write!(f, "ee({n})"),
            GreensElement::Eg(n) => write!(f, "eg({n})"),
            GreensElement::Gg(n) => write!(f, "gg({n})"),
        }
    }
}

fn pole_guard(what: impl fmt::Display, z: Complex64, pole: Complex64) -> Result<()> {
    let distance = (z - pole).norm();
    if distance <= POLE_TOL * pole.norm().max(1.0) {
        return Err(Error::Pole {
            what: what.to_string(),
            z: z.to_string(),
            pole: pole.to_string(),
            distance,
        });
    }
    Ok(())
}

fn bare_energy(params: &ModelParams, q: AtomState, n: usize) -> f64 {
    let atom = match q {
        AtomState::G => 0.0,
        AtomState::E => params.omega_eg,
        AtomState::S => params.omega_s,
    };
    atom + n as f64 * params.omega_c
}

/// `<q,n|G_0(z)|q,n> = 1 / (z - omega_q - n omega_c)`.
pub fn free_greens(params: &ModelParams, z: Complex64, q: AtomState, n: usize) -> Result<Complex64> {
    let pole = Complex64::new(bare_energy(params, q, n), 0.0);
    pole_guard(format_args!("G0 for |{q},{n}>"), z, pole)?;
    Ok((z - pole).inv())
}

/// Closed-form element of the Jaynes-Cummings resolvent.
///
/// With `A = omega_eg + n omega_c`, `B = (n+1) omega_c` and
/// `D = (z - A)(z - B) - (n+1) Omega^2`:
/// `ee = (z - B)/D`, `eg = sqrt(n+1) Omega / D`, `gg = (z - A)/D`.
pub fn jc_greens(params: &ModelParams, z: Complex64, element: GreensElement) -> Result<Complex64> {
    let n = element.block();
    let a = bare_energy(params, AtomState::E, n);
    let b = bare_energy(params, AtomState::G, n + 1);
    let coupling = (n as f64 + 1.0).sqrt() * params.rabi_coupling;
    let half_gap = (0.5 * (a - b)).hypot(coupling);
    let mean = 0.5 * (a + b);
    for pole in [mean - half_gap, mean + half_gap] {
        pole_guard(element, z, Complex64::new(pole, 0.0))?;
    }
    let denom = (z - a) * (z - b) - coupling * coupling;
    if denom.norm() <= DENOMINATOR_TOL {
        return Err(Error::Pole {
            what: element.to_string(),
            z: z.to_string(),
            pole: format!("{mean} +- {half_gap}"),
            distance: denom.norm(),
        });
    }
    let num = match element {
        GreensElement::Ee(_) => z - b,
        GreensElement::Eg(_) => Complex64::new(coupling, 0.0),
        GreensElement::Gg(_) => z - a,
    };
    Ok(num / denom)
}

/// Geometric ratio `(n+1) Omega^2 G0_e G0_g` of the Dyson series in block `n`.
pub fn dyson_ratio(params: &ModelParams, z: Complex64, n: usize) -> Result<Complex64> {
    let ge = free_greens(params, z, AtomState::E, n)?;
    let gg = free_greens(params, z, AtomState::G, n + 1)?;
    Ok((n as f64 + 1.0) * params.rabi_coupling.powi(2) * ge * gg)
}

type Block = [[Complex64; 2]; 2];

fn mul(x: &Block, y: &Block) -> Block {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Partial sums `S_0, ..., S_K` of `G = G0 + G0 V_r G0 + G0 V_r G0 V_r G0 + ...`
/// for one element, `K = max_order`.
///
/// Order `k` carries `k` factors of `V_r`. Because `V_r` swaps `|e,n>` and
/// `|g,n+1>` while `G0` is diagonal, odd orders contribute nothing to the
/// diagonal elements and even orders nothing to the off-diagonal one; those
/// increments are exactly zero. Fails with [`Error::Divergence`] when the
/// ratio `|sigma| >= 1`.
pub fn dyson_partial_sum(
    params: &ModelParams,
    z: Complex64,
    element: GreensElement,
    max_order: usize,
) -> Result<Vec<Complex64>> {
    let n = element.block();
    let sigma = dyson_ratio(params, z, n)?;
    if sigma.norm() >= 1.0 {
        return Err(Error::Divergence(sigma.norm()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let g0: Block = [
        [free_greens(params, z, AtomState::E, n)?, zero],
        [zero, free_greens(params, z, AtomState::G, n + 1)?],
    ];
    let v = Complex64::new((n as f64 + 1.0).sqrt() * params.rabi_coupling, 0.0);
    let vr: Block = [[zero, v], [v, zero]];
    let step = mul(&vr, &g0);
    let (r, c) = match element {
        GreensElement::Ee(_) => (0, 0),
        GreensElement::Eg(_) => (0, 1),
        GreensElement::Gg(_) => (1, 1),
    };
    let mut term = g0;
    let mut sum = zero;
    let mut out = Vec::with_capacity(max_order + 1);
    for order in 0..=max_order {
        if order > 0 {
            term = mul(&term, &step);
        }
        sum += term[r][c];
        out.push(sum);
    }
    Ok(out)
}

/// Second-order counter-rotating energy shift of the ground state (level 0)
/// or of the lower first-excited polariton (level 1).
///
/// Level 0 is `Omega^2 <e,1|G(0)|e,1>`, which on resonance equals
/// `Omega^2 / (Omega^2 - 2 omega_c^2)` (times `omega_c`). Level 1 is
/// `2 S_1^2 Omega^2 <e,2|G(E-_1)|e,2>`; on resonance this is
/// `-Omega^2 (Omega + 2 omega_c) / (4 omega_c^2 + 4 Omega omega_c - 2 Omega^2)`.
/// Both tend to `-Omega^2 / (2 omega_c)` at weak coupling.
pub fn energy_correction2(params: &ModelParams, level: usize) -> Result<f64> {
    let omega = params.rabi_coupling;
    let value = match level {
        0 => omega * omega * jc_greens(params, Complex64::new(0.0, 0.0), GreensElement::Ee(1))?,
        1 => {
            let l = jc_level(params, 1)?;
            let z = Complex64::new(l.energy_minus, 0.0);
            2.0 * l.s * l.s * omega * omega * jc_greens(params, z, GreensElement::Ee(2))?
        }
        _ => {
            return Err(Error::invalid(format!(
                "energy_correction2 supports levels 0 and 1, got {level}"
            )))
        }
    };
    Ok(value.re)
}

/// Drive matrix elements that convert virtual photons into real ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    /// `<s,2|V_sg|E_0> = mu_sg c^0_{g,2}`
    SgE0S2,
    /// `<s,3|V_sg|E_1> = mu_sg c^1_{g,3}`
    SgE1S3,
    /// `<s,1|V_se|E_0> = mu_se d^0_{e,1}`
    SeE0S1,
    /// `<s,2|V_se|E_1> = mu_se d^1_{e,2}`
    SeE1S2,
}

impl Transition {
    pub const ALL: [Transition; 4] = [
        Transition::SgE0S2,
        Transition::SgE1S3,
        Transition::SeE0S1,
        Transition::SeE1S2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transition::SgE0S2 => "sg_E0_s2",
            Transition::SgE1S3 => "sg_E1_s3",
            Transition::SeE0S1 => "se_E0_s1",
            Transition::SeE1S2 => "se_E1_s2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Index `k` of the dressed state `|E_k>`.
    pub fn dressed_level(self) -> usize {
        match self {
            Transition::SgE0S2 | Transition::SeE0S1 => 0,
            Transition::SgE1S3 | Transition::SeE1S2 => 1,
        }
    }

    /// Photon number of the target `|s,n>`.
    pub fn target_photons(self) -> usize {
        match self {
            Transition::SgE0S2 => 2,
            Transition::SgE1S3 => 3,
            Transition::SeE0S1 => 1,
            Transition::SeE1S2 => 2,
        }
    }

    /// Bare atomic level of `|E_k>` reached by the drive operator.
    pub fn atom(self) -> AtomState {
        match self {
            Transition::SgE0S2 | Transition::SgE1S3 => AtomState::G,
            Transition::SeE0S1 | Transition::SeE1S2 => AtomState::E,
        }
    }

    pub fn dipole(self, params: &ModelParams) -> f64 {
        match self.atom() {
            AtomState::G => params.mu_sg,
            _ => params.mu_se,
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Second-order value of a conversion matrix element.
///
/// On resonance `sg_E0_s2 = sqrt(2) Omega^2 mu_sg / (4 - 2 Omega^2)`,
/// `sg_E1_s3 = -sqrt(3) Omega^2 mu_sg / ((Omega + 2)^2 - 3 Omega^2)` and
/// `se_E0_s1 = Omega mu_se / (Omega^2 - 2)` (units of `omega_c`).
/// Signs follow the Jaynes-Cummings state convention of [`jc_level`].
pub fn transition_element(params: &ModelParams, which: Transition) -> Result<f64> {
    let omega = params.rabi_coupling;
    let zero = Complex64::new(0.0, 0.0);
    let value = match which {
        Transition::SgE0S2 => omega * params.mu_sg * jc_greens(params, zero, GreensElement::Eg(1))?,
        Transition::SeE0S1 => omega * params.mu_se * jc_greens(params, zero, GreensElement::Ee(1))?,
        Transition::SgE1S3 | Transition::SeE1S2 => {
            let l = jc_level(params, 1)?;
            let z = Complex64::new(l.energy_minus, 0.0);
            let amp = -(2.0_f64).sqrt() * l.s * omega;
            let (element, mu) = match which {
                Transition::SgE1S3 => (GreensElement::Eg(2), params.mu_sg),
                _ => (GreensElement::Ee(2), params.mu_se),
            };
            amp * mu * jc_greens(params, z, element)?
        }
    };
    Ok(value.re)
}
