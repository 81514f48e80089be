//! Driven, dissipative dynamics of the three-level system.
//!
//! The master equation is solved in the eigenbasis of the undriven
//! Hamiltonian `H_C`, in the interaction picture with respect to `H_C`:
//!
//! ```text
//! d rho_I / dt = -i E_d(t) [V_I(t), rho_I] + D(rho_I),
//! V_I(t)_ab = V_ab exp(i (E_a - E_b) t),   E_d(t) = sum_p A_p(t) cos(w_p t).
//! ```
//!
//! The dissipator `D` is built from jump operators between eigenstates
//! (see [`Liouvillian`]). It commutes with the free evolution, so the
//! interaction picture leaves it unchanged, and where the drive vanishes the
//! evolution is solved exactly. Driven stretches use classic fixed-step
//! fourth-order Runge-Kutta.

mod evolve;
mod liouvillian;
mod pulse;
mod series;

pub use evolve::{
    evolve, prepare_state, Diagnostics, DrivenSystem, EvolveOptions, Observable, StateLabel,
};
pub use liouvillian::{build_liouvillian, DissipationChannel, DissipationSpec, Liouvillian};
pub use pulse::{
    pulse_amplitude_for_pi, AreaTarget, Carrier, DriveChannel, PulseAmplitude, PulseSpec,
    ResolvedPulse, ENVELOPE_CUTOFF,
};
pub use series::TimeSeries;
