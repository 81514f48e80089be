use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::perturbation::Transition;
use crate::{Error, Result};

/// Envelope values below this fraction of the peak are treated as zero
/// (beyond about 8.3 standard deviations from the centre).
pub const ENVELOPE_CUTOFF: f64 = 1e-15;

/// Which drive operator a pulse couples through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveChannel {
    Sg,
    Se,
    Both,
}

impl DriveChannel {
    pub fn drives_sg(self) -> bool {
        matches!(self, DriveChannel::Sg | DriveChannel::Both)
    }

    pub fn drives_se(self) -> bool {
        matches!(self, DriveChannel::Se | DriveChannel::Both)
    }
}

impl fmt::Display for DriveChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriveChannel::Sg => "sg",
            DriveChannel::Se => "se",
            DriveChannel::Both => "both",
        })
    }
}

/// Carrier frequency, either explicit or resonant with a conversion
/// transition (`E_k - E(s, n)` in the exact spectrum).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Carrier {
    Frequency(f64),
    Resonant { transition: String },
}

/// Pulse area target: `multiple * pi` on the named transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaTarget {
    pub transition: String,
    #[serde(default = "one")]
    pub multiple: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq)]
pub enum PulseAmplitude {
    Peak(f64),
    Area(AreaTarget),
}

/// Gaussian pulse `A(t) cos(w t)` with `A(t) = A_0 exp(-(t - t_0)^2 / 2 sigma^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub carrier: Carrier,
    pub center: f64,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_target: Option<AreaTarget>,
    pub channel: DriveChannel,
}

impl PulseSpec {
    /// Collect every problem with this pulse, prefixed by `path`.
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.width > 0.0 && self.width.is_finite()) {
            out.push(format!("{path}.width: must be > 0, got {}", self.width));
        }
        if !self.center.is_finite() {
            out.push(format!("{path}.center: must be finite"));
        }
        match (&self.amplitude, &self.area_target) {
            (Some(_), Some(_)) | (None, None) => out.push(format!(
                "{path}: set exactly one of `amplitude` and `area_target`"
            )),
            (Some(a), None) if !a.is_finite() => {
                out.push(format!("{path}.amplitude: must be finite"))
            }
            (None, Some(t)) => {
                if Transition::from_name(&t.transition).is_none() {
                    out.push(format!(
                        "{path}.area_target.transition: unknown transition `{}`",
                        t.transition
                    ));
                }
                if !(t.multiple >= 0.0 && t.multiple.is_finite()) {
                    out.push(format!(
                        "{path}.area_target.multiple: must be >= 0, got {}",
                        t.multiple
                    ));
                }
            }
            _ => {}
        }
        match &self.carrier {
            Carrier::Frequency(w) if !w.is_finite() => {
                out.push(format!("{path}.carrier: must be finite"))
            }
            Carrier::Resonant { transition } if Transition::from_name(transition).is_none() => out
                .push(format!(
                    "{path}.carrier.transition: unknown transition `{transition}`"
                )),
            _ => {}
        }
        out
    }

    pub fn amplitude_spec(&self) -> Result<PulseAmplitude> {
        match (&self.amplitude, &self.area_target) {
            (Some(a), None) => Ok(PulseAmplitude::Peak(*a)),
            (None, Some(t)) => Ok(PulseAmplitude::Area(t.clone())),
            _ => Err(Error::invalid(
                "pulse needs exactly one of `amplitude` and `area_target`",
            )),
        }
    }
}

/// A pulse with concrete carrier and peak amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedPulse {
    pub carrier: f64,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub channel: DriveChannel,
}

impl ResolvedPulse {
    pub fn new(carrier: f64, center: f64, width: f64, amplitude: f64, channel: DriveChannel) -> Result<Self> {
        if width.is_nan() || width <= 0.0 {
            return Err(Error::invalid(format!("pulse width must be > 0, got {width}")));
        }
        Ok(ResolvedPulse {
            carrier,
            center,
            width,
            amplitude,
            channel,
        })
    }

    /// `A(t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.width;
        self.amplitude * (-0.5 * u * u).exp()
    }

    /// `A(t) cos(w t)`.
    pub fn field(&self, t: f64) -> f64 {
        self.envelope(t) * (self.carrier * t).cos()
    }

    /// Half-width beyond which the envelope is below [`ENVELOPE_CUTOFF`]
    /// of its peak.
    pub fn support_half_width(&self) -> f64 {
        self.width * (-2.0 * ENVELOPE_CUTOFF.ln()).sqrt()
    }

    /// Whether the envelope is negligible everywhere on `[t0, t1]`.
    pub fn is_off(&self, t0: f64, t1: f64) -> bool {
        if self.amplitude == 0.0 {
            return true;
        }
        let h = self.support_half_width();
        t1 < self.center - h || t0 > self.center + h
    }
}

/// Peak amplitude of a Gaussian pulse of area `multiple * pi` on a
/// transition with matrix element `element`.
///
/// Under a cosine carrier the rotating-wave coupling is `A(t) element / 2`,
/// so the Rabi angle is `|element| * integral A dt`; with
/// `integral A dt = A_0 sigma sqrt(2 pi)` this gives
/// `A_0 = multiple * pi / (|element| sigma sqrt(2 pi))`.
pub fn pulse_amplitude_for_pi(element: f64, sigma_t: f64, multiple: f64) -> Result<f64> {
    if element == 0.0 || !element.is_finite() {
        return Err(Error::invalid(format!(
            "transition element {element} is dark; no finite pi-pulse amplitude"
        )));
    }
    if sigma_t.is_nan() || sigma_t <= 0.0 {
        return Err(Error::invalid(format!("sigma_t must be > 0, got {sigma_t}")));
    }
    Ok(multiple * PI / (element.abs() * sigma_t * (2.0 * PI).sqrt()))
}
