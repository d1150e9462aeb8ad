//! Susceptibility maps, sensing-channel extraction and guarded normalization.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::{simplified_rho, AtomicParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::FieldMap;

/// Default activity threshold, relative to the absorption peak of the same χ map.
pub const DEFAULT_EPSILON_ACTIVE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensingChannel {
    /// −Im[χ]
    #[serde(alias = "abs")]
    Absorption,
    /// Re[χ]
    #[serde(alias = "eit")]
    Dispersion,
}

impl SensingChannel {
    #[inline]
    pub fn extract(self, chi: Complex64) -> f64 {
        match self {
            SensingChannel::Absorption => -chi.im,
            SensingChannel::Dispersion => chi.re,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            SensingChannel::Absorption => "abs",
            SensingChannel::Dispersion => "eit",
        }
    }
}

impl fmt::Display for SensingChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for SensingChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abs" | "absorption" => Ok(SensingChannel::Absorption),
            "eit" | "dispersion" => Ok(SensingChannel::Dispersion),
            other => Err(Error::invalid(
                "channel",
                format!("expected abs|eit, got `{other}`"),
            )),
        }
    }
}

/// χ(x, y) at probe detuning `delta_p` from the single-detuning coherence.
pub fn susceptibility_map(
    params: &AtomicParams,
    gamma: f64,
    delta_p: f64,
    omega1: &FieldMap<f64>,
    omega2: &FieldMap<f64>,
) -> Result<FieldMap<Complex64>> {
    susceptibility_map_with(Execution::default(), params, gamma, delta_p, omega1, omega2)
}

pub fn susceptibility_map_with(
    exec: Execution,
    params: &AtomicParams,
    gamma: f64,
    delta_p: f64,
    omega1: &FieldMap<f64>,
    omega2: &FieldMap<f64>,
) -> Result<FieldMap<Complex64>> {
    if omega1.grid() != omega2.grid() {
        return Err(Error::GridMismatch);
    }
    params.validate()?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("must be finite and > 0, got {gamma}"),
        ));
    }
    if !delta_p.is_finite() {
        return Err(Error::invalid("detuning", "must be finite"));
    }
    let scale = params.prefactor / params.probe_rabi;
    let (o1, o2) = (omega1.values(), omega2.values());
    let chi = FieldMap::from_fn(exec, *omega1.grid(), |j, i| {
        simplified_rho(gamma, delta_p, o1[[j, i]], o2[[j, i]], params.probe_rabi) * scale
    });
    if chi
        .values()
        .iter()
        .all(|c| c.re.is_finite() && c.im.is_finite())
    {
        Ok(chi)
    } else {
        Err(Error::NonFinite("susceptibility map"))
    }
}

pub fn channel_signal(chi: &FieldMap<Complex64>, channel: SensingChannel) -> FieldMap<f64> {
    chi.map(Execution::default(), |c| channel.extract(*c))
}

/// A channel signal scaled to unit peak, or left raw and flagged inactive when
/// its peak is below threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSignal {
    pub map: FieldMap<f64>,
    /// max |value| before normalization.
    pub raw_peak: f64,
    pub active: bool,
}

/// Divide by max |signal| unless that peak is below `epsilon_active`, in which
/// case the raw map is kept and flagged. Never divides by a vanishing peak.
pub fn normalize_with_guard(signal: &FieldMap<f64>, epsilon_active: f64) -> NormalizedSignal {
    debug_assert!(epsilon_active > 0.0);
    let raw_peak = signal.max_abs();
    // `!(a < b)` also routes a NaN threshold to the inactive branch
    if raw_peak > 0.0 && !(raw_peak < epsilon_active) {
        NormalizedSignal {
            map: signal.map(Execution::default(), |v| v / raw_peak),
            raw_peak,
            active: true,
        }
    } else {
        NormalizedSignal {
            map: signal.clone(),
            raw_peak,
            active: false,
        }
    }
}

/// Absolute threshold for one χ map: `relative × max|−Im χ|`.
pub fn activity_threshold(chi: &FieldMap<Complex64>, relative: f64) -> f64 {
    let abs_peak = chi.values().iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    relative * abs_peak
}
