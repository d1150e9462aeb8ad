//! Steady-state probe response of the four-level tripod atom.
//!
//! Level scheme: ground states |1⟩, |2⟩, |3⟩ and excited state |4⟩. The probe
//! (Ωp, Δp ≡ Δ2) drives |2⟩↔|4⟩; control Ω1 drives |1⟩↔|4⟩ and Ω2 drives
//! |3⟩↔|4⟩. Every rate is in units of γ.
//!
//! With complex decay parameters `A_j = Γ_j4 + iΔ_j`, the weak-probe coherence is
//!
//! ```text
//! ρ24 = -i A2 A3 Ωp / [2 (A1 A2 A3 + A3 |Ω1|²/4 + A1 |Ω2|²/4)]
//! ```
//!
//! and with Δ1 = Δ3 = 0, Γ_j4 = Γ it collapses to
//!
//! ```text
//! ρ24 = -i (Γ + iΔp) Γ (Ωp/2) / [Γ³ + (Γ/4)(|Ω1|² + |Ω2|²) + iΓ²Δp]
//! ```
//!
//! The susceptibility is `χ = prefactor · ρ24 / Ωp`; with the default prefactor
//! of 1 this is the normalized susceptibility χ_N.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude below which the coherence denominator is treated as degenerate (γ³).
pub const DENOMINATOR_EPSILON: f64 = 1e-12;

/// Weak-probe validity ratio: the probe should stay below this fraction of the
/// weakest control peak.
pub const WEAK_PROBE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomicParams {
    pub gamma14: f64,
    pub gamma24: f64,
    pub gamma34: f64,
    /// Probe Rabi frequency Ωp.
    pub probe_rabi: f64,
    /// Dimensionless stand-in for 2N|d24|²/(ε0ħ).
    pub prefactor: f64,
}

impl Default for AtomicParams {
    fn default() -> Self {
        AtomicParams {
            gamma14: 1.0,
            gamma24: 1.0,
            gamma34: 1.0,
            probe_rabi: 0.1,
            prefactor: 1.0,
        }
    }
}

impl AtomicParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("atomic.gamma14", self.gamma14),
            ("atomic.gamma24", self.gamma24),
            ("atomic.gamma34", self.gamma34),
            ("atomic.probe_rabi", self.probe_rabi),
            ("atomic.prefactor", self.prefactor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// `true` when Ωp stays within the weak-probe regime relative to the
    /// weakest control peak. Leaving the regime is a warning, not an error.
    pub fn weak_probe_ok(&self, min_control_peak: f64) -> bool {
        self.probe_rabi <= WEAK_PROBE_RATIO * min_control_peak
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Detunings {
    pub delta1: f64,
    /// Probe detuning Δp.
    pub delta2: f64,
    pub delta3: f64,
}

impl Detunings {
    /// Resonant controls, probe detuned by `delta_p`.
    pub fn probe(delta_p: f64) -> Self {
        Detunings {
            delta1: 0.0,
            delta2: delta_p,
            delta3: 0.0,
        }
    }
}

/// A complex number whose components are both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexValue(Complex64);

impl ComplexValue {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::try_from_complex(Complex64::new(re, im))
    }

    pub fn try_from_complex(c: Complex64) -> Result<Self> {
        if c.re.is_finite() && c.im.is_finite() {
            Ok(ComplexValue(c))
        } else {
            Err(Error::NonFinite("complex value"))
        }
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn get(self) -> Complex64 {
        self.0
    }
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        v.0
    }
}

/// `A_j = Γ_j4 + iΔ_j` for j = 1, 2, 3.
pub fn decay_params(params: &AtomicParams, det: &Detunings) -> [Complex64; 3] {
    [
        Complex64::new(params.gamma14, det.delta1),
        Complex64::new(params.gamma24, det.delta2),
        Complex64::new(params.gamma34, det.delta3),
    ]
}

/// General three-detuning coherence ρ24.
pub fn coherence_general(
    params: &AtomicParams,
    det: &Detunings,
    omega1: f64,
    omega2: f64,
) -> Result<ComplexValue> {
    let [a1, a2, a3] = decay_params(params, det);
    let den = a1 * a2 * a3 + a3 * (omega1 * omega1 / 4.0) + a1 * (omega2 * omega2 / 4.0);
    let magnitude = den.norm();
    if !(magnitude > DENOMINATOR_EPSILON) {
        return Err(Error::DegenerateDenominator {
            magnitude,
            threshold: DENOMINATOR_EPSILON,
        });
    }
    let num = -Complex64::i() * a2 * a3 * params.probe_rabi;
    ComplexValue::try_from_complex(num / (2.0 * den))
}

/// Single-detuning coherence (Δ1 = Δ3 = 0, all Γ_j4 = Γ).
///
/// At Δp = 0 the result is exactly imaginary: the numerator is `-iΓ²Ωp/2` and
/// the denominator is real, so no rounding can leak into the real part.
pub fn coherence_simplified(
    gamma: f64,
    delta_p: f64,
    omega1: f64,
    omega2: f64,
    omega_p: f64,
) -> Result<ComplexValue> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    ComplexValue::try_from_complex(simplified_rho(gamma, delta_p, omega1, omega2, omega_p))
}

#[inline]
pub(crate) fn simplified_rho(
    gamma: f64,
    delta_p: f64,
    omega1: f64,
    omega2: f64,
    omega_p: f64,
) -> Complex64 {
    let num = -Complex64::i() * Complex64::new(gamma, delta_p) * (gamma * omega_p / 2.0);
    let den = Complex64::new(
        gamma * gamma * gamma + gamma / 4.0 * (omega1 * omega1 + omega2 * omega2),
        gamma * gamma * delta_p,
    );
    num / den
}

/// `χ = prefactor · ρ24 / Ωp`. Re is χ′ (dispersion), Im is χ″ (absorption
/// enters the sensing channel as −χ″).
pub fn susceptibility(params: &AtomicParams, rho24: ComplexValue) -> ComplexValue {
    ComplexValue(rho24.get() * (params.prefactor / params.probe_rabi))
}

/// Γ_EIT = Γ + (Ω1² + Ω2²)/(4Γ).
pub fn eit_linewidth(gamma: f64, omega1: f64, omega2: f64) -> f64 {
    gamma + (omega1 * omega1 + omega2 * omega2) / (4.0 * gamma)
}

/// Unscaled dispersive lineshape Δp/(Δp² + Γ_EIT²).
pub fn lorentzian_dispersion(delta_p: f64, gamma_eit: f64) -> f64 {
    delta_p / (delta_p * delta_p + gamma_eit * gamma_eit)
}
