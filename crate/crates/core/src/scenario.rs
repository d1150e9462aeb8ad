//! Comparison protocols, detuning scans and waist calibration.
//!
//! Each protocol pairs an absorption detuning with a dispersion detuning and
//! sweeps super-Gaussian orders:
//!
//! | kind     | Δp (abs) | Δp (EIT) |
//! |----------|----------|----------|
//! | same     | 0.5γ     | 0.5γ     |
//! | optimal  | 0.0γ     | 0.5γ     |
//! | switched | 0.5γ     | 0.0γ     |

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::AtomicParams;
use crate::beam::{
    control_field_maps_with, sample, Axis, Grid2D, SuperGaussianBeam, DEFAULT_PEAK_RABI,
    DEFAULT_WAIST,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::FieldMap;
use crate::metrics::{build_comparison_row, ChannelResult, ComparisonRow};
use crate::response::{
    activity_threshold, normalize_with_guard, susceptibility_map_with, SensingChannel,
    DEFAULT_EPSILON_ACTIVE,
};

pub const DEFAULT_ORDERS: [u32; 4] = [1, 2, 3, 10];

/// Waist candidates (λ) swept by the default calibration.
pub const DEFAULT_WAIST_CANDIDATES: [f64; 5] = [0.1, 0.15, 0.2, 0.25, 0.3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    #[serde(alias = "same_detuning")]
    Same,
    #[serde(alias = "optimal_detuning")]
    Optimal,
    #[serde(alias = "switched_detuning")]
    Switched,
}

impl ScenarioKind {
    /// (absorption, dispersion) probe detunings in γ.
    pub fn default_detunings(self) -> (f64, f64) {
        match self {
            ScenarioKind::Same => (0.5, 0.5),
            ScenarioKind::Optimal => (0.0, 0.5),
            ScenarioKind::Switched => (0.5, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Same => "same",
            ScenarioKind::Optimal => "optimal",
            ScenarioKind::Switched => "switched",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "same" => Ok(ScenarioKind::Same),
            "optimal" => Ok(ScenarioKind::Optimal),
            "switched" => Ok(ScenarioKind::Switched),
            other => Err(Error::invalid(
                "scenario",
                format!("expected same|optimal|switched, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub abs_detuning: f64,
    pub eit_detuning: f64,
    pub orders: Vec<u32>,
    pub atomic: AtomicParams,
    /// Common decay rate Γ of the single-detuning model.
    pub gamma: f64,
    /// Beam templates; `order` is replaced per sweep entry.
    pub beam_x: SuperGaussianBeam,
    pub beam_y: SuperGaussianBeam,
    pub grid: Grid2D,
    /// Activity threshold relative to the absorption peak.
    pub epsilon_active: f64,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        let (abs_detuning, eit_detuning) = kind.default_detunings();
        ScenarioConfig {
            kind,
            abs_detuning,
            eit_detuning,
            orders: DEFAULT_ORDERS.to_vec(),
            atomic: AtomicParams::default(),
            gamma: 1.0,
            beam_x: SuperGaussianBeam {
                peak_rabi: DEFAULT_PEAK_RABI,
                waist: DEFAULT_WAIST,
                order: 1,
                axis: Axis::X,
            },
            beam_y: SuperGaussianBeam {
                peak_rabi: DEFAULT_PEAK_RABI,
                waist: DEFAULT_WAIST,
                order: 1,
                axis: Axis::Y,
            },
            grid: Grid2D::default(),
            epsilon_active: DEFAULT_EPSILON_ACTIVE,
        }
    }

    pub fn with_waist(mut self, waist: f64) -> Self {
        self.beam_x = self.beam_x.with_waist(waist);
        self.beam_y = self.beam_y.with_waist(waist);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("abs_detuning", self.abs_detuning),
            ("eit_detuning", self.eit_detuning),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.kind == ScenarioKind::Same && self.abs_detuning != self.eit_detuning {
            return Err(Error::invalid(
                "eit_detuning",
                format!(
                    "same-detuning scenario needs equal detunings, got abs {} vs eit {}",
                    self.abs_detuning, self.eit_detuning
                ),
            ));
        }
        if let Some(&p) = self.orders.iter().find(|&&p| p == 0) {
            return Err(Error::invalid(
                "orders",
                format!("super-Gaussian order must be >= 1, got {p}"),
            ));
        }
        self.atomic.validate()?;
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be finite and > 0"));
        }
        if self.beam_x.axis == self.beam_y.axis {
            return Err(Error::AxisMismatch(self.beam_x.axis));
        }
        self.beam_x.with_order(1).validate()?;
        self.beam_y.with_order(1).validate()?;
        self.grid.validate()?;
        if !(self.epsilon_active.is_finite() && self.epsilon_active > 0.0) {
            return Err(Error::invalid("epsilon_active", "must be finite and > 0"));
        }
        Ok(())
    }

    /// `true` if Ωp is within the weak-probe regime for these beams.
    pub fn weak_probe_ok(&self) -> bool {
        self.atomic
            .weak_probe_ok(self.beam_x.peak_rabi.min(self.beam_y.peak_rabi))
    }

    fn chi_map(&self, exec: Execution, order: u32, detuning: f64) -> Result<FieldMap<Complex64>> {
        let (o1, o2) = control_field_maps_with(
            exec,
            &self.beam_x.with_order(order),
            &self.beam_y.with_order(order),
            &self.grid,
        )?;
        susceptibility_map_with(exec, &self.atomic, self.gamma, detuning, &o1, &o2)
    }

    fn channel_from_chi(
        &self,
        exec: Execution,
        chi: &FieldMap<Complex64>,
        channel: SensingChannel,
        detuning: f64,
    ) -> ChannelResult {
        let signal = chi.map(exec, |c| channel.extract(*c));
        let threshold = activity_threshold(chi, self.epsilon_active);
        let normalized = normalize_with_guard(&signal, threshold);
        ChannelResult::from_signal(exec, channel, detuning, &normalized)
    }

    /// Metrics of one channel for one order at one detuning.
    pub fn evaluate_channel(
        &self,
        exec: Execution,
        order: u32,
        channel: SensingChannel,
        detuning: f64,
    ) -> ChannelResult {
        match self.chi_map(exec, order, detuning) {
            Ok(chi) => self.channel_from_chi(exec, &chi, channel, detuning),
            Err(e) => ChannelResult::failed(channel, detuning, &e),
        }
    }

    fn row(&self, exec: Execution, order: u32) -> ComparisonRow {
        let (abs, eit) = if self.abs_detuning.to_bits() == self.eit_detuning.to_bits() {
            match self.chi_map(exec, order, self.abs_detuning) {
                Ok(chi) => (
                    self.channel_from_chi(
                        exec,
                        &chi,
                        SensingChannel::Absorption,
                        self.abs_detuning,
                    ),
                    self.channel_from_chi(
                        exec,
                        &chi,
                        SensingChannel::Dispersion,
                        self.eit_detuning,
                    ),
                ),
                Err(e) => (
                    ChannelResult::failed(SensingChannel::Absorption, self.abs_detuning, &e),
                    ChannelResult::failed(SensingChannel::Dispersion, self.eit_detuning, &e),
                ),
            }
        } else {
            (
                self.evaluate_channel(exec, order, SensingChannel::Absorption, self.abs_detuning),
                self.evaluate_channel(exec, order, SensingChannel::Dispersion, self.eit_detuning),
            )
        };
        let mut row = build_comparison_row(order, abs, eit);
        if !self.weak_probe_ok() {
            row.notes.push(
                "probe_rabi exceeds 0.1 x weakest control peak (weak-probe regime left)".into(),
            );
        }
        row
    }
}

/// One comparison row per configured order, in configuration order. Row-level
/// failures are carried as notes on the row; only an invalid configuration
/// fails the whole run.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<ComparisonRow>> {
    run_scenario_with(Execution::default(), config)
}

pub fn run_scenario_with(exec: Execution, config: &ScenarioConfig) -> Result<Vec<ComparisonRow>> {
    config.validate()?;
    Ok(exec.map(&config.orders, |&p| config.row(exec, p)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub channel: SensingChannel,
    pub order: u32,
    pub detunings: Vec<f64>,
    /// Max gradient per detuning; `None` where the channel is inactive.
    pub metric_values: Vec<Option<f64>>,
    pub best_detuning: Option<f64>,
}

/// Max gradient of `channel` over `steps` evenly spaced detunings in
/// `[range_min, range_max]`, for the first order in `config.orders`.
/// Ties in the best value go to the larger detuning.
pub fn detuning_scan(
    config: &ScenarioConfig,
    channel: SensingChannel,
    range_min: f64,
    range_max: f64,
    steps: usize,
) -> Result<ScanResult> {
    detuning_scan_with(
        Execution::default(),
        config,
        channel,
        range_min,
        range_max,
        steps,
    )
}

pub fn detuning_scan_with(
    exec: Execution,
    config: &ScenarioConfig,
    channel: SensingChannel,
    range_min: f64,
    range_max: f64,
    steps: usize,
) -> Result<ScanResult> {
    config.validate()?;
    if steps < 3 {
        return Err(Error::invalid(
            "steps",
            format!("need at least 3 scan points, got {steps}"),
        ));
    }
    if !(range_min.is_finite() && range_max.is_finite() && range_min < range_max) {
        return Err(Error::invalid("min", "scan range must satisfy min < max"));
    }
    let order = *config
        .orders
        .first()
        .ok_or_else(|| Error::invalid("orders", "scan needs at least one order"))?;

    let detunings: Vec<f64> = (0..steps)
        .map(|k| sample(range_min, range_max, steps, k))
        .collect();
    let results = exec.map(&detunings, |&d| {
        config.evaluate_channel(exec, order, channel, d)
    });
    let metric_values: Vec<Option<f64>> = results.iter().map(|r| r.max_gradient).collect();

    let mut best: Option<(f64, f64)> = None;
    for (&d, v) in detunings.iter().zip(&metric_values) {
        if let Some(v) = *v {
            best = match best {
                Some((bd, bv)) if v < bv || (v == bv && d <= bd) => Some((bd, bv)),
                _ => Some((d, v)),
            };
        }
    }
    let (best_detuning, _) = best.ok_or(Error::AllInactive)?;
    Ok(ScanResult {
        channel,
        order,
        detunings,
        metric_values,
        best_detuning: Some(best_detuning),
    })
}

/// A row of published reference metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub order: u32,
    pub max_grad_abs: f64,
    pub max_grad_eit: Option<f64>,
    pub gradient_ratio: Option<f64>,
    pub fwhm_ratio: Option<f64>,
}

const fn reference(order: u32, abs: f64, eit: f64, gr: f64, fr: f64) -> ReferenceRow {
    ReferenceRow {
        order,
        max_grad_abs: abs,
        max_grad_eit: Some(eit),
        gradient_ratio: Some(gr),
        fwhm_ratio: Some(fr),
    }
}

/// Same detuning, Δp = 0.5γ for both channels.
pub const REFERENCE_SAME: [ReferenceRow; 4] = [
    reference(1, 67.54, 158.89, 2.35, 2.53),
    reference(2, 142.65, 329.27, 2.31, 3.03),
    reference(3, 193.63, 427.96, 2.21, 3.17),
    reference(10, 249.37, 396.03, 1.59, 3.45),
];

/// Optimal detuning: absorption at 0.0γ, EIT at 0.5γ.
pub const REFERENCE_OPTIMAL: [ReferenceRow; 4] = [
    reference(1, 13.406, 158.895, 11.85, 1.34),
    reference(2, 36.860, 329.267, 8.93, 1.17),
    reference(3, 60.956, 427.963, 7.02, 1.10),
    reference(10, 193.239, 396.027, 2.05, 1.03),
];

const fn switched(order: u32, abs: f64) -> ReferenceRow {
    ReferenceRow {
        order,
        max_grad_abs: abs,
        max_grad_eit: None,
        gradient_ratio: None,
        fwhm_ratio: None,
    }
}

/// Switched detuning: absorption at 0.5γ, EIT at 0.0γ (EIT undefined).
pub const REFERENCE_SWITCHED: [ReferenceRow; 4] = [
    switched(1, 67.54),
    switched(2, 142.65),
    switched(3, 193.63),
    switched(10, 249.37),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub waist: f64,
    pub gradient_ratios: Vec<Option<f64>>,
    /// Relative error per target row; `None` where the ratio is undefined.
    pub relative_errors: Vec<Option<f64>>,
    /// Summed squared relative error (infinite if any ratio is undefined).
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub waist: f64,
    pub entries: Vec<CalibrationEntry>,
}

/// Choose the waist whose same-detuning gradient ratios best match `targets`
/// in summed squared relative error. `base` supplies everything except the
/// waist, the scenario kind and the orders (taken from `targets`). Ties keep
/// the earlier candidate.
pub fn calibrate_waist(
    base: &ScenarioConfig,
    targets: &[ReferenceRow],
    candidates: &[f64],
) -> Result<Calibration> {
    calibrate_waist_with(Execution::default(), base, targets, candidates)
}

pub fn calibrate_waist_with(
    exec: Execution,
    base: &ScenarioConfig,
    targets: &[ReferenceRow],
    candidates: &[f64],
) -> Result<Calibration> {
    if candidates.is_empty() {
        return Err(Error::invalid(
            "candidates",
            "need at least one waist candidate",
        ));
    }
    if let Some(&w) = candidates.iter().find(|&&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::invalid(
            "candidates",
            format!("waists must be > 0, got {w}"),
        ));
    }
    if targets.iter().any(|t| t.gradient_ratio.is_none()) {
        return Err(Error::invalid(
            "targets",
            "every target row needs a gradient ratio",
        ));
    }
    let mut config = base.clone();
    config.kind = ScenarioKind::Same;
    config.eit_detuning = config.abs_detuning;
    config.orders = targets.iter().map(|t| t.order).collect();
    config.validate()?;

    let entries: Vec<CalibrationEntry> = exec.map(candidates, |&w| {
        let cfg = config.clone().with_waist(w);
        let rows: Vec<ComparisonRow> = exec.map(&cfg.orders, |&p| cfg.row(exec, p));
        let gradient_ratios: Vec<Option<f64>> = rows.iter().map(|r| r.gradient_ratio).collect();
        let relative_errors: Vec<Option<f64>> = gradient_ratios
            .iter()
            .zip(targets)
            .map(|(r, t)| {
                let target = t.gradient_ratio.expect("checked above");
                r.map(|r| (r - target) / target)
            })
            .collect();
        let cost = relative_errors
            .iter()
            .map(|e| e.map_or(f64::INFINITY, |e| e * e))
            .sum();
        CalibrationEntry {
            waist: w,
            gradient_ratios,
            relative_errors,
            cost,
        }
    });

    let best = entries
        .iter()
        .fold(None::<&CalibrationEntry>, |best, e| match best {
            Some(b) if b.cost <= e.cost => Some(b),
            _ => Some(e),
        })
        .expect("candidates is non-empty");
    Ok(Calibration {
        waist: best.waist,
        entries: entries.clone(),
    })
}
