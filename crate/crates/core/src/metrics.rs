//! Gradient and width metrics of normalized channel signals, and the
//! EIT-vs-absorption comparison row built from them.

use serde::Serialize;

use crate::beam::Axis;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::FieldMap;
use crate::response::{NormalizedSignal, SensingChannel};

/// |∇s| of an active normalized signal, in λ⁻¹.
pub fn gradient_map(signal: &NormalizedSignal) -> Result<FieldMap<f64>> {
    gradient_map_with(Execution::default(), signal)
}

pub fn gradient_map_with(exec: Execution, signal: &NormalizedSignal) -> Result<FieldMap<f64>> {
    if !signal.active {
        return Err(Error::InactiveChannel);
    }
    Ok(gradient_magnitude(exec, &signal.map))
}

/// Pointwise |∇s| with second-order central differences inside and
/// second-order one-sided stencils on the boundary rows/columns.
pub fn gradient_magnitude(exec: Execution, field: &FieldMap<f64>) -> FieldMap<f64> {
    let g = *field.grid();
    let (hx, hy) = (g.hx(), g.hy());
    let v = field.values();
    FieldMap::from_fn(exec, g, |j, i| {
        let dx = derivative(|k| v[[j, k]], i, g.nx, hx);
        let dy = derivative(|k| v[[k, i]], j, g.ny, hy);
        dx.hypot(dy)
    })
}

#[inline]
fn derivative(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// Largest sample of a gradient map (row-major scan, exact max).
pub fn max_gradient(grad: &FieldMap<f64>) -> f64 {
    grad.values().iter().fold(0.0, |m, &v| m.max(v))
}

/// FWHM of |signal| along the central line parallel to `axis`.
pub fn fwhm_cross_section(signal: &NormalizedSignal, axis: Axis) -> Result<f64> {
    if !signal.active {
        return Err(Error::InactiveChannel);
    }
    let coords = signal.map.grid().coords(axis);
    let profile = signal.map.central_cross_section(axis);
    fwhm_of_profile(&coords, &profile).ok_or(Error::NoHalfCrossing(axis))
}

/// Width between the outermost crossings of half of max |profile|, each
/// located by linear interpolation. `None` when either end of the profile
/// stays at or above half maximum, i.e. the feature is not contained.
pub fn fwhm_of_profile(coords: &[f64], profile: &[f64]) -> Option<f64> {
    assert_eq!(coords.len(), profile.len());
    let n = profile.len();
    if n < 3 {
        return None;
    }
    let mag: Vec<f64> = profile.iter().map(|v| v.abs()).collect();
    let peak = mag.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(peak > 0.0) {
        return None;
    }
    let half = peak / 2.0;

    let first = mag.iter().position(|&v| v >= half)?;
    let last = mag.iter().rposition(|&v| v >= half)?;
    if first == 0 || last == n - 1 {
        return None;
    }
    let cross = |a: usize, b: usize| {
        let t = (half - mag[a]) / (mag[b] - mag[a]);
        coords[a] + t * (coords[b] - coords[a])
    };
    let left = cross(first - 1, first);
    let right = cross(last, last + 1);
    Some(right - left)
}

/// Metrics for one sensing channel at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelResult {
    pub channel: SensingChannel,
    pub detuning: f64,
    /// Pre-normalization peak |signal|.
    pub raw_peak: f64,
    pub active: bool,
    pub max_gradient: Option<f64>,
    pub fwhm: Option<f64>,
    pub notes: Vec<String>,
}

impl ChannelResult {
    /// Metrics of a normalized signal. Inactive signals leave both metrics
    /// undefined; an active signal whose cross-section has no half crossing
    /// keeps its gradient and records why the width is missing.
    pub fn from_signal(
        exec: Execution,
        channel: SensingChannel,
        detuning: f64,
        signal: &NormalizedSignal,
    ) -> Self {
        let mut notes = Vec::new();
        let (max_gradient, fwhm) = if signal.active {
            let grad = gradient_magnitude(exec, &signal.map);
            let fwhm = match fwhm_cross_section(signal, Axis::X) {
                Ok(w) => Some(w),
                Err(e) => {
                    notes.push(format!("{channel}: {e}"));
                    None
                }
            };
            (Some(max_gradient(&grad)), fwhm)
        } else {
            notes.push(format!(
                "{channel}: inactive, raw peak {:.3e}",
                signal.raw_peak
            ));
            (None, None)
        };
        ChannelResult {
            channel,
            detuning,
            raw_peak: signal.raw_peak,
            active: signal.active,
            max_gradient,
            fwhm,
            notes,
        }
    }

    /// A channel whose evaluation failed before metrics could be formed.
    pub fn failed(channel: SensingChannel, detuning: f64, err: &Error) -> Self {
        ChannelResult {
            channel,
            detuning,
            raw_peak: 0.0,
            active: false,
            max_gradient: None,
            fwhm: None,
            notes: vec![format!("{channel}: {err}")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub order: u32,
    pub abs: ChannelResult,
    pub eit: ChannelResult,
    /// R_g,EIT / R_g,abs
    pub gradient_ratio: Option<f64>,
    /// FWHM_abs / FWHM_EIT
    pub fwhm_ratio: Option<f64>,
    pub notes: Vec<String>,
}

pub fn build_comparison_row(order: u32, abs: ChannelResult, eit: ChannelResult) -> ComparisonRow {
    let ratio = |num: Option<f64>, den: Option<f64>| match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => Some(n / d),
        _ => None,
    };
    let gradient_ratio = ratio(eit.max_gradient, abs.max_gradient);
    let fwhm_ratio = ratio(abs.fwhm, eit.fwhm);
    let notes = abs.notes.iter().chain(&eit.notes).cloned().collect();
    ComparisonRow {
        order,
        abs,
        eit,
        gradient_ratio,
        fwhm_ratio,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::Grid2D;
    use crate::response::normalize_with_guard;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn field(n: usize, half: f64, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> FieldMap<f64> {
        let g = Grid2D::square(half, n).unwrap();
        FieldMap::from_fn(Execution::Sequential, g, |j, i| f(g.x(i), g.y(j)))
    }

    fn active(map: FieldMap<f64>) -> NormalizedSignal {
        NormalizedSignal {
            raw_peak: map.max_abs(),
            map,
            active: true,
        }
    }

    #[test]
    fn constant_has_zero_gradient() {
        let s = active(field(9, 0.5, |_, _| 1.0));
        let g = gradient_map(&s).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
        assert_eq!(max_gradient(&g), 0.0);
    }

    #[test]
    fn linear_and_quadratic_are_exact() {
        let g = gradient_magnitude(Execution::Sequential, &field(11, 0.5, |x, _| x));
        assert!(g.values().iter().all(|&v| (v - 1.0).abs() < 1e-10));

        // s = x² + 3y: |∇| = sqrt(4x² + 9) exactly, boundaries included
        let grid = Grid2D::square(0.5, 11).unwrap();
        let g = gradient_magnitude(
            Execution::Sequential,
            &field(11, 0.5, |x, y| x * x + 3.0 * y),
        );
        for j in 0..11 {
            for i in 0..11 {
                let x = grid.x(i);
                assert!((g.get(j, i) - (4.0 * x * x + 9.0).sqrt()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_gradient_peaks_at_w_over_root2() {
        let w = 0.2;
        let g = gradient_magnitude(
            Execution::Sequential,
            &field(1001, 0.5, |x, _| (-(x / w).powi(2)).exp()),
        );
        let row = g.central_cross_section(Axis::X);
        let grid = Grid2D::square(0.5, 1001).unwrap();
        let (imax, _) =
            row.iter().enumerate().fold(
                (0, 0.0),
                |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
            );
        assert!((grid.x(imax).abs() - w / 2f64.sqrt()).abs() <= grid.hx());
        // analytic peak slope sqrt(2/e)/w
        assert_relative_eq!(
            max_gradient(&g),
            (2.0 / std::f64::consts::E).sqrt() / w,
            max_relative = 1e-4
        );
    }

    #[test]
    fn inactive_signal_has_no_gradient() {
        let s = normalize_with_guard(&field(5, 0.5, |_, _| 0.0), 1e-9);
        assert!(matches!(gradient_map(&s), Err(Error::InactiveChannel)));
        assert!(matches!(
            fwhm_cross_section(&s, Axis::X),
            Err(Error::InactiveChannel)
        ));
    }

    #[test]
    fn fwhm_of_gaussians() {
        let w = 0.1;
        let s = active(field(2001, 0.5, |x, _| (-(x / w).powi(2)).exp()));
        // 2 w sqrt(ln 2) (mpmath: 1.6651092223153955127)
        assert_relative_eq!(
            fwhm_cross_section(&s, Axis::X).unwrap(),
            1.665_109_222_315_395_5 * w,
            max_relative = 1e-5
        );
        let s = active(field(2001, 0.5, |_, y| (-(y / w).powi(20)).exp()));
        // 2 w (ln 2)^(1/20) (mpmath: 1.9636824951786780509)
        assert_relative_eq!(
            fwhm_cross_section(&s, Axis::Y).unwrap(),
            1.963_682_495_178_678 * w,
            max_relative = 1e-4
        );
    }

    #[test]
    fn fwhm_uses_absolute_value() {
        let w = 0.1;
        let s = active(field(801, 0.5, |x, _| -(-(x / w).powi(2)).exp()));
        assert_relative_eq!(
            fwhm_cross_section(&s, Axis::X).unwrap(),
            1.665_109_222_315_395_5 * w,
            max_relative = 1e-4
        );
    }

    #[test]
    fn fwhm_reports_uncontained_feature() {
        // broad hump never drops below half inside the window
        let s = active(field(101, 0.5, |x, _| 1.0 - 0.4 * x * x));
        assert!(matches!(
            fwhm_cross_section(&s, Axis::X),
            Err(Error::NoHalfCrossing(Axis::X))
        ));
        // maximum on the boundary
        let s = active(field(101, 0.5, |x, _| x + 0.5));
        assert!(matches!(
            fwhm_cross_section(&s, Axis::X),
            Err(Error::NoHalfCrossing(Axis::X))
        ));
    }

    #[test]
    fn fwhm_grid_independence() {
        for p in [1, 2, 3] {
            let f = move |x: f64, _: f64| (-(x / 0.15).powi(2 * p)).exp();
            let coarse = fwhm_cross_section(&active(field(129, 0.5, f)), Axis::X).unwrap();
            let fine = fwhm_cross_section(&active(field(257, 0.5, f)), Axis::X).unwrap();
            assert!(
                ((fine - coarse) / fine).abs() < 5e-3,
                "P={p}: {coarse} vs {fine}"
            );
        }
    }

    fn result(channel: SensingChannel, grad: Option<f64>, fwhm: Option<f64>) -> ChannelResult {
        ChannelResult {
            channel,
            detuning: 0.5,
            raw_peak: 1.0,
            active: grad.is_some(),
            max_gradient: grad,
            fwhm,
            notes: vec![],
        }
    }

    #[test]
    fn comparison_ratios() {
        let row = build_comparison_row(
            1,
            result(SensingChannel::Absorption, Some(67.54), Some(0.5)),
            result(SensingChannel::Dispersion, Some(158.89), Some(0.25)),
        );
        assert_relative_eq!(row.gradient_ratio.unwrap(), 2.3525, max_relative = 1e-3);
        assert_eq!(row.fwhm_ratio, Some(2.0));

        let row = build_comparison_row(
            1,
            result(SensingChannel::Absorption, Some(13.406), None),
            result(SensingChannel::Dispersion, Some(158.895), None),
        );
        assert_relative_eq!(row.gradient_ratio.unwrap(), 11.85, max_relative = 1e-3);
        assert_eq!(row.fwhm_ratio, None);

        let row = build_comparison_row(
            1,
            result(SensingChannel::Absorption, Some(67.54), Some(1.0)),
            result(SensingChannel::Dispersion, None, None),
        );
        assert_eq!(row.gradient_ratio, None);
        assert_eq!(row.fwhm_ratio, None);
    }

    #[test]
    fn zero_gradient_denominator_is_undefined() {
        let row = build_comparison_row(
            2,
            result(SensingChannel::Absorption, Some(0.0), None),
            result(SensingChannel::Dispersion, Some(3.0), None),
        );
        assert_eq!(row.gradient_ratio, None);
    }

    proptest! {
        #[test]
        fn ratio_against_itself_is_one(g in 1e-6f64..1e6, w in 1e-3f64..10.0) {
            let r = result(SensingChannel::Absorption, Some(g), Some(w));
            let row = build_comparison_row(1, r.clone(), r);
            prop_assert_eq!(row.gradient_ratio, Some(1.0));
            prop_assert_eq!(row.fwhm_ratio, Some(1.0));
        }

        #[test]
        fn normalized_gradient_is_scale_free(c in 1e-6f64..1e6) {
            let base = field(33, 0.5, |x, y| (-(x / 0.2).powi(4)).exp() * (1.0 + 0.3 * y) - 0.2);
            let scaled = base.map(Execution::Sequential, |v| v * c);
            let g0 = gradient_map(&normalize_with_guard(&base, 1e-300)).unwrap();
            let g1 = gradient_map(&normalize_with_guard(&scaled, 1e-300)).unwrap();
            for (a, b) in g0.values().iter().zip(g1.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
