//! Super-Gaussian control beams and the spatial sampling grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::FieldMap;

/// Peak control Rabi frequency Ω10 = Ω20 (γ).
pub const DEFAULT_PEAK_RABI: f64 = 5.0;

/// Beam waist selected by calibrating against the same-detuning gradient
/// ratios over the candidates {0.1, 0.15, 0.2, 0.25, 0.3} λ.
pub const DEFAULT_WAIST: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

/// Ω(c) = Ω0 · exp[−(c/w)^(2P)] along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperGaussianBeam {
    pub peak_rabi: f64,
    pub waist: f64,
    pub order: u32,
    pub axis: Axis,
}

impl SuperGaussianBeam {
    pub fn new(peak_rabi: f64, waist: f64, order: u32, axis: Axis) -> Result<Self> {
        let beam = SuperGaussianBeam {
            peak_rabi,
            waist,
            order,
            axis,
        };
        beam.validate()?;
        Ok(beam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_rabi.is_finite() && self.peak_rabi >= 0.0) {
            return Err(Error::invalid("beam.peak_rabi", "must be finite and >= 0"));
        }
        if !(self.waist.is_finite() && self.waist > 0.0) {
            return Err(Error::invalid("beam.waist", "must be finite and > 0"));
        }
        if self.order == 0 || self.order > i32::MAX as u32 / 2 {
            return Err(Error::invalid(
                "orders",
                format!("order must be >= 1, got {}", self.order),
            ));
        }
        Ok(())
    }

    pub fn with_order(self, order: u32) -> Self {
        SuperGaussianBeam { order, ..self }
    }

    pub fn with_waist(self, waist: f64) -> Self {
        SuperGaussianBeam { waist, ..self }
    }
}

pub fn rabi_profile(beam: &SuperGaussianBeam, coord: f64) -> f64 {
    let r = coord / beam.waist;
    beam.peak_rabi * (-r.powi(2 * beam.order as i32)).exp()
}

/// Uniform rectangular grid in λ; `nx`, `ny` odd so a symmetric window
/// samples the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Grid2D {
    fn default() -> Self {
        Grid2D {
            x_min: -0.5,
            x_max: 0.5,
            y_min: -0.5,
            y_max: 0.5,
            nx: 257,
            ny: 257,
        }
    }
}

impl Grid2D {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let g = Grid2D {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric square window `[-half_width, half_width]²` with `n` samples per axis.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("grid", "extents must be finite"));
        }
        if !(self.x_max > self.x_min) {
            return Err(Error::invalid("grid.x_max", "must exceed grid.x_min"));
        }
        if !(self.y_max > self.y_min) {
            return Err(Error::invalid("grid.y_max", "must exceed grid.y_min"));
        }
        for (name, n) in [("grid.nx", self.nx), ("grid.ny", self.ny)] {
            if n < 3 || n % 2 == 0 {
                return Err(Error::invalid(
                    name,
                    format!("must be odd and >= 3, got {n}"),
                ));
            }
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        sample(self.x_min, self.x_max, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        sample(self.y_min, self.y_max, self.ny, j)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    pub fn coords(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::X => self.xs(),
            Axis::Y => self.ys(),
        }
    }
}

/// `k`-th of `n` evenly spaced points on `[lo, hi]`, measured from the nearer
/// end so that a symmetric interval yields exactly mirrored samples (and an
/// exact 0 in the middle).
pub(crate) fn sample(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    let last = (n - 1) as f64;
    if 2 * k < n {
        lo + (hi - lo) * (k as f64 / last)
    } else {
        hi - (hi - lo) * ((n - 1 - k) as f64 / last)
    }
}

/// Ω1(x) and Ω2(y) sampled on `grid`. The x-axis beam is Ω1.
pub fn control_field_maps(
    beam_x: &SuperGaussianBeam,
    beam_y: &SuperGaussianBeam,
    grid: &Grid2D,
) -> Result<(FieldMap<f64>, FieldMap<f64>)> {
    control_field_maps_with(Execution::default(), beam_x, beam_y, grid)
}

pub fn control_field_maps_with(
    exec: Execution,
    beam_x: &SuperGaussianBeam,
    beam_y: &SuperGaussianBeam,
    grid: &Grid2D,
) -> Result<(FieldMap<f64>, FieldMap<f64>)> {
    if beam_x.axis == beam_y.axis {
        return Err(Error::AxisMismatch(beam_x.axis));
    }
    let (bx, by) = if beam_x.axis == Axis::X {
        (beam_x, beam_y)
    } else {
        (beam_y, beam_x)
    };
    bx.validate()?;
    by.validate()?;
    grid.validate()?;

    let px: Vec<f64> = grid.xs().iter().map(|&x| rabi_profile(bx, x)).collect();
    let py: Vec<f64> = grid.ys().iter().map(|&y| rabi_profile(by, y)).collect();
    let omega1 = FieldMap::from_fn(exec, *grid, |_, i| px[i]);
    let omega2 = FieldMap::from_fn(exec, *grid, |j, _| py[j]);
    Ok((omega1, omega2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn beam(order: u32) -> SuperGaussianBeam {
        SuperGaussianBeam::new(5.0, 0.2, order, Axis::X).unwrap()
    }

    #[test]
    fn profile_landmarks() {
        for p in [1, 2, 3, 10] {
            let b = beam(p);
            assert_eq!(rabi_profile(&b, 0.0), 5.0);
            assert_relative_eq!(
                rabi_profile(&b, 0.2),
                5.0 / std::f64::consts::E,
                max_relative = 1e-15
            );
        }
        // exp[-(x/w)²] = 1/2 at x = w·sqrt(ln 2) = 0.83255461115769775635 w (mpmath)
        let half = 0.832_554_611_157_697_8 * 0.2;
        assert_relative_eq!(rabi_profile(&beam(1), half), 2.5, max_relative = 1e-14);
    }

    #[test]
    fn monotone_steepening() {
        let orders = [1, 2, 3, 10];
        for c in [0.05, 0.1, 0.15, 0.19] {
            let v: Vec<f64> = orders.iter().map(|&p| rabi_profile(&beam(p), c)).collect();
            assert!(
                v.windows(2).all(|w| w[0] < w[1]),
                "inside waist at {c}: {v:?}"
            );
        }
        for c in [0.21, 0.25, 0.3] {
            let v: Vec<f64> = orders.iter().map(|&p| rabi_profile(&beam(p), c)).collect();
            assert!(
                v.windows(2).all(|w| w[0] > w[1]),
                "outside waist at {c}: {v:?}"
            );
        }
    }

    #[test]
    fn analytic_derivative_matches_central_difference() {
        for p in [1u32, 2, 3, 10] {
            let b = beam(p);
            let w = b.waist;
            let h = 1e-5 * w;
            for c in [0.5 * w, 0.7 * w, w, 1.2 * w, -0.8 * w] {
                let fd = (rabi_profile(&b, c + h) - rabi_profile(&b, c - h)) / (2.0 * h);
                let exact =
                    -(2.0 * p as f64 / w) * (c / w).powi(2 * p as i32 - 1) * rabi_profile(&b, c);
                assert_relative_eq!(fd, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn beam_validation() {
        assert!(SuperGaussianBeam::new(5.0, 0.2, 0, Axis::X).is_err());
        assert!(SuperGaussianBeam::new(5.0, 0.0, 1, Axis::X).is_err());
        assert!(SuperGaussianBeam::new(-1.0, 0.2, 1, Axis::X).is_err());
        assert!(SuperGaussianBeam::new(0.0, 0.2, 1, Axis::X).is_ok());
    }

    #[test]
    fn grid_validation_and_spacing() {
        assert!(Grid2D::square(0.5, 4).is_err());
        assert!(Grid2D::square(0.5, 1).is_err());
        assert!(Grid2D::new(0.5, -0.5, -0.5, 0.5, 5, 5).is_err());
        let g = Grid2D::default();
        assert_eq!(g.hx(), 1.0 / 256.0);
        assert_eq!(g.x(128), 0.0);
        assert_eq!(g.x(0), -0.5);
        assert_eq!(g.x(256), 0.5);
        let g = Grid2D::square(0.37, 101).unwrap();
        for i in 0..101 {
            assert_eq!(g.x(i), -g.x(100 - i));
        }
        assert_eq!(g.x(50), 0.0);
    }

    #[test]
    fn control_maps_structure() {
        let grid = Grid2D::square(0.5, 33).unwrap();
        let bx = SuperGaussianBeam::new(5.0, 0.2, 2, Axis::X).unwrap();
        let by = SuperGaussianBeam::new(3.0, 0.15, 2, Axis::Y).unwrap();
        let (o1, o2) = control_field_maps(&bx, &by, &grid).unwrap();
        assert_eq!(o1.get(16, 16), 5.0);
        assert_eq!(o2.get(16, 16), 3.0);
        for j in 0..33 {
            for i in 0..33 {
                assert_eq!(o1.get(j, i), o1.get(0, i));
                assert_eq!(o1.get(j, i), o1.get(j, 32 - i));
                assert_eq!(o2.get(j, i), o2.get(j, 0));
            }
        }
        // order of arguments does not matter, only axes
        let (p1, p2) = control_field_maps(&by, &bx, &grid).unwrap();
        assert_eq!(p1, o1);
        assert_eq!(p2, o2);
    }

    #[test]
    fn control_maps_reject_same_axis() {
        let grid = Grid2D::square(0.5, 5).unwrap();
        let b = beam(1);
        assert!(matches!(
            control_field_maps(&b, &b, &grid),
            Err(Error::AxisMismatch(Axis::X))
        ));
    }

    proptest! {
        #[test]
        fn profile_is_even_and_bounded(c in -2.0f64..2.0, p in 1u32..12, w in 0.01f64..1.0) {
            let b = SuperGaussianBeam::new(5.0, w, p, Axis::Y).unwrap();
            let v = rabi_profile(&b, c);
            prop_assert_eq!(v, rabi_profile(&b, -c));
            prop_assert!((0.0..=5.0).contains(&v));
        }
    }
}
