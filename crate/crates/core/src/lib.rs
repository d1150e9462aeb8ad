//! Tripod-atom EIT localization toolkit.
//!
//! Computes the steady-state probe susceptibility χ(x, y, Δp) of a four-level
//! tripod atom whose two control fields are super-Gaussian envelopes along x
//! and y, then compares two sensing channels built from it:
//!
//! * absorption, `-Im[χ]`
//! * dispersion (EIT), `Re[χ]`
//!
//! For each channel the normalized map yields a maximum spatial gradient (λ⁻¹)
//! and a central cross-section FWHM (λ). The [`scenario`] module runs the
//! same-detuning, optimal-detuning and switched-detuning comparisons over
//! super-Gaussian orders, detuning scans, and waist calibration.
//!
//! Units: rates and frequencies in γ, lengths in λ.
//!
//! Grid kernels run on rayon when the default `parallel` feature is enabled and
//! fall back to plain iterators otherwise; see [`exec::Execution`].

// `!(a < b)` comparisons are deliberate: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atomic;
pub mod beam;
pub mod cli;
pub mod error;
pub mod exec;
pub mod field;
pub mod io;
pub mod metrics;
pub mod response;
pub mod scenario;

pub use atomic::{AtomicParams, ComplexValue, Detunings};
pub use beam::{Axis, Grid2D, SuperGaussianBeam};
pub use error::{Error, Result};
pub use exec::Execution;
pub use field::FieldMap;
pub use metrics::{ChannelResult, ComparisonRow};
pub use response::{NormalizedSignal, SensingChannel};
pub use scenario::{ScanResult, ScenarioConfig, ScenarioKind};
