//! Model of a high-finesse Fabry-Perot displacement sensor reading out the
//! Brownian motion of a mirror's internal acoustic mode.
//!
//! * [`optics`]: cavity response and the shot-noise displacement floor
//! * [`mechanics`]: mode susceptibility, radiation-pressure drive, spatial overlap
//! * [`thermal`]: fluctuation-dissipation thermal spectra and variances
//! * [`detection`]: shot-noise-normalized spectra and synthetic analyzer traces
//! * [`calibration`]: frequency-modulation calibration chain
//! * [`fitting`]: Levenberg–Marquardt Lorentzian fits
//! * [`config`], [`csv`]: text formats for experiment parameters and spectra

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod constants;
pub mod csv;
pub mod detection;
mod error;
pub mod fitting;
pub mod mechanics;
pub mod optics;
mod quadrature;
pub mod rng;
pub mod thermal;

pub use error::{Error, Result};
