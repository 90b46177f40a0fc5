//! Frequency-modulation calibration of the displacement scale.
//!
//! At fixed cavity length, a laser frequency shift δν detunes the cavity
//! exactly as a mirror shift δx = L·δν/ν does. The FM amplitude itself is
//! measured on a mode cleaner locked at half transmission.

use crate::error::{Error, Result};
use crate::optics::{dx_min, Beam, OpticalCavity};

/// Largest δν/ν_cav accepted by the first-order mode-cleaner readout.
pub const MODE_CLEANER_LINEAR_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCleaner {
    bandwidth_hwhm: f64,
}

impl ModeCleaner {
    pub fn new(bandwidth_hwhm: f64) -> Result<Self> {
        if !(bandwidth_hwhm > 0.0 && bandwidth_hwhm.is_finite()) {
            return Err(Error::invalid(
                "mode_cleaner_bandwidth",
                format!("must be > 0 Hz, got {bandwidth_hwhm}"),
            ));
        }
        Ok(Self { bandwidth_hwhm })
    }

    pub fn bandwidth_hwhm(&self) -> f64 {
        self.bandwidth_hwhm
    }

    /// Lorentzian transmission 1/(1 + (δ/ν_cav)²) at detuning `detuning` (Hz).
    pub fn transmission(&self, detuning: f64) -> f64 {
        let x = detuning / self.bandwidth_hwhm;
        1.0 / (1.0 + x * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmCalibrationPoint {
    /// Hz
    pub fm_amplitude: f64,
    pub normalized_power: f64,
}

/// δx = L·δν/ν.
pub fn fm_to_displacement(cavity: &OpticalCavity, fm_amplitude: f64) -> f64 {
    cavity.length() * fm_amplitude / cavity.optical_frequency()
}

/// δν = ν·δx/L.
pub fn displacement_to_fm(cavity: &OpticalCavity, displacement: f64) -> f64 {
    cavity.optical_frequency() * displacement / cavity.length()
}

/// Relative intensity modulation δI/I = δν/ν_cav behind a mode cleaner held
/// at half transmission (detuning = ν_cav, where the slope is steepest in
/// relative terms).
pub fn mode_cleaner_intensity_modulation(mc: &ModeCleaner, fm_amplitude: f64) -> Result<f64> {
    if !(fm_amplitude >= 0.0 && fm_amplitude.is_finite()) {
        return Err(Error::invalid(
            "fm_amplitude",
            format!("must be >= 0 Hz, got {fm_amplitude}"),
        ));
    }
    if fm_amplitude >= MODE_CLEANER_LINEAR_LIMIT * mc.bandwidth_hwhm {
        return Err(Error::LinearizationInvalid {
            fm_amplitude,
            bandwidth: mc.bandwidth_hwhm,
        });
    }
    Ok(fm_amplitude / mc.bandwidth_hwhm)
}

/// Inverse readout: FM amplitude from a measured relative intensity modulation.
pub fn fm_from_mode_cleaner(mc: &ModeCleaner, relative_intensity_modulation: f64) -> Result<f64> {
    let fm = relative_intensity_modulation * mc.bandwidth_hwhm;
    mode_cleaner_intensity_modulation(mc, fm)?;
    Ok(fm)
}

/// Power of the phase modulation produced by each FM amplitude, over the
/// shot-noise power in `rbw`, at analysis frequency `measurement_frequency`.
pub fn calibration_curve(
    cavity: &OpticalCavity,
    beam: &Beam,
    fm_amplitudes: &[f64],
    measurement_frequency: f64,
    rbw: f64,
) -> Result<Vec<FmCalibrationPoint>> {
    if !(rbw > 0.0 && rbw.is_finite()) {
        return Err(Error::invalid("rbw", format!("must be > 0 Hz, got {rbw}")));
    }
    let floor = dx_min(cavity, beam, measurement_frequency)?;
    let shot_power = floor * floor * rbw;
    fm_amplitudes
        .iter()
        .map(|&fm| {
            if !(fm > 0.0 && fm.is_finite()) {
                return Err(Error::invalid(
                    "fm_amplitude",
                    format!("must be > 0 Hz, got {fm}"),
                ));
            }
            let dx = fm_to_displacement(cavity, fm);
            Ok(FmCalibrationPoint {
                fm_amplitude: fm,
                normalized_power: 0.5 * dx * dx / shot_power,
            })
        })
        .collect()
}

/// Least-squares slope of ln(power) against ln(δν).
pub fn log_log_slope(points: &[FmCalibrationPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid(
            "fm_amplitudes",
            "at least 2 points are required for a slope",
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.fm_amplitude.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.normalized_power.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid(
            "fm_amplitudes",
            "amplitudes must not all be equal",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Shot-noise floor in FM units, Hz/√Hz. `technical_noise` (Hz/√Hz, usually
/// 0) is a laser frequency-noise density added in quadrature.
pub fn shot_floor_fm(cavity: &OpticalCavity, beam: &Beam, frequency: f64) -> Result<f64> {
    shot_floor_fm_with_technical(cavity, beam, frequency, 0.0)
}

pub fn shot_floor_fm_with_technical(
    cavity: &OpticalCavity,
    beam: &Beam,
    frequency: f64,
    technical_noise: f64,
) -> Result<f64> {
    if !(technical_noise >= 0.0 && technical_noise.is_finite()) {
        return Err(Error::invalid(
            "laser_frequency_noise",
            format!("must be >= 0, got {technical_noise}"),
        ));
    }
    let shot = displacement_to_fm(cavity, dx_min(cavity, beam, frequency)?);
    Ok(shot.hypot(technical_noise))
}
