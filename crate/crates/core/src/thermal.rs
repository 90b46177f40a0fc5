//! Brownian displacement noise of a mechanical mode from the
//! fluctuation-dissipation theorem, classical limit, one-sided spectra.

use std::f64::consts::PI;

use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::mechanics::{susceptibility, MechanicalMode};
use crate::quadrature;

/// Lower edge of the default "full band", as a fraction of f_M.
pub const FULL_BAND_LOW: f64 = 1e-4;
/// Upper edge of the default "full band", as a multiple of f_M.
pub const FULL_BAND_HIGH: f64 = 1e2;

const QUADRATURE_REL_TOL: f64 = 1e-10;
const QUADRATURE_MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalEnvironment {
    temperature: f64,
}

impl ThermalEnvironment {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid(
                "temperature",
                format!("must be > 0 K, got {temperature}"),
            ));
        }
        Ok(Self { temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn thermal_energy(&self) -> f64 {
        BOLTZMANN * self.temperature
    }
}

/// S_x(f) = (4·k_B·T/Ω)·Im χ(Ω), m²/Hz, one-sided.
///
/// Rejects f ≤ 0: with a constant loss angle the density diverges as 1/f.
pub fn thermal_psd(mode: &MechanicalMode, env: &ThermalEnvironment, frequency: f64) -> Result<f64> {
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::FrequencyDomain(frequency));
    }
    Ok(psd_unchecked(mode, env.thermal_energy(), frequency))
}

fn psd_unchecked(mode: &MechanicalMode, thermal_energy: f64, frequency: f64) -> f64 {
    let omega = 2.0 * PI * frequency;
    4.0 * thermal_energy / omega * susceptibility(mode, frequency).im
}

/// Displacement variance carried by `[f_lo, f_hi]`, m².
///
/// Integrates in ln f with panels forced at f_M and f_M ± f_M/Q, f_M ± 10·f_M/Q.
pub fn thermal_variance(
    mode: &MechanicalMode,
    env: &ThermalEnvironment,
    f_lo: f64,
    f_hi: f64,
) -> Result<f64> {
    if !(f_lo > 0.0 && f_lo.is_finite()) {
        return Err(Error::FrequencyDomain(f_lo));
    }
    if !f_hi.is_finite() || f_hi < f_lo {
        return Err(Error::FrequencyDomain(f_hi));
    }
    if f_hi == f_lo {
        return Ok(0.0);
    }
    let fm = mode.resonance_frequency();
    let width = fm / mode.quality_factor();
    let breakpoints: Vec<f64> = [-10.0, -1.0, -0.5, 0.0, 0.5, 1.0, 10.0]
        .iter()
        .map(|k| fm + k * width)
        .filter(|&f| f > 0.0)
        .map(f64::ln)
        .collect();
    let kt = env.thermal_energy();
    quadrature::integrate(
        |s| {
            let f = s.exp();
            f * psd_unchecked(mode, kt, f)
        },
        f_lo.ln(),
        f_hi.ln(),
        &breakpoints,
        QUADRATURE_REL_TOL,
        QUADRATURE_MAX_PANELS,
    )
}

/// Variance over [f_M·10⁻⁴, f_M·10²]; compare with k_B·T·χ₀.
pub fn full_band_variance(mode: &MechanicalMode, env: &ThermalEnvironment) -> Result<f64> {
    let fm = mode.resonance_frequency();
    thermal_variance(mode, env, fm * FULL_BAND_LOW, fm * FULL_BAND_HIGH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_mode() -> MechanicalMode {
        MechanicalMode::new(2e6, 44_000.0, 3.2e-11).unwrap()
    }

    fn room() -> ThermalEnvironment {
        ThermalEnvironment::new(300.0).unwrap()
    }

    #[test]
    fn peak_density() {
        let s = thermal_psd(&reference_mode(), &room(), 2e6).unwrap();
        assert_relative_eq!(s, 1.856e-33, max_relative = 1e-3);
    }

    #[test]
    fn linear_in_temperature() {
        let hot = ThermalEnvironment::new(600.0).unwrap();
        for f in [1e5, 1.99e6, 2e6, 2.0001e6, 7e6] {
            assert_relative_eq!(
                thermal_psd(&reference_mode(), &hot, f).unwrap(),
                2.0 * thermal_psd(&reference_mode(), &room(), f).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn half_power_points() {
        let mode = reference_mode();
        let peak = thermal_psd(&mode, &room(), 2e6).unwrap();
        let half_width = 2e6 / (2.0 * 44_000.0);
        for f in [2e6 - half_width, 2e6 + half_width] {
            let s = thermal_psd(&mode, &room(), f).unwrap();
            assert_relative_eq!(s / peak, 0.5, max_relative = 1e-2);
        }
    }

    #[test]
    fn rejects_dc() {
        assert!(thermal_psd(&reference_mode(), &room(), 0.0).is_err());
        assert!(thermal_psd(&reference_mode(), &room(), -3.0).is_err());
        assert!(ThermalEnvironment::new(0.0).is_err());
    }

    #[test]
    fn empty_and_inverted_bands() {
        assert_eq!(
            thermal_variance(&reference_mode(), &room(), 1e6, 1e6).unwrap(),
            0.0
        );
        let tiny = thermal_variance(&reference_mode(), &room(), 2e6 - 1e-6, 2e6).unwrap();
        assert!(tiny < 1e-6 * 1.33e-31);
        assert!(thermal_variance(&reference_mode(), &room(), 2e6, 1e6).is_err());
        assert!(thermal_variance(&reference_mode(), &room(), 0.0, 1e6).is_err());
    }

    #[test]
    fn full_band_near_equipartition_for_reference_mode() {
        let v = full_band_variance(&reference_mode(), &room()).unwrap();
        let kt_chi0 = room().thermal_energy() * 3.2e-11;
        assert_relative_eq!(kt_chi0, 1.325e-31, max_relative = 1e-3);
        assert_relative_eq!(v, kt_chi0, max_relative = 5e-3);
    }

    #[test]
    fn peak_scales_with_q() {
        let a = thermal_psd(&reference_mode(), &room(), 2e6).unwrap();
        let m2 = reference_mode().with_quality_factor(88_000.0).unwrap();
        let b = thermal_psd(&m2, &room(), 2e6).unwrap();
        assert_relative_eq!(b / a, 2.0, max_relative = 1e-9);
    }
}
