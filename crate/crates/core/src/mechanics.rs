//! Internal acoustic mode of the back-mirror resonator.
//!
//! The susceptibility keeps the constant loss angle −i/Q at every frequency
//! (structural damping). Only the neighbourhood of the resonance is
//! experimentally constrained; far from it this is a model choice.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{HBAR, PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalMode {
    resonance_frequency: f64,
    quality_factor: f64,
    static_susceptibility: f64,
}

impl MechanicalMode {
    /// `resonance_frequency` in Hz, `static_susceptibility` (χ₀) in m/N.
    pub fn new(
        resonance_frequency: f64,
        quality_factor: f64,
        static_susceptibility: f64,
    ) -> Result<Self> {
        positive("resonance_frequency", resonance_frequency)?;
        positive("quality_factor", quality_factor)?;
        positive("static_susceptibility", static_susceptibility)?;
        Ok(Self {
            resonance_frequency,
            quality_factor,
            static_susceptibility,
        })
    }

    /// Builds the mode of a point oscillator with mass `effective_mass` (kg).
    pub fn from_effective_mass(
        resonance_frequency: f64,
        quality_factor: f64,
        effective_mass: f64,
    ) -> Result<Self> {
        positive("effective_mass", effective_mass)?;
        positive("resonance_frequency", resonance_frequency)?;
        let omega = 2.0 * PI * resonance_frequency;
        Self::new(
            resonance_frequency,
            quality_factor,
            1.0 / (effective_mass * omega * omega),
        )
    }

    pub fn resonance_frequency(&self) -> f64 {
        self.resonance_frequency
    }

    pub fn quality_factor(&self) -> f64 {
        self.quality_factor
    }

    pub fn static_susceptibility(&self) -> f64 {
        self.static_susceptibility
    }

    pub fn with_quality_factor(self, quality_factor: f64) -> Result<Self> {
        Self::new(
            self.resonance_frequency,
            quality_factor,
            self.static_susceptibility,
        )
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {value}")))
    }
}

/// χ(f) = χ₀ / (1 − f²/f_M² − i/Q), m/N.
pub fn susceptibility(mode: &MechanicalMode, frequency: f64) -> Complex64 {
    let u = frequency / mode.resonance_frequency;
    let denominator = Complex64::new(1.0 - u * u, -1.0 / mode.quality_factor);
    mode.static_susceptibility / denominator
}

/// M = 1/(χ₀·Ω_M²), kg.
pub fn effective_mass(mode: &MechanicalMode) -> f64 {
    let omega = 2.0 * PI * mode.resonance_frequency;
    1.0 / (mode.static_susceptibility * omega * omega)
}

/// Intensity-modulated auxiliary beam pushing on the back of the resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationPressureDrive {
    intensity_modulation: f64,
    wavelength: f64,
    modulation_frequency: f64,
}

impl RadiationPressureDrive {
    /// `intensity_modulation` δI in photons/s at wavelength `wavelength`.
    pub fn new(
        intensity_modulation: f64,
        wavelength: f64,
        modulation_frequency: f64,
    ) -> Result<Self> {
        if !(intensity_modulation >= 0.0 && intensity_modulation.is_finite()) {
            return Err(Error::invalid(
                "intensity_modulation",
                format!("must be >= 0, got {intensity_modulation}"),
            ));
        }
        positive("wavelength", wavelength)?;
        if !(modulation_frequency >= 0.0 && modulation_frequency.is_finite()) {
            return Err(Error::invalid(
                "modulation_frequency",
                format!("must be >= 0, got {modulation_frequency}"),
            ));
        }
        Ok(Self {
            intensity_modulation,
            wavelength,
            modulation_frequency,
        })
    }

    /// From a power modulation amplitude δP (W), via δI = δP·λ/(hc).
    pub fn from_power_modulation(
        power_modulation: f64,
        wavelength: f64,
        modulation_frequency: f64,
    ) -> Result<Self> {
        Self::new(
            power_modulation * wavelength / (PLANCK * SPEED_OF_LIGHT),
            wavelength,
            modulation_frequency,
        )
    }

    /// From the force amplitude F (N) directly: δP = F·c/2.
    pub fn from_force(force: f64, wavelength: f64, modulation_frequency: f64) -> Result<Self> {
        Self::from_power_modulation(
            0.5 * force * SPEED_OF_LIGHT,
            wavelength,
            modulation_frequency,
        )
    }

    pub fn intensity_modulation(&self) -> f64 {
        self.intensity_modulation
    }

    pub fn modulation_frequency(&self) -> f64 {
        self.modulation_frequency
    }

    pub fn at_frequency(mut self, modulation_frequency: f64) -> Result<Self> {
        if !(modulation_frequency >= 0.0 && modulation_frequency.is_finite()) {
            return Err(Error::FrequencyDomain(modulation_frequency));
        }
        self.modulation_frequency = modulation_frequency;
        Ok(self)
    }
}

/// F_rad = 2ħk·δI, the momentum transferred per second by reflected photons.
pub fn radiation_force(drive: &RadiationPressureDrive) -> f64 {
    let k = 2.0 * PI / drive.wavelength;
    2.0 * HBAR * k * drive.intensity_modulation
}

/// Peak displacement amplitude |χ(f_mod)|·F_rad, m.
pub fn driven_response(mode: &MechanicalMode, drive: &RadiationPressureDrive) -> f64 {
    susceptibility(mode, drive.modulation_frequency).norm() * radiation_force(drive)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialModes {
    optical_waist: f64,
    acoustic_waist: f64,
}

impl SpatialModes {
    pub fn new(optical_waist: f64, acoustic_waist: f64) -> Result<Self> {
        positive("optical_waist", optical_waist)?;
        positive("acoustic_waist", acoustic_waist)?;
        Ok(Self {
            optical_waist,
            acoustic_waist,
        })
    }

    pub fn optical_waist(&self) -> f64 {
        self.optical_waist
    }

    pub fn acoustic_waist(&self) -> f64 {
        self.acoustic_waist
    }
}

/// Mean of the unit-peak acoustic profile exp(−r²/w_ac²) weighted by the
/// optical intensity (2/πw₀²)·exp(−2r²/w₀²).
pub fn spatial_overlap(modes: &SpatialModes) -> f64 {
    let ratio = modes.optical_waist / modes.acoustic_waist;
    1.0 / (1.0 + 0.5 * ratio * ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_mode() -> MechanicalMode {
        MechanicalMode::new(2e6, 44_000.0, 3.2e-11).unwrap()
    }

    #[test]
    fn susceptibility_at_resonance_is_chi0_q_in_quadrature() {
        let chi = susceptibility(&reference_mode(), 2e6);
        assert_relative_eq!(chi.norm(), 3.2e-11 * 44_000.0, max_relative = 1e-14);
        assert_relative_eq!(chi.arg(), PI / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn susceptibility_dc_and_above_resonance() {
        let mode = reference_mode();
        let dc = susceptibility(&mode, 0.0);
        assert_relative_eq!(dc.arg(), (1.0 / 44_000f64).atan(), max_relative = 1e-12);
        assert_relative_eq!(dc.norm(), 3.2e-11, max_relative = 1e-9);

        let above = susceptibility(&mode, 2f64.sqrt() * 2e6);
        let expected = 3.2e-11 / Complex64::new(-1.0, -1.0 / 44_000.0);
        assert_relative_eq!(above.re, expected.re, max_relative = 1e-12);
        assert_relative_eq!(above.im, expected.im, max_relative = 1e-9);
        assert_relative_eq!(above.norm(), 3.2e-11, max_relative = 1e-9);
    }

    #[test]
    fn effective_mass_values() {
        assert_relative_eq!(effective_mass(&reference_mode()), 1.979e-4, max_relative = 1e-3);
        let heavy = MechanicalMode::new(2e6, 44_000.0, 4.0 * 3.2e-11).unwrap();
        assert_relative_eq!(
            effective_mass(&heavy),
            effective_mass(&reference_mode()) / 4.0,
            max_relative = 1e-15
        );
        let m = effective_mass(&reference_mode());
        let rebuilt = MechanicalMode::from_effective_mass(2e6, 44_000.0, m).unwrap();
        assert_relative_eq!(
            rebuilt.static_susceptibility(),
            3.2e-11,
            max_relative = 1e-15
        );
    }

    #[test]
    fn radiation_force_from_power_modulation() {
        let drive = RadiationPressureDrive::from_power_modulation(0.18, 810e-9, 2e6).unwrap();
        assert_relative_eq!(radiation_force(&drive), 1.2e-9, max_relative = 1e-3);
        let zero = RadiationPressureDrive::new(0.0, 810e-9, 2e6).unwrap();
        assert_eq!(radiation_force(&zero), 0.0);
        for dp in [1e-6, 0.37, 12.5] {
            let d = RadiationPressureDrive::from_power_modulation(dp, 810e-9, 0.0).unwrap();
            assert_relative_eq!(
                radiation_force(&d),
                2.0 * dp / SPEED_OF_LIGHT,
                max_relative = 1e-14
            );
        }
        let d = RadiationPressureDrive::from_force(1.2e-9, 810e-9, 0.0).unwrap();
        assert_relative_eq!(radiation_force(&d), 1.2e-9, max_relative = 1e-14);
    }

    #[test]
    fn driven_response_limits() {
        let mode = reference_mode();
        let drive = RadiationPressureDrive::from_force(1.2e-9, 810e-9, 2e6).unwrap();
        assert_relative_eq!(
            driven_response(&mode, &drive),
            1.6896e-15,
            max_relative = 1e-4
        );

        let dc = drive.at_frequency(0.0).unwrap();
        assert_relative_eq!(driven_response(&mode, &dc), 3.84e-20, max_relative = 1e-8);

        let far = drive.at_frequency(2e7).unwrap();
        assert_relative_eq!(
            driven_response(&mode, &far),
            3.84e-20 / 99.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn overlap_anchors() {
        let reference = SpatialModes::new(90e-6, 3.4e-3).unwrap();
        assert_relative_eq!(spatial_overlap(&reference), 0.99965, max_relative = 1e-5);
        let point = SpatialModes::new(1e-12, 3.4e-3).unwrap();
        assert_relative_eq!(spatial_overlap(&point), 1.0, max_relative = 1e-15);
        let half = SpatialModes::new(2f64.sqrt() * 1e-3, 1e-3).unwrap();
        assert_relative_eq!(spatial_overlap(&half), 0.5, max_relative = 1e-15);
        assert!(SpatialModes::new(0.0, 1.0).is_err());
    }

    #[test]
    fn passivity_and_peak_location() {
        let mode = reference_mode();
        for i in 1..2000 {
            let f = i as f64 * 5e3;
            assert!(susceptibility(&mode, f).im > 0.0);
        }
    }
}
