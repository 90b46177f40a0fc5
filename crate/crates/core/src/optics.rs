//! Optical cavity response and the shot-noise-limited displacement floor.
//!
//! All spectral densities here are amplitude densities (m/√Hz, rad/√Hz).
//! The cavity bandwidth is the half-width of the resonance, FSR/(2ℱ), which
//! is also the pole of the cavity's single-pole response to mirror motion.

use std::f64::consts::PI;

use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Single-ended Fabry-Perot cavity: input coupler plus a totally reflecting back mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalCavity {
    length: f64,
    wavelength: f64,
    coupler_transmission: f64,
    losses: f64,
    measured_finesse: Option<f64>,
}

impl OpticalCavity {
    /// `coupler_transmission` and `losses` are dimensionless fractions (60 ppm = 60e-6).
    pub fn new(
        length: f64,
        wavelength: f64,
        coupler_transmission: f64,
        losses: f64,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid(
                "length",
                format!("must be > 0 m, got {length}"),
            ));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(
                "wavelength",
                format!("must be > 0 m, got {wavelength}"),
            ));
        }
        if coupler_transmission == 0.0 && losses == 0.0 {
            return Err(Error::DegenerateCavity);
        }
        if !(coupler_transmission > 0.0 && coupler_transmission < 1.0) {
            return Err(Error::invalid(
                "coupler_transmission",
                format!("must lie in (0, 1), got {coupler_transmission}"),
            ));
        }
        if !(0.0..1.0).contains(&losses) {
            return Err(Error::invalid(
                "losses",
                format!("must lie in [0, 1), got {losses}"),
            ));
        }
        if coupler_transmission + losses >= 1.0 {
            return Err(Error::invalid(
                "losses",
                format!(
                    "coupler_transmission + losses must be < 1, got {}",
                    coupler_transmission + losses
                ),
            ));
        }
        Ok(Self {
            length,
            wavelength,
            coupler_transmission,
            losses,
            measured_finesse: None,
        })
    }

    /// Overrides the loss-derived finesse everywhere except the loss factor of [`dx_min`].
    pub fn with_measured_finesse(mut self, finesse: f64) -> Result<Self> {
        if !(finesse > 1.0 && finesse.is_finite()) {
            return Err(Error::invalid(
                "measured_finesse",
                format!("must be > 1, got {finesse}"),
            ));
        }
        self.measured_finesse = Some(finesse);
        Ok(self)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn coupler_transmission(&self) -> f64 {
        self.coupler_transmission
    }

    pub fn losses(&self) -> f64 {
        self.losses
    }

    pub fn measured_finesse(&self) -> Option<f64> {
        self.measured_finesse
    }

    /// 2π/(T_c + A), ignoring any measured override.
    pub fn loss_finesse(&self) -> f64 {
        2.0 * PI / (self.coupler_transmission + self.losses)
    }

    /// Finesse used by the response formulas: the measured value when set.
    pub fn finesse(&self) -> f64 {
        self.measured_finesse.unwrap_or_else(|| self.loss_finesse())
    }

    /// Optical carrier frequency ν = c/λ.
    pub fn optical_frequency(&self) -> f64 {
        SPEED_OF_LIGHT / self.wavelength
    }
}

/// Incident probe beam as seen by the homodyne detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    power: f64,
    quantum_efficiency: f64,
}

impl Beam {
    pub fn new(power: f64, quantum_efficiency: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::invalid(
                "power",
                format!("must be > 0 W, got {power}"),
            ));
        }
        if !(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0) {
            return Err(Error::invalid(
                "quantum_efficiency",
                format!("must lie in (0, 1], got {quantum_efficiency}"),
            ));
        }
        Ok(Self {
            power,
            quantum_efficiency,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn quantum_efficiency(&self) -> f64 {
        self.quantum_efficiency
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCavity {
    pub finesse: f64,
    /// Hz
    pub free_spectral_range: f64,
    /// Half-width at half-maximum, Hz.
    pub bandwidth: f64,
}

pub fn derive_cavity(cavity: &OpticalCavity) -> Result<DerivedCavity> {
    if cavity.coupler_transmission + cavity.losses <= 0.0 {
        return Err(Error::DegenerateCavity);
    }
    let finesse = cavity.finesse();
    let free_spectral_range = SPEED_OF_LIGHT / (2.0 * cavity.length);
    Ok(DerivedCavity {
        finesse,
        free_spectral_range,
        bandwidth: free_spectral_range / (2.0 * finesse),
    })
}

/// Incident photon flux Ī = Pλ/(hc), photons per second.
pub fn photon_flux(beam: &Beam, cavity: &OpticalCavity) -> f64 {
    beam.power * cavity.wavelength / (PLANCK * SPEED_OF_LIGHT)
}

/// Reflected-phase slope 8ℱ/λ of a resonant lossless cavity, rad/m.
pub fn phase_shift_per_displacement(cavity: &OpticalCavity) -> f64 {
    8.0 * cavity.finesse() / cavity.wavelength
}

/// Shot-noise phase floor 1/(2√Ī), rad/√Hz.
pub fn shot_noise_phase(beam: &Beam, cavity: &OpticalCavity) -> Result<f64> {
    let flux = photon_flux(beam, cavity);
    if !(flux > 0.0) {
        return Err(Error::invalid("power", "photon flux must be > 0"));
    }
    Ok(shot_noise_phase_from_flux(flux))
}

pub(crate) fn shot_noise_phase_from_flux(flux: f64) -> f64 {
    0.5 / flux.sqrt()
}

/// Static lossless floor λ/(16ℱ√Ī), m/√Hz.
pub fn dx_min_static(cavity: &OpticalCavity, beam: &Beam) -> f64 {
    cavity.wavelength / (16.0 * cavity.finesse() * photon_flux(beam, cavity).sqrt())
}

/// (T_c + A)/(√η·T_c): penalty from intracavity losses and detection efficiency.
pub fn loss_factor(cavity: &OpticalCavity, beam: &Beam) -> f64 {
    (cavity.coupler_transmission + cavity.losses)
        / (beam.quantum_efficiency.sqrt() * cavity.coupler_transmission)
}

/// Shot-noise-limited displacement sensitivity at analysis frequency `frequency` (Hz), m/√Hz.
///
/// Static floor times the loss factor times the single-pole cavity filter
/// √(1 + (f/bandwidth)²).
pub fn dx_min(cavity: &OpticalCavity, beam: &Beam, frequency: f64) -> Result<f64> {
    if !(frequency >= 0.0 && frequency.is_finite()) {
        return Err(Error::FrequencyDomain(frequency));
    }
    let derived = derive_cavity(cavity)?;
    let filter = (1.0 + (frequency / derived.bandwidth).powi(2)).sqrt();
    Ok(dx_min_static(cavity, beam) * loss_factor(cavity, beam) * filter)
}
