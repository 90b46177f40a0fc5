//! Homodyne phase spectra normalized to the shot-noise level, and synthetic
//! spectrum-analyzer traces.
//!
//! Noise spectra are `1 + S_x(f)/δx_min(f)²`: shot noise contributes unity.
//! A coherent line of peak amplitude `a` has rms power `a²/2`, compared with
//! the shot-noise power `δx_min²·rbw` collected in one resolution bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanics::{driven_response, MechanicalMode, RadiationPressureDrive};
use crate::optics::{dx_min, Beam, OpticalCavity};
use crate::rng::SplitMix64;
use crate::thermal::{thermal_psd, ThermalEnvironment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSettings {
    /// Resolution bandwidth, Hz.
    pub rbw: f64,
    pub n_averages: u32,
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl AnalyzerSettings {
    /// Span centred on `center`, as set on a swept analyzer.
    pub fn centered(
        center: f64,
        span: f64,
        n_points: usize,
        rbw: f64,
        n_averages: u32,
        seed: u64,
    ) -> Result<Self> {
        let s = Self {
            rbw,
            n_averages,
            f_start: center - 0.5 * span,
            f_stop: center + 0.5 * span,
            n_points,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rbw > 0.0 && self.rbw.is_finite()) {
            return Err(Error::invalid(
                "rbw",
                format!("must be > 0 Hz, got {}", self.rbw),
            ));
        }
        if self.n_averages < 1 {
            return Err(Error::invalid("averages", "must be >= 1"));
        }
        if !(self.f_start.is_finite() && self.f_stop.is_finite() && self.f_start < self.f_stop) {
            return Err(Error::invalid(
                "span",
                format!(
                    "need f_start < f_stop, got [{}, {}]",
                    self.f_start, self.f_stop
                ),
            ));
        }
        if self.n_points < 2 {
            return Err(Error::invalid("points", "need at least 2 points"));
        }
        Ok(())
    }

    /// Evenly spaced grid including both end points.
    pub fn frequencies(&self) -> Vec<f64> {
        let step = (self.f_stop - self.f_start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    self.f_stop
                } else {
                    self.f_start + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumUnit {
    ShotNormalizedPower,
    DisplacementPsdM2PerHz,
    DisplacementAsdMPerRtHz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    frequencies: Vec<f64>,
    values: Vec<f64>,
    unit: SpectrumUnit,
    settings: Option<AnalyzerSettings>,
}

impl Spectrum {
    pub fn new(frequencies: Vec<f64>, values: Vec<f64>, unit: SpectrumUnit) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(Error::InvalidSpectrum(format!(
                "{} frequencies but {} values",
                frequencies.len(),
                values.len()
            )));
        }
        if let Some(i) = frequencies.iter().position(|f| !f.is_finite()) {
            return Err(Error::InvalidSpectrum(format!(
                "non-finite frequency at bin {i}"
            )));
        }
        if let Some(i) = frequencies.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpectrum(format!(
                "frequencies not strictly increasing at bin {}",
                i + 1
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidSpectrum(format!(
                "value at bin {i} is negative or not finite"
            )));
        }
        Ok(Self {
            frequencies,
            values,
            unit,
            settings: None,
        })
    }

    pub fn with_settings(mut self, settings: AnalyzerSettings) -> Self {
        self.settings = Some(settings);
        self
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> SpectrumUnit {
        self.unit
    }

    pub fn settings(&self) -> Option<&AnalyzerSettings> {
        self.settings.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frequencies
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }
}

/// Phase-noise power of the reflected beam over the shot-noise level,
/// with the mode at thermal equilibrium.
pub fn normalized_thermal_spectrum(
    cavity: &OpticalCavity,
    beam: &Beam,
    mode: &MechanicalMode,
    env: &ThermalEnvironment,
    frequency: f64,
) -> Result<f64> {
    let floor = dx_min(cavity, beam, frequency)?;
    Ok(1.0 + thermal_psd(mode, env, frequency)? / (floor * floor))
}

/// Coherent phase-modulation power from an optical drive, over the shot-noise
/// power in one resolution bandwidth.
pub fn normalized_drive_power(
    cavity: &OpticalCavity,
    beam: &Beam,
    mode: &MechanicalMode,
    drive: &RadiationPressureDrive,
    rbw: f64,
) -> Result<f64> {
    if !(rbw > 0.0 && rbw.is_finite()) {
        return Err(Error::invalid("rbw", format!("must be > 0 Hz, got {rbw}")));
    }
    let floor = dx_min(cavity, beam, drive.modulation_frequency())?;
    let amplitude = driven_response(mode, drive);
    Ok(0.5 * amplitude * amplitude / (floor * floor * rbw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConversionMode {
    /// Broadband noise: `(value − 1)·δx_min²` in m²/Hz. Bins below the shot floor are an error.
    Noise,
    /// Coherent line: `value·δx_min²·rbw`, the mean-square displacement in the bin.
    Coherent { rbw: f64 },
}

/// Maps a shot-normalized spectrum to its equivalent displacement scale.
pub fn equivalent_displacement(
    spectrum: &Spectrum,
    cavity: &OpticalCavity,
    beam: &Beam,
    mode: ConversionMode,
) -> Result<Spectrum> {
    if spectrum.unit != SpectrumUnit::ShotNormalizedPower {
        return Err(Error::InvalidSpectrum(format!(
            "expected shot-normalized power, got {:?}",
            spectrum.unit
        )));
    }
    if let ConversionMode::Coherent { rbw } = mode {
        if !(rbw > 0.0 && rbw.is_finite()) {
            return Err(Error::invalid("rbw", format!("must be > 0 Hz, got {rbw}")));
        }
    }
    let values = spectrum
        .iter()
        .enumerate()
        .map(|(index, (f, value))| {
            let floor = dx_min(cavity, beam, f)?;
            let floor2 = floor * floor;
            match mode {
                ConversionMode::Noise if value < 1.0 => Err(Error::Conversion {
                    index,
                    frequency: f,
                    reason: format!("value {value} is below the shot-noise floor"),
                }),
                ConversionMode::Noise => Ok((value - 1.0) * floor2),
                ConversionMode::Coherent { rbw } => Ok(value * floor2 * rbw),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let out = Spectrum::new(
        spectrum.frequencies.clone(),
        values,
        SpectrumUnit::DisplacementPsdM2PerHz,
    )?;
    Ok(match spectrum.settings {
        Some(s) => out.with_settings(s),
        None => out,
    })
}

/// Evaluates `analytic` on the analyzer grid without measurement noise.
pub fn analytic_trace<F>(analytic: F, settings: &AnalyzerSettings) -> Result<Spectrum>
where
    F: Fn(f64) -> Result<f64>,
{
    settings.validate()?;
    let frequencies = settings.frequencies();
    let values = frequencies
        .iter()
        .map(|&f| analytic(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(
        Spectrum::new(frequencies, values, SpectrumUnit::ShotNormalizedPower)?
            .with_settings(*settings),
    )
}

/// Averaged spectrum-analyzer trace: each bin of the analytic power is
/// multiplied by an independent χ²₂ₙ/2n factor, n = `settings.n_averages`.
/// Bit-identical for identical inputs and seed.
pub fn synthesize_trace<F>(analytic: F, settings: &AnalyzerSettings) -> Result<Spectrum>
where
    F: Fn(f64) -> Result<f64>,
{
    settings.validate()?;
    let frequencies = settings.frequencies();
    let values = frequencies
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let truth = analytic(f)?;
            let mut stream = SplitMix64::for_bin(settings.seed, i as u64);
            Ok(truth * stream.next_averaged_power_factor(settings.n_averages))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(
        Spectrum::new(frequencies, values, SpectrumUnit::ShotNormalizedPower)?
            .with_settings(*settings),
    )
}
