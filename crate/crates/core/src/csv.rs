//! Spectrum CSV: `frequency_hz,normalized_power,displacement_psd_m2_per_hz`.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64` exactly. Each line ends with `\n`.

use crate::detection::{Spectrum, SpectrumUnit};
use crate::error::{Error, Result};

pub const HEADER: &str = "frequency_hz,normalized_power,displacement_psd_m2_per_hz";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub frequency_hz: f64,
    pub normalized_power: f64,
    /// m²/Hz for noise spectra; m² in the resolution bandwidth for coherent lines.
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    /// Pairs a shot-normalized spectrum with its displacement-scale image bin by bin.
    pub fn from_spectra(normalized: &Spectrum, displacement: &Spectrum) -> Result<Self> {
        if normalized.frequencies() != displacement.frequencies() {
            return Err(Error::InvalidSpectrum("frequency grids differ".into()));
        }
        Ok(Self {
            rows: normalized
                .iter()
                .zip(displacement.values())
                .map(|((f, p), &d)| SpectrumRow {
                    frequency_hz: f,
                    normalized_power: p,
                    displacement: d,
                })
                .collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                r.frequency_hz, r.normalized_power, r.displacement
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n').enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
            Some((_, h)) => {
                return Err(Error::Csv {
                    line: 1,
                    message: format!("expected header `{HEADER}`, got `{}`", h.trim_end()),
                })
            }
            None => unreachable!("split yields at least one item"),
        }
        let mut rows = Vec::new();
        for (index, raw) in lines {
            let line = index + 1;
            let content = raw.trim_end_matches('\r');
            if content.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Csv {
                    line,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let mut numbers = [0.0; 3];
            for (slot, field) in numbers.iter_mut().zip(&fields) {
                let v: f64 = field.trim().parse().map_err(|_| Error::Csv {
                    line,
                    message: format!("`{}` is not a number", field.trim()),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        line,
                        message: format!("`{}` is not finite", field.trim()),
                    });
                }
                *slot = v;
            }
            if let Some(prev) = rows.last().map(|r: &SpectrumRow| r.frequency_hz) {
                if numbers[0] <= prev {
                    return Err(Error::Csv {
                        line,
                        message: "frequencies must be strictly increasing".into(),
                    });
                }
            }
            rows.push(SpectrumRow {
                frequency_hz: numbers[0],
                normalized_power: numbers[1],
                displacement: numbers[2],
            });
        }
        Ok(Self { rows })
    }

    /// The shot-normalized power column as a [`Spectrum`].
    pub fn normalized_spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(
            self.rows.iter().map(|r| r.frequency_hz).collect(),
            self.rows.iter().map(|r| r.normalized_power).collect(),
            SpectrumUnit::ShotNormalizedPower,
        )
    }
}
