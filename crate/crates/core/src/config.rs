//! Flat `key = value` experiment configuration.
//!
//! Keys carry their unit as a suffix (`cavity_length_mm`, `power_uW`,
//! `coupler_transmission_ppm`); a bare key is read in SI base units.
//! Dimensionless fractions additionally accept a `ppm` suffix on the value
//! (`cavity_losses = 109 ppm`). `#` starts a comment. Unknown keys and
//! repeated quantities are errors. Every key is optional; the defaults
//! describe the reference experiment (100 µW at 810 nm on a 1.06 mm cavity
//! with 60 ppm coupler and 109 ppm losses, a 2 MHz mode with Q = 44000 and
//! χ₀ = 3.2e-11 m/N at 300 K).

use std::collections::BTreeMap;

use crate::calibration::ModeCleaner;
use crate::detection::AnalyzerSettings;
use crate::error::{Error, Result};
use crate::mechanics::{MechanicalMode, RadiationPressureDrive, SpatialModes};
use crate::optics::{derive_cavity, Beam, OpticalCavity};
use crate::thermal::ThermalEnvironment;

/// Contents of the shipped `experiment.cfg`.
pub const DEFAULT_CONFIG: &str = include_str!("../../../experiment.cfg");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Fraction,
    Count,
    Seed,
}

struct Quantity {
    name: &'static str,
    kind: Kind,
    units: &'static [(&'static str, i32)],
}

const LENGTH: &[(&str, i32)] = &[("m", 0), ("mm", -3), ("um", -6), ("nm", -9)];
const FREQUENCY: &[(&str, i32)] = &[("Hz", 0), ("hz", 0), ("kHz", 3), ("MHz", 6), ("GHz", 9)];
const POWER: &[(&str, i32)] = &[("W", 0), ("mW", -3), ("uW", -6)];
const FRACTION: &[(&str, i32)] = &[("ppm", -6), ("percent", -2)];
const NONE: &[(&str, i32)] = &[];

const QUANTITIES: &[Quantity] = &[
    Quantity {
        name: "cavity_length",
        kind: Kind::Real,
        units: LENGTH,
    },
    Quantity {
        name: "wavelength",
        kind: Kind::Real,
        units: LENGTH,
    },
    Quantity {
        name: "coupler_transmission",
        kind: Kind::Fraction,
        units: FRACTION,
    },
    Quantity {
        name: "cavity_losses",
        kind: Kind::Fraction,
        units: FRACTION,
    },
    Quantity {
        name: "measured_finesse",
        kind: Kind::Real,
        units: NONE,
    },
    Quantity {
        name: "power",
        kind: Kind::Real,
        units: POWER,
    },
    Quantity {
        name: "quantum_efficiency",
        kind: Kind::Fraction,
        units: FRACTION,
    },
    Quantity {
        name: "resonance_frequency",
        kind: Kind::Real,
        units: FREQUENCY,
    },
    Quantity {
        name: "quality_factor",
        kind: Kind::Real,
        units: NONE,
    },
    Quantity {
        name: "static_susceptibility",
        kind: Kind::Real,
        units: &[("m_per_N", 0)],
    },
    Quantity {
        name: "temperature",
        kind: Kind::Real,
        units: &[("K", 0)],
    },
    Quantity {
        name: "mode_cleaner_bandwidth",
        kind: Kind::Real,
        units: FREQUENCY,
    },
    Quantity {
        name: "optical_waist",
        kind: Kind::Real,
        units: LENGTH,
    },
    Quantity {
        name: "acoustic_waist",
        kind: Kind::Real,
        units: LENGTH,
    },
    Quantity {
        name: "drive_force",
        kind: Kind::Real,
        units: &[("N", 0), ("nN", -9)],
    },
    Quantity {
        name: "drive_power_modulation",
        kind: Kind::Real,
        units: POWER,
    },
    Quantity {
        name: "drive_frequency",
        kind: Kind::Real,
        units: FREQUENCY,
    },
    Quantity {
        name: "rbw",
        kind: Kind::Real,
        units: FREQUENCY,
    },
    Quantity {
        name: "averages",
        kind: Kind::Count,
        units: NONE,
    },
    Quantity {
        name: "span",
        kind: Kind::Real,
        units: FREQUENCY,
    },
    Quantity {
        name: "center",
        kind: Kind::Real,
        units: FREQUENCY,
    },
    Quantity {
        name: "points",
        kind: Kind::Count,
        units: NONE,
    },
    Quantity {
        name: "seed",
        kind: Kind::Seed,
        units: NONE,
    },
    Quantity {
        name: "laser_frequency_noise",
        kind: Kind::Real,
        units: &[("Hz_per_rtHz", 0), ("mHz_per_rtHz", -3)],
    },
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Real(f64),
    Seed(u64),
}

#[derive(Debug, Clone)]
struct Entry {
    value: Value,
    key: String,
    line: usize,
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cavity: OpticalCavity,
    pub beam: Beam,
    pub mode: MechanicalMode,
    pub environment: ThermalEnvironment,
    pub mode_cleaner: ModeCleaner,
    pub spatial: SpatialModes,
    pub drive: RadiationPressureDrive,
    pub analyzer: AnalyzerSettings,
    /// Optional technical laser frequency noise, Hz/√Hz.
    pub laser_frequency_noise: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::parse("").expect("built-in defaults are valid")
    }
}

/// Applies a decimal exponent by exact division or multiplication, so that
/// `1.06` mm becomes the same `f64` as `1.06e-3` m.
fn scale_decimal(v: f64, exponent: i32) -> f64 {
    let factor = 10f64.powi(exponent.abs());
    if exponent < 0 {
        v / factor
    } else {
        v * factor
    }
}

fn lookup(key: &str) -> Option<(&'static Quantity, i32)> {
    for q in QUANTITIES {
        if key == q.name {
            return Some((q, 0));
        }
        if let Some(suffix) = key
            .strip_prefix(q.name)
            .and_then(|rest| rest.strip_prefix('_'))
        {
            if let Some(&(_, scale)) = q.units.iter().find(|(u, _)| *u == suffix) {
                return Some((q, scale));
            }
        }
    }
    None
}

fn parse_value(q: &Quantity, exponent: i32, raw: &str, line: usize) -> Result<Value> {
    let err = |message: String| Error::Config { line, message };
    match q.kind {
        Kind::Seed => raw.parse::<u64>().map(Value::Seed).map_err(|_| {
            err(format!(
                "`{}` expects an unsigned 64-bit integer, got `{raw}`",
                q.name
            ))
        }),
        Kind::Count => {
            let n = raw.parse::<u32>().map_err(|_| {
                err(format!(
                    "`{}` expects a positive integer, got `{raw}`",
                    q.name
                ))
            })?;
            Ok(Value::Real(f64::from(n)))
        }
        Kind::Real | Kind::Fraction => {
            let (number, exponent) = match raw.strip_suffix("ppm") {
                Some(n) if q.kind == Kind::Fraction && exponent == 0 => (n.trim_end(), -6),
                _ => (raw, exponent),
            };
            let v: f64 = number
                .parse()
                .map_err(|_| err(format!("`{}` expects a number, got `{raw}`", q.name)))?;
            if !v.is_finite() {
                return Err(err(format!("`{}` must be finite", q.name)));
            }
            Ok(Value::Real(scale_decimal(v, exponent)))
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let Some((quantity, exponent)) = lookup(key) else {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            };
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    message: format!("missing value for `{key}`"),
                });
            }
            let parsed = parse_value(quantity, exponent, value, line)?;
            if let Some(previous) = entries.get(quantity.name) {
                return Err(Error::Config {
                    line,
                    message: format!(
                        "`{key}` repeats `{}` already set on line {}",
                        previous.key, previous.line
                    ),
                });
            }
            entries.insert(
                quantity.name,
                Entry {
                    value: parsed,
                    key: key.to_string(),
                    line,
                },
            );
        }
        Self::from_entries(&entries)
    }

    fn from_entries(entries: &BTreeMap<&'static str, Entry>) -> Result<Self> {
        let key_of = |name: &'static str| {
            entries
                .get(name)
                .map_or_else(|| name.to_string(), |e| e.key.clone())
        };
        let real = |name: &'static str, default: f64| match entries.get(name).map(|e| e.value) {
            Some(Value::Real(v)) => v,
            _ => default,
        };
        let opt = |name: &'static str| match entries.get(name).map(|e| e.value) {
            Some(Value::Real(v)) => Some(v),
            _ => None,
        };
        let wrap = |keys: &[&'static str]| {
            let keys: Vec<String> = keys.iter().map(|k| key_of(k)).collect();
            move |e: Error| match e {
                Error::ConfigValidation { .. } => e,
                other => Error::ConfigValidation {
                    keys: keys.clone(),
                    message: other.to_string(),
                },
            }
        };

        let wavelength = real("wavelength", 810e-9);
        let mut cavity = OpticalCavity::new(
            real("cavity_length", 1.06e-3),
            wavelength,
            real("coupler_transmission", 60e-6),
            real("cavity_losses", 109e-6),
        )
        .map_err(wrap(&[
            "cavity_length",
            "wavelength",
            "coupler_transmission",
            "cavity_losses",
        ]))?;
        if let Some(f) = opt("measured_finesse") {
            cavity = cavity
                .with_measured_finesse(f)
                .map_err(wrap(&["measured_finesse"]))?;
        }
        derive_cavity(&cavity).map_err(wrap(&["coupler_transmission", "cavity_losses"]))?;

        let beam = Beam::new(real("power", 100e-6), real("quantum_efficiency", 0.91))
            .map_err(wrap(&["power", "quantum_efficiency"]))?;
        let fm = real("resonance_frequency", 2e6);
        let mode = MechanicalMode::new(
            fm,
            real("quality_factor", 44_000.0),
            real("static_susceptibility", 3.2e-11),
        )
        .map_err(wrap(&[
            "resonance_frequency",
            "quality_factor",
            "static_susceptibility",
        ]))?;
        let environment =
            ThermalEnvironment::new(real("temperature", 300.0)).map_err(wrap(&["temperature"]))?;
        let mode_cleaner = ModeCleaner::new(real("mode_cleaner_bandwidth", 1e6))
            .map_err(wrap(&["mode_cleaner_bandwidth"]))?;
        let spatial =
            SpatialModes::new(real("optical_waist", 90e-6), real("acoustic_waist", 3.4e-3))
                .map_err(wrap(&["optical_waist", "acoustic_waist"]))?;

        let drive_frequency = real("drive_frequency", fm);
        let drive = match (opt("drive_force"), opt("drive_power_modulation")) {
            (Some(_), Some(_)) => {
                return Err(Error::ConfigValidation {
                    keys: vec![key_of("drive_force"), key_of("drive_power_modulation")],
                    message: "give either the drive force or the drive power modulation, not both"
                        .into(),
                })
            }
            (None, Some(dp)) => {
                RadiationPressureDrive::from_power_modulation(dp, wavelength, drive_frequency)
                    .map_err(wrap(&["drive_power_modulation", "drive_frequency"]))?
            }
            (force, None) => RadiationPressureDrive::from_force(
                force.unwrap_or(1.2e-9),
                wavelength,
                drive_frequency,
            )
            .map_err(wrap(&["drive_force", "drive_frequency"]))?,
        };

        let seed = match entries.get("seed").map(|e| e.value) {
            Some(Value::Seed(s)) => s,
            _ => 1,
        };
        let analyzer = AnalyzerSettings::centered(
            real("center", fm),
            real("span", 500.0),
            real("points", 500.0) as usize,
            real("rbw", 1.0),
            real("averages", 1000.0) as u32,
            seed,
        )
        .map_err(wrap(&["center", "span", "points", "rbw", "averages"]))?;
        if analyzer.f_start <= 0.0 {
            return Err(Error::ConfigValidation {
                keys: vec![key_of("center"), key_of("span")],
                message: "analyzer span must stay above 0 Hz".into(),
            });
        }

        let laser_frequency_noise = real("laser_frequency_noise", 0.0);
        if laser_frequency_noise < 0.0 {
            return Err(Error::ConfigValidation {
                keys: vec![key_of("laser_frequency_noise")],
                message: "must be >= 0".into(),
            });
        }

        Ok(Self {
            cavity,
            beam,
            mode,
            environment,
            mode_cleaner,
            spatial,
            drive,
            analyzer,
            laser_frequency_noise,
        })
    }
}
