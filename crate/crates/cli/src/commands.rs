//! Subcommand bodies. Each returns its output as text; main decides where
//! it goes.

use std::fmt::Write;

use cavity_sense_core::calibration::{
    calibration_curve, log_log_slope, mode_cleaner_intensity_modulation,
    shot_floor_fm_with_technical,
};
use cavity_sense_core::config::ExperimentConfig;
use cavity_sense_core::csv::SpectrumTable;
use cavity_sense_core::detection::{
    analytic_trace, equivalent_displacement, normalized_drive_power, normalized_thermal_spectrum,
    synthesize_trace, AnalyzerSettings, ConversionMode, Spectrum,
};
pub use cavity_sense_core::fitting::Weighting;
use cavity_sense_core::fitting::{fit_lorentzian, FitOptions};
use cavity_sense_core::mechanics::{effective_mass, spatial_overlap};
use cavity_sense_core::optics::{derive_cavity, dx_min, dx_min_static, photon_flux};

use crate::error::CliError;

/// Relative disagreement between measured and loss-derived finesse above
/// which `params` warns.
const FINESSE_WARNING: f64 = 0.05;

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub struct Report {
    pub text: String,
    pub warnings: Vec<String>,
}

pub fn params(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let derived = derive_cavity(&cfg.cavity)?;
    let mut text = String::new();
    let mut warnings = Vec::new();
    let from_losses = cfg.cavity.loss_finesse();
    let _ = writeln!(text, "finesse: {:.1}", derived.finesse);
    let _ = writeln!(text, "finesse_from_losses: {from_losses:.1}");
    if let Some(measured) = cfg.cavity.measured_finesse() {
        let deviation = (measured - from_losses) / from_losses;
        let _ = writeln!(text, "finesse_measured: {measured:.1}");
        let _ = writeln!(text, "finesse_deviation_percent: {:.2}", 100.0 * deviation);
        if deviation.abs() > FINESSE_WARNING {
            warnings.push(format!(
                "measured finesse {measured:.1} differs from 2π/(T_c+A) = {from_losses:.1} by {:.1}%",
                100.0 * deviation
            ));
        }
    }
    let _ = writeln!(
        text,
        "free_spectral_range_hz: {:.6e}",
        derived.free_spectral_range
    );
    let _ = writeln!(text, "bandwidth_hz: {:.6e}", derived.bandwidth);
    let _ = writeln!(
        text,
        "photon_flux_per_s: {:.6e}",
        photon_flux(&cfg.beam, &cfg.cavity)
    );
    let _ = writeln!(
        text,
        "dx_min_static_m_per_rthz: {:.6e}",
        dx_min_static(&cfg.cavity, &cfg.beam)
    );
    let _ = writeln!(text, "effective_mass_kg: {:.6e}", effective_mass(&cfg.mode));
    let _ = writeln!(
        text,
        "spatial_overlap: {:.6}",
        spatial_overlap(&cfg.spatial)
    );
    for w in &warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    Ok(Report { text, warnings })
}

pub fn parse_sweep(text: &str) -> Result<Vec<f64>, CliError> {
    let bad =
        |why: &str| CliError::Validation(format!("--sweep {text:?}: {why}; expected f0:f1:n"));
    let parts: Vec<&str> = text.split(':').collect();
    let [f0, f1, n] = parts.as_slice() else {
        return Err(bad("need three fields"));
    };
    let f0: f64 = f0.trim().parse().map_err(|_| bad("f0 is not a number"))?;
    let f1: f64 = f1.trim().parse().map_err(|_| bad("f1 is not a number"))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| bad("n is not a positive integer"))?;
    if !(f0 >= 0.0 && f0 < f1 && f1.is_finite()) {
        return Err(bad("need 0 <= f0 < f1"));
    }
    if n < 2 {
        return Err(bad("need n >= 2"));
    }
    let step = (f1 - f0) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i + 1 == n { f1 } else { f0 + step * i as f64 })
        .collect())
}

fn floors(cfg: &ExperimentConfig, f: f64) -> Result<(f64, f64), CliError> {
    let dx = dx_min(&cfg.cavity, &cfg.beam, f)?;
    let fm = shot_floor_fm_with_technical(&cfg.cavity, &cfg.beam, f, cfg.laser_frequency_noise)?;
    Ok((dx, fm))
}

pub fn sensitivity_at(cfg: &ExperimentConfig, f: f64) -> Result<String, CliError> {
    let (dx, fm) = floors(cfg, f)?;
    Ok(format!(
        "frequency_hz: {f:.6e}  dx_min_m_per_rthz: {dx:.4e}  fm_floor_hz_per_rthz: {fm:.4e}\n"
    ))
}

pub fn sensitivity_sweep(cfg: &ExperimentConfig, freqs: &[f64]) -> Result<String, CliError> {
    let mut out = String::from("frequency_hz,dx_min_m_per_rthz,fm_floor_hz_per_rthz\n");
    for &f in freqs {
        let (dx, fm) = floors(cfg, f)?;
        let _ = writeln!(out, "{f:.16e},{dx:.16e},{fm:.16e}");
    }
    Ok(out)
}

pub struct AnalyzerOverrides {
    pub rbw: Option<f64>,
    pub averages: Option<u32>,
    pub span: Option<f64>,
    pub center: Option<f64>,
    pub points: Option<usize>,
    pub seed: u64,
}

pub fn analyzer_settings(
    cfg: &ExperimentConfig,
    o: AnalyzerOverrides,
) -> Result<AnalyzerSettings, CliError> {
    let base = &cfg.analyzer;
    let center = o.center.unwrap_or(0.5 * (base.f_start + base.f_stop));
    let span = o.span.unwrap_or(base.f_stop - base.f_start);
    Ok(AnalyzerSettings::centered(
        center,
        span,
        o.points.unwrap_or(base.n_points),
        o.rbw.unwrap_or(base.rbw),
        o.averages.unwrap_or(base.n_averages),
        o.seed,
    )?)
}

#[derive(Clone, Copy)]
pub enum Kind {
    Thermal,
    Excitation,
}

pub struct SpectrumOutput {
    pub csv: String,
    pub summary: String,
}

pub fn spectrum(
    cfg: &ExperimentConfig,
    kind: Kind,
    settings: &AnalyzerSettings,
    analytic: bool,
) -> Result<SpectrumOutput, CliError> {
    let trace = |model: &dyn Fn(f64) -> cavity_sense_core::Result<f64>| {
        if analytic {
            analytic_trace(model, settings)
        } else {
            synthesize_trace(model, settings)
        }
    };
    let (normalized, conversion) = match kind {
        Kind::Thermal => (
            trace(&|f| {
                normalized_thermal_spectrum(&cfg.cavity, &cfg.beam, &cfg.mode, &cfg.environment, f)
            })?,
            ConversionMode::Noise,
        ),
        Kind::Excitation => (
            trace(&|f| {
                let drive = cfg.drive.at_frequency(f)?;
                normalized_drive_power(&cfg.cavity, &cfg.beam, &cfg.mode, &drive, settings.rbw)
            })?,
            ConversionMode::Coherent { rbw: settings.rbw },
        ),
    };
    let displacement = equivalent_displacement(&normalized, &cfg.cavity, &cfg.beam, conversion)?;
    let table = SpectrumTable::from_spectra(&normalized, &displacement)?;
    Ok(SpectrumOutput {
        csv: table.to_csv(),
        summary: peak_summary(&normalized),
    })
}

fn peak_summary(s: &Spectrum) -> String {
    let (f, v) = s
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("validated spectra are non-empty");
    format!("peak {v:.4e} ({:.2} dB re shot noise) at {f:.1} Hz", db(v))
}

pub struct CalibrationOutput {
    pub csv: String,
    pub report: String,
}

pub fn calibrate(
    cfg: &ExperimentConfig,
    amplitudes: &[f64],
    freq: f64,
    rbw: f64,
) -> Result<CalibrationOutput, CliError> {
    let points = calibration_curve(&cfg.cavity, &cfg.beam, amplitudes, freq, rbw)?;
    let slope = log_log_slope(&points)?;
    let mut csv = String::from(
        "fm_amplitude_hz,normalized_power,db_re_shot_noise,mode_cleaner_relative_intensity\n",
    );
    for p in &points {
        let intensity = mode_cleaner_intensity_modulation(&cfg.mode_cleaner, p.fm_amplitude)?;
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.6},{intensity:.16e}",
            p.fm_amplitude,
            p.normalized_power,
            db(p.normalized_power)
        );
    }
    let (_, floor) = floors(cfg, freq)?;
    let report = format!(
        "log_log_slope: {slope:.9}\nfm_shot_floor_hz_per_rthz: {floor:.4e}\nanalysis_frequency_hz: {freq:.6e}\nrbw_hz: {rbw}\n"
    );
    Ok(CalibrationOutput { csv, report })
}

pub struct FitOutput {
    pub text: String,
    pub json: String,
    pub converged: bool,
}

pub fn fit(csv: &str, weighting: Weighting) -> Result<FitOutput, CliError> {
    let spectrum = SpectrumTable::parse(csv)?.normalized_spectrum()?;
    let r = fit_lorentzian(
        &spectrum,
        &FitOptions {
            weighting,
            ..Default::default()
        },
    )?;
    let m = &r.model;
    let u = &r.parameter_uncertainties;
    let weights = match weighting {
        Weighting::None => "none",
        Weighting::ChiSquared => "chi2",
    };
    let mut text = String::new();
    let _ = writeln!(text, "model: lorentzian");
    let _ = writeln!(text, "weights: {weights}");
    let _ = writeln!(text, "points: {}", spectrum.len());
    let _ = writeln!(text, "converged: {}", r.converged);
    let _ = writeln!(text, "iterations: {}", r.iterations);
    let _ = writeln!(text, "center_hz: {:.9e}", m.center);
    let _ = writeln!(text, "center_hz_sigma: {:.3e}", u[0]);
    let _ = writeln!(text, "quality_factor: {:.9e}", m.quality_factor);
    let _ = writeln!(text, "quality_factor_sigma: {:.3e}", u[1]);
    let _ = writeln!(text, "peak_amplitude: {:.9e}", m.peak_amplitude);
    let _ = writeln!(text, "peak_amplitude_sigma: {:.3e}", u[2]);
    let _ = writeln!(text, "offset: {:.9e}", m.offset);
    let _ = writeln!(text, "offset_sigma: {:.3e}", u[3]);
    let peak = m.peak_amplitude + m.offset;
    if peak > 0.0 {
        let _ = writeln!(text, "peak_db_re_shot_noise: {:.3}", db(peak));
    }
    let _ = writeln!(text, "residual_norm: {:.6e}", r.residual_norm);
    let _ = writeln!(text, "gradient_norm: {:.3e}", r.gradient_norm);
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "model": "lorentzian",
        "weights": weights,
        "result": r,
    }))
    .map_err(|e| CliError::Validation(format!("serializing fit result: {e}")))?;
    Ok(FitOutput {
        text,
        json,
        converged: r.converged,
    })
}
