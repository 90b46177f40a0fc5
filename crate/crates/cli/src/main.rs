use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cavity_sense_core::config::ExperimentConfig;

mod commands;
mod error;

use error::CliError;

const DEFAULT_CONFIG_PATH: &str = "experiment.cfg";
const SEED_ENV: &str = "CAVITY_SENSE_SEED";

#[derive(Parser)]
#[command(
    name = "cavity-sense",
    version,
    about = "Shot-noise-limited cavity displacement sensor model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file. Without this flag ./experiment.cfg is read if
    /// present, otherwise the built-in defaults are used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived cavity, beam and mode parameters.
    Params {
        #[command(flatten)]
        common: Common,
    },
    /// Displacement sensitivity and its FM equivalent.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Single analysis frequency, Hz.
        #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
        freq: Option<f64>,
        /// Linear sweep f0:f1:n in Hz, end points included.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Shot-normalized spectrum around the mechanical resonance, as CSV.
    Spectrum {
        #[command(flatten)]
        common: Common,
        kind: SpectrumKind,
        #[command(flatten)]
        analyzer: AnalyzerFlags,
        /// Noise-free expectation instead of a synthetic averaged trace.
        #[arg(long)]
        analytic: bool,
    },
    /// FM calibration curve and its log-log slope.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated FM amplitudes, Hz.
        #[arg(long, value_delimiter = ',', required = true)]
        amplitudes: Vec<f64>,
        /// Analysis frequency, Hz [default: resonance frequency].
        #[arg(long)]
        freq: Option<f64>,
        /// Resolution bandwidth, Hz [default: config rbw].
        #[arg(long)]
        rbw: Option<f64>,
    },
    /// Fit a resonance to a spectrum CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::Lorentzian)]
        model: Model,
        #[arg(long, value_enum, default_value_t = Weights::None)]
        weights: Weights,
        /// Also write the result as JSON to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumKind {
    Thermal,
    Excitation,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Lorentzian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    None,
    Chi2,
}

#[derive(Args)]
struct AnalyzerFlags {
    /// Resolution bandwidth, Hz.
    #[arg(long)]
    rbw: Option<f64>,
    /// Number of averaged sweeps.
    #[arg(long)]
    averages: Option<u32>,
    /// Frequency span, Hz.
    #[arg(long)]
    span: Option<f64>,
    /// Centre frequency, Hz.
    #[arg(long)]
    center: Option<f64>,
    /// Number of frequency points.
    #[arg(long)]
    points: Option<usize>,
    /// Trace seed (overrides CAVITY_SENSE_SEED and the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let text = match path {
        Some(p) => {
            fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?
        }
        None => match fs::read_to_string(DEFAULT_CONFIG_PATH) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(ExperimentConfig::default()),
            Err(e) => return Err(CliError::Io(format!("{DEFAULT_CONFIG_PATH}: {e}"))),
        },
    };
    Ok(ExperimentConfig::parse(&text)?)
}

fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::Validation(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(None),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Params { common } => {
            let cfg = load_config(common.config.as_deref())?;
            let report = commands::params(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(common.output.as_deref(), &report.text)
        }
        Command::Sensitivity {
            common,
            freq,
            sweep,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let text = match (freq, sweep) {
                (Some(f), _) => commands::sensitivity_at(&cfg, f)?,
                (None, Some(s)) => commands::sensitivity_sweep(&cfg, &commands::parse_sweep(&s)?)?,
                (None, None) => unreachable!("clap requires one of --freq/--sweep"),
            };
            emit(common.output.as_deref(), &text)
        }
        Command::Spectrum {
            common,
            kind,
            analyzer,
            analytic,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let seed = match analyzer.seed {
                Some(s) => s,
                None => seed_from_env()?.unwrap_or(cfg.analyzer.seed),
            };
            let settings = commands::analyzer_settings(
                &cfg,
                commands::AnalyzerOverrides {
                    rbw: analyzer.rbw,
                    averages: analyzer.averages,
                    span: analyzer.span,
                    center: analyzer.center,
                    points: analyzer.points,
                    seed,
                },
            )?;
            let kind = match kind {
                SpectrumKind::Thermal => commands::Kind::Thermal,
                SpectrumKind::Excitation => commands::Kind::Excitation,
            };
            let out = commands::spectrum(&cfg, kind, &settings, analytic)?;
            eprintln!("{}", out.summary);
            emit(common.output.as_deref(), &out.csv)
        }
        Command::Calibrate {
            common,
            amplitudes,
            freq,
            rbw,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let freq = freq.unwrap_or(cfg.mode.resonance_frequency());
            let rbw = rbw.unwrap_or(cfg.analyzer.rbw);
            let out = commands::calibrate(&cfg, &amplitudes, freq, rbw)?;
            eprint!("{}", out.report);
            emit(common.output.as_deref(), &out.csv)
        }
        Command::Fit {
            common,
            input,
            model: Model::Lorentzian,
            weights,
            json,
        } => {
            let text = fs::read_to_string(&input)
                .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            let weighting = match weights {
                Weights::None => commands::Weighting::None,
                Weights::Chi2 => commands::Weighting::ChiSquared,
            };
            let out = commands::fit(&text, weighting)?;
            emit(common.output.as_deref(), &out.text)?;
            if let Some(path) = json {
                fs::write(&path, &out.json)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            if out.converged {
                Ok(())
            } else {
                Err(CliError::NonConvergence(
                    "fit did not converge; best iterate reported".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
