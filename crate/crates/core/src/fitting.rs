//! Lorentzian resonance fitting by damped least squares.
//!
//! The line shape is the squared magnitude of the constant-loss-angle
//! susceptibility, normalized to its peak:
//!
//! ```text
//! y(f) = offset + peak_amplitude / (Q²·(1 − f²/f_M²)² + 1)
//! ```
//!
//! All four parameters are positive and are fitted in log coordinates. The
//! centre coordinate is additionally stretched by a reference Q, so that a
//! unit change moves the peak by about one linewidth; without this the
//! Jacobian column for f_M is ~Q times larger than the others.

use serde::{Deserialize, Serialize};

use crate::detection::Spectrum;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-9;
pub const GRADIENT_TOLERANCE: f64 = 1e-12;
const INITIAL_DAMPING: f64 = 1e-3;
const DAMPING_FACTOR: f64 = 10.0;
const MAX_DAMPING: f64 = 1e20;
const LOG_CLAMP: f64 = 700.0;
const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianModel {
    /// Hz
    pub center: f64,
    pub quality_factor: f64,
    pub peak_amplitude: f64,
    pub offset: f64,
}

impl LorentzianModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.center > 0.0 && self.center.is_finite()) {
            return Err(Error::invalid(
                "center",
                format!("must be > 0, got {}", self.center),
            ));
        }
        if !(self.quality_factor > 0.0 && self.quality_factor.is_finite()) {
            return Err(Error::invalid(
                "quality_factor",
                format!("must be > 0, got {}", self.quality_factor),
            ));
        }
        if !(self.peak_amplitude >= 0.0 && self.peak_amplitude.is_finite()) {
            return Err(Error::invalid(
                "peak_amplitude",
                format!("must be >= 0, got {}", self.peak_amplitude),
            ));
        }
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(Error::invalid(
                "offset",
                format!("must be >= 0, got {}", self.offset),
            ));
        }
        Ok(())
    }
}

pub fn lorentzian_eval(model: &LorentzianModel, frequency: f64) -> f64 {
    let detuning = model.quality_factor * unit_detuning(frequency, model.center);
    model.offset + model.peak_amplitude / (detuning * detuning + 1.0)
}

/// 1 − f²/c², factored so that f ≈ c does not cancel catastrophically.
fn unit_detuning(frequency: f64, center: f64) -> f64 {
    ((center - frequency) / center) * ((center + frequency) / center)
}

/// Internal coordinates θ = (Q_ref·ln(f_M/f_ref), ln Q, ln A, ln offset).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogParameters {
    pub theta: [f64; 4],
    reference_center: f64,
    reference_q: f64,
}

impl LogParameters {
    /// Coordinates of `model`, with the centre measured from `reference`.
    pub fn new(model: &LorentzianModel, reference: &LorentzianModel) -> Self {
        let floor = |v: f64| if v > 0.0 { v.ln() } else { -LOG_CLAMP };
        Self {
            theta: [
                reference.quality_factor * (model.center / reference.center).ln(),
                model.quality_factor.ln(),
                floor(model.peak_amplitude),
                floor(model.offset),
            ],
            reference_center: reference.center,
            reference_q: reference.quality_factor,
        }
    }

    pub fn with_theta(&self, theta: [f64; 4]) -> Self {
        let mut out = *self;
        out.theta = theta.map(|t| t.clamp(-LOG_CLAMP, LOG_CLAMP));
        out
    }

    pub fn model(&self) -> LorentzianModel {
        LorentzianModel {
            center: self.reference_center * (self.theta[0] / self.reference_q).exp(),
            quality_factor: self.theta[1].exp(),
            peak_amplitude: self.theta[2].exp(),
            offset: self.theta[3].exp(),
        }
    }

    /// Model value and its gradient with respect to θ.
    ///
    /// The detuning is expanded around the reference centre,
    /// 1 − f²/c² = (1 − f²/c_ref²) − (f/c_ref)²·expm1(−2θ₀/Q_ref),
    /// so that centre shifts far below one ulp of f_M still resolve.
    pub fn eval_with_gradient(&self, frequency: f64) -> (f64, [f64; 4]) {
        let q = self.theta[1].exp();
        let amplitude = self.theta[2].exp();
        let offset = self.theta[3].exp();
        let r2 = (frequency / self.reference_center).powi(2);
        let shift = (-2.0 * self.theta[0] / self.reference_q).exp_m1();
        let detuning = unit_detuning(frequency, self.reference_center) - r2 * shift;
        let x = q * detuning;
        let denom = x * x + 1.0;
        let value = offset + amplitude / denom;
        let dy_dx = -2.0 * amplitude * x / (denom * denom);
        // d(detuning)/dθ₀ = 2·(f/c)²/Q_ref
        let d_detuning = 2.0 * r2 * (1.0 + shift) / self.reference_q;
        (
            value,
            [dy_dx * q * d_detuning, dy_dx * x, amplitude / denom, offset],
        )
    }

    /// Gradient with respect to (f_M, Q, A, offset) in natural units.
    fn natural_gradient(&self, frequency: f64) -> [f64; 4] {
        let (_, g) = self.eval_with_gradient(frequency);
        let m = self.model();
        let x = m.quality_factor * unit_detuning(frequency, m.center);
        [
            g[0] * self.reference_q / m.center,
            g[1] / m.quality_factor,
            1.0 / (x * x + 1.0),
            1.0,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    None,
    /// Residuals divided by the measured value (1/value² weights), suited to
    /// power-averaged spectra whose scatter is proportional to the level.
    ChiSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub initial: Option<LorentzianModel>,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFitResult {
    pub model: LorentzianModel,
    /// √(Σ weighted residual²)
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// One-sigma uncertainties of (center, Q, peak_amplitude, offset).
    pub parameter_uncertainties: [f64; 4],
    /// Max-norm of the scaled gradient at the returned iterate.
    pub gradient_norm: f64,
    /// ½Σr² after the initial guess and after every accepted step.
    pub cost_history: Vec<f64>,
}

/// Peak-finding initial guess: argmax centre, median baseline of the outer
/// 20% of bins, half-maximum crossing width.
pub fn initial_guess(spectrum: &Spectrum) -> Result<LorentzianModel> {
    let f = spectrum.frequencies();
    let y = spectrum.values();
    let n = y.len();
    if n < MIN_POINTS {
        return Err(Error::DegenerateFit(format!(
            "need at least {MIN_POINTS} points, got {n}"
        )));
    }
    if f[0] <= 0.0 {
        return Err(Error::DegenerateFit("frequencies must be > 0".into()));
    }
    let (peak_index, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let lowest = y.iter().copied().fold(f64::INFINITY, f64::min);
    if peak == lowest {
        return Err(Error::DegenerateFit("all values are equal".into()));
    }
    if peak_index == 0 || peak_index == n - 1 {
        return Err(Error::DegenerateFit(
            "maximum lies on the edge of the grid; resonance not captured".into(),
        ));
    }

    let edge = (n / 10).max(1);
    let mut outer: Vec<f64> = y[..edge].iter().chain(&y[n - edge..]).copied().collect();
    outer.sort_by(f64::total_cmp);
    let mid = outer.len() / 2;
    let mut offset = if outer.len().is_multiple_of(2) {
        0.5 * (outer[mid - 1] + outer[mid])
    } else {
        outer[mid]
    };
    if offset >= peak {
        offset = lowest;
    }
    let amplitude = peak - offset;
    let half = offset + 0.5 * amplitude;

    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = peak_index;
        for i in range {
            if y[i] < half {
                let t = (y[prev] - half) / (y[prev] - y[i]);
                return Some(f[prev] + t * (f[i] - f[prev]));
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..peak_index).rev());
    let right = crossing(&mut (peak_index + 1..n));
    let center = f[peak_index];
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (center - l),
        (None, Some(r)) => 2.0 * (r - center),
        (None, None) => 0.5 * (f[n - 1] - f[0]),
    };
    let fwhm = fwhm.max(0.5 * (f[peak_index + 1] - f[peak_index - 1]));
    let tiny = 1e-12 * peak;
    Ok(LorentzianModel {
        center,
        quality_factor: center / fwhm,
        peak_amplitude: amplitude.max(tiny),
        offset: offset.max(tiny),
    })
}

struct Problem<'a> {
    frequencies: &'a [f64],
    weights: Vec<f64>,
    data: &'a [f64],
}

impl Problem<'_> {
    fn residuals(&self, p: &LogParameters) -> (Vec<f64>, f64) {
        let r: Vec<f64> = self
            .frequencies
            .iter()
            .zip(self.data)
            .zip(&self.weights)
            .map(|((&f, &d), &w)| w * (p.eval_with_gradient(f).0 - d))
            .collect();
        let cost = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        (r, cost)
    }

    #[allow(clippy::needless_range_loop)]
    fn normal_equations(&self, p: &LogParameters) -> ([[f64; 4]; 4], [f64; 4], [f64; 4], f64) {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        let mut col_norm2 = [0.0; 4];
        let mut cost = 0.0;
        for ((&f, &d), &w) in self.frequencies.iter().zip(self.data).zip(&self.weights) {
            let (value, grad) = p.eval_with_gradient(f);
            let r = w * (value - d);
            cost += 0.5 * r * r;
            let j = grad.map(|g| w * g);
            for a in 0..4 {
                jtr[a] += j[a] * r;
                col_norm2[a] += j[a] * j[a];
                for b in 0..=a {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                jtj[b][a] = jtj[a][b];
            }
        }
        (jtj, jtr, col_norm2, cost)
    }

    fn natural_normal_matrix(&self, p: &LogParameters) -> [[f64; 4]; 4] {
        let mut jtj = [[0.0; 4]; 4];
        for (&f, &w) in self.frequencies.iter().zip(&self.weights) {
            let j = p.natural_gradient(f).map(|g| w * g);
            for a in 0..4 {
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        jtj
    }
}

fn cholesky_solve(m: &[[f64; 4]; 4], rhs: &[f64; 4]) -> Option<[f64; 4]> {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let s = m[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = [0.0; 4];
    for i in 0..4 {
        z[i] = (rhs[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        x[i] = (z[i] - (i + 1..4).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Diagonal of m⁻¹, solved on the unit-diagonal rescaling of m.
fn inverse_diagonal(m: &[[f64; 4]; 4]) -> [f64; 4] {
    let d = [0, 1, 2, 3].map(|k| {
        if m[k][k] > 0.0 {
            1.0 / m[k][k].sqrt()
        } else {
            0.0
        }
    });
    let mut scaled = *m;
    for a in 0..4 {
        for b in 0..4 {
            scaled[a][b] *= d[a] * d[b];
        }
    }
    let mut out = [f64::INFINITY; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        if let Some(col) = cholesky_solve(&scaled, &e) {
            *slot = col[k] * d[k] * d[k];
        }
    }
    out
}

/// Fits the Lorentzian line shape to `spectrum` by Levenberg–Marquardt.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`.
pub fn fit_lorentzian(spectrum: &Spectrum, options: &FitOptions) -> Result<LorentzianFitResult> {
    let guess = match options.initial {
        Some(m) => {
            m.validate()?;
            if spectrum.len() < MIN_POINTS {
                return Err(Error::DegenerateFit(format!(
                    "need at least {MIN_POINTS} points, got {}",
                    spectrum.len()
                )));
            }
            m
        }
        None => initial_guess(spectrum)?,
    };
    // Work on data normalized to its peak so the log-coordinate clamps and
    // tolerances do not depend on the units of the values.
    let scale = spectrum.values().iter().copied().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateFit("all values are zero".into()));
    }
    let normalized: Vec<f64> = spectrum.values().iter().map(|v| v / scale).collect();
    let data = normalized.as_slice();
    let guess = LorentzianModel {
        peak_amplitude: guess.peak_amplitude / scale,
        offset: guess.offset / scale,
        ..guess
    };
    let weights = match options.weighting {
        Weighting::None => vec![1.0; data.len()],
        Weighting::ChiSquared => data
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    Ok(1.0 / v)
                } else {
                    Err(Error::DegenerateFit(
                        "chi-squared weights need values > 0".into(),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let problem = Problem {
        frequencies: spectrum.frequencies(),
        weights,
        data,
    };
    let data_norm = problem
        .data
        .iter()
        .zip(&problem.weights)
        .map(|(d, w)| (d * w).powi(2))
        .sum::<f64>()
        .sqrt();

    let mut params = LogParameters::new(&guess, &guess);
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;
    let mut converged = false;
    let (mut jtj, mut jtr, mut col_norm2, mut cost) = problem.normal_equations(&params);
    let mut cost_history = vec![cost];

    let scaled_gradient = |jtr: &[f64; 4], col_norm2: &[f64; 4]| -> f64 {
        (0..4)
            .map(|k| {
                let scale = col_norm2[k].sqrt() * data_norm;
                if scale > 0.0 {
                    jtr[k].abs() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };

    while iterations < MAX_ITERATIONS {
        if scaled_gradient(&jtr, &col_norm2) < GRADIENT_TOLERANCE {
            converged = true;
            break;
        }
        iterations += 1;
        let max_diag = (0..4).map(|k| jtj[k][k]).fold(0.0, f64::max);
        let mut damped = jtj;
        for k in 0..4 {
            damped[k][k] += damping * jtj[k][k].max(1e-30 * max_diag).max(f64::MIN_POSITIVE);
        }
        let rhs = jtr.map(|g| -g);
        let Some(step) = cholesky_solve(&damped, &rhs) else {
            damping *= DAMPING_FACTOR;
            if damping > MAX_DAMPING {
                break;
            }
            continue;
        };
        let small_step =
            (0..4).all(|k| step[k].abs() <= STEP_TOLERANCE * (1.0 + params.theta[k].abs()));
        let mut theta = params.theta;
        for k in 0..4 {
            theta[k] += step[k];
        }
        let trial = params.with_theta(theta);
        let (_, trial_cost) = problem.residuals(&trial);
        if trial_cost.is_finite() && trial_cost < cost {
            params = trial;
            (jtj, jtr, col_norm2, cost) = problem.normal_equations(&params);
            cost_history.push(cost);
            damping = (damping / DAMPING_FACTOR).max(1e-15);
            if small_step {
                converged = true;
                break;
            }
        } else {
            if small_step {
                converged = true;
                break;
            }
            damping *= DAMPING_FACTOR;
            if damping > MAX_DAMPING {
                break;
            }
        }
    }

    let mut model = params.model();
    model.peak_amplitude *= scale;
    model.offset *= scale;
    let dof = problem.data.len().saturating_sub(4).max(1) as f64;
    let sigma2 = 2.0 * cost / dof;
    let inv_diag = inverse_diagonal(&problem.natural_normal_matrix(&params));
    let unit = [1.0, 1.0, scale, scale];
    let parameter_uncertainties = [0, 1, 2, 3].map(|k| unit[k] * (sigma2 * inv_diag[k]).sqrt());
    let value_scale = match options.weighting {
        Weighting::None => scale,
        Weighting::ChiSquared => 1.0,
    };
    Ok(LorentzianFitResult {
        model,
        residual_norm: (2.0 * cost).sqrt() * value_scale,
        iterations,
        converged,
        parameter_uncertainties,
        gradient_norm: scaled_gradient(&jtr, &col_norm2),
        cost_history: cost_history
            .into_iter()
            .map(|c| c * value_scale * value_scale)
            .collect(),
    })
}
