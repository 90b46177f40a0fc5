use cavity_sense_core::fitting::{LogParameters, LorentzianModel};
use cavity_sense_core::rng::SplitMix64;

pub fn log_uniform(g: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * g.next_open01()).exp()
}

/// Random line shapes spanning the ranges the fitter is meant for.
pub fn random_models(seed: u64, n: usize) -> Vec<LorentzianModel> {
    let mut g = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            let offset = log_uniform(&mut g, 1e-3, 1e3);
            LorentzianModel {
                center: log_uniform(&mut g, 1e3, 1e8),
                quality_factor: log_uniform(&mut g, 10.0, 1e6),
                peak_amplitude: offset * log_uniform(&mut g, 1e-2, 1e5),
                offset,
            }
        })
        .collect()
}

/// 41 frequencies over ±5 linewidths, nudged off the exact centre.
pub fn probe_frequencies(model: &LorentzianModel) -> Vec<f64> {
    let width = model.center / model.quality_factor;
    (0..41)
        .map(|i| model.center + width * (-5.0 + 0.25 * i as f64) + 0.01 * width)
        .collect()
}

/// Worst column-normalized deviation between the analytic gradient and a
/// central difference with relative step 1e-6.
pub fn jacobian_mismatch(model: &LorentzianModel, frequencies: &[f64]) -> f64 {
    let p = LogParameters::new(model, model);
    let analytic: Vec<[f64; 4]> = frequencies
        .iter()
        .map(|&f| p.eval_with_gradient(f).1)
        .collect();
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let h = 1e-6 * p.theta[k].abs().max(1.0);
        let mut plus = p.theta;
        let mut minus = p.theta;
        plus[k] += h;
        minus[k] -= h;
        let (pp, pm) = (p.with_theta(plus), p.with_theta(minus));
        let scale = analytic.iter().map(|g| g[k].abs()).fold(0.0, f64::max);
        for (i, &f) in frequencies.iter().enumerate() {
            let fd = (pp.eval_with_gradient(f).0 - pm.eval_with_gradient(f).0) / (2.0 * h);
            worst = worst.max((fd - analytic[i][k]).abs() / scale);
        }
    }
    worst
}
