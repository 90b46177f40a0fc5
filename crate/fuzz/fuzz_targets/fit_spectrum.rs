#![no_main]

use cavity_sense_core::csv::SpectrumTable;
use cavity_sense_core::fitting::{fit_lorentzian, FitOptions, Weighting};
use libfuzzer_sys::fuzz_target;

// Parsed spectra go straight into the fitter, as `cavity-sense fit` does.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spectrum) = SpectrumTable::parse(text).and_then(|t| t.normalized_spectrum()) else {
        return;
    };
    for weighting in [Weighting::None, Weighting::ChiSquared] {
        if let Ok(r) = fit_lorentzian(
            &spectrum,
            &FitOptions {
                weighting,
                ..Default::default()
            },
        ) {
            assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }
});
