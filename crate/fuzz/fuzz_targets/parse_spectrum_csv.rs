#![no_main]

use cavity_sense_core::csv::SpectrumTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = SpectrumTable::parse(text) {
        let again = SpectrumTable::parse(&table.to_csv()).expect("serialized table parses");
        assert_eq!(again, table);
        let _ = table.normalized_spectrum();
    }
});
