#![no_main]

use gpc_core::io::{parse_conc_csv, write_conc_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(series) = parse_conc_csv(text, "fuzz", 1.0) {
        assert!(series.samples().windows(2).all(|w| w[0].time_h < w[1].time_h));
        let again = parse_conc_csv(&write_conc_csv(&series).unwrap(), "fuzz", 1.0).unwrap();
        assert_eq!(again.samples(), series.samples());
    }
});
