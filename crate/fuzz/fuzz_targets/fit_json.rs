#![no_main]

use gpc_core::io::{fit_from_json, fit_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(fit) = fit_from_json(text) {
        let again = fit_from_json(&fit_to_json(&fit).unwrap()).unwrap();
        assert_eq!(again.params, fit.params);
        assert_eq!(again.auc.to_bits(), fit.auc.to_bits());
    }
});
