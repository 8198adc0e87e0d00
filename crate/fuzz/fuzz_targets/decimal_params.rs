#![no_main]

use gpc_core::gpc::GpcParams;
use gpc_core::MpReal;
use libfuzzer_sys::fuzz_target;

// four comma-separated fields: a, b, alpha, beta (hours)
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = MpReal::parse(text, 70) {
        assert!(v.as_float().is_finite());
    }
    let fields: Vec<&str> = text.split(',').collect();
    if let [a, b, alpha, beta] = fields[..] {
        if let Ok(p) = GpcParams::parse(a, b, alpha, beta) {
            let f = p.to_f64();
            assert!(f.a > 0.0 && f.b >= 0.0 && f.beta_h >= 0.0);
            let [a2, b2, al2, be2] = p.to_decimal_strings(80);
            assert_eq!(GpcParams::parse(&a2, &b2, &al2, &be2).unwrap(), p);
        }
    }
});
