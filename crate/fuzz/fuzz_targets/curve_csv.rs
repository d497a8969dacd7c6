#![no_main]
use libfuzzer_sys::fuzz_target;
use mathieu_casimir::casimir::EnergyCurve;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = EnergyCurve::read_csv(s.as_bytes());
    }
});
