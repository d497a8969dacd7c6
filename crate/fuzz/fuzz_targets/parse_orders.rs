#![no_main]
use libfuzzer_sys::fuzz_target;
use mathieu_casimir::parse::parse_orders;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_orders(s);
    }
});
