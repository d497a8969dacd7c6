#![no_main]
use libfuzzer_sys::fuzz_target;
use mathieu_casimir::cli::parse_args;

// Whitespace-split words after the program name; parsing only, no execution.
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_args(std::iter::once("mathieu").chain(s.split_whitespace()));
    }
});
