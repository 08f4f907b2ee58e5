#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::escape::{escape_field, unescape_field};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    assert_eq!(unescape_field(&escape_field(text)).unwrap(), text);
    if let Ok(raw) = unescape_field(text) {
        assert_eq!(unescape_field(&escape_field(&raw)).unwrap(), raw);
    }
});
