#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::critic::{parse_prm_labels, write_prm_labels};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(labels) = parse_prm_labels(text) {
        assert_eq!(
            parse_prm_labels(&write_prm_labels(&labels)).unwrap(),
            labels
        );
    }
});
