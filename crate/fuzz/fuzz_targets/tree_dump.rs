#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::model::parse_tree_dump;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_tree_dump(text);
});
