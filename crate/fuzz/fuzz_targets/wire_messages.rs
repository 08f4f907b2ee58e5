#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::policy::{parse_wire_request, parse_wire_response};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_wire_request(text);
    if let Ok(resp) = parse_wire_response(text, 8) {
        assert!(resp.tactics.len() <= 8);
        for t in resp.into_tactics() {
            assert!(t.token_logprobs.iter().all(|v| *v <= 0.0));
        }
    }
});
