#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::critic::{
    decode_distance, encode_distance, parse_distance_tokens, serialize_distance_tokens,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(path) = parse_distance_tokens(text) {
        assert_eq!(serialize_distance_tokens(&path), text);
        let levels = path.levels() as u32;
        assert_eq!(
            encode_distance(decode_distance(&path), levels).unwrap(),
            path
        );
    }
});
