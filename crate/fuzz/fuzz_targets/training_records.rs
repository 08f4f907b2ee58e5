#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::datagen::{parse_records_jsonl, records_to_jsonl};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = parse_records_jsonl(text) {
        let again =
            parse_records_jsonl(&records_to_jsonl(&records)).expect("emitted records parse");
        assert_eq!(again, records);
    }
});
