#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::search::EventLog;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(log) = EventLog::parse_jsonl(text) {
        assert_eq!(EventLog::parse_jsonl(&log.to_jsonl()).unwrap(), log);
    }
});
