#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::datagen::Checkpoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cp) = Checkpoint::from_json(text) {
        assert_eq!(Checkpoint::from_json(&cp.to_json()).unwrap(), cp);
    }
});
