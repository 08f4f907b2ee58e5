#![no_main]
use libfuzzer_sys::fuzz_target;
use prover_search::env::ScriptedEnvironment;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(env) = ScriptedEnvironment::parse(text) {
        let again = ScriptedEnvironment::parse(&env.to_tsv()).expect("serialized table parses");
        assert!(env.rows().eq(again.rows()));
        assert_eq!(env.statements().len(), again.statements().len());
    }
});
