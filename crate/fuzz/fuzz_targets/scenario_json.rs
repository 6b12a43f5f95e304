//! Scenario files: arbitrary bytes must parse or fail cleanly, and anything
//! that parses must survive a write/read cycle.

#![no_main]

use libfuzzer_sys::fuzz_target;
use vaa_observer::simulator::Scenario;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(scenario) = Scenario::from_json_str(&text) {
        let again = Scenario::from_json_str(&scenario.to_json_string()).expect("re-read of written scenario");
        assert_eq!(again.steps(), scenario.steps());
    }
});
