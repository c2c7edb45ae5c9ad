#![no_main]

use gwas_select::simulation::Scenario;
use libfuzzer_sys::fuzz_target;

// Anything that parses must survive a write/parse cycle unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = Scenario::parse(text) {
        let written = s.to_text();
        let again = Scenario::parse(&written).expect("written scenario parses");
        assert_eq!(again.to_text(), written);
    }
});
