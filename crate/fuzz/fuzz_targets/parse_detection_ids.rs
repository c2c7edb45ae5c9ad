#![no_main]

use gwas_select::evaluation::parse_detection_ids;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ids) = parse_detection_ids(text) {
            assert!(ids.iter().all(|id| !id.is_empty()));
        }
    }
});
