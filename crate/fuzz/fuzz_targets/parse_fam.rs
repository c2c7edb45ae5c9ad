#![no_main]

use gwas_select::genotype::parse_fam;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_fam(text);
    }
});
