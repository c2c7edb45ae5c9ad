#![no_main]

use gwas_select::genotype::{decode_bed, encode_bed, parse_bim, GenotypeMatrix, SampleMeta};
use libfuzzer_sys::fuzz_target;

// First two bytes choose the declared dimensions; the rest is the .bed image.
fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let (n, p) = (data[0] as usize % 64, data[1] as usize % 64);
    let bed = &data[2..];
    let Ok(payload) = decode_bed(bed, n, p) else {
        return;
    };
    assert_eq!(encode_bed(payload), bed);
    if n == 0 || p == 0 {
        return;
    }
    let bim_text: String = (0..p).map(|j| format!("1 s{j} 0 {} A G\n", j + 1)).collect();
    let bim = parse_bim(&bim_text).unwrap();
    let samples = (0..n).map(SampleMeta::synthetic).collect();
    if let Ok(m) = GenotypeMatrix::from_raw(bim, samples, None, payload.to_vec()) {
        for j in 0..p {
            assert_eq!(m.counts(j).len(), n);
            let _ = m.correlation(j, (j + 1) % p);
        }
    }
});
