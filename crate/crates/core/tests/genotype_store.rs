mod common;

use std::fs;

use common::{bim, dense, matrix, rng};
use gwas_select::genotype::{
    hwe_chi_square, load_plink_prefix, pearson, qc_filter, write_plink, GenotypeMatrix, HweCounts,
    SampleMeta,
};
use gwas_select::Error;
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(seed: u64, n: usize, p: usize, missing: f64) -> GenotypeMatrix {
    let mut r = rng(seed);
    let cols: Vec<Vec<Option<u8>>> = (0..p)
        .map(|_| {
            let maf = r.random_range(0.02..0.5);
            (0..n)
                .map(|_| {
                    if r.random::<f64>() < missing {
                        None
                    } else {
                        Some(u8::from(r.random::<f64>() < maf) + u8::from(r.random::<f64>() < maf))
                    }
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|_| u8::from(r.random::<bool>())).collect();
    matrix(&cols).with_phenotype(labels).unwrap()
}

fn files(prefix: &std::path::Path) -> [Vec<u8>; 3] {
    ["bed", "bim", "fam"].map(|e| fs::read(prefix.with_extension(e)).unwrap())
}

#[test]
fn write_then_load_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = random_matrix(1, 10, 50, 0.1);
    let prefix = dir.path().join("a");
    write_plink(&m, &prefix).unwrap();
    let back = load_plink_prefix(&prefix).unwrap();
    assert_eq!(back, m);
}

#[test]
fn degenerate_matrix_is_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let empty = GenotypeMatrix::from_columns(Vec::new(), vec![SampleMeta::synthetic(0)], &[])
        .unwrap();
    assert!(write_plink(&empty, &dir.path().join("e")).is_err());
}

#[test]
fn format_errors_are_distinguished() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("x");
    write_plink(&random_matrix(2, 7, 3, 0.0), &prefix).unwrap();
    let bed = prefix.with_extension("bed");
    let good = fs::read(&bed).unwrap();

    let mut bad = good.clone();
    bad[0] = 0x6D;
    fs::write(&bed, &bad).unwrap();
    assert!(matches!(load_plink_prefix(&prefix), Err(Error::Format(_))));

    bad = good.clone();
    bad[2] = 0x00;
    fs::write(&bed, &bad).unwrap();
    assert!(matches!(load_plink_prefix(&prefix), Err(Error::Format(_))));

    fs::write(&bed, &good[..good.len() - 1]).unwrap();
    assert!(matches!(
        load_plink_prefix(&prefix),
        Err(Error::Size { expected: 9, found: 8 })
    ));

    fs::write(&bed, &good).unwrap();
    let bim_path = prefix.with_extension("bim");
    let bim_text = fs::read_to_string(&bim_path).unwrap().replacen("\tA\tC", "\tA\tA", 1);
    fs::write(&bim_path, bim_text).unwrap();
    assert!(matches!(load_plink_prefix(&prefix), Err(Error::Validation(_))));

    assert!(matches!(
        load_plink_prefix(&dir.path().join("missing")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn unsorted_bim_is_reordered_by_position() {
    let bims = vec![bim(2, 0, 10), bim(1, 1, 500), bim(1, 2, 20)];
    let cols = vec![
        vec![Some(0), Some(1), Some(2), Some(0)],
        vec![Some(1), Some(1), Some(0), Some(0)],
        vec![Some(2), Some(0), Some(0), Some(0)],
    ];
    let samples = (0..4).map(SampleMeta::synthetic).collect();
    let m = GenotypeMatrix::from_columns(bims, samples, &cols).unwrap();
    let ids: Vec<&str> = m.snps().iter().map(|s| s.snp_id.as_str()).collect();
    assert_eq!(ids, ["rs2", "rs1", "rs0"]);
    assert!(m.snps().iter().enumerate().all(|(i, s)| s.map_index == i));
}

#[test]
fn imputation_and_all_missing_column() {
    let m = matrix(&[vec![Some(0), Some(2), None], vec![None, None, None]]);
    assert_eq!(m.genotype_column(0).unwrap(), vec![0.0, 2.0, 1.0]);
    assert!(m.genotype_column(1).is_err());
}

#[test]
fn correlation_examples() {
    let m = dense(&[vec![0, 1, 2, 0], vec![0, 2, 1, 0], vec![0, 1, 2, 0], vec![1, 1, 1, 1]]);
    // 7/11 by hand: centered a = (-3,1,5,-3)/4, b = (-3,5,1,-3)/4
    assert!((m.correlation(0, 1).unwrap() - 7.0 / 11.0).abs() < 1e-15);
    assert!((m.correlation(0, 2).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(m.correlation(0, 3), None);
    let x = m.genotype_column(0).unwrap();
    let rev: Vec<f64> = x.iter().map(|v| 2.0 - v).collect();
    assert!((pearson(&x, &rev).unwrap() + 1.0).abs() < 1e-15);
}

#[test]
fn hwe_examples() {
    let exact = HweCounts { hom_major: 25, het: 50, hom_minor: 25 };
    assert_eq!(hwe_chi_square(exact), 0.0);
    // q = 0.4, expected (36, 48, 16)
    let skewed = HweCounts { hom_major: 50, het: 20, hom_minor: 30 };
    let oracle = 14f64.powi(2) / 36.0 + 28f64.powi(2) / 48.0 + 14f64.powi(2) / 16.0;
    assert!((hwe_chi_square(skewed) - oracle).abs() < 1e-12);
    assert!((oracle - 34.027_777_777_777_78).abs() < 1e-10);
}

#[test]
fn qc_removes_monomorphic_and_hwe_failures() {
    let mut cols = vec![vec![0u8; 100]];
    let mut bad = vec![0u8; 50];
    bad.extend(vec![1u8; 20]);
    bad.extend(vec![2u8; 30]);
    cols.push(bad);
    let mut good = vec![0u8; 25];
    good.extend(vec![1u8; 50]);
    good.extend(vec![2u8; 25]);
    cols.push(good);
    let m = dense(&cols);
    let kept = qc_filter(&m, 0.01, 1e-4).unwrap();
    assert_eq!(kept.n_snps(), 1);
    assert_eq!(kept.snp(0).snp_id, "rs2");
    assert!(matches!(
        qc_filter(&dense(&[vec![0u8; 10]]), 0.01, 1e-4),
        Err(Error::EmptyResult(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plink_round_trip_bytes(seed in any::<u64>(), n in 1usize..40, p in 1usize..30, miss in 0.0f64..0.3) {
        let dir = tempfile::tempdir().unwrap();
        let m = random_matrix(seed, n, p, miss);
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        write_plink(&m, &a).unwrap();
        let loaded = load_plink_prefix(&a).unwrap();
        write_plink(&loaded, &b).unwrap();
        prop_assert_eq!(files(&a), files(&b));
        for j in 0..p {
            prop_assert_eq!(loaded.counts(j), m.counts(j));
        }
    }

    #[test]
    fn maf_and_correlation_survive_allele_flip(seed in any::<u64>(), j in 0usize..6) {
        let m = random_matrix(seed, 60, 6, 0.05);
        let f = m.flip_raw_alleles(j);
        prop_assert!((f.snp(j).minor_allele_freq - m.snp(j).minor_allele_freq).abs() < 1e-15);
        let k = (j + 1) % 6;
        match (f.correlation(j, k), m.correlation(j, k)) {
            (Some(a), Some(b)) => prop_assert!((a.abs() - b.abs()).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn correlation_symmetric_and_bounded(seed in any::<u64>()) {
        let m = random_matrix(seed, 40, 5, 0.1);
        for j in 0..5 {
            for k in 0..5 {
                let r = m.correlation(j, k);
                prop_assert_eq!(r, m.correlation(k, j));
                if let Some(r) = r {
                    prop_assert!((-1.0..=1.0).contains(&r));
                }
            }
        }
    }

    #[test]
    fn qc_is_idempotent(seed in any::<u64>(), maf in 0.0f64..0.2, alpha in 1e-6f64..0.2) {
        let m = random_matrix(seed, 80, 20, 0.05);
        if let Ok(once) = qc_filter(&m, maf, alpha) {
            let twice = qc_filter(&once, maf, alpha).unwrap();
            let ids = |x: &GenotypeMatrix| x.snps().iter().map(|s| s.snp_id.clone()).collect::<Vec<_>>();
            prop_assert_eq!(ids(&once), ids(&twice));
        }
    }
}
