use super::GenotypeMatrix;
use crate::error::{Error, Result};
use crate::stats::chi2_1df_upper;

/// Genotype counts by minor-allele dose (0, 1, 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HweCounts {
    pub hom_major: usize,
    pub het: usize,
    pub hom_minor: usize,
}

impl HweCounts {
    fn total(&self) -> usize {
        self.hom_major + self.het + self.hom_minor
    }
}

/// 1-df goodness-of-fit chi-square against Hardy-Weinberg proportions.
/// Monomorphic or empty SNPs give 0.
pub fn hwe_chi_square(c: HweCounts) -> f64 {
    let n = c.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let q = (2 * c.hom_minor + c.het) as f64 / (2.0 * n);
    let p = 1.0 - q;
    let expected = [n * p * p, 2.0 * n * p * q, n * q * q];
    let observed = [c.hom_major as f64, c.het as f64, c.hom_minor as f64];
    if expected.iter().any(|&e| e <= 0.0) {
        return 0.0;
    }
    observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum()
}

fn hwe_counts(m: &GenotypeMatrix, j: usize, controls_only: bool) -> HweCounts {
    let ph = m.phenotype();
    let mut c = HweCounts::default();
    for i in 0..m.n_individuals() {
        if controls_only && ph.map(|p| p[i]) != Some(Some(0)) {
            continue;
        }
        match m.genotype(i, j) {
            Some(0) => c.hom_major += 1,
            Some(1) => c.het += 1,
            Some(2) => c.hom_minor += 1,
            _ => {}
        }
    }
    c
}

/// HWE p-value of SNP `j`, computed on controls when the phenotype has any.
pub fn hwe_p_value(m: &GenotypeMatrix, j: usize) -> f64 {
    let controls_only = m
        .phenotype()
        .is_some_and(|p| p.contains(&Some(0)));
    chi2_1df_upper(hwe_chi_square(hwe_counts(m, j, controls_only)))
}

/// Keep SNPs with MAF >= `maf_min` and HWE p-value >= `hwe_alpha`.
/// HWE is assessed on controls when a phenotype with controls is present.
pub fn qc_filter(m: &GenotypeMatrix, maf_min: f64, hwe_alpha: f64) -> Result<GenotypeMatrix> {
    if !(0.0..0.5).contains(&maf_min) {
        return Err(Error::Argument(format!("maf_min {maf_min} outside [0, 0.5)")));
    }
    if !(hwe_alpha > 0.0 && hwe_alpha < 1.0) {
        return Err(Error::Argument(format!("hwe_alpha {hwe_alpha} outside (0, 1)")));
    }
    let keep: Vec<usize> = (0..m.n_snps())
        .filter(|&j| m.snp(j).minor_allele_freq >= maf_min && hwe_p_value(m, j) >= hwe_alpha)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyResult("every SNP failed quality control".into()));
    }
    log::info!("qc kept {} of {} SNPs", keep.len(), m.n_snps());
    Ok(m.select_snps(&keep))
}
