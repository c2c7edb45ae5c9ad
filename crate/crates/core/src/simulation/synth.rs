//! Synthetic genotypes with block-structured linkage disequilibrium.
//!
//! Each chromosome is cut into blocks of geometric length. Within a block
//! every haplotype carries one standard-normal latent value shared by all
//! SNPs of the block; a SNP's allele is the indicator that
//! `sqrt(w) * latent + sqrt(1 - w) * noise` falls below the normal quantile
//! of its allele frequency. Blocks are mutually independent.

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::rng_for;
use crate::error::{Error, Result};
use crate::genotype::{BimRecord, GenotypeMatrix, SampleMeta};

const STREAM_GENOTYPES: u64 = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_individuals: usize,
    pub n_snps: usize,
    pub n_chromosomes: u8,
    /// Mean block length in SNPs; values <= 1 give independent SNPs.
    pub mean_block_len: f64,
    /// Share of liability variance carried by the block latent.
    pub latent_weight: f64,
    pub maf_low: f64,
    pub maf_high: f64,
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_individuals: 1000,
            n_snps: 10_000,
            n_chromosomes: 6,
            mean_block_len: 20.0,
            latent_weight: 0.89,
            maf_low: 0.05,
            maf_high: 0.5,
            missing_rate: 0.0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn independent(n_individuals: usize, n_snps: usize, seed: u64) -> Self {
        SynthConfig {
            n_individuals,
            n_snps,
            n_chromosomes: 1,
            mean_block_len: 1.0,
            seed,
            ..Default::default()
        }
    }
}

pub fn synthesize_genotypes(cfg: &SynthConfig) -> Result<GenotypeMatrix> {
    if cfg.n_individuals == 0 || cfg.n_snps == 0 || cfg.n_chromosomes == 0 {
        return Err(Error::Argument("synthetic dataset needs n, p and chromosomes > 0".into()));
    }
    if !(0.0 < cfg.maf_low && cfg.maf_low <= cfg.maf_high && cfg.maf_high <= 0.5) {
        return Err(Error::Argument(format!(
            "MAF range [{}, {}] must lie in (0, 0.5]",
            cfg.maf_low, cfg.maf_high
        )));
    }
    if !(0.0..1.0).contains(&cfg.latent_weight) || !(0.0..1.0).contains(&cfg.missing_rate) {
        return Err(Error::Argument("latent_weight and missing_rate must lie in [0, 1)".into()));
    }
    let mut rng = rng_for(cfg.seed, 0, STREAM_GENOTYPES);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let block_len = (cfg.mean_block_len > 1.0)
        .then(|| Geometric::new(1.0 / cfg.mean_block_len).expect("valid probability"));
    let shared = cfg.latent_weight.sqrt();
    let own = (1.0 - cfg.latent_weight).sqrt();
    let n_hap = 2 * cfg.n_individuals;

    let per_chrom = cfg.n_snps / cfg.n_chromosomes as usize;
    let extra = cfg.n_snps % cfg.n_chromosomes as usize;
    let mut bim = Vec::with_capacity(cfg.n_snps);
    let mut columns = Vec::with_capacity(cfg.n_snps);
    let mut latent = vec![0.0f64; n_hap];
    for c in 0..cfg.n_chromosomes {
        let count = per_chrom + usize::from((c as usize) < extra);
        let mut left_in_block = 0usize;
        for local in 0..count {
            if left_in_block == 0 {
                left_in_block = match &block_len {
                    Some(g) => 1 + g.sample(&mut rng) as usize,
                    None => 1,
                };
                for z in latent.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
            }
            left_in_block -= 1;

            let maf = rng.random_range(cfg.maf_low..=cfg.maf_high);
            let threshold = normal.inverse_cdf(maf);
            let col: Vec<Option<u8>> = (0..cfg.n_individuals)
                .map(|i| {
                    let mut g = 0u8;
                    for h in [2 * i, 2 * i + 1] {
                        let e: f64 = rng.sample(StandardNormal);
                        if shared * latent[h] + own * e < threshold {
                            g += 1;
                        }
                    }
                    let missing = cfg.missing_rate > 0.0 && rng.random::<f64>() < cfg.missing_rate;
                    (!missing).then_some(g)
                })
                .collect();
            let j = bim.len();
            bim.push(BimRecord {
                chromosome: c + 1,
                snp_id: format!("snp{j}"),
                cm: 0.0,
                position_bp: 1000 * (local as u64 + 1),
                allele_1: "A".into(),
                allele_2: "G".into(),
            });
            columns.push(col);
        }
    }
    let samples = (0..cfg.n_individuals).map(SampleMeta::synthetic).collect();
    GenotypeMatrix::from_columns(bim, samples, &columns)
}
