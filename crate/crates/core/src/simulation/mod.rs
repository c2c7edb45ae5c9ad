//! Phenotype simulation under the global null and under a logistic
//! complex-trait model.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded from
//! `(base_seed, replicate_id)` through a SplitMix64 mix, with a separate
//! ChaCha stream for each purpose. Outputs are bit-stable across platforms.

mod scenario;
mod synth;

pub use scenario::{Scenario, ScenarioKind};
pub use synth::{synthesize_genotypes, SynthConfig};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::genotype::{pearson, GenotypeMatrix};
use crate::stats::logistic;

const STREAM_PHENOTYPE: u64 = 1;
const STREAM_CAUSAL: u64 = 2;

/// LD needed between a causal SNP and its best proxy before the causal
/// SNP may be removed from the analysis data.
pub const PROXY_MIN_R: f64 = 0.5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate_id` of a run with `base_seed`.
pub fn replicate_seed(base_seed: u64, replicate_id: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ replicate_id.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub(crate) fn rng_for(base_seed: u64, replicate_id: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(base_seed, replicate_id));
    rng.set_stream(stream);
    rng
}

/// Cases and controls assigned with probability 1/2 each.
pub fn simulate_null(m: &GenotypeMatrix, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_PHENOTYPE);
    (0..m.n_individuals())
        .map(|_| u8::from(rng.random::<f64>() < 0.5))
        .collect()
}

/// Null phenotype for the replicate described by `scenario`.
pub fn simulate_null_replicate(m: &GenotypeMatrix, scenario: &Scenario) -> Vec<u8> {
    simulate_null(m, replicate_seed(scenario.seed, scenario.replicate_id))
}

/// Evenly spaced effects over `[low, high]`, in causal-SNP order.
pub fn effect_grid(k: usize, low: f64, high: f64) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![low],
        _ => (0..k)
            .map(|i| low + (high - low) * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

/// Draw `k` SNPs with MAF > `maf_min` and pairwise |r| < `rho_max`, spread
/// as evenly as possible over the chromosomes.
pub fn pick_causal(
    m: &GenotypeMatrix,
    k: usize,
    maf_min: f64,
    rho_max: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    const ATTEMPTS: usize = 50;
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut chromosomes: Vec<u8> = m.snps().iter().map(|s| s.chromosome).collect();
    chromosomes.dedup();
    let eligible: Vec<Vec<usize>> = chromosomes
        .iter()
        .map(|&c| {
            (0..m.n_snps())
                .filter(|&j| m.snp(j).chromosome == c && m.snp(j).minor_allele_freq > maf_min)
                .collect()
        })
        .collect();
    let total_eligible: usize = eligible.iter().map(Vec::len).sum();
    if total_eligible < k {
        return Err(Error::Infeasible(format!(
            "MAF constraint: only {total_eligible} SNPs have MAF > {maf_min}, {k} requested"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_CAUSAL);
    let n_chrom = chromosomes.len();
    let check_r = rho_max < 1.0;
    for _ in 0..ATTEMPTS {
        let mut order: Vec<usize> = (0..n_chrom).collect();
        order.shuffle(&mut rng);
        let mut quota = vec![k / n_chrom; n_chrom];
        for &c in order.iter().take(k % n_chrom) {
            quota[c] += 1;
        }
        if (0..n_chrom).any(|c| eligible[c].len() < quota[c]) {
            return Err(Error::Infeasible(format!(
                "MAF constraint: a chromosome has fewer than its share of SNPs with MAF > {maf_min}"
            )));
        }
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        let mut chosen_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut ok = true;
        for c in 0..n_chrom {
            let mut pool = eligible[c].clone();
            pool.shuffle(&mut rng);
            let mut taken = 0;
            for j in pool {
                if taken == quota[c] {
                    break;
                }
                let col = m.genotype_column(j)?;
                let compatible = !check_r
                    || chosen_cols.iter().all(|other| {
                        pearson(&col, other).is_some_and(|r| r.abs() < rho_max)
                    });
                if compatible {
                    chosen.push(j);
                    chosen_cols.push(col);
                    taken += 1;
                }
            }
            if taken < quota[c] {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.sort_unstable();
            return Ok(chosen);
        }
    }
    Err(Error::Infeasible(format!(
        "correlation constraint: no set of {k} SNPs with pairwise |r| < {rho_max} found in {ATTEMPTS} attempts"
    )))
}

/// Per-individual linear predictor without intercept.
fn linear_predictor(m: &GenotypeMatrix, causal: &[usize], effects: &[f64]) -> Result<Vec<f64>> {
    let mut lp = vec![0.0; m.n_individuals()];
    for (&j, &beta) in causal.iter().zip(effects) {
        let col = m.genotype_column(j)?;
        for (v, x) in lp.iter_mut().zip(col) {
            *v += beta * x;
        }
    }
    Ok(lp)
}

fn mean_probability(lp: &[f64], intercept: f64) -> f64 {
    lp.iter().map(|v| logistic(intercept + v)).sum::<f64>() / lp.len() as f64
}

/// Root of `mean_probability(lp, b) = 1/2` by bisection from `[lo, hi]`,
/// widening the bracket as needed.
fn solve_intercept(lp: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let f = |b: f64| mean_probability(lp, b) - 0.5;
    while f(lo) > 0.0 {
        lo -= 2.0 * (hi - lo).max(1.0);
    }
    while f(hi) < 0.0 {
        hi += 2.0 * (hi - lo).max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 || mid == lo || mid == hi {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Intercept making the expected case fraction one half.
pub fn calibrate_intercept(m: &GenotypeMatrix, causal: &[usize], effects: &[f64]) -> Result<f64> {
    if causal.len() != effects.len() {
        return Err(Error::Argument(format!(
            "{} effects for {} causal SNPs",
            effects.len(),
            causal.len()
        )));
    }
    if m.n_individuals() == 0 {
        return Err(Error::Argument("no individuals".into()));
    }
    let lp = linear_predictor(m, causal, effects)?;
    Ok(solve_intercept(&lp, -1.0, 1.0))
}

/// Case probabilities under the scenario's logistic model.
pub fn trait_probabilities(m: &GenotypeMatrix, scenario: &Scenario) -> Result<Vec<f64>> {
    let lp = linear_predictor(m, &scenario.causal_snps, &scenario.effects)?;
    Ok(lp.iter().map(|v| logistic(scenario.intercept + v)).collect())
}

/// Bernoulli phenotype drawn from the scenario's case probabilities.
pub fn simulate_trait(m: &GenotypeMatrix, scenario: &Scenario) -> Result<Vec<u8>> {
    scenario.validate()?;
    let probs = trait_probabilities(m, scenario)?;
    let mut rng = rng_for(scenario.seed, scenario.replicate_id, STREAM_PHENOTYPE);
    Ok(probs
        .into_iter()
        .map(|p| u8::from(rng.random::<f64>() < p))
        .collect())
}

/// Settings for building complex-trait scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitSpec {
    pub k: usize,
    pub effect_low: f64,
    pub effect_high: f64,
    pub maf_min: f64,
    pub rho_max: f64,
}

impl Default for TraitSpec {
    fn default() -> Self {
        TraitSpec {
            k: 6,
            effect_low: 0.2,
            effect_high: 0.28,
            maf_min: 0.3,
            rho_max: 0.1,
        }
    }
}

/// Draw causal SNPs, assign effects and calibrate the intercept for one
/// replicate.
pub fn make_trait_scenario(
    m: &GenotypeMatrix,
    spec: &TraitSpec,
    seed: u64,
    replicate_id: u64,
) -> Result<Scenario> {
    let causal = pick_causal(
        m,
        spec.k,
        spec.maf_min,
        spec.rho_max,
        replicate_seed(seed, replicate_id) ^ 0xA5A5_A5A5,
    )?;
    let effects = effect_grid(spec.k, spec.effect_low, spec.effect_high);
    let intercept = calibrate_intercept(m, &causal, &effects)?;
    Ok(Scenario {
        kind: ScenarioKind::ComplexTrait,
        seed,
        replicate_id,
        causal_snps: causal,
        effects,
        intercept,
        removed_causal: Vec::new(),
        effect_low: spec.effect_low,
        effect_high: spec.effect_high,
        maf_min: spec.maf_min,
        rho_max: spec.rho_max,
    })
}

/// Strongest |r| between SNP `j` and any other SNP on its chromosome.
fn best_proxy(m: &GenotypeMatrix, j: usize) -> Result<f64> {
    let col = m.genotype_column(j)?;
    let chrom = m.snp(j).chromosome;
    let mut best = 0.0f64;
    for k in (0..m.n_snps()).filter(|&k| k != j && m.snp(k).chromosome == chrom) {
        let Ok(other) = m.genotype_column(k) else {
            continue;
        };
        if let Some(r) = pearson(&col, &other) {
            best = best.max(r.abs());
        }
    }
    Ok(best)
}

/// Delete half of the causal SNPs (rounded down) from the analysis data,
/// choosing those with the strongest LD proxies (|r| >= 0.5).
pub fn remove_causal(m: &GenotypeMatrix, scenario: &Scenario) -> Result<(GenotypeMatrix, Scenario)> {
    scenario.validate()?;
    let want = scenario.k() / 2;
    let mut proxied: Vec<(usize, f64)> = scenario
        .causal_snps
        .iter()
        .map(|&c| best_proxy(m, c).map(|r| (c, r)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, r)| *r >= PROXY_MIN_R)
        .collect();
    proxied.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if proxied.len() < want {
        log::warn!(
            "only {} of {} causal SNPs have a proxy with |r| >= {PROXY_MIN_R}; removing those",
            proxied.len(),
            scenario.k()
        );
    }
    let mut removed: Vec<usize> = proxied.iter().take(want).map(|(c, _)| *c).collect();
    removed.sort_unstable();
    let keep: Vec<usize> = (0..m.n_snps()).filter(|j| !removed.contains(j)).collect();
    let reduced = m.select_snps(&keep);
    let scenario = Scenario {
        removed_causal: removed,
        ..scenario.clone()
    };
    Ok((reduced, scenario))
}
