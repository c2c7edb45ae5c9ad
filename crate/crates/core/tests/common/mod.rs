#![allow(dead_code)]

use gwas_select::criteria::Criterion;
use gwas_select::firth::{fit_firth, DesignSpec};
use gwas_select::genotype::{BimRecord, GenotypeMatrix, SampleMeta};
use gwas_select::simulation::{
    calibrate_intercept, simulate_trait, synthesize_genotypes, Scenario, ScenarioKind, SynthConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bim(chromosome: u8, j: usize, position_bp: u64) -> BimRecord {
    BimRecord {
        chromosome,
        snp_id: format!("rs{j}"),
        cm: 0.0,
        position_bp,
        allele_1: "A".into(),
        allele_2: "C".into(),
    }
}

/// Matrix on chromosome 1 from allele-count columns.
pub fn matrix(cols: &[Vec<Option<u8>>]) -> GenotypeMatrix {
    let n = cols.first().map_or(0, Vec::len);
    let bims = (0..cols.len()).map(|j| bim(1, j, 100 * (j as u64 + 1))).collect();
    let samples = (0..n).map(SampleMeta::synthetic).collect();
    GenotypeMatrix::from_columns(bims, samples, cols).unwrap()
}

pub fn dense(cols: &[Vec<u8>]) -> GenotypeMatrix {
    let c: Vec<Vec<Option<u8>>> = cols
        .iter()
        .map(|c| c.iter().map(|&g| Some(g)).collect())
        .collect();
    matrix(&c)
}

pub fn random_genotypes(r: &mut ChaCha8Rng, n: usize, maf: f64) -> Vec<u8> {
    (0..n)
        .map(|_| u8::from(r.random::<f64>() < maf) + u8::from(r.random::<f64>() < maf))
        .collect()
}

pub fn bernoulli_labels(r: &mut ChaCha8Rng, eta: impl Fn(usize) -> f64, n: usize) -> Vec<u8> {
    (0..n)
        .map(|i| u8::from(r.random::<f64>() < 1.0 / (1.0 + (-eta(i)).exp())))
        .collect()
}

/// Firth objective `l(theta) + 0.5 log det(X'WX)` evaluated directly from
/// the columns, with determinant by Gaussian elimination.
pub fn penalized_loglik(cols: &[Vec<f64>], y: &[f64], theta: &[f64]) -> f64 {
    let n = y.len();
    let q = cols.len();
    let mut ll = 0.0;
    let mut info = vec![vec![0.0; q]; q];
    for i in 0..n {
        let eta: f64 = (0..q).map(|r| cols[r][i] * theta[r]).sum();
        let p = 1.0 / (1.0 + (-eta).exp());
        ll += if y[i] > 0.5 { p.ln() } else { (1.0 - p).ln() };
        let w = p * (1.0 - p);
        for r in 0..q {
            for s in 0..q {
                info[r][s] += w * cols[r][i] * cols[s][i];
            }
        }
    }
    ll + 0.5 * log_det(info)
}

pub fn log_det(mut a: Vec<Vec<f64>>) -> f64 {
    let q = a.len();
    let mut acc = 0.0;
    for c in 0..q {
        let piv = (c..q)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        acc += d.abs().ln();
        for r in c + 1..q {
            let f = a[r][c] / d;
            for k in c..q {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    acc
}

/// Criterion value of the model made of `snps`, fitted from scratch.
pub fn criterion_of(m: &GenotypeMatrix, snps: &[usize], c: Criterion) -> Option<f64> {
    let fit = fit_firth(m, &DesignSpec::with_snps(snps.to_vec()), 1e-8, 200).ok()?;
    if !fit.converged {
        return None;
    }
    c.evaluate(fit.penalized_loglik, snps.len(), m.n_individuals(), m.n_snps())
        .ok()
}

/// Minimizer over all 2^p subsets (p small).
pub fn exhaustive_min(m: &GenotypeMatrix, c: Criterion) -> (Vec<usize>, f64) {
    let p = m.n_snps();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << p) {
        let snps: Vec<usize> = (0..p).filter(|j| mask >> j & 1 == 1).collect();
        if let Some(v) = criterion_of(m, &snps, c) {
            if v < best.1 {
                best = (snps, v);
            }
        }
    }
    best
}

/// Plain greedy forward selection: add the best SNP while it helps.
pub fn greedy_forward(m: &GenotypeMatrix, c: Criterion) -> (Vec<usize>, f64) {
    let mut model = Vec::new();
    let mut value = criterion_of(m, &model, c).unwrap();
    loop {
        let best = (0..m.n_snps())
            .filter(|j| !model.contains(j))
            .filter_map(|j| {
                let mut s = model.clone();
                s.push(j);
                criterion_of(m, &s, c).map(|v| (j, v))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, v)) if v < value => {
                model.push(j);
                value = v;
            }
            _ => return (model, value),
        }
    }
}

/// Independent SNPs with planted effects and a calibrated intercept.
pub fn planted_instance(
    n: usize,
    p: usize,
    causal: &[usize],
    beta: f64,
    seed: u64,
) -> (GenotypeMatrix, Scenario) {
    let g = synthesize_genotypes(&SynthConfig::independent(n, p, seed)).unwrap();
    let effects = vec![beta; causal.len()];
    let intercept = calibrate_intercept(&g, causal, &effects).unwrap();
    let scenario = Scenario {
        kind: ScenarioKind::ComplexTrait,
        causal_snps: causal.to_vec(),
        effects,
        intercept,
        ..Scenario::global_null(seed, 0)
    };
    let y = simulate_trait(&g, &scenario).unwrap();
    (g.with_phenotype(y).unwrap(), scenario)
}
