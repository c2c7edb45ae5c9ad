//! Single-marker association: Cochran-Armitage trend test, marker
//! rankings for the search, and the Benjamini-Hochberg step-up procedure.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::firth::{DesignSpec, FitResult, ScoreContext};
use crate::genotype::GenotypeMatrix;
use crate::stats::chi2_1df_upper;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendResult {
    pub snp_index: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// 2 x 3 case-control table by genotype dose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrendTable {
    pub controls: [usize; 3],
    pub cases: [usize; 3],
}

impl TrendTable {
    pub fn from_snp(m: &GenotypeMatrix, j: usize) -> Result<Self> {
        let ph = m
            .phenotype()
            .ok_or_else(|| Error::DegenerateResponse("no phenotype attached".into()))?;
        let mut t = TrendTable::default();
        for (i, label) in ph.iter().enumerate() {
            let (Some(label), Some(g)) = (label, m.genotype(i, j)) else {
                continue;
            };
            if *label == 1 {
                t.cases[g as usize] += 1;
            } else {
                t.controls[g as usize] += 1;
            }
        }
        Ok(t)
    }

    /// Trend chi-square with genotype scores `t`; `None` if undefined.
    pub fn statistic_with_scores(&self, t: [f64; 3]) -> Option<f64> {
        let totals: [f64; 3] = std::array::from_fn(|g| (self.cases[g] + self.controls[g]) as f64);
        let n: f64 = totals.iter().sum();
        let r: f64 = self.cases.iter().sum::<usize>() as f64;
        let s_tr: f64 = (0..3).map(|g| t[g] * self.cases[g] as f64).sum();
        let s_tn: f64 = (0..3).map(|g| t[g] * totals[g]).sum();
        let s_ttn: f64 = (0..3).map(|g| t[g] * t[g] * totals[g]).sum();
        let var_t = n * s_ttn - s_tn * s_tn;
        let denom = r * (n - r) * var_t;
        if !(var_t > 1e-12 * n * s_ttn.max(1.0)) || !(denom > 0.0) {
            return None;
        }
        let num = n * s_tr - r * s_tn;
        Some(n * num * num / denom)
    }

    pub fn statistic(&self) -> Option<f64> {
        self.statistic_with_scores([0.0, 1.0, 2.0])
    }
}

fn require_both_classes(m: &GenotypeMatrix) -> Result<()> {
    let ph = m
        .phenotype()
        .ok_or_else(|| Error::DegenerateResponse("no phenotype attached".into()))?;
    let cases = ph.iter().filter(|l| **l == Some(1)).count();
    let controls = ph.iter().filter(|l| **l == Some(0)).count();
    if cases == 0 || controls == 0 {
        return Err(Error::DegenerateResponse(format!(
            "{cases} cases and {controls} controls; both classes are required"
        )));
    }
    Ok(())
}

/// Cochran-Armitage trend test for SNP `j` (missing genotypes excluded).
pub fn cochran_armitage(m: &GenotypeMatrix, j: usize) -> Result<TrendResult> {
    require_both_classes(m)?;
    let table = TrendTable::from_snp(m, j)?;
    let statistic = table.statistic().ok_or(Error::UndefinedStatistic {
        snp: j,
        reason: "fewer than two genotype classes observed",
    })?;
    Ok(TrendResult {
        snp_index: j,
        statistic,
        p_value: chi2_1df_upper(statistic),
    })
}

/// Trend test for every SNP; `None` where the statistic is undefined.
pub fn trend_scan(m: &GenotypeMatrix) -> Result<Vec<Option<TrendResult>>> {
    require_both_classes(m)?;
    Ok((0..m.n_snps())
        .into_par_iter()
        .map(|j| cochran_armitage(m, j).ok())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingSource {
    Trend,
    Score,
}

/// Marker order for a search round, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub source: RankingSource,
}

impl Ranking {
    /// Sort `(snp, score)` pairs by score descending, then map order.
    pub fn from_scores(mut pairs: Vec<(usize, f64)>, source: RankingSource) -> Self {
        pairs.retain(|(_, s)| s.is_finite());
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let (indices, scores) = pairs.into_iter().unzip();
        Ranking {
            indices,
            scores,
            source,
        }
    }

    pub fn empty(source: RankingSource) -> Self {
        Ranking {
            indices: Vec::new(),
            scores: Vec::new(),
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// All testable SNPs ordered by trend statistic.
pub fn rank_marginal(m: &GenotypeMatrix) -> Result<Ranking> {
    let pairs = trend_scan(m)?
        .into_iter()
        .flatten()
        .map(|r| (r.snp_index, r.statistic))
        .collect();
    Ok(Ranking::from_scores(pairs, RankingSource::Trend))
}

/// SNPs outside the design ordered by score statistic conditional on `fitted`.
pub fn rank_conditional(
    m: &GenotypeMatrix,
    fitted: &FitResult,
    design: &DesignSpec,
) -> Result<Ranking> {
    let ctx = ScoreContext::new(m, fitted, design)?;
    let mut in_design = vec![false; m.n_snps()];
    for &j in &design.snp_indices {
        in_design[j] = true;
    }
    let pairs: Vec<(usize, f64)> = (0..m.n_snps())
        .into_par_iter()
        .filter(|&j| !in_design[j])
        .filter_map(|j| {
            let x = m.genotype_column(j).ok()?;
            ctx.statistic(&x).map(|s| (j, s))
        })
        .collect();
    Ok(Ranking::from_scores(pairs, RankingSource::Score))
}

/// Benjamini-Hochberg step-up: positions of rejected hypotheses in
/// ascending order.
pub fn benjamini_hochberg(p_values: &[f64], alpha: f64) -> Vec<usize> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).filter(|&i| !p_values[i].is_nan()).collect();
    let tested = order.len();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let cutoff = (0..tested)
        .rev()
        .find(|&r| p_values[order[r]] <= (r + 1) as f64 * alpha / tested as f64);
    let mut rejected = match cutoff {
        Some(r) => order[..=r].to_vec(),
        None => Vec::new(),
    };
    rejected.sort_unstable();
    rejected
}

/// SNP indices rejected by BH at level `alpha` over all testable trend tests.
pub fn single_marker_bh(m: &GenotypeMatrix, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha {alpha} outside (0, 1)")));
    }
    let tested: Vec<TrendResult> = trend_scan(m)?.into_iter().flatten().collect();
    let p: Vec<f64> = tested.iter().map(|r| r.p_value).collect();
    Ok(benjamini_hochberg(&p, alpha)
        .into_iter()
        .map(|i| tested[i].snp_index)
        .collect())
}

/// TSV with columns snp_id, chrom, pos, statistic, p_value, bh_rejected.
pub fn assoc_tsv(m: &GenotypeMatrix, alpha: f64) -> Result<String> {
    let scan = trend_scan(m)?;
    let rejected = single_marker_bh(m, alpha)?;
    let mut is_rejected = vec![false; m.n_snps()];
    for j in rejected {
        is_rejected[j] = true;
    }
    let mut s = format!("# bh_alpha={alpha}\nsnp_id\tchrom\tpos\tstatistic\tp_value\tbh_rejected\n");
    for (j, r) in scan.iter().enumerate() {
        let snp = m.snp(j);
        let (stat, p) = match r {
            Some(r) => (format!("{:.10e}", r.statistic), format!("{:.10e}", r.p_value)),
            None => ("NA".to_string(), "NA".to_string()),
        };
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            snp.snp_id, snp.chromosome, snp.position_bp, stat, p, is_rejected[j] as u8
        );
    }
    Ok(s)
}
