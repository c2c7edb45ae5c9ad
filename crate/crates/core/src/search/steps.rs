use std::time::Instant;

use rayon::prelude::*;

use super::{Model, SearchConfig, SearchStats, StepKind, TraceEntry};
use crate::assoc::Ranking;
use crate::criteria::Criterion;
use crate::error::Result;
use crate::firth::{build_design, fit_design, DesignSpec, FitResult};
use crate::genotype::GenotypeMatrix;

/// Candidates evaluated together in one parallel batch during a forward
/// scan. Fixed so that fit counts do not depend on the thread count.
const FORWARD_BATCH: usize = 8;

/// Smallest criterion decrease that counts as an improvement. Refitting the
/// same model from a different warm start moves the criterion by far less,
/// so numerically tied moves are never accepted.
pub const MIN_IMPROVEMENT: f64 = 1e-8;

pub(crate) struct Candidate {
    pub snps: Vec<usize>,
    pub fit: FitResult,
    pub value: f64,
}

/// Mutable search state: the incumbent model plus bookkeeping.
pub struct SearchState<'a> {
    matrix: &'a GenotypeMatrix,
    y: Vec<f64>,
    n: usize,
    p: usize,
    criterion: Criterion,
    config: SearchConfig,
    model: Model,
    round: usize,
    cursor: usize,
    warned_cap: bool,
    pub(crate) trace: Vec<TraceEntry>,
    pub(crate) stats: SearchStats,
}

impl<'a> SearchState<'a> {
    /// Start from `initial`, re-scored under `criterion`.
    pub fn new(
        matrix: &'a GenotypeMatrix,
        initial: Model,
        criterion: Criterion,
        config: SearchConfig,
        round: usize,
    ) -> Result<Self> {
        let y = matrix.response()?;
        let n = matrix.n_individuals();
        let p = matrix.n_snps();
        let criterion_value =
            criterion.evaluate(initial.fit.penalized_loglik, initial.snp_indices.len(), n, p)?;
        Ok(SearchState {
            matrix,
            y,
            n,
            p,
            criterion,
            config,
            model: Model {
                criterion_value,
                criterion,
                ..initial
            },
            round,
            cursor: 0,
            warned_cap: false,
            trace: Vec::new(),
            stats: SearchStats::default(),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_parts(self) -> (Model, Vec<TraceEntry>, SearchStats) {
        (self.model, self.trace, self.stats)
    }

    pub(crate) fn reset_cursor(&mut self) {
        self.cursor = 0;
    }

    fn n_fixed(&self) -> usize {
        DesignSpec::with_snps(Vec::new()).n_fixed(self.matrix)
    }

    /// Fit a candidate SNP set; `None` on rank deficiency or non-convergence.
    fn try_fit(&self, snps: Vec<usize>, init: Vec<f64>) -> Option<Candidate> {
        let spec = DesignSpec::with_snps(snps);
        let design = build_design(self.matrix, &spec).ok()?;
        let fit = fit_design(&design, &self.y, Some(&init), self.config.fit).ok()?;
        if !fit.converged {
            log::debug!("fit for {:?} did not converge", spec.snp_indices);
            return None;
        }
        let value = self
            .criterion
            .evaluate(fit.penalized_loglik, spec.snp_indices.len(), self.n, self.p)
            .ok()?;
        Some(Candidate {
            snps: spec.snp_indices,
            fit,
            value,
        })
    }

    fn evaluate_batch(&mut self, jobs: Vec<(Vec<usize>, Vec<f64>)>) -> Vec<Option<Candidate>> {
        for (snps, _) in &jobs {
            *self.stats.fits_by_k.entry(snps.len()).or_insert(0) += 1;
        }
        let out: Vec<Option<Candidate>> = jobs
            .into_par_iter()
            .map(|(snps, init)| self.try_fit(snps, init))
            .collect();
        self.stats.failed_fits += out.iter().filter(|c| c.is_none()).count() as u64;
        out
    }

    fn accept(&mut self, cand: Candidate, step: StepKind, added: Option<usize>, removed: Vec<usize>) {
        self.model.snp_indices = cand.snps;
        self.model.fit = cand.fit;
        self.model.criterion_value = cand.value;
        self.trace.push(TraceEntry {
            round: self.round,
            step,
            added,
            removed,
            k: self.model.snp_indices.len(),
            criterion_value: cand.value,
        });
    }

    fn improves(&self, value: f64) -> bool {
        value < self.model.criterion_value - MIN_IMPROVEMENT
    }

    fn warm_add(&self) -> Vec<f64> {
        let mut init = self.model.fit.coefficients.clone();
        init.push(0.0);
        init
    }

    /// Scan the top-m1 SNPs of `ranking` from the cursor and add the first
    /// one whose inclusion strictly lowers the criterion.
    pub fn directed_forward_step(&mut self, ranking: &Ranking) -> bool {
        let start = Instant::now();
        let g1_len = self.config.m1.min(ranking.len());
        let mut changed = false;
        if self.model.snp_indices.len() >= self.config.max_model_size {
            if !self.warned_cap {
                log::warn!(
                    "model reached the size cap of {} SNPs; forward steps disabled",
                    self.config.max_model_size
                );
                self.warned_cap = true;
            }
            self.stats.forward_time += start.elapsed();
            return false;
        }
        'scan: while self.cursor < g1_len {
            let mut batch = Vec::with_capacity(FORWARD_BATCH);
            while self.cursor < g1_len && batch.len() < FORWARD_BATCH {
                let j = ranking.indices[self.cursor];
                if !self.model.snp_indices.contains(&j) {
                    batch.push((self.cursor, j));
                }
                self.cursor += 1;
            }
            let jobs = batch
                .iter()
                .map(|&(_, j)| {
                    let mut snps = self.model.snp_indices.clone();
                    snps.push(j);
                    (snps, self.warm_add())
                })
                .collect();
            let results = self.evaluate_batch(jobs);
            for (&(rank_pos, j), res) in batch.iter().zip(results) {
                if let Some(cand) = res.filter(|c| self.improves(c.value)) {
                    self.accept(cand, StepKind::Forward, Some(j), Vec::new());
                    self.cursor = rank_pos + 1;
                    changed = true;
                    break 'scan;
                }
            }
        }
        self.stats.forward_time += start.elapsed();
        changed
    }

    /// Window half-width for exchange candidates at the current model size.
    pub fn effective_d(&self) -> usize {
        let c = &self.config;
        if self.model.snp_indices.len() <= c.d_shrink_threshold {
            c.d
        } else {
            (c.d / 2).max(c.d_floor)
        }
    }

    /// For each model SNP in inclusion order, try replacing it with every
    /// top-m2 SNP on the same chromosome within `effective_d` map
    /// positions, applying the best strictly improving swap.
    pub fn exchange_step(&mut self, ranking: &Ranking) -> bool {
        let start = Instant::now();
        let mut in_g2 = vec![false; self.p];
        for &j in ranking.indices.iter().take(self.config.m2) {
            in_g2[j] = true;
        }
        self.stats.exchange_scans += 1;
        let mut changed = false;
        let n_fixed = self.n_fixed();
        for pos in 0..self.model.snp_indices.len() {
            let s = self.model.snp_indices[pos];
            let d = self.effective_d();
            let meta = self.matrix.snp(s);
            let lo = meta.map_index.saturating_sub(d.saturating_sub(1));
            let hi = (meta.map_index + d).min(self.p);
            let candidates: Vec<usize> = (lo..hi)
                .filter(|&j| {
                    in_g2[j]
                        && self.matrix.snp(j).chromosome == meta.chromosome
                        && !self.model.snp_indices.contains(&j)
                })
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let jobs = candidates
                .iter()
                .map(|&j| {
                    let mut snps = self.model.snp_indices.clone();
                    snps[pos] = j;
                    let mut init = self.model.fit.coefficients.clone();
                    init[n_fixed + pos] = 0.0;
                    (snps, init)
                })
                .collect();
            let results = self.evaluate_batch(jobs);
            let best = candidates
                .iter()
                .zip(results)
                .filter_map(|(&j, r)| r.map(|c| (j, c)))
                .filter(|(_, c)| self.improves(c.value))
                .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)));
            if let Some((j, cand)) = best {
                self.accept(cand, StepKind::Exchange, Some(j), vec![s]);
                changed = true;
            }
        }
        self.stats.exchange_time += start.elapsed();
        changed
    }

    /// All single-SNP removals from `snps`, best first by criterion.
    fn removals(&mut self, snps: &[usize], coefs: &[f64]) -> Vec<(usize, Candidate)> {
        let n_fixed = self.n_fixed();
        let jobs = (0..snps.len())
            .map(|pos| {
                let mut s = snps.to_vec();
                s.remove(pos);
                let mut init = coefs.to_vec();
                init.remove(n_fixed + pos);
                (s, init)
            })
            .collect();
        let results = self.evaluate_batch(jobs);
        let mut out: Vec<(usize, Candidate)> = snps
            .iter()
            .zip(results)
            .filter_map(|(&j, r)| r.map(|c| (j, c)))
            .collect();
        out.sort_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)));
        out
    }

    /// Greedy elimination. If the best single removal does not help, keep
    /// eliminating the least harmful SNP up to `backward_repeats` more
    /// times and take the best model along that chain if it beats the
    /// incumbent.
    pub fn backward_step(&mut self) -> bool {
        let start = Instant::now();
        let changed = self.backward_inner();
        self.stats.backward_time += start.elapsed();
        changed
    }

    fn backward_inner(&mut self) -> bool {
        if self.model.snp_indices.is_empty() {
            return false;
        }
        let snps = self.model.snp_indices.clone();
        let coefs = self.model.fit.coefficients.clone();
        let Some((first_removed, first)) = self.removals(&snps, &coefs).into_iter().next() else {
            return false;
        };
        if self.improves(first.value) {
            self.accept(first, StepKind::Backward, None, vec![first_removed]);
            return true;
        }

        let mut removed = vec![first_removed];
        let mut chain = first;
        let mut best: Option<(Candidate, Vec<usize>)> = None;
        for _ in 0..self.config.backward_repeats {
            if chain.snps.is_empty() {
                break;
            }
            let snps = chain.snps.clone();
            let coefs = chain.fit.coefficients.clone();
            let Some((j, next)) = self.removals(&snps, &coefs).into_iter().next() else {
                break;
            };
            removed.push(j);
            let beats = self.improves(next.value)
                && best.as_ref().is_none_or(|(b, _)| next.value < b.value);
            if beats {
                best = Some((
                    Candidate {
                        snps: next.snps.clone(),
                        fit: next.fit.clone(),
                        value: next.value,
                    },
                    removed.clone(),
                ));
            }
            chain = next;
        }
        match best {
            Some((cand, removed)) => {
                self.accept(cand, StepKind::Backward, None, removed);
                true
            }
            None => false,
        }
    }
}
