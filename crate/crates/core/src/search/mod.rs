//! Fast stepwise search and the three-round selection procedure.
//!
//! One FSS cycle scans the top-`m1` ranked SNPs, adding the first SNP that
//! lowers the criterion and following each addition with an exchange step,
//! then runs the extended backward elimination. Cycles repeat until none
//! of the steps improves the criterion. Every accepted move strictly lowers
//! the criterion, so the search terminates.

mod report;
mod steps;

pub use report::{model_tsv, trace_tsv};
pub use steps::{SearchState, MIN_IMPROVEMENT};

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::assoc::{rank_conditional, rank_marginal, Ranking, RankingSource};
use crate::criteria::Criterion;
use crate::error::Result;
use crate::firth::{fit_firth_with, DesignSpec, FitOptions, FitResult};
use crate::genotype::GenotypeMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Size of the directed-forward group G1.
    pub m1: usize,
    /// Size of the exchange group G2.
    pub m2: usize,
    /// Exchange window, in marker positions.
    pub d: usize,
    pub max_model_size: usize,
    /// Model size above which the exchange window is halved.
    pub d_shrink_threshold: usize,
    pub d_floor: usize,
    pub backward_repeats: usize,
    pub fit: FitOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            m1: 350,
            m2: 5000,
            d: 50,
            max_model_size: 50,
            d_shrink_threshold: 25,
            d_floor: 5,
            backward_repeats: 3,
            fit: FitOptions::default(),
        }
    }
}

impl SearchConfig {
    /// Clamp group sizes to the number of SNPs and check the invariants.
    pub fn resolved(mut self, p: usize) -> Result<Self> {
        use crate::error::Error;
        self.m2 = self.m2.min(p);
        self.m1 = self.m1.min(self.m2);
        if self.d_floor == 0 || self.d_floor > self.d {
            return Err(Error::Argument(format!(
                "need 1 <= d_floor ({}) <= d ({})",
                self.d_floor, self.d
            )));
        }
        if self.max_model_size == 0 {
            return Err(Error::Argument("max_model_size must be positive".into()));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    /// Selected SNPs in order of inclusion.
    pub snp_indices: Vec<usize>,
    pub fit: FitResult,
    pub criterion_value: f64,
    pub criterion: Criterion,
}

impl Model {
    pub fn len(&self) -> usize {
        self.snp_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snp_indices.is_empty()
    }

    pub fn design(&self) -> DesignSpec {
        DesignSpec::with_snps(self.snp_indices.clone())
    }

    /// Coefficient of the SNP at inclusion position `pos`.
    pub fn snp_coefficient(&self, m: &GenotypeMatrix, pos: usize) -> f64 {
        self.fit.coefficients[self.design().n_fixed(m) + pos]
    }

    /// Fit `snps` from scratch and score the result.
    pub fn fit(
        m: &GenotypeMatrix,
        snps: Vec<usize>,
        criterion: Criterion,
        opts: FitOptions,
    ) -> Result<Self> {
        let spec = DesignSpec::with_snps(snps);
        let fit = fit_firth_with(m, &spec, None, opts)?;
        let criterion_value = criterion.evaluate(
            fit.penalized_loglik,
            spec.snp_indices.len(),
            m.n_individuals(),
            m.n_snps(),
        )?;
        Ok(Model {
            snp_indices: spec.snp_indices,
            fit,
            criterion_value,
            criterion,
        })
    }

    pub fn null(m: &GenotypeMatrix, criterion: Criterion, opts: FitOptions) -> Result<Self> {
        Self::fit(m, Vec::new(), criterion, opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Forward,
    Exchange,
    Backward,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Forward => "forward",
            StepKind::Exchange => "exchange",
            StepKind::Backward => "backward",
        }
    }
}

/// One accepted move.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub round: usize,
    pub step: StepKind,
    pub added: Option<usize>,
    pub removed: Vec<usize>,
    pub k: usize,
    pub criterion_value: f64,
}

/// Work counters. Everything except the timings is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub fits_by_k: BTreeMap<usize, u64>,
    pub failed_fits: u64,
    pub exchange_scans: u64,
    pub cycles: u64,
    pub rank_time: Duration,
    pub forward_time: Duration,
    pub exchange_time: Duration,
    pub backward_time: Duration,
}

impl SearchStats {
    pub fn total_fits(&self) -> u64 {
        self.fits_by_k.values().sum()
    }

    pub fn merge(&mut self, other: &SearchStats) {
        for (k, v) in &other.fits_by_k {
            *self.fits_by_k.entry(*k).or_insert(0) += v;
        }
        self.failed_fits += other.failed_fits;
        self.exchange_scans += other.exchange_scans;
        self.cycles += other.cycles;
        self.rank_time += other.rank_time;
        self.forward_time += other.forward_time;
        self.exchange_time += other.exchange_time;
        self.backward_time += other.backward_time;
    }
}

/// Run FSS cycles on `state` until no step improves the criterion.
pub fn run_cycles(state: &mut SearchState<'_>, ranking: &Ranking) {
    // true when an exchange sweep found nothing and the model is unchanged since
    let mut exchange_clean = false;
    loop {
        state.stats.cycles += 1;
        let mut improved = false;
        state.reset_cursor();
        while state.directed_forward_step(ranking) {
            improved = true;
            exchange_clean = !state.exchange_step(ranking);
        }
        if !exchange_clean && !state.model().is_empty() {
            if state.exchange_step(ranking) {
                improved = true;
            } else {
                exchange_clean = true;
            }
        }
        if state.backward_step() {
            improved = true;
            exchange_clean = false;
        }
        if !improved {
            break;
        }
    }
}

/// Outcome of one FSS call.
#[derive(Debug, Clone)]
pub struct FssOutcome {
    pub model: Model,
    pub trace: Vec<TraceEntry>,
    pub stats: SearchStats,
}

pub(crate) fn fss_round(
    m: &GenotypeMatrix,
    initial: Model,
    ranking: &Ranking,
    criterion: Criterion,
    config: SearchConfig,
    round: usize,
) -> Result<FssOutcome> {
    let config = config.resolved(m.n_snps())?;
    let initial = if initial.fit.converged {
        initial
    } else {
        let refit = Model::fit(m, initial.snp_indices.clone(), criterion, config.fit);
        match refit {
            Ok(model) if model.fit.converged => model,
            _ => {
                log::warn!("initial model could not be fitted; starting from the null model");
                Model::null(m, criterion, config.fit)?
            }
        }
    };
    let ranking = Ranking {
        indices: ranking
            .indices
            .iter()
            .copied()
            .filter(|j| !initial.snp_indices.contains(j))
            .collect(),
        scores: ranking
            .indices
            .iter()
            .zip(&ranking.scores)
            .filter(|(j, _)| !initial.snp_indices.contains(j))
            .map(|(_, s)| *s)
            .collect(),
        source: ranking.source,
    };
    let mut state = SearchState::new(m, initial, criterion, config, round)?;
    run_cycles(&mut state, &ranking);
    let (model, trace, stats) = state.into_parts();
    Ok(FssOutcome {
        model,
        trace,
        stats,
    })
}

/// Fast stepwise search from `initial` along `ranking` under `criterion`.
pub fn fss(
    m: &GenotypeMatrix,
    initial: Model,
    ranking: &Ranking,
    criterion: Criterion,
    config: SearchConfig,
) -> Result<Model> {
    fss_round(m, initial, ranking, criterion, config, 1).map(|o| o.model)
}

/// Summary of one selection round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub round: usize,
    pub criterion: Criterion,
    pub ranking_source: RankingSource,
    pub initial_value: f64,
    pub final_value: f64,
    pub final_snps: Vec<usize>,
    pub forward_steps: usize,
    pub exchange_steps: usize,
    pub backward_steps: usize,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub model: Model,
    pub rounds: Vec<RoundSummary>,
    pub trace: Vec<TraceEntry>,
    pub stats: SearchStats,
}

/// Three rounds: marginal trend order under mBIC_60, conditional score
/// order under mBIC_60, conditional score order under mBIC2.
pub fn mosgwa_select(m: &GenotypeMatrix, config: SearchConfig) -> Result<Selection> {
    let config = config.resolved(m.n_snps())?;
    let relaxed = Criterion::mbic60();
    let mut stats = SearchStats::default();
    let mut trace = Vec::new();
    let mut rounds = Vec::new();

    let mut model = Model::null(m, relaxed, config.fit)?;
    let plan = [
        (1, relaxed, RankingSource::Trend),
        (2, relaxed, RankingSource::Score),
        (3, Criterion::mbic2(), RankingSource::Score),
    ];
    for (round, criterion, source) in plan {
        let t = Instant::now();
        let ranking = match source {
            RankingSource::Trend => rank_marginal(m)?,
            RankingSource::Score => rank_conditional(m, &model.fit, &model.design())?,
        };
        stats.rank_time += t.elapsed();
        let initial_value = criterion.evaluate(
            model.fit.penalized_loglik,
            model.len(),
            m.n_individuals(),
            m.n_snps(),
        )?;
        let out = fss_round(m, model, &ranking, criterion, config, round)?;
        let count = |kind| out.trace.iter().filter(|e| e.step == kind).count();
        rounds.push(RoundSummary {
            round,
            criterion,
            ranking_source: source,
            initial_value,
            final_value: out.model.criterion_value,
            final_snps: out.model.snp_indices.clone(),
            forward_steps: count(StepKind::Forward),
            exchange_steps: count(StepKind::Exchange),
            backward_steps: count(StepKind::Backward),
        });
        log::info!(
            "round {round} ({criterion}): {} SNPs, criterion {:.4}",
            out.model.len(),
            out.model.criterion_value
        );
        stats.merge(&out.stats);
        trace.extend(out.trace);
        model = out.model;
    }
    Ok(Selection {
        model,
        rounds,
        trace,
        stats,
    })
}
