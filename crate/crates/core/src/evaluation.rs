//! Scoring detections against a known scenario.
//!
//! Detections and causal SNPs are indices into the same (pre-removal)
//! matrix. Inputs are canonicalized by index, which is map order, so
//! results do not depend on the order detections are supplied in.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::genotype::GenotypeMatrix;
use crate::simulation::Scenario;

pub const DEFAULT_CLUSTER_C: f64 = 0.3;

/// Detections grouped so that every within-cluster pair has |r| > C.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Vec<usize>>,
    pub threshold_c: f64,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

fn canonical(detections: &[usize]) -> Vec<usize> {
    let mut d = detections.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

/// |r| between two SNPs of `m`; monomorphic columns count as uncorrelated.
pub fn abs_correlation(m: &GenotypeMatrix, a: usize, b: usize) -> f64 {
    if a == b {
        return 1.0;
    }
    m.correlation(a, b).map_or(0.0, f64::abs)
}

/// Greedy map-order clustering with an arbitrary |r| oracle. Each pass
/// seeds a cluster with the first unassigned detection and then takes every
/// later unassigned detection correlated above `threshold_c` with all
/// members so far.
pub fn c_cluster_by(
    detections: &[usize],
    threshold_c: f64,
    abs_r: impl Fn(usize, usize) -> f64,
) -> ClusterSet {
    let mut pending = canonical(detections);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    while !pending.is_empty() {
        let mut cluster = vec![pending[0]];
        let mut rest = Vec::new();
        for &d in &pending[1..] {
            if cluster.iter().all(|&o| abs_r(o, d) > threshold_c) {
                cluster.push(d);
            } else {
                rest.push(d);
            }
        }
        clusters.push(cluster);
        pending = rest;
    }
    ClusterSet {
        clusters,
        threshold_c,
    }
}

pub fn c_cluster(m: &GenotypeMatrix, detections: &[usize], threshold_c: f64) -> ClusterSet {
    c_cluster_by(detections, threshold_c, |a, b| abs_correlation(m, a, b))
}

/// Outcome of true-positive matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub true_positives: usize,
    /// Causal SNP each hitting detection was assigned to.
    pub hits: Vec<(usize, usize)>,
    pub fp_detections: Vec<usize>,
}

pub fn match_true_positives_by(
    detections: &[usize],
    causal: &[usize],
    threshold_c: f64,
    abs_r: impl Fn(usize, usize) -> f64,
) -> Matching {
    let causal = canonical(causal);
    let mut hits = Vec::new();
    let mut fp_detections = Vec::new();
    let mut found = vec![false; causal.len()];
    for d in canonical(detections) {
        let mut best: Option<(usize, f64)> = None;
        for (ci, &c) in causal.iter().enumerate() {
            let r = abs_r(d, c);
            // strict > keeps the lower index on ties
            if r > threshold_c && best.is_none_or(|(_, b)| r > b) {
                best = Some((ci, r));
            }
        }
        match best {
            Some((ci, _)) => {
                found[ci] = true;
                hits.push((d, causal[ci]));
            }
            None => fp_detections.push(d),
        }
    }
    Matching {
        true_positives: found.iter().filter(|&&f| f).count(),
        hits,
        fp_detections,
    }
}

pub fn match_true_positives(
    m: &GenotypeMatrix,
    detections: &[usize],
    causal: &[usize],
    threshold_c: f64,
) -> Matching {
    match_true_positives_by(detections, causal, threshold_c, |a, b| {
        abs_correlation(m, a, b)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub true_positives: usize,
    pub fp_clusters: usize,
    pub power: f64,
    pub fdr: f64,
    pub misclassifications: f64,
    pub size: usize,
    pub threshold_c: f64,
}

impl EvalReport {
    /// Fill the derived fields from raw counts.
    pub fn from_counts(
        true_positives: usize,
        false_positives: usize,
        k_causal: usize,
        size: usize,
        threshold_c: f64,
    ) -> Self {
        let power = if k_causal == 0 {
            0.0
        } else {
            true_positives as f64 / k_causal as f64
        };
        let found = true_positives + false_positives;
        let fdr = if found == 0 {
            0.0
        } else {
            false_positives as f64 / found as f64
        };
        EvalReport {
            true_positives,
            fp_clusters: false_positives,
            power,
            fdr,
            misclassifications: (false_positives + k_causal - true_positives) as f64,
            size,
            threshold_c,
        }
    }
}

pub fn evaluate_replicate_by(
    detections: &[usize],
    causal: &[usize],
    threshold_c: f64,
    cluster_fp: bool,
    abs_r: impl Fn(usize, usize) -> f64 + Copy,
) -> EvalReport {
    let size = canonical(detections).len();
    let matching = match_true_positives_by(detections, causal, threshold_c, abs_r);
    let fp = if cluster_fp {
        c_cluster_by(&matching.fp_detections, threshold_c, abs_r).len()
    } else {
        matching.fp_detections.len()
    };
    EvalReport::from_counts(
        matching.true_positives,
        fp,
        canonical(causal).len(),
        size,
        threshold_c,
    )
}

/// Score `detections` against the scenario's causal SNPs on the full matrix.
pub fn evaluate_replicate(
    m: &GenotypeMatrix,
    detections: &[usize],
    scenario: &Scenario,
    threshold_c: f64,
    cluster_fp: bool,
) -> EvalReport {
    evaluate_replicate_by(
        detections,
        &scenario.causal_snps,
        threshold_c,
        cluster_fp,
        |a, b| abs_correlation(m, a, b),
    )
}

/// Mean and standard error of one statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let se = if n > 1.0 {
            let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        MeanSe { mean, se }
    }
}

/// Averages over replicates. FDR is the mean of per-replicate ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub replicates: usize,
    pub size: MeanSe,
    pub power: MeanSe,
    pub fp: MeanSe,
    pub fdr: MeanSe,
    pub mis: MeanSe,
    /// Replicates with no detections at all.
    pub empty: usize,
    pub threshold_c: f64,
}

pub fn aggregate(reports: &[EvalReport]) -> Result<Summary> {
    let Some(first) = reports.first() else {
        return Err(Error::Argument("cannot aggregate zero reports".into()));
    };
    let it = reports.iter();
    Ok(Summary {
        replicates: reports.len(),
        size: MeanSe::of(it.clone().map(|r| r.size as f64)),
        power: MeanSe::of(it.clone().map(|r| r.power)),
        fp: MeanSe::of(it.clone().map(|r| r.fp_clusters as f64)),
        fdr: MeanSe::of(it.clone().map(|r| r.fdr)),
        mis: MeanSe::of(it.clone().map(|r| r.misclassifications)),
        empty: it.filter(|r| r.size == 0).count(),
        threshold_c: first.threshold_c,
    })
}

pub const REPORT_HEADER: &str = "replicate\tsize\ttp\tfp\tpower\tfdr\tmis\tC";

/// One row per replicate, preceded by [`REPORT_HEADER`].
pub fn reports_tsv(reports: &[(String, EvalReport)]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for (label, r) in reports {
        let _ = writeln!(
            s,
            "{label}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
            r.size, r.true_positives, r.fp_clusters, r.power, r.fdr, r.misclassifications, r.threshold_c
        );
    }
    s
}

/// Table-style summary: one row per statistic with mean and SE.
pub fn summary_tsv(method: &str, scenario: &str, s: &Summary) -> String {
    let mut out = format!(
        "# replicates={} empty_models={} C={}\nmethod\tscenario\tstatistic\tmean\tse\n",
        s.replicates, s.empty, s.threshold_c
    );
    for (name, v) in [
        ("Size", s.size),
        ("Power", s.power),
        ("FP", s.fp),
        ("FDR", s.fdr),
        ("Mis", s.mis),
    ] {
        let _ = writeln!(out, "{method}\t{scenario}\t{name}\t{:.6}\t{:.6}", v.mean, v.se);
    }
    out
}

/// SNP ids from the first column of a detection or model TSV. Lines starting
/// with '#' and a leading `snp_id` header are skipped.
pub fn parse_detection_ids(text: &str) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let id = line.split('\t').next().unwrap_or("").trim();
        if !seen_header && id == "snp_id" {
            seen_header = true;
            continue;
        }
        seen_header = true;
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Format(format!(
                "detections line {}: missing SNP id",
                lineno + 1
            )));
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}

/// Map SNP ids to indices of `m`; unknown ids are an error.
pub fn resolve_ids(m: &GenotypeMatrix, ids: &[String]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            m.index_of(id)
                .ok_or_else(|| Error::Validation(format!("SNP `{id}` not in the genotype data")))
        })
        .collect()
}
