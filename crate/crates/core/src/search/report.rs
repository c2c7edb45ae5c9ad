use std::fmt::Write as _;

use super::{Model, TraceEntry};
use crate::genotype::GenotypeMatrix;

/// Final model as TSV: snp_id, chrom, pos, coefficient.
pub fn model_tsv(m: &GenotypeMatrix, model: &Model) -> String {
    let mut s = format!(
        "# criterion={} value={:.10} k={}\nsnp_id\tchrom\tpos\tcoefficient\n",
        model.criterion,
        model.criterion_value,
        model.len()
    );
    for (pos, &j) in model.snp_indices.iter().enumerate() {
        let snp = m.snp(j);
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.10}",
            snp.snp_id,
            snp.chromosome,
            snp.position_bp,
            model.snp_coefficient(m, pos)
        );
    }
    s
}

/// Accepted moves as TSV: round, step_type, snp_added, snp_removed, k,
/// criterion_value. Multiple removals are comma-separated; "-" marks none.
pub fn trace_tsv(m: &GenotypeMatrix, trace: &[TraceEntry]) -> String {
    let mut s = String::from("round\tstep_type\tsnp_added\tsnp_removed\tk\tcriterion_value\n");
    for e in trace {
        let added = e
            .added
            .map(|j| m.snp(j).snp_id.clone())
            .unwrap_or_else(|| "-".into());
        let removed = if e.removed.is_empty() {
            "-".to_string()
        } else {
            e.removed
                .iter()
                .map(|&j| m.snp(j).snp_id.as_str())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{:.10}",
            e.round,
            e.step.as_str(),
            added,
            removed,
            e.k,
            e.criterion_value
        );
    }
    s
}
