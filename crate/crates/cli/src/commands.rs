use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gwas_select::assoc::{assoc_tsv, cochran_armitage, single_marker_bh, RankingSource};
use gwas_select::evaluation::{
    aggregate, evaluate_replicate, parse_detection_ids, reports_tsv, resolve_ids, summary_tsv,
    EvalReport,
};
use gwas_select::genotype::{
    fam_text, hwe_p_value, load_plink_prefix, parse_fam, qc_filter, write_plink, GenotypeMatrix,
};
use gwas_select::search::{model_tsv, trace_tsv, RoundSummary, SearchStats};
use gwas_select::simulation::{
    self as sim, make_trait_scenario, remove_causal, simulate_null_replicate,
    synthesize_genotypes, Scenario, SynthConfig, TraitSpec,
};
use gwas_select::{mosgwa_select, Error, Result, SearchConfig};

use crate::args::*;
use crate::manifest::{io_err, read_text, with_ext, RunLog};

fn replicate_name(rep: u64) -> String {
    format!("rep_{rep:04}")
}

fn load(log: &mut RunLog, bfile: &Path) -> Result<GenotypeMatrix> {
    log.config("bfile", bfile.display());
    log.plink_inputs(bfile);
    let m = load_plink_prefix(bfile)?;
    log::info!("loaded {} individuals x {} SNPs", m.n_individuals(), m.n_snps());
    Ok(m)
}

/// Replace the phenotype of `m` by the one in `fam`, which must list the
/// same individuals in the same order.
fn apply_fam(m: GenotypeMatrix, fam: &Path) -> Result<GenotypeMatrix> {
    let records = parse_fam(&read_text(fam)?)?;
    if records.len() != m.n_individuals() {
        return Err(Error::Validation(format!(
            "{} lists {} individuals, genotype data has {}",
            fam.display(),
            records.len(),
            m.n_individuals()
        )));
    }
    if let Some((i, r)) = records
        .iter()
        .enumerate()
        .find(|(i, r)| r.sample.fid != m.samples()[*i].fid || r.sample.iid != m.samples()[*i].iid)
    {
        return Err(Error::Validation(format!(
            "{} line {}: individual {} {} does not match the genotype data",
            fam.display(),
            i + 1,
            r.sample.fid,
            r.sample.iid
        )));
    }
    let labels = records.into_iter().map(|r| r.phenotype).collect();
    m.with_labels(Some(labels))
}

fn complete_cases(m: GenotypeMatrix) -> GenotypeMatrix {
    let missing = m
        .phenotype()
        .map_or(0, |p| p.iter().filter(|v| v.is_none()).count());
    if missing == 0 {
        return m;
    }
    log::warn!("dropping {missing} individuals with missing phenotype");
    m.drop_missing_phenotype()
}

fn analysis_matrix(log: &mut RunLog, input: &Input) -> Result<GenotypeMatrix> {
    let mut m = load(log, &input.bfile)?;
    if let Some(fam) = &input.fam {
        log.config("fam", fam.display());
        log.input(fam);
        m = apply_fam(m, fam)?;
    }
    Ok(complete_cases(m))
}

fn search_config(log: &mut RunLog, s: &SearchArgs) -> SearchConfig {
    log.config("m1", s.m1);
    log.config("m2", s.m2);
    log.config("d", s.d);
    log.config("max_model_size", s.max_model_size);
    SearchConfig {
        m1: s.m1,
        m2: s.m2,
        d: s.d,
        max_model_size: s.max_model_size,
        d_floor: SearchConfig::default().d_floor.min(s.d.max(1)),
        ..SearchConfig::default()
    }
}

pub fn qc(a: &QcArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "qc")?;
    let m = analysis_matrix(&mut log, &a.input)?;
    log.config("maf_min", a.maf_min);
    log.config("hwe_alpha", a.hwe_alpha);
    let kept = qc_filter(&m, a.maf_min, a.hwe_alpha)?;

    let mut report = format!(
        "# maf_min={} hwe_alpha={} kept={} of {}\nsnp_id\tchrom\tpos\tmaf\thwe_p\tkept\n",
        a.maf_min,
        a.hwe_alpha,
        kept.n_snps(),
        m.n_snps()
    );
    for j in 0..m.n_snps() {
        let snp = m.snp(j);
        let _ = writeln!(
            report,
            "{}\t{}\t{}\t{:.6}\t{:.6e}\t{}",
            snp.snp_id,
            snp.chromosome,
            snp.position_bp,
            snp.minor_allele_freq,
            hwe_p_value(&m, j),
            u8::from(kept.index_of(&snp.snp_id).is_some())
        );
    }
    log.write("qc_report.tsv", &report)?;
    let prefix = log.path("qc");
    write_plink(&kept, &prefix)?;
    for ext in ["bed", "bim", "fam"] {
        log.written(with_ext(&prefix, ext));
    }
    log.finish()
}

pub fn assoc(a: &AssocArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "assoc")?;
    let m = analysis_matrix(&mut log, &a.input)?;
    log.config("bh_alpha", a.bh_alpha);
    log.write("assoc.tsv", &assoc_tsv(&m, a.bh_alpha)?)?;
    log.finish()
}

fn ranking_name(s: RankingSource) -> &'static str {
    match s {
        RankingSource::Trend => "trend",
        RankingSource::Score => "score",
    }
}

fn rounds_tsv(m: &GenotypeMatrix, rounds: &[RoundSummary]) -> String {
    let mut s = String::from(
        "round\tcriterion\tranking\tinitial_value\tfinal_value\tk\tforward\texchange\tbackward\tsnps\n",
    );
    for r in rounds {
        let ids: Vec<&str> = r.final_snps.iter().map(|&j| m.snp(j).snp_id.as_str()).collect();
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.10}\t{:.10}\t{}\t{}\t{}\t{}\t{}",
            r.round,
            r.criterion,
            ranking_name(r.ranking_source),
            r.initial_value,
            r.final_value,
            r.final_snps.len(),
            r.forward_steps,
            r.exchange_steps,
            r.backward_steps,
            if ids.is_empty() { "-".to_string() } else { ids.join(",") }
        );
    }
    s
}

fn single_marker_tsv(m: &GenotypeMatrix, alpha: f64) -> Result<String> {
    let mut s = format!("# method=single-marker bh_alpha={alpha}\nsnp_id\tchrom\tpos\tstatistic\tp_value\n");
    for j in single_marker_bh(m, alpha)? {
        let r = cochran_armitage(m, j)?;
        let snp = m.snp(j);
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.10e}\t{:.10e}",
            snp.snp_id, snp.chromosome, snp.position_bp, r.statistic, r.p_value
        );
    }
    Ok(s)
}

/// Run the chosen method on `m`, writing `<stem>model.tsv` and, for the
/// full procedure, `<stem>trace.tsv` and `<stem>rounds.tsv`.
fn run_method(
    log: &mut RunLog,
    m: &GenotypeMatrix,
    a: &SelectArgs,
    config: SearchConfig,
    stem: &str,
) -> Result<()> {
    match a.method {
        Method::SingleMarker => log.write(&format!("{stem}model.tsv"), &single_marker_tsv(m, a.bh_alpha)?),
        Method::Mosgwa => {
            let sel = mosgwa_select(m, config)?;
            log.write(&format!("{stem}model.tsv"), &model_tsv(m, &sel.model))?;
            log.write(&format!("{stem}trace.tsv"), &trace_tsv(m, &sel.trace))?;
            log.write(&format!("{stem}rounds.tsv"), &rounds_tsv(m, &sel.rounds))
        }
    }
}

/// Scenario files in `dir`, sorted by name, paired with their .fam files.
fn replicates_in(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "scenario") {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let fam = path.with_extension("fam");
            out.push((stem, path, fam));
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Argument(format!("no .scenario files in {}", dir.display())));
    }
    Ok(out)
}

fn drop_removed(m: &GenotypeMatrix, scenario: &Scenario) -> Result<GenotypeMatrix> {
    if scenario.removed_causal.is_empty() {
        return Ok(m.clone());
    }
    if let Some(&r) = scenario.removed_causal.iter().find(|&&r| r >= m.n_snps()) {
        return Err(Error::Validation(format!(
            "scenario removes SNP {r} but the data has {} SNPs",
            m.n_snps()
        )));
    }
    let keep: Vec<usize> = (0..m.n_snps())
        .filter(|j| !scenario.removed_causal.contains(j))
        .collect();
    Ok(m.select_snps(&keep))
}

fn load_scenario(log: &mut RunLog, path: &Path) -> Result<Scenario> {
    log.input(path);
    Scenario::parse(&read_text(path)?)
}

pub fn select(a: &SelectArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "select")?;
    let config = search_config(&mut log, &a.search);
    log.config("method", a.method.as_str());
    if a.method == Method::SingleMarker {
        log.config("bh_alpha", a.bh_alpha);
    }
    match &a.sim_dir {
        None => {
            let mut m = analysis_matrix(&mut log, &a.input)?;
            if let Some(path) = &a.scenario {
                log.config("scenario", path.display());
                m = drop_removed(&m, &load_scenario(&mut log, path)?)?;
            }
            run_method(&mut log, &m, a, config, "")?;
        }
        Some(dir) => {
            if a.input.fam.is_some() {
                return Err(Error::Argument("--fam cannot be combined with --sim-dir".into()));
            }
            log.config("sim_dir", dir.display());
            let full = load(&mut log, &a.input.bfile)?;
            for (stem, scenario_path, fam) in replicates_in(dir)? {
                let scenario = load_scenario(&mut log, &scenario_path)?;
                log.input(&fam);
                let m = complete_cases(drop_removed(&apply_fam(full.clone(), &fam)?, &scenario)?);
                log::info!("replicate {stem}");
                run_method(&mut log, &m, a, config, &format!("{stem}."))?;
            }
        }
    }
    log.finish()
}

pub fn simulate_null(a: &SimNullArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "simulate-null")?;
    let m = load(&mut log, &a.bfile)?;
    log.config("seed", a.seed);
    log.config("replicates", a.replicates);
    for rep in 0..a.replicates {
        let scenario = Scenario::global_null(a.seed, rep);
        let labels = simulate_null_replicate(&m, &scenario);
        let with = m.clone().with_phenotype(labels)?;
        let name = replicate_name(rep);
        log.write(&format!("{name}.scenario"), &scenario.to_text())?;
        log.write(&format!("{name}.fam"), &fam_text(&with))?;
    }
    log.finish()
}

pub fn simulate_trait(a: &SimTraitArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "simulate-trait")?;
    let m = load(&mut log, &a.bfile)?;
    let spec = TraitSpec {
        k: a.k_causal,
        effect_low: a.effect_low,
        effect_high: a.effect_high,
        maf_min: a.causal_maf_min,
        rho_max: a.rho_max,
    };
    log.config("seed", a.seed);
    log.config("replicates", a.replicates);
    log.config("k_causal", spec.k);
    log.config("effect_low", spec.effect_low);
    log.config("effect_high", spec.effect_high);
    log.config("causal_maf_min", spec.maf_min);
    log.config("rho_max", spec.rho_max);
    log.config("remove_half", a.remove_half);
    for rep in 0..a.replicates {
        let mut scenario = make_trait_scenario(&m, &spec, a.seed, rep)?;
        let labels = sim::simulate_trait(&m, &scenario)?;
        if a.remove_half {
            scenario = remove_causal(&m, &scenario)?.1;
        }
        let with = m.clone().with_phenotype(labels)?;
        let name = replicate_name(rep);
        log.write(&format!("{name}.scenario"), &scenario.to_text())?;
        log.write(&format!("{name}.fam"), &fam_text(&with))?;
    }
    log.finish()
}

fn read_detections(log: &mut RunLog, m: &GenotypeMatrix, path: &Path) -> Result<Vec<usize>> {
    log.input(path);
    resolve_ids(m, &parse_detection_ids(&read_text(path)?)?)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "evaluate")?;
    let m = load(&mut log, &a.bfile)?;
    log.config("cluster_C", a.cluster_c);
    log.config("cluster_fp", a.cluster_fp);
    log.config("label", &a.label);
    if !(a.cluster_c > 0.0 && a.cluster_c < 1.0) {
        return Err(Error::Argument(format!("--cluster-C {} outside (0, 1)", a.cluster_c)));
    }

    let jobs: Vec<(String, PathBuf, PathBuf)> = match (&a.sim_dir, &a.models, &a.scenario, &a.model) {
        (Some(dir), Some(models), None, None) => {
            log.config("sim_dir", dir.display());
            log.config("models", models.display());
            replicates_in(dir)?
                .into_iter()
                .map(|(stem, sc, _)| {
                    let model = models.join(format!("{stem}.model.tsv"));
                    (stem, sc, model)
                })
                .collect()
        }
        (None, None, Some(sc), Some(model)) => {
            log.config("scenario", sc.display());
            log.config("model", model.display());
            vec![("single".to_string(), sc.clone(), model.clone())]
        }
        _ => {
            return Err(Error::Argument(
                "give either --sim-dir with --models, or --scenario with --model".into(),
            ))
        }
    };

    let mut reports: Vec<(String, EvalReport)> = Vec::new();
    let mut kinds = Vec::new();
    for (stem, sc, model) in jobs {
        let scenario = load_scenario(&mut log, &sc)?;
        if let Some(&c) = scenario.causal_snps.iter().find(|&&c| c >= m.n_snps()) {
            return Err(Error::Validation(format!(
                "{}: causal SNP {c} outside the {} SNPs of the data",
                sc.display(),
                m.n_snps()
            )));
        }
        let det = read_detections(&mut log, &m, &model)?;
        reports.push((
            stem,
            evaluate_replicate(&m, &det, &scenario, a.cluster_c, a.cluster_fp),
        ));
        if !kinds.contains(&scenario.kind) {
            kinds.push(scenario.kind);
        }
    }
    let scenario_label = kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("+");
    let only: Vec<EvalReport> = reports.iter().map(|(_, r)| r.clone()).collect();
    log.write("evaluation.tsv", &reports_tsv(&reports))?;
    log.write(
        "summary.tsv",
        &summary_tsv(&a.label, &scenario_label, &aggregate(&only)?),
    )?;
    log.finish()
}

fn secs(d: std::time::Duration) -> String {
    format!("{:.6}", d.as_secs_f64())
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "bench")?;
    let t = Instant::now();
    let full = load(&mut log, &a.bfile)?;
    let load_time = t.elapsed();
    let config = search_config(&mut log, &a.search);
    log.config("seed", a.seed);
    log.config("replicates", a.replicates);

    let phenotypes: Vec<GenotypeMatrix> = if a.replicates == 0 {
        vec![complete_cases(full)]
    } else {
        (0..a.replicates)
            .map(|rep| {
                let labels = simulate_null_replicate(&full, &Scenario::global_null(a.seed, rep));
                full.clone().with_phenotype(labels)
            })
            .collect::<Result<_>>()?
    };

    let mut stats = SearchStats::default();
    let mut steps = [0usize; 3];
    let t = Instant::now();
    for m in &phenotypes {
        let sel = mosgwa_select(m, config)?;
        for r in &sel.rounds {
            steps[0] += r.forward_steps;
            steps[1] += r.exchange_steps;
            steps[2] += r.backward_steps;
        }
        stats.merge(&sel.stats);
    }
    let total = t.elapsed();

    let mut s = format!(
        "# n={} p={} runs={} threads={}\nmetric\tvalue\n",
        phenotypes[0].n_individuals(),
        phenotypes[0].n_snps(),
        phenotypes.len(),
        rayon::current_num_threads()
    );
    let _ = writeln!(s, "time_load_s\t{}", secs(load_time));
    let _ = writeln!(s, "time_rank_s\t{}", secs(stats.rank_time));
    let _ = writeln!(s, "time_forward_s\t{}", secs(stats.forward_time));
    let _ = writeln!(s, "time_exchange_s\t{}", secs(stats.exchange_time));
    let _ = writeln!(s, "time_backward_s\t{}", secs(stats.backward_time));
    let _ = writeln!(s, "time_select_total_s\t{}", secs(total));
    let _ = writeln!(s, "fits_total\t{}", stats.total_fits());
    let _ = writeln!(s, "fits_failed\t{}", stats.failed_fits);
    let _ = writeln!(s, "exchange_scans\t{}", stats.exchange_scans);
    let _ = writeln!(s, "cycles\t{}", stats.cycles);
    let _ = writeln!(s, "accepted_forward\t{}", steps[0]);
    let _ = writeln!(s, "accepted_exchange\t{}", steps[1]);
    let _ = writeln!(s, "accepted_backward\t{}", steps[2]);
    for (k, v) in &stats.fits_by_k {
        let _ = writeln!(s, "fits_k{k}\t{v}");
    }
    log.write("bench.tsv", &s)?;
    log.finish()
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut log = RunLog::new(&a.common.out, "synth")?;
    let cfg = SynthConfig {
        n_individuals: a.n,
        n_snps: a.p,
        n_chromosomes: a.chromosomes,
        mean_block_len: a.block_len,
        seed: a.seed,
        ..SynthConfig::default()
    };
    log.config("n", a.n);
    log.config("p", a.p);
    log.config("chromosomes", a.chromosomes);
    log.config("block_len", a.block_len);
    log.config("seed", a.seed);
    log.config("null_phenotype", a.null_phenotype);
    let mut m = synthesize_genotypes(&cfg)?;
    if a.null_phenotype {
        let labels = simulate_null_replicate(&m, &Scenario::global_null(a.seed, 0));
        m = m.with_phenotype(labels)?;
    }
    let prefix = log.path("synth");
    write_plink(&m, &prefix)?;
    for ext in ["bed", "bim", "fam"] {
        log.written(with_ext(&prefix, ext));
    }
    log.finish()
}
