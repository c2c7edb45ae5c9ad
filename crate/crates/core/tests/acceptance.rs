//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use common::{
    bernoulli_labels, criterion_of, dense, exhaustive_min, greedy_forward, penalized_loglik,
    planted_instance, random_genotypes, rng,
};
use gwas_select::assoc::{assoc_tsv, cochran_armitage, rank_marginal, single_marker_bh};
use gwas_select::criteria::Criterion;
use gwas_select::evaluation::{
    abs_correlation, aggregate, c_cluster, evaluate_replicate, reports_tsv, EvalReport,
};
use gwas_select::firth::{fit_firth, DesignSpec, FitOptions};
use gwas_select::genotype::{
    encode_bed, load_plink_prefix, write_plink, GenotypeMatrix, SampleMeta,
};
use gwas_select::search::{fss, model_tsv, trace_tsv, Model, SearchConfig};
use gwas_select::simulation::{
    make_trait_scenario, simulate_null_replicate, simulate_trait, synthesize_genotypes, Scenario,
    ScenarioKind, SynthConfig, TraitSpec,
};
use gwas_select::mosgwa_select;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Hypergeometric};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c1_intercept_closed_form() -> Outcome {
    let mut r = rng(1001);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = r.random_range(2..=200);
        let s = r.random_range(1..n);
        let g = random_genotypes(&mut r, n, 0.3);
        let labels = (0..n).map(|i| u8::from(i < s)).collect();
        let m = dense(&[g]).with_phenotype(labels).unwrap();
        let fit = fit_firth(&m, &DesignSpec::null(), 1e-10, 100).unwrap();
        let expected = ((s as f64 + 0.5) / (n as f64 - s as f64 + 0.5)).ln();
        worst = worst.max((fit.coefficients[0] - expected).abs());
    }
    outcome(worst < 1e-8, format!("max |error| {worst:.2e} over 50 instances (tolerance 1e-8)"))
}

fn c2_grid_oracle() -> Outcome {
    let mut r = rng(1002);
    let steps = 400;
    let grid: Vec<f64> = (0..steps).map(|i| -5.0 + 10.0 * i as f64 / (steps - 1) as f64).collect();
    let mut worst_gap = f64::INFINITY;
    let mut done = 0;
    while done < 20 {
        let n = 50;
        let g = random_genotypes(&mut r, n, 0.35);
        let b1 = r.random_range(-1.5..1.5);
        let labels = bernoulli_labels(&mut r, |i| -0.3 + b1 * f64::from(g[i]), n);
        if labels.iter().all(|&v| v == labels[0]) || g.iter().all(|&v| v == g[0]) {
            continue;
        }
        let m = dense(&[g]).with_phenotype(labels.clone()).unwrap();
        let fit = fit_firth(&m, &DesignSpec::with_snps(vec![0]), 1e-6, 50).unwrap();
        let cols = vec![vec![1.0; n], m.genotype_column(0).unwrap()];
        let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
        let mut best = f64::NEG_INFINITY;
        for &a in &grid {
            for &b in &grid {
                best = best.max(penalized_loglik(&cols, &y, &[a, b]));
            }
        }
        let at_fit = penalized_loglik(&cols, &y, &fit.coefficients);
        worst_gap = worst_gap.min(at_fit - best);
        done += 1;
    }
    outcome(
        worst_gap >= -1e-4,
        format!("min (fit - grid max) = {worst_gap:.3e} over 20 instances (need >= -1e-4)"),
    )
}

fn c3_separation() -> Outcome {
    let mut r = rng(1003);
    let mut ok = 0;
    let mut largest = 0.0f64;
    for _ in 0..20 {
        let n = r.random_range(10..80);
        let mut g: Vec<u8> = (0..n).map(|_| if r.random::<bool>() { 2 } else { 0 }).collect();
        g[0] = 0;
        g[1] = 2;
        let labels: Vec<u8> = g.iter().map(|&v| u8::from(v > 0)).collect();
        let m = dense(&[g]).with_phenotype(labels).unwrap();
        if let Ok(fit) = fit_firth(&m, &DesignSpec::with_snps(vec![0]), 1e-6, 50) {
            let biggest = fit.coefficients.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            largest = largest.max(biggest);
            if fit.converged && biggest < 20.0 {
                ok += 1;
            }
        }
    }
    outcome(ok == 20, format!("{ok}/20 converged with |coef| < 20 (largest {largest:.3})"))
}

fn c4_criteria_reference() -> Outcome {
    fn compensated(terms: impl Iterator<Item = f64>) -> f64 {
        let (mut sum, mut c) = (0.0f64, 0.0f64);
        for t in terms {
            let s = sum + t;
            c += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
            sum = s;
        }
        sum + c
    }
    let mut worst = 0.0f64;
    for (n, p) in [(1000usize, 10_000usize), (4077, 149_478)] {
        let (nf, pf) = (n as f64, p as f64);
        for k in 0..=50usize {
            let pll = -345.678;
            let ln_fact = compensated((2..=k).map(|i| (i as f64).ln()));
            let per = |c: f64| compensated([nf.ln(), 2.0 * pf.ln(), -c.ln()].into_iter());
            let r2 = compensated([-2.0 * pll, k as f64 * per(4.0), -2.0 * ln_fact].into_iter());
            let r60 = compensated([-2.0 * pll, k as f64 * per(60.0)].into_iter());
            let two = Criterion::mbic2().evaluate(pll, k, n, p).unwrap();
            let sixty = Criterion::mbic60().evaluate(pll, k, n, p).unwrap();
            let identity = k as f64 * 15f64.ln() - 2.0 * ln_fact;
            worst = worst
                .max((two - r2).abs())
                .max((sixty - r60).abs())
                .max(((two - sixty) - identity).abs());
        }
    }
    outcome(worst < 1e-10, format!("max deviation {worst:.2e} (tolerance 1e-10)"))
}

fn c5_search_optimality() -> Outcome {
    let c = Criterion::mbic2();
    let (mut beats_greedy, mut exact) = (0, 0);
    let tol = 1e-6;
    for inst in 0..50u64 {
        let mut r = rng(5000 + inst);
        let mut pool: Vec<usize> = (0..12).collect();
        pool.shuffle(&mut r);
        let causal = &pool[..3];
        let (m, _) = planted_instance(500, 12, causal, 0.8, 7000 + inst);
        let ranking = rank_marginal(&m).unwrap();
        let null = Model::null(&m, c, FitOptions::default()).unwrap();
        let model = fss(&m, null, &ranking, c, SearchConfig::default()).unwrap();
        let value = criterion_of(&m, &model.snp_indices, c).unwrap();
        let (_, greedy) = greedy_forward(&m, c);
        let (best_set, best) = exhaustive_min(&m, c);
        if value <= greedy + tol {
            beats_greedy += 1;
        }
        let mut chosen = model.snp_indices.clone();
        chosen.sort_unstable();
        if chosen == best_set || (value - best).abs() <= tol {
            exact += 1;
        }
    }
    outcome(
        beats_greedy == 50 && exact >= 38,
        format!("<= greedy in {beats_greedy}/50 (need 50), = exhaustive in {exact}/50 (need 38)"),
    )
}

fn null_genotypes() -> GenotypeMatrix {
    synthesize_genotypes(&SynthConfig {
        n_individuals: 1000,
        n_snps: 10_000,
        seed: 606,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn c6_c8_global_null() -> (Outcome, Outcome) {
    let g = null_genotypes();
    let mut mosgwa = Vec::new();
    let mut single = Vec::new();
    for rep in 0..100 {
        let scenario = Scenario::global_null(606, rep);
        let m = g.clone().with_phenotype(simulate_null_replicate(&g, &scenario)).unwrap();
        let sel = mosgwa_select(&m, SearchConfig::default()).unwrap();
        mosgwa.push(evaluate_replicate(&m, &sel.model.snp_indices, &scenario, 0.3, false));
        let sm = single_marker_bh(&m, 0.05).unwrap();
        single.push(evaluate_replicate(&m, &sm, &scenario, 0.3, true));
    }
    let ms = aggregate(&mosgwa).unwrap();
    let ss = aggregate(&single).unwrap();
    (
        outcome(
            ms.fp.mean <= 0.3 && ms.empty >= 80,
            format!(
                "mean FP {:.3} (need <= 0.3), empty models {}/100 (need >= 80)",
                ms.fp.mean, ms.empty
            ),
        ),
        outcome(
            ss.fp.mean <= 0.15,
            format!("single-marker BH mean FP clusters {:.3} (need <= 0.15)", ss.fp.mean),
        ),
    )
}

fn power_run(g: &GenotypeMatrix, beta: f64, seed: u64) -> (f64, f64) {
    let spec = TraitSpec {
        k: 6,
        effect_low: beta,
        effect_high: beta,
        ..TraitSpec::default()
    };
    let mut reports = Vec::new();
    for rep in 0..50 {
        let scenario = make_trait_scenario(g, &spec, seed, rep).unwrap();
        let m = g.clone().with_phenotype(simulate_trait(g, &scenario).unwrap()).unwrap();
        let sel = mosgwa_select(&m, SearchConfig::default()).unwrap();
        reports.push(evaluate_replicate(&m, &sel.model.snp_indices, &scenario, 0.3, false));
    }
    let s = aggregate(&reports).unwrap();
    (s.power.mean, s.fdr.mean)
}

fn c7_power() -> Outcome {
    let g = synthesize_genotypes(&SynthConfig {
        n_individuals: 2000,
        n_snps: 10_000,
        seed: 707,
        ..SynthConfig::default()
    })
    .unwrap();
    let (power, fdr) = power_run(&g, 0.5, 707);
    let (weak_power, _) = power_run(&g, 0.25, 708);
    outcome(
        power >= 0.8 && fdr <= 0.2 && weak_power < power,
        format!(
            "beta 0.5: power {power:.3} (need >= 0.8), mean FDR {fdr:.3} (need <= 0.2); \
             beta 0.25: power {weak_power:.3} (need < {power:.3})"
        ),
    )
}

fn c9_trend_oracle() -> Outcome {
    let mut r = rng(1009);
    let shuffles = 100_000;
    let mut formula_err = 0.0f64;
    let mut worst_z = 0.0f64;
    for _ in 0..10 {
        let n = 200_000;
        let maf = r.random_range(0.1..0.5);
        let g = random_genotypes(&mut r, n, maf);
        let b = r.random_range(0.0..0.012);
        let labels = bernoulli_labels(&mut r, |i| b * f64::from(g[i]), n);
        let m = dense(&[g]).with_phenotype(labels.clone()).unwrap();
        let ca = cochran_armitage(&m, 0).unwrap();

        let x = m.genotype_column(0).unwrap();
        let nf = n as f64;
        let cases = labels.iter().filter(|&&v| v == 1).count() as f64;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let denom = cases * (nf - cases) * (nf * sxx - sx * sx);
        let stat_of = |sxy: f64| nf * (nf * sxy - cases * sx).powi(2) / denom;
        let sxy_obs: f64 = x.iter().zip(&labels).filter(|(_, &l)| l == 1).map(|(v, _)| v).sum();
        let direct = stat_of(sxy_obs);
        formula_err = formula_err.max((ca.statistic - direct).abs() / direct.max(1.0));

        // A shuffle of the labels only matters through how many cases land
        // in each genotype class, which is multivariate hypergeometric; draw
        // those counts directly instead of permuting 200k labels.
        let class = |v: f64| x.iter().filter(|&&xi| xi == v).count() as u64;
        let values = [0.0, 1.0, 2.0];
        let sizes = values.map(class);
        let total = n as u64;
        let r_cases = cases as u64;
        // mid-p: the statistic lives on a lattice, the chi-square reference does not
        let (mut above, mut ties) = (0u64, 0u64);
        let eps = 1e-9 * direct.max(1.0);
        for _ in 0..shuffles {
            let (mut left_pop, mut left_draw, mut sxy) = (total, r_cases, 0.0);
            for (v, &size) in values.iter().zip(&sizes) {
                let k = if left_pop == size {
                    left_draw
                } else {
                    Hypergeometric::new(left_pop, size, left_draw).unwrap().sample(&mut r)
                };
                sxy += v * k as f64;
                left_pop -= size;
                left_draw -= k;
            }
            let t = stat_of(sxy);
            if t > direct + eps {
                above += 1;
            } else if t >= direct - eps {
                ties += 1;
            }
        }
        let p_perm = (above as f64 + 0.5 * ties as f64) / shuffles as f64;
        let se = (ca.p_value * (1.0 - ca.p_value) / shuffles as f64).sqrt().max(1e-12);
        worst_z = worst_z.max((p_perm - ca.p_value).abs() / se);
    }
    outcome(
        formula_err < 1e-10 && worst_z <= 3.0,
        format!(
            "direct-formula rel. error {formula_err:.2e} (need < 1e-10); \
             worst |p_perm - p| = {worst_z:.2} SE (need <= 3)"
        ),
    )
}

/// Walsh-pattern columns on 8 individuals: 0..7 mutually uncorrelated,
/// 7 duplicates 0, 8 mirrors 1, 9 = (col0 + col1) / 2 with |r| = 1/sqrt(2)
/// to each of 0 and 1.
fn walsh_matrix() -> GenotypeMatrix {
    let sign = |bits: u32, i: u32| (bits & i).count_ones() % 2 == 1;
    let col = |bits: u32| -> Vec<u8> { (0..8).map(|i| if sign(bits, i) { 2 } else { 0 }).collect() };
    let mut cols: Vec<Vec<u8>> = [4, 2, 1, 6, 5, 3, 7].into_iter().map(col).collect();
    cols.push(cols[0].clone());
    cols.push(cols[1].iter().map(|v| 2 - v).collect());
    cols.push(cols[0].iter().zip(&cols[1]).map(|(a, b)| (a + b) / 2).collect());
    dense(&cols)
}

fn c10_evaluation() -> Outcome {
    let m = walsh_matrix();
    let sc = |causal: &[usize]| Scenario {
        kind: ScenarioKind::ComplexTrait,
        causal_snps: causal.to_vec(),
        effects: vec![0.3; causal.len()],
        ..Scenario::global_null(1, 0)
    };
    // (detections, causal, C, cluster_fp) -> (tp, fp, power, fdr, mis)
    type Case = (&'static [usize], &'static [usize], f64, bool, (usize, usize, f64, f64, f64));
    let cases: [Case; 10] = [
        (&[0, 1, 2], &[0, 1, 2], 0.3, false, (3, 0, 1.0, 0.0, 0.0)),
        (&[], &[0, 1, 2], 0.3, false, (0, 0, 0.0, 0.0, 3.0)),
        (&[7], &[0, 1, 2], 0.3, false, (1, 0, 1.0 / 3.0, 0.0, 2.0)),
        (&[9], &[0, 1], 0.3, false, (1, 0, 0.5, 0.0, 1.0)),
        (&[0, 3, 7], &[0], 0.3, false, (1, 1, 1.0, 0.5, 1.0)),
        (&[9], &[0, 1], 0.8, false, (0, 1, 0.0, 1.0, 3.0)),
        (&[0, 1, 7, 8], &[2], 0.3, false, (0, 4, 0.0, 1.0, 5.0)),
        (&[0, 1, 7, 8], &[2], 0.3, true, (0, 2, 0.0, 1.0, 3.0)),
        (&[3, 4, 5, 6, 2], &[2, 9], 0.3, true, (1, 4, 0.5, 0.8, 5.0)),
        (&[0, 9, 1], &[4], 0.5, true, (0, 2, 0.0, 1.0, 3.0)),
    ];
    let mut wrong = Vec::new();
    for (i, (det, causal, c, clustered, want)) in cases.iter().enumerate() {
        let r = evaluate_replicate(&m, det, &sc(causal), *c, *clustered);
        let got = (r.true_positives, r.fp_clusters, r.power, r.fdr, r.misclassifications);
        if got != *want || r.size != det.len() {
            wrong.push(format!("case {i}: got {got:?}, want {want:?}"));
        }
    }

    // pairwise guarantee on random detection sets over LD data
    let g = synthesize_genotypes(&SynthConfig {
        n_individuals: 500,
        n_snps: 400,
        n_chromosomes: 2,
        seed: 1010,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut r = rng(1010);
    let mut violations = 0;
    for _ in 0..200 {
        let size = r.random_range(1..40);
        let det: BTreeSet<usize> = (0..size).map(|_| r.random_range(0..400)).collect();
        let det: Vec<usize> = det.into_iter().collect();
        let c = r.random_range(0.05..0.95);
        let cs = c_cluster(&g, &det, c);
        let mut flat: Vec<usize> = cs.clusters.iter().flatten().copied().collect();
        flat.sort_unstable();
        if flat != det {
            violations += 1;
        }
        for cl in &cs.clusters {
            for (i, &a) in cl.iter().enumerate() {
                for &b in &cl[i + 1..] {
                    let rr = g.correlation(a, b).map_or(0.0, f64::abs);
                    if !(rr > c) || abs_correlation(&g, a, b) != rr {
                        violations += 1;
                    }
                }
            }
        }
    }
    let pass = wrong.is_empty() && violations == 0;
    let detail = if pass {
        "10/10 hand-computed configurations exact; 200 random clusterings satisfy |r| > C".into()
    } else {
        format!("{} mismatches {:?}; {violations} cluster violations", wrong.len(), wrong)
    };
    outcome(pass, detail)
}

fn c11_plink_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(1011);
    let mut identical = 0;
    for t in 0..100 {
        let n: usize = r.random_range(1..60);
        let p = r.random_range(1..40);
        let per_snp = n.div_ceil(4);
        let mut payload = vec![0u8; per_snp * p];
        for j in 0..p {
            let miss = r.random_range(0.0..0.3);
            for i in 0..n {
                let code: u8 = if r.random::<f64>() < miss {
                    0b01
                } else {
                    [0b00, 0b10, 0b11][r.random_range(0..3)]
                };
                payload[j * per_snp + i / 4] |= code << (2 * (i % 4));
            }
        }
        let bed = encode_bed(&payload);
        let a = dir.path().join(format!("in{t}"));
        let b = dir.path().join(format!("out{t}"));
        fs::write(a.with_extension("bed"), &bed).unwrap();
        let bim: String = (0..p).map(|j| format!("1\tsnp{j}\t0\t{}\tA\tG\n", 10 * (j + 1))).collect();
        fs::write(a.with_extension("bim"), bim).unwrap();
        let fam: String = (0..n)
            .map(|i| {
                let s = SampleMeta::synthetic(i);
                format!("{} {} 0 0 0 {}\n", s.fid, s.iid, 1 + i % 2)
            })
            .collect();
        fs::write(a.with_extension("fam"), fam).unwrap();
        let m = load_plink_prefix(&a).unwrap();
        write_plink(&m, &b).unwrap();
        let same_bed = fs::read(b.with_extension("bed")).unwrap() == bed;
        let again = load_plink_prefix(&b).unwrap();
        if same_bed && again == m {
            identical += 1;
        }
    }
    outcome(identical == 100, format!("{identical}/100 byte-identical .bed round trips"))
}

/// Simulate, select, test and evaluate on a small dataset; all TSV outputs.
fn pipeline_outputs() -> Vec<String> {
    let g = synthesize_genotypes(&SynthConfig {
        n_individuals: 600,
        n_snps: 1200,
        n_chromosomes: 3,
        seed: 1012,
        ..SynthConfig::default()
    })
    .unwrap();
    let spec = TraitSpec {
        k: 4,
        effect_low: 0.5,
        effect_high: 0.7,
        ..TraitSpec::default()
    };
    let mut out = Vec::new();
    let mut reports = Vec::new();
    for rep in 0..2 {
        let scenario = make_trait_scenario(&g, &spec, 1012, rep).unwrap();
        let m = g.clone().with_phenotype(simulate_trait(&g, &scenario).unwrap()).unwrap();
        let sel = mosgwa_select(&m, SearchConfig::default()).unwrap();
        out.push(scenario.to_text());
        out.push(model_tsv(&m, &sel.model));
        out.push(trace_tsv(&m, &sel.trace));
        out.push(assoc_tsv(&m, 0.05).unwrap());
        let report: EvalReport = evaluate_replicate(&m, &sel.model.snp_indices, &scenario, 0.3, false);
        reports.push((format!("rep{rep}"), report));
    }
    out.push(reports_tsv(&reports));
    out
}

fn c12_determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(pipeline_outputs)
    };
    let one = run(1);
    let eight = run(8);
    let differing = one.iter().zip(&eight).filter(|(a, b)| a != b).count();
    outcome(
        differing == 0 && one.len() == eight.len(),
        format!("{} TSV outputs compared, {differing} differ between 1 and 8 threads", one.len()),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, secs: f64, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failures += 1;
        }
        println!("criterion {id}: {status} [{name}] {} ({secs:.1}s)", o.detail);
    };
    fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
        let t = Instant::now();
        let v = f();
        (v, t.elapsed().as_secs_f64())
    }

    let (o, s) = timed(c1_intercept_closed_form);
    report(1, "Firth intercept closed form", s, o);
    let (o, s) = timed(c2_grid_oracle);
    report(2, "Firth two-parameter grid oracle", s, o);
    let (o, s) = timed(c3_separation);
    report(3, "separation robustness", s, o);
    let (o, s) = timed(c4_criteria_reference);
    report(4, "criterion exactness", s, o);
    let (o, s) = timed(c5_search_optimality);
    report(5, "search optimality at desk scale", s, o);
    let ((c6, c8), s68) = timed(c6_c8_global_null);
    report(6, "global-null false positives", s68, c6);
    let (o, s) = timed(c7_power);
    report(7, "power sanity", s, o);
    report(8, "single-marker baseline under the null, same runs as 6", s68, c8);
    let (o, s) = timed(c9_trend_oracle);
    report(9, "trend-test oracle", s, o);
    let (o, s) = timed(c10_evaluation);
    report(10, "evaluation arithmetic", s, o);
    let (o, s) = timed(c11_plink_round_trip);
    report(11, "PLINK format fidelity", s, o);
    let (o, s) = timed(c12_determinism);
    report(12, "thread-count determinism", s, o);

    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
