use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gwas-select",
    version,
    about = "Case-control GWAS model selection with Firth logistic regression and mBIC2"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter SNPs by minor allele frequency and Hardy-Weinberg equilibrium.
    Qc(QcArgs),
    /// Single-marker trend tests with Benjamini-Hochberg rejections.
    Assoc(AssocArgs),
    /// Three-round model selection (or the single-marker baseline).
    Select(SelectArgs),
    /// Phenotypes with cases and controls allocated at random.
    SimulateNull(SimNullArgs),
    /// Phenotypes from a logistic model with planted causal SNPs.
    SimulateTrait(SimTraitArgs),
    /// Score detections against simulation scenarios.
    Evaluate(EvaluateArgs),
    /// Per-phase timings and call counts of the selection procedure.
    Bench(BenchArgs),
    /// Write a synthetic block-LD genotype dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output directory (created if absent).
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args, Clone)]
pub struct Input {
    /// PLINK prefix of the .bed/.bim/.fam triple.
    #[arg(long)]
    pub bfile: PathBuf,
    /// Take phenotypes from this .fam instead of the one next to the .bed.
    #[arg(long)]
    pub fam: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    /// Size of the forward-scan group.
    #[arg(long, default_value_t = 350)]
    pub m1: usize,
    /// Size of the exchange group.
    #[arg(long, default_value_t = 5000)]
    pub m2: usize,
    /// Exchange window in marker positions.
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long, default_value_t = 50)]
    pub max_model_size: usize,
}

#[derive(Debug, Args)]
pub struct QcArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.01)]
    pub maf_min: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub hwe_alpha: f64,
}

#[derive(Debug, Args)]
pub struct AssocArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0.05)]
    pub bh_alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mosgwa,
    SingleMarker,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mosgwa => "mosgwa",
            Method::SingleMarker => "single-marker",
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_enum, default_value_t = Method::Mosgwa)]
    pub method: Method,
    /// Significance level of the single-marker baseline.
    #[arg(long, default_value_t = 0.05)]
    pub bh_alpha: f64,
    /// Scenario file; its removed causal SNPs are dropped before analysis.
    #[arg(long, conflicts_with = "sim_dir")]
    pub scenario: Option<PathBuf>,
    /// Analyse every replicate written by simulate-null or simulate-trait.
    #[arg(long)]
    pub sim_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimNullArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub bfile: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
pub struct SimTraitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub bfile: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub replicates: u64,
    #[arg(long, default_value_t = 6)]
    pub k_causal: usize,
    #[arg(long, default_value_t = 0.2)]
    pub effect_low: f64,
    #[arg(long, default_value_t = 0.28)]
    pub effect_high: f64,
    /// Causal SNPs must have MAF above this.
    #[arg(long, default_value_t = 0.3)]
    pub causal_maf_min: f64,
    /// Causal SNPs must have pairwise |r| below this.
    #[arg(long, default_value_t = 0.1)]
    pub rho_max: f64,
    /// Remove half of the causal SNPs (those with the best LD proxies) from the analysis data.
    #[arg(long)]
    pub remove_half: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// The full (pre-removal) genotype data the scenarios refer to.
    #[arg(long)]
    pub bfile: PathBuf,
    #[arg(long, requires = "models", conflicts_with_all = ["scenario", "model"])]
    pub sim_dir: Option<PathBuf>,
    /// Directory of `<replicate>.model.tsv` files from `select --sim-dir`.
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "cluster-C", default_value_t = 0.3)]
    pub cluster_c: f64,
    /// Count false positives as C-clusters rather than single detections.
    #[arg(long)]
    pub cluster_fp: bool,
    /// Method name written into the summary table.
    #[arg(long, default_value = "mosgwa")]
    pub label: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub bfile: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Null phenotypes to run; 0 uses the phenotype in the .fam file.
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub p: usize,
    #[arg(long, default_value_t = 6)]
    pub chromosomes: u8,
    #[arg(long, default_value_t = 20.0)]
    pub block_len: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Attach a null phenotype drawn with this seed.
    #[arg(long)]
    pub null_phenotype: bool,
}
