//! Model selection for case-control genome-wide association studies.
//!
//! Firth-penalized logistic regression is scored by mBIC2 (or its linear
//! relaxation mBIC_c) and minimized by a fast stepwise search that mixes
//! directed forward, exchange and backward moves. Around that core sit a
//! bit-packed PLINK genotype store, single-marker association tests,
//! phenotype simulation and detection scoring.
//!
//! ```no_run
//! use gwas_select::{genotype::load_plink_prefix, search::{mosgwa_select, SearchConfig}};
//!
//! let data = load_plink_prefix("study".as_ref()).unwrap();
//! let selection = mosgwa_select(&data, SearchConfig::default()).unwrap();
//! println!("{} SNPs selected", selection.model.len());
//! ```

pub mod assoc;
pub mod criteria;
pub mod error;
pub mod evaluation;
pub mod firth;
pub mod genotype;
mod linalg;
pub mod search;
pub mod simulation;
pub mod stats;

pub use criteria::Criterion;
pub use error::{Error, Result};
pub use genotype::GenotypeMatrix;
pub use search::{mosgwa_select, SearchConfig, Selection};
