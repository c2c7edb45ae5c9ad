//! Bit-packed genotype storage with per-SNP metadata.
//!
//! Genotypes are kept as raw PLINK 2-bit codes, one contiguous byte run per
//! SNP. Decoding to minor-allele counts happens on access, using the
//! per-SNP orientation computed from the non-missing genotypes.

mod plink;
mod qc;

pub use plink::{
    decode_bed, encode_bed, fam_text, load_plink, load_plink_prefix, parse_bim, parse_fam, parse_phenotype,
    write_plink, BimRecord, FamRecord, BED_MAGIC, BED_MODE_SNP_MAJOR,
};
pub use qc::{hwe_chi_square, hwe_p_value, qc_filter, HweCounts};

use crate::error::{Error, Result};

/// Raw PLINK codes: 00 hom allele 1, 01 missing, 10 het, 11 hom allele 2.
pub(crate) const CODE_MISSING: u8 = 0b01;

/// Count of `allele_b` (bim column 6) for each raw code; `None` for missing.
const CODE_TO_B_COUNT: [Option<u8>; 4] = [Some(0), None, Some(1), Some(2)];

/// Which of the two bim alleles is the minor (counted) allele.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinorAllele {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnpMeta {
    pub snp_id: String,
    pub chromosome: u8,
    pub position_bp: u64,
    pub cm: f64,
    /// Allele in bim column 5.
    pub allele_a: String,
    /// Allele in bim column 6.
    pub allele_b: String,
    pub minor_allele: MinorAllele,
    pub minor_allele_freq: f64,
    pub missing_rate: f64,
    pub map_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    pub fid: String,
    pub iid: String,
    pub father: String,
    pub mother: String,
    pub sex: String,
}

impl SampleMeta {
    pub fn synthetic(i: usize) -> Self {
        SampleMeta {
            fid: format!("F{i}"),
            iid: format!("I{i}"),
            father: "0".into(),
            mother: "0".into(),
            sex: "0".into(),
        }
    }
}

/// Case/control label of one individual; `None` when unknown.
pub type Label = Option<u8>;

/// Immutable n x p genotype matrix, SNP-major, 2 bits per genotype.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    n: usize,
    bytes_per_snp: usize,
    packed: Vec<u8>,
    snps: Vec<SnpMeta>,
    samples: Vec<SampleMeta>,
    phenotype: Option<Vec<Label>>,
    covariates: Option<Vec<Vec<f64>>>,
}

pub(crate) fn bytes_per_snp(n: usize) -> usize {
    n.div_ceil(4)
}

#[inline]
fn code_at(col: &[u8], i: usize) -> u8 {
    (col[i >> 2] >> ((i & 3) * 2)) & 0b11
}

/// Column statistics computed from raw codes.
fn column_stats(col: &[u8], n: usize) -> (MinorAllele, f64, f64) {
    let mut hist = [0usize; 4];
    for i in 0..n {
        hist[code_at(col, i) as usize] += 1;
    }
    let observed = n - hist[CODE_MISSING as usize];
    let missing_rate = if n == 0 {
        0.0
    } else {
        hist[CODE_MISSING as usize] as f64 / n as f64
    };
    if observed == 0 {
        return (MinorAllele::B, 0.0, missing_rate);
    }
    let b_alleles = hist[0b10] + 2 * hist[0b11];
    let freq_b = b_alleles as f64 / (2 * observed) as f64;
    if freq_b <= 0.5 {
        (MinorAllele::B, freq_b, missing_rate)
    } else {
        (MinorAllele::A, 1.0 - freq_b, missing_rate)
    }
}

impl GenotypeMatrix {
    /// Assemble a matrix from raw SNP-major PLINK payload. SNPs are reordered
    /// by (chromosome, position) and duplicated positions dropped if needed.
    pub fn from_raw(
        bim: Vec<BimRecord>,
        samples: Vec<SampleMeta>,
        phenotype: Option<Vec<Label>>,
        payload: Vec<u8>,
    ) -> Result<Self> {
        let n = samples.len();
        let bps = bytes_per_snp(n);
        if payload.len() != bps * bim.len() {
            return Err(Error::Size {
                expected: (bps * bim.len()) as u64,
                found: payload.len() as u64,
            });
        }
        if let Some(ph) = &phenotype {
            if ph.len() != n {
                return Err(Error::Validation(format!(
                    "phenotype length {} does not match {} individuals",
                    ph.len(),
                    n
                )));
            }
        }
        for rec in &bim {
            rec.check_biallelic()?;
        }

        let mut order: Vec<usize> = (0..bim.len()).collect();
        order.sort_by_key(|&j| (bim[j].chromosome, bim[j].position_bp));
        let mut keep = Vec::with_capacity(order.len());
        for &j in &order {
            if let Some(&prev) = keep.last() {
                let prev: usize = prev;
                if bim[prev].chromosome == bim[j].chromosome
                    && bim[prev].position_bp == bim[j].position_bp
                {
                    log::warn!(
                        "dropping SNP {} duplicating position {}:{}",
                        bim[j].snp_id,
                        bim[j].chromosome,
                        bim[j].position_bp
                    );
                    continue;
                }
            }
            keep.push(j);
        }

        let identity = keep.len() == bim.len() && keep.iter().enumerate().all(|(a, &b)| a == b);
        let packed = if identity {
            payload
        } else {
            log::warn!("SNPs were not in (chromosome, position) order; reordering");
            let mut out = Vec::with_capacity(keep.len() * bps);
            for &j in &keep {
                out.extend_from_slice(&payload[j * bps..(j + 1) * bps]);
            }
            out
        };

        let mut bim = bim.into_iter().map(Some).collect::<Vec<_>>();
        let snps = keep
            .iter()
            .enumerate()
            .map(|(map_index, &j)| {
                let rec = bim[j].take().expect("each bim row used once");
                let col = &packed[map_index * bps..(map_index + 1) * bps];
                let (minor_allele, maf, missing_rate) = column_stats(col, n);
                SnpMeta {
                    snp_id: rec.snp_id,
                    chromosome: rec.chromosome,
                    position_bp: rec.position_bp,
                    cm: rec.cm,
                    allele_a: rec.allele_1,
                    allele_b: rec.allele_2,
                    minor_allele,
                    minor_allele_freq: maf,
                    missing_rate,
                    map_index,
                }
            })
            .collect();

        Ok(GenotypeMatrix {
            n,
            bytes_per_snp: bps,
            packed,
            snps,
            samples,
            phenotype,
            covariates: None,
        })
    }

    /// Build a matrix from per-SNP columns of `allele_b` counts (`None` for missing).
    pub fn from_columns(
        bim: Vec<BimRecord>,
        samples: Vec<SampleMeta>,
        columns: &[Vec<Option<u8>>],
    ) -> Result<Self> {
        if bim.len() != columns.len() {
            return Err(Error::Validation(format!(
                "{} bim records for {} columns",
                bim.len(),
                columns.len()
            )));
        }
        let n = samples.len();
        let bps = bytes_per_snp(n);
        let mut payload = vec![0u8; bps * columns.len()];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Validation(format!(
                    "column {j} has {} entries, expected {n}",
                    col.len()
                )));
            }
            let dst = &mut payload[j * bps..(j + 1) * bps];
            for (i, g) in col.iter().enumerate() {
                let code = match g {
                    Some(0) => 0b00,
                    Some(1) => 0b10,
                    Some(2) => 0b11,
                    None => CODE_MISSING,
                    Some(v) => {
                        return Err(Error::Validation(format!(
                            "genotype {v} at ({i}, {j}) is not an allele count"
                        )))
                    }
                };
                dst[i >> 2] |= code << ((i & 3) * 2);
            }
        }
        Self::from_raw(bim, samples, None, payload)
    }

    pub fn n_individuals(&self) -> usize {
        self.n
    }

    pub fn n_snps(&self) -> usize {
        self.snps.len()
    }

    pub fn snp(&self, j: usize) -> &SnpMeta {
        &self.snps[j]
    }

    pub fn snps(&self) -> &[SnpMeta] {
        &self.snps
    }

    pub fn samples(&self) -> &[SampleMeta] {
        &self.samples
    }

    pub fn phenotype(&self) -> Option<&[Label]> {
        self.phenotype.as_deref()
    }

    pub fn covariates(&self) -> Option<&[Vec<f64>]> {
        self.covariates.as_deref()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates
            .as_ref()
            .and_then(|c| c.first().map(Vec::len))
            .unwrap_or(0)
    }

    /// The raw SNP-major payload, without the 3-byte header.
    pub fn packed_payload(&self) -> &[u8] {
        &self.packed
    }

    pub fn index_of(&self, snp_id: &str) -> Option<usize> {
        self.snps.iter().position(|s| s.snp_id == snp_id)
    }

    /// Replace the phenotype with complete case (1) / control (0) labels.
    pub fn with_phenotype(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Validation(format!(
                "phenotype length {} does not match {} individuals",
                labels.len(),
                self.n
            )));
        }
        if let Some(bad) = labels.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!("phenotype label {bad} is not 0/1")));
        }
        self.phenotype = Some(labels.into_iter().map(Some).collect());
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Option<Vec<Label>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n {
                return Err(Error::Validation(format!(
                    "phenotype length {} does not match {} individuals",
                    l.len(),
                    self.n
                )));
            }
        }
        self.phenotype = labels;
        Ok(self)
    }

    /// Attach an n x c covariate matrix (row per individual).
    pub fn with_covariates(mut self, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != self.n {
            return Err(Error::Validation(format!(
                "{} covariate rows for {} individuals",
                rows.len(),
                self.n
            )));
        }
        let c = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::Validation("ragged covariate matrix".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite covariate value".into()));
        }
        self.covariates = if c == 0 { None } else { Some(rows) };
        Ok(self)
    }

    /// Complete 0/1 response vector; fails if the phenotype is absent or has gaps.
    pub fn response(&self) -> Result<Vec<f64>> {
        let ph = self
            .phenotype
            .as_ref()
            .ok_or_else(|| Error::DegenerateResponse("no phenotype attached".into()))?;
        ph.iter()
            .enumerate()
            .map(|(i, l)| match l {
                Some(v) => Ok(f64::from(*v)),
                None => Err(Error::Validation(format!(
                    "individual {i} has a missing phenotype"
                ))),
            })
            .collect()
    }

    fn raw_column(&self, j: usize) -> &[u8] {
        &self.packed[j * self.bytes_per_snp..(j + 1) * self.bytes_per_snp]
    }

    /// Minor-allele count of individual `i` at SNP `j`.
    pub fn genotype(&self, i: usize, j: usize) -> Option<u8> {
        let b = CODE_TO_B_COUNT[code_at(self.raw_column(j), i) as usize]?;
        Some(match self.snps[j].minor_allele {
            MinorAllele::B => b,
            MinorAllele::A => 2 - b,
        })
    }

    /// Minor-allele counts for SNP `j`, `None` for missing.
    pub fn counts(&self, j: usize) -> Vec<Option<u8>> {
        (0..self.n).map(|i| self.genotype(i, j)).collect()
    }

    /// Mean of the non-missing minor-allele counts; used for imputation.
    pub fn imputation_mean(&self, j: usize) -> f64 {
        2.0 * self.snps[j].minor_allele_freq
    }

    /// Write the mean-imputed column `j` into `out` (length n).
    pub(crate) fn fill_column(&self, j: usize, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.n);
        if self.n > 0 && self.snps[j].missing_rate >= 1.0 {
            return Err(Error::Validation(format!(
                "SNP {} has no observed genotypes to impute from",
                self.snps[j].snp_id
            )));
        }
        let mean = self.imputation_mean(j);
        let table: [f64; 4] = match self.snps[j].minor_allele {
            MinorAllele::B => [0.0, mean, 1.0, 2.0],
            MinorAllele::A => [2.0, mean, 1.0, 0.0],
        };
        let col = self.raw_column(j);
        for (chunk_idx, chunk) in out.chunks_mut(4).enumerate() {
            let byte = col[chunk_idx];
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = table[((byte >> (2 * k)) & 0b11) as usize];
            }
        }
        Ok(())
    }

    /// Length-n vector of minor-allele counts with missing values replaced
    /// by the SNP's non-missing mean.
    pub fn genotype_column(&self, j: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.fill_column(j, &mut out)?;
        Ok(out)
    }

    /// Pearson correlation of the mean-imputed columns `j` and `k`.
    /// `None` when either column is constant (correlation undefined).
    pub fn correlation(&self, j: usize, k: usize) -> Option<f64> {
        let a = self.genotype_column(j).ok()?;
        let b = self.genotype_column(k).ok()?;
        pearson(&a, &b)
    }

    /// Restrict to the listed SNPs, preserving their relative order.
    pub fn select_snps(&self, keep: &[usize]) -> Self {
        let bps = self.bytes_per_snp;
        let mut packed = Vec::with_capacity(keep.len() * bps);
        let mut snps = Vec::with_capacity(keep.len());
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for (map_index, &j) in sorted.iter().enumerate() {
            packed.extend_from_slice(self.raw_column(j));
            let mut meta = self.snps[j].clone();
            meta.map_index = map_index;
            snps.push(meta);
        }
        GenotypeMatrix {
            n: self.n,
            bytes_per_snp: bps,
            packed,
            snps,
            samples: self.samples.clone(),
            phenotype: self.phenotype.clone(),
            covariates: self.covariates.clone(),
        }
    }

    /// Restrict to (and reorder by) the listed individuals. SNP statistics
    /// are recomputed on the new sample.
    pub fn select_individuals(&self, rows: &[usize]) -> Self {
        let n = rows.len();
        let bps = bytes_per_snp(n);
        let mut packed = vec![0u8; bps * self.snps.len()];
        for j in 0..self.snps.len() {
            let src = self.raw_column(j);
            let dst = &mut packed[j * bps..(j + 1) * bps];
            for (new_i, &old_i) in rows.iter().enumerate() {
                dst[new_i >> 2] |= code_at(src, old_i) << ((new_i & 3) * 2);
            }
        }
        let snps = self
            .snps
            .iter()
            .enumerate()
            .map(|(j, meta)| {
                let (minor_allele, maf, missing_rate) =
                    column_stats(&packed[j * bps..(j + 1) * bps], n);
                SnpMeta {
                    minor_allele,
                    minor_allele_freq: maf,
                    missing_rate,
                    ..meta.clone()
                }
            })
            .collect();
        GenotypeMatrix {
            n,
            bytes_per_snp: bps,
            packed,
            snps,
            samples: rows.iter().map(|&i| self.samples[i].clone()).collect(),
            phenotype: self
                .phenotype
                .as_ref()
                .map(|p| rows.iter().map(|&i| p[i]).collect()),
            covariates: self
                .covariates
                .as_ref()
                .map(|c| rows.iter().map(|&i| c[i].clone()).collect()),
        }
    }

    /// Drop individuals whose phenotype is unknown.
    pub fn drop_missing_phenotype(&self) -> Self {
        match &self.phenotype {
            Some(ph) if ph.iter().any(Option::is_none) => {
                let rows: Vec<usize> = (0..self.n).filter(|&i| ph[i].is_some()).collect();
                self.select_individuals(&rows)
            }
            _ => self.clone(),
        }
    }

    /// Reverse the allele orientation of SNP `j` in the raw payload, so each
    /// raw count c becomes 2 - c. Minor-allele counts are unchanged by this.
    pub fn flip_raw_alleles(&self, j: usize) -> Self {
        let mut out = self.clone();
        let bps = self.bytes_per_snp;
        let col = &mut out.packed[j * bps..(j + 1) * bps];
        for i in 0..self.n {
            let code = code_at(col, i);
            let flipped = match code {
                0b00 => 0b11,
                0b11 => 0b00,
                c => c,
            };
            col[i >> 2] &= !(0b11 << ((i & 3) * 2));
            col[i >> 2] |= flipped << ((i & 3) * 2);
        }
        let meta = &mut out.snps[j];
        std::mem::swap(&mut meta.allele_a, &mut meta.allele_b);
        let (minor_allele, maf, missing_rate) = column_stats(col, self.n);
        meta.minor_allele = minor_allele;
        meta.minor_allele_freq = maf;
        meta.missing_rate = missing_rate;
        out
    }
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let floor = 1e-12 * n;
    if saa <= floor || sbb <= floor {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}
