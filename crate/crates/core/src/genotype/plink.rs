//! PLINK 1 binary fileset (.bed/.bim/.fam) reading and writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{bytes_per_snp, GenotypeMatrix, Label, SampleMeta};
use crate::error::{Error, Result};

pub const BED_MAGIC: [u8; 2] = [0x6C, 0x1B];
pub const BED_MODE_SNP_MAJOR: u8 = 0x01;

/// One row of a .bim file.
#[derive(Debug, Clone, PartialEq)]
pub struct BimRecord {
    pub chromosome: u8,
    pub snp_id: String,
    pub cm: f64,
    pub position_bp: u64,
    pub allele_1: String,
    pub allele_2: String,
}

impl BimRecord {
    pub(crate) fn check_biallelic(&self) -> Result<()> {
        let bad = |a: &str| a.is_empty() || a.contains(',');
        if bad(&self.allele_1) || bad(&self.allele_2) {
            return Err(Error::Validation(format!(
                "SNP {} is not biallelic ({} / {})",
                self.snp_id, self.allele_1, self.allele_2
            )));
        }
        if self.allele_1 == self.allele_2 && self.allele_1 != "0" {
            return Err(Error::Validation(format!(
                "SNP {} lists the same allele twice ({})",
                self.snp_id, self.allele_1
            )));
        }
        Ok(())
    }
}

/// One row of a .fam file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamRecord {
    pub sample: SampleMeta,
    pub phenotype: Label,
}

fn parse_chromosome(tok: &str) -> Option<u8> {
    let t = tok
        .strip_prefix("chr")
        .or_else(|| tok.strip_prefix("CHR"))
        .unwrap_or(tok);
    match t {
        "X" | "x" => Some(23),
        "Y" | "y" => Some(24),
        "XY" | "xy" => Some(25),
        "MT" | "M" | "mt" => Some(26),
        _ => t.parse::<u8>().ok().filter(|c| (1..=26).contains(c)),
    }
}

/// Parse .bim text: chrom, id, cM, bp, allele 1, allele 2.
pub fn parse_bim(text: &str) -> Result<Vec<BimRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Format(format!(
                "bim line {}: expected 6 columns, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let chromosome = parse_chromosome(fields[0]).ok_or_else(|| {
            Error::Format(format!(
                "bim line {}: unrecognized chromosome `{}`",
                lineno + 1,
                fields[0]
            ))
        })?;
        let cm = fields[2].parse::<f64>().ok().filter(|v| v.is_finite());
        let cm = cm.ok_or_else(|| {
            Error::Format(format!("bim line {}: bad cM value `{}`", lineno + 1, fields[2]))
        })?;
        let position_bp = fields[3].parse::<u64>().map_err(|_| {
            Error::Format(format!(
                "bim line {}: bad base-pair position `{}`",
                lineno + 1,
                fields[3]
            ))
        })?;
        let rec = BimRecord {
            chromosome,
            snp_id: fields[1].to_string(),
            cm,
            position_bp,
            allele_1: fields[4].to_string(),
            allele_2: fields[5].to_string(),
        };
        rec.check_biallelic()?;
        out.push(rec);
    }
    Ok(out)
}

/// Phenotype column coding: 2 case, 1 control, anything else unknown.
pub fn parse_phenotype(tok: &str) -> Label {
    match tok {
        "2" => Some(1),
        "1" => Some(0),
        _ => None,
    }
}

/// Parse .fam text: fid, iid, father, mother, sex, phenotype.
pub fn parse_fam(text: &str) -> Result<Vec<FamRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::Format(format!(
                "fam line {}: expected 6 columns, found {}",
                lineno + 1,
                f.len()
            )));
        }
        out.push(FamRecord {
            sample: SampleMeta {
                fid: f[0].into(),
                iid: f[1].into(),
                father: f[2].into(),
                mother: f[3].into(),
                sex: f[4].into(),
            },
            phenotype: parse_phenotype(f[5]),
        });
    }
    Ok(out)
}

/// Validate a .bed image for `n` individuals and `p` SNPs and return the
/// genotype payload that follows the 3-byte header.
pub fn decode_bed(bytes: &[u8], n: usize, p: usize) -> Result<&[u8]> {
    if bytes.len() < 3 || bytes[..2] != BED_MAGIC {
        return Err(Error::Format("not a PLINK .bed file (bad magic bytes)".into()));
    }
    if bytes[2] != BED_MODE_SNP_MAJOR {
        return Err(Error::Format(format!(
            "unsupported .bed mode byte {:#04x}; only SNP-major (0x01) is read",
            bytes[2]
        )));
    }
    let expected = bytes_per_snp(n)
        .checked_mul(p)
        .and_then(|v| v.checked_add(3))
        .ok_or_else(|| Error::Format("declared dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Size {
            expected: expected as u64,
            found: bytes.len() as u64,
        });
    }
    Ok(&bytes[3..])
}

/// Prefix a payload with the SNP-major .bed header.
pub fn encode_bed(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 3);
    out.extend_from_slice(&BED_MAGIC);
    out.push(BED_MODE_SNP_MAJOR);
    out.extend_from_slice(payload);
    out
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_plink(bed_path: &Path, bim_path: &Path, fam_path: &Path) -> Result<GenotypeMatrix> {
    let bim = parse_bim(&read_text(bim_path)?)?;
    let fam = parse_fam(&read_text(fam_path)?)?;
    let bytes = fs::read(bed_path).map_err(|e| Error::io(bed_path, e))?;
    let payload = decode_bed(&bytes, fam.len(), bim.len())?.to_vec();

    let any_label = fam.iter().any(|r| r.phenotype.is_some());
    let (samples, labels): (Vec<_>, Vec<_>) =
        fam.into_iter().map(|r| (r.sample, r.phenotype)).unzip();
    GenotypeMatrix::from_raw(bim, samples, any_label.then_some(labels), payload)
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Load `<prefix>.bed`, `<prefix>.bim`, `<prefix>.fam`.
pub fn load_plink_prefix(prefix: &Path) -> Result<GenotypeMatrix> {
    load_plink(
        &with_ext(prefix, "bed"),
        &with_ext(prefix, "bim"),
        &with_ext(prefix, "fam"),
    )
}

fn chromosome_label(c: u8) -> String {
    match c {
        23 => "X".into(),
        24 => "Y".into(),
        25 => "XY".into(),
        26 => "MT".into(),
        c => c.to_string(),
    }
}

pub(crate) fn bim_text(m: &GenotypeMatrix) -> String {
    let mut s = String::new();
    for snp in m.snps() {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            chromosome_label(snp.chromosome),
            snp.snp_id,
            snp.cm,
            snp.position_bp,
            snp.allele_a,
            snp.allele_b
        );
    }
    s
}

/// .fam text for `m`, with phenotypes written as 2 (case) / 1 (control) / -9.
pub fn fam_text(m: &GenotypeMatrix) -> String {
    let mut s = String::new();
    for (i, sm) in m.samples().iter().enumerate() {
        let ph = match m.phenotype().and_then(|p| p[i]) {
            Some(1) => "2",
            Some(_) => "1",
            None => "-9",
        };
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            sm.fid, sm.iid, sm.father, sm.mother, sm.sex, ph
        );
    }
    s
}

/// Write `<prefix>.bed/.bim/.fam`.
pub fn write_plink(m: &GenotypeMatrix, prefix: &Path) -> Result<()> {
    if m.n_individuals() == 0 || m.n_snps() == 0 {
        return Err(Error::Validation(format!(
            "refusing to write a degenerate {}x{} dataset",
            m.n_individuals(),
            m.n_snps()
        )));
    }
    let write = |ext: &str, data: &[u8]| {
        let path = with_ext(prefix, ext);
        fs::write(&path, data).map_err(|e| Error::io(path, e))
    };
    write("bed", &encode_bed(m.packed_payload()))?;
    write("bim", bim_text(m).as_bytes())?;
    write("fam", fam_text(m).as_bytes())?;
    Ok(())
}
