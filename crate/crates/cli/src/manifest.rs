//! Output-directory bookkeeping: every file read or written is hashed into
//! `manifest.tsv` together with the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gwas_select::{Error, Result};
use sha2::{Digest, Sha256};

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

pub struct RunLog {
    out: PathBuf,
    subcommand: &'static str,
    config: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl RunLog {
    pub fn new(out: &Path, subcommand: &'static str) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        Ok(RunLog {
            out: out.to_path_buf(),
            subcommand,
            config: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        let path = path.into();
        if !self.inputs.contains(&path) {
            self.inputs.push(path);
        }
    }

    pub fn plink_inputs(&mut self, prefix: &Path) {
        for ext in ["bed", "bim", "fam"] {
            self.input(with_ext(prefix, ext));
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    /// Register files written by other code, e.g. a PLINK triple.
    pub fn written(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    /// Write `manifest.tsv`; wall-clock time is the only non-deterministic row.
    pub fn finish(self) -> Result<()> {
        let mut s = String::from("# gwas-select run manifest\nsection\tkey\tvalue\n");
        let _ = writeln!(s, "meta\ttool\tgwas-select");
        let _ = writeln!(s, "meta\tversion\t{}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "meta\tsubcommand\t{}", self.subcommand);
        for (k, v) in &self.config {
            let _ = writeln!(s, "config\t{k}\t{v}");
        }
        for p in &self.inputs {
            let _ = writeln!(s, "input\t{}\t{}", p.display(), sha256_file(p)?);
        }
        for p in &self.outputs {
            let name = p.strip_prefix(&self.out).unwrap_or(p);
            let _ = writeln!(s, "output\t{}\t{}", name.display(), sha256_file(p)?);
        }
        let _ = writeln!(
            s,
            "meta\twall_clock_seconds\t{:.3}",
            self.started.elapsed().as_secs_f64()
        );
        let path = self.out.join("manifest.tsv");
        fs::write(&path, s).map_err(|e| io_err(&path, e))
    }
}

pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
