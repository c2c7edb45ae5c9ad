//! Flat `key=value` scenario files.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    GlobalNull,
    ComplexTrait,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::GlobalNull => "global_null",
            ScenarioKind::ComplexTrait => "complex_trait",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global_null" => Ok(ScenarioKind::GlobalNull),
            "complex_trait" => Ok(ScenarioKind::ComplexTrait),
            other => Err(Error::Format(format!("unknown scenario kind `{other}`"))),
        }
    }
}

/// A simulation replicate: causal SNPs (indices into the full, pre-removal
/// matrix), their effects, and the seed schedule that regenerates it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub replicate_id: u64,
    pub causal_snps: Vec<usize>,
    pub effects: Vec<f64>,
    pub intercept: f64,
    pub removed_causal: Vec<usize>,
    pub effect_low: f64,
    pub effect_high: f64,
    pub maf_min: f64,
    pub rho_max: f64,
}

impl Scenario {
    pub fn global_null(seed: u64, replicate_id: u64) -> Self {
        Scenario {
            kind: ScenarioKind::GlobalNull,
            seed,
            replicate_id,
            causal_snps: Vec::new(),
            effects: Vec::new(),
            intercept: 0.0,
            removed_causal: Vec::new(),
            effect_low: 0.0,
            effect_high: 0.0,
            maf_min: 0.0,
            rho_max: 1.0,
        }
    }

    pub fn k(&self) -> usize {
        self.causal_snps.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.effects.len() != self.causal_snps.len() {
            return Err(Error::Validation(format!(
                "{} effects for {} causal SNPs",
                self.effects.len(),
                self.causal_snps.len()
            )));
        }
        if let Some(r) = self
            .removed_causal
            .iter()
            .find(|r| !self.causal_snps.contains(r))
        {
            return Err(Error::Validation(format!(
                "removed SNP {r} is not among the causal SNPs"
            )));
        }
        if self.kind == ScenarioKind::GlobalNull && !self.causal_snps.is_empty() {
            return Err(Error::Validation("global null scenario lists causal SNPs".into()));
        }
        if !self.intercept.is_finite() || self.effects.iter().any(|b| !b.is_finite()) {
            return Err(Error::Validation("non-finite effect".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut s = String::from("# simulation scenario\n");
        let _ = writeln!(s, "kind={}", self.kind.as_str());
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "replicate_id={}", self.replicate_id);
        let _ = writeln!(s, "k={}", self.k());
        let _ = writeln!(s, "effect_low={}", self.effect_low);
        let _ = writeln!(s, "effect_high={}", self.effect_high);
        let _ = writeln!(s, "maf_min={}", self.maf_min);
        let _ = writeln!(s, "rho_max={}", self.rho_max);
        let _ = writeln!(s, "intercept={}", self.intercept);
        let _ = writeln!(s, "causal={}", join(&self.causal_snps));
        let _ = writeln!(s, "effects={}", join(&self.effects));
        let _ = writeln!(s, "removed={}", join(&self.removed_causal));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<T>()
                        .map_err(|_| Error::Format(format!("bad entry `{t}` in `{key}`")))
                })
                .collect()
        }
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| Error::Format(format!("bad value `{v}` for `{key}`")))
        }

        let mut kind = None;
        let mut seed = None;
        let mut replicate_id = None;
        let mut k: Option<usize> = None;
        let mut effect_low = 0.0;
        let mut effect_high = 0.0;
        let mut maf_min = 0.0;
        let mut rho_max = 1.0;
        let mut intercept = 0.0;
        let mut causal = Vec::new();
        let mut effects = Vec::new();
        let mut removed = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("scenario line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kind" => kind = Some(value.parse::<ScenarioKind>()?),
                "seed" => seed = Some(num(key, value)?),
                "replicate_id" => replicate_id = Some(num(key, value)?),
                "k" => k = Some(num(key, value)?),
                "effect_low" => effect_low = num(key, value)?,
                "effect_high" => effect_high = num(key, value)?,
                "maf_min" => maf_min = num(key, value)?,
                "rho_max" => rho_max = num(key, value)?,
                "intercept" => intercept = num(key, value)?,
                "causal" => causal = list(key, value)?,
                "effects" => effects = list(key, value)?,
                "removed" => removed = list(key, value)?,
                other => return Err(Error::Format(format!("unknown scenario key `{other}`"))),
            }
        }
        let missing = |key: &str| Error::Format(format!("scenario is missing `{key}`"));
        let scenario = Scenario {
            kind: kind.ok_or_else(|| missing("kind"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            replicate_id: replicate_id.ok_or_else(|| missing("replicate_id"))?,
            causal_snps: causal,
            effects,
            intercept,
            removed_causal: removed,
            effect_low,
            effect_high,
            maf_min,
            rho_max,
        };
        if let Some(k) = k {
            if k != scenario.causal_snps.len() {
                return Err(Error::Format(format!(
                    "k = {k} but {} causal SNPs listed",
                    scenario.causal_snps.len()
                )));
            }
        }
        scenario.validate()?;
        Ok(scenario)
    }
}
