//! mBIC2 and its linear relaxation mBIC_c.

use std::fmt;

use crate::error::{Error, Result};
use crate::stats::ln_factorial;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    /// `-2 log L + k log(n p^2 / 4) - 2 log(k!)`
    Mbic2,
    /// `-2 log L + k log(n p^2 / c)`
    MbicC,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub kind: CriterionKind,
    pub constant_c: f64,
}

impl Criterion {
    pub fn mbic2() -> Self {
        Criterion {
            kind: CriterionKind::Mbic2,
            constant_c: 4.0,
        }
    }

    pub fn mbic_c(c: f64) -> Self {
        Criterion {
            kind: CriterionKind::MbicC,
            constant_c: c,
        }
    }

    /// The relaxed criterion used in the first two search rounds.
    pub fn mbic60() -> Self {
        Self::mbic_c(60.0)
    }

    /// `log(n p^2 / c)`, checked to be positive.
    fn log_scale(&self, n: usize, p: usize) -> Result<f64> {
        if n == 0 || p == 0 {
            return Err(Error::Argument(format!("n = {n} and p = {p} must be positive")));
        }
        if !(self.constant_c > 0.0) {
            return Err(Error::Argument(format!(
                "criterion constant {} must be positive",
                self.constant_c
            )));
        }
        let v = (n as f64).ln() + 2.0 * (p as f64).ln() - self.constant_c.ln();
        if v <= 0.0 {
            return Err(Error::Argument(format!(
                "n p^2 / c = exp({v}) must exceed 1"
            )));
        }
        Ok(v)
    }

    /// Total penalty for a model with `k` SNPs.
    pub fn penalty(&self, k: usize, n: usize, p: usize) -> Result<f64> {
        let base = k as f64 * self.log_scale(n, p)?;
        Ok(match self.kind {
            CriterionKind::Mbic2 => base - 2.0 * ln_factorial(k),
            CriterionKind::MbicC => base,
        })
    }

    pub fn evaluate(&self, penalized_loglik: f64, k: usize, n: usize, p: usize) -> Result<f64> {
        Ok(-2.0 * penalized_loglik + self.penalty(k, n, p)?)
    }

    /// Cost of growing a model from `k` to `k + 1` SNPs.
    pub fn penalty_increment(&self, k: usize, n: usize, p: usize) -> Result<f64> {
        let base = self.log_scale(n, p)?;
        Ok(match self.kind {
            CriterionKind::Mbic2 => base - 2.0 * ((k + 1) as f64).ln(),
            CriterionKind::MbicC => base,
        })
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CriterionKind::Mbic2 => write!(f, "mBIC2"),
            CriterionKind::MbicC => write!(f, "mBIC_{}", self.constant_c),
        }
    }
}
