//! Logistic regression with Firth's Jeffreys-prior penalty.
//!
//! The penalized log-likelihood is `l(theta) + 0.5 * log|X'WX|` with
//! `W = diag(pi_i (1 - pi_i))`. It is maximized by Newton iterations on the
//! modified score `X'(y - pi + h (1/2 - pi))`, where `h` holds the diagonal
//! of the weighted hat matrix, using `X'WX` as the curvature and halving
//! the step whenever the penalized log-likelihood does not increase.

use crate::error::{Error, Result};
use crate::genotype::GenotypeMatrix;
use crate::linalg::Cholesky;
use crate::stats::{log1p_exp, logistic};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Largest absolute Newton step in any coordinate.
const MAX_STEP: f64 = 5.0;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Bound on the largest absolute modified-score component.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Which columns enter the logistic model. The intercept is always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    pub snp_indices: Vec<usize>,
    pub include_covariates: bool,
}

impl DesignSpec {
    pub fn null() -> Self {
        DesignSpec {
            snp_indices: Vec::new(),
            include_covariates: true,
        }
    }

    pub fn with_snps(snp_indices: Vec<usize>) -> Self {
        DesignSpec {
            snp_indices,
            include_covariates: true,
        }
    }

    /// Number of leading non-SNP columns (intercept plus covariates).
    pub fn n_fixed(&self, m: &GenotypeMatrix) -> usize {
        1 + if self.include_covariates {
            m.n_covariates()
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Intercept, then covariates (if any), then SNP effects in design order.
    pub coefficients: Vec<f64>,
    pub penalized_loglik: f64,
    pub unpenalized_loglik: f64,
    /// log |X'WX| at the returned coefficients.
    pub fisher_logdet: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Row-major n x q design matrix with column labels.
#[derive(Debug, Clone)]
pub struct Design {
    n: usize,
    q: usize,
    x: Vec<f64>,
    names: Vec<String>,
}

impl Design {
    /// Assemble from columns; the first is expected to be the intercept.
    pub fn from_columns(columns: &[Vec<f64>], names: Vec<String>) -> Self {
        let q = columns.len();
        let n = columns.first().map(Vec::len).unwrap_or(0);
        let mut x = vec![0.0; n * q];
        for (r, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                x[i * q + r] = *v;
            }
        }
        Design { n, q, x, names }
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.q..(i + 1) * self.q]
    }

    pub fn column_name(&self, r: usize) -> &str {
        &self.names[r]
    }
}

/// Build the design for `spec`: intercept, covariates, then mean-imputed SNPs.
pub fn build_design(m: &GenotypeMatrix, spec: &DesignSpec) -> Result<Design> {
    let n = m.n_individuals();
    let n_cov = if spec.include_covariates {
        m.n_covariates()
    } else {
        0
    };
    let q = 1 + n_cov + spec.snp_indices.len();
    let mut x = vec![0.0; n * q];
    let mut names = Vec::with_capacity(q);
    names.push("intercept".to_string());
    for i in 0..n {
        x[i * q] = 1.0;
    }
    if let Some(cov) = m.covariates().filter(|_| n_cov > 0) {
        for c in 0..n_cov {
            names.push(format!("covariate {}", c + 1));
        }
        for (i, row) in cov.iter().enumerate() {
            x[i * q + 1..i * q + 1 + n_cov].copy_from_slice(row);
        }
    }
    let mut col = vec![0.0; n];
    for (r, &j) in spec.snp_indices.iter().enumerate() {
        if j >= m.n_snps() {
            return Err(Error::Argument(format!("SNP index {j} out of range")));
        }
        m.fill_column(j, &mut col)?;
        let off = 1 + n_cov + r;
        for (i, v) in col.iter().enumerate() {
            x[i * q + off] = *v;
        }
        names.push(m.snp(j).snp_id.clone());
    }
    Ok(Design { n, q, x, names })
}

/// Quantities at one parameter value.
struct Point {
    theta: Vec<f64>,
    pi: Vec<f64>,
    w: Vec<f64>,
    chol: Cholesky,
    loglik: f64,
    logdet: f64,
}

impl Point {
    fn penalized(&self) -> f64 {
        self.loglik + 0.5 * self.logdet
    }
}

fn evaluate(d: &Design, y: &[f64], theta: Vec<f64>) -> std::result::Result<Point, usize> {
    let q = d.q;
    let mut pi = Vec::with_capacity(d.n);
    let mut w = Vec::with_capacity(d.n);
    let mut loglik = 0.0;
    let mut a = vec![0.0; q * q];
    for i in 0..d.n {
        let row = d.row(i);
        let eta: f64 = row.iter().zip(&theta).map(|(x, t)| x * t).sum();
        let p = logistic(eta);
        loglik += y[i] * eta - log1p_exp(eta);
        let wi = p * (1.0 - p);
        for r in 0..q {
            let xr = wi * row[r];
            if xr == 0.0 {
                continue;
            }
            for s in 0..=r {
                a[r * q + s] += xr * row[s];
            }
        }
        pi.push(p);
        w.push(wi);
    }
    for r in 0..q {
        for s in 0..r {
            a[s * q + r] = a[r * q + s];
        }
    }
    let chol = Cholesky::factor(&a, q)?;
    let logdet = chol.log_det();
    Ok(Point {
        theta,
        pi,
        w,
        chol,
        loglik,
        logdet,
    })
}

/// Firth-modified score at `pt`.
fn modified_score(d: &Design, y: &[f64], pt: &Point) -> Vec<f64> {
    let q = d.q;
    let mut u = vec![0.0; q];
    let mut z = vec![0.0; q];
    for i in 0..d.n {
        let row = d.row(i);
        z.copy_from_slice(row);
        pt.chol.forward(&mut z);
        let h = pt.w[i] * z.iter().map(|v| v * v).sum::<f64>();
        let resid = y[i] - pt.pi[i] + h * (0.5 - pt.pi[i]);
        for r in 0..q {
            u[r] += row[r] * resid;
        }
    }
    u
}

fn check_response(y: &[f64]) -> Result<()> {
    let cases = y.iter().filter(|&&v| v == 1.0).count();
    if cases == 0 || cases == y.len() {
        return Err(Error::DegenerateResponse(format!(
            "{} cases among {} individuals; both classes are required",
            cases,
            y.len()
        )));
    }
    Ok(())
}

/// Fit a prepared design. `init` warm-starts the iterations when its
/// length matches the number of columns.
pub fn fit_design(
    d: &Design,
    y: &[f64],
    init: Option<&[f64]>,
    opts: FitOptions,
) -> Result<FitResult> {
    if y.len() != d.n {
        return Err(Error::Argument(format!(
            "response has {} entries for {} design rows",
            y.len(),
            d.n
        )));
    }
    check_response(y)?;
    if d.n < d.q {
        return Err(Error::RankDeficient {
            column: d.names[d.n.min(d.q - 1)].clone(),
        });
    }
    let start = match init {
        Some(t) if t.len() == d.q && t.iter().all(|v| v.is_finite()) => t.to_vec(),
        _ => vec![0.0; d.q],
    };
    let rank_err = |col: usize| Error::RankDeficient {
        column: d.names[col].clone(),
    };
    let mut pt = match evaluate(d, y, start) {
        Ok(pt) => pt,
        // A warm start can sit where weights underflow; retry from zero
        // before blaming the design.
        Err(_) if init.is_some() => evaluate(d, y, vec![0.0; d.q]).map_err(rank_err)?,
        Err(col) => return Err(rank_err(col)),
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let u = modified_score(d, y, &pt);
        let max_u = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if max_u <= opts.tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut delta = u;
        pt.chol.solve(&mut delta);
        let max_delta = delta.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if max_delta > MAX_STEP {
            let s = MAX_STEP / max_delta;
            delta.iter_mut().for_each(|v| *v *= s);
        }

        let current = pt.penalized();
        let slack = 1e-12 * (1.0 + current.abs());
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..MAX_HALVINGS {
            let theta: Vec<f64> = pt
                .theta
                .iter()
                .zip(&delta)
                .map(|(t, s)| t + scale * s)
                .collect();
            if let Ok(next) = evaluate(d, y, theta) {
                if next.penalized() >= current - slack {
                    accepted = Some(next);
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some(next) => pt = next,
            None => break,
        }
    }

    Ok(FitResult {
        penalized_loglik: pt.penalized(),
        unpenalized_loglik: pt.loglik,
        fisher_logdet: pt.logdet,
        coefficients: pt.theta,
        iterations,
        converged,
    })
}

/// Firth-penalized fit of the model described by `spec`.
pub fn fit_firth(
    m: &GenotypeMatrix,
    spec: &DesignSpec,
    tolerance: f64,
    max_iter: usize,
) -> Result<FitResult> {
    fit_firth_with(m, spec, None, FitOptions { tolerance, max_iter })
}

pub fn fit_firth_with(
    m: &GenotypeMatrix,
    spec: &DesignSpec,
    init: Option<&[f64]>,
    opts: FitOptions,
) -> Result<FitResult> {
    let y = m.response()?;
    check_response(&y)?;
    let d = build_design(m, spec)?;
    fit_design(&d, &y, init, opts)
}

/// Penalized log-likelihood of the model without SNPs.
pub fn null_model_loglik(m: &GenotypeMatrix) -> Result<f64> {
    fit_firth(m, &DesignSpec::null(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)
        .map(|f| f.penalized_loglik)
}

/// Fitted quantities reused across many score tests against one model.
pub struct ScoreContext {
    design: Design,
    resid: Vec<f64>,
    w: Vec<f64>,
    chol: Cholesky,
}

impl ScoreContext {
    pub fn new(m: &GenotypeMatrix, fitted: &FitResult, spec: &DesignSpec) -> Result<Self> {
        let design = build_design(m, spec)?;
        if fitted.coefficients.len() != design.q {
            return Err(Error::Argument(format!(
                "fit has {} coefficients but design has {} columns",
                fitted.coefficients.len(),
                design.q
            )));
        }
        let y = m.response()?;
        let probs: Vec<f64> = (0..design.n)
            .map(|i| {
                let eta: f64 = design
                    .row(i)
                    .iter()
                    .zip(&fitted.coefficients)
                    .map(|(x, t)| x * t)
                    .sum();
                logistic(eta)
            })
            .collect();
        Self::from_probabilities(design, &y, &probs)
    }

    /// Context at arbitrary fitted probabilities (for example an
    /// unpenalized fit).
    pub fn from_probabilities(design: Design, y: &[f64], probs: &[f64]) -> Result<Self> {
        let q = design.q;
        let mut a = vec![0.0; q * q];
        let mut w = Vec::with_capacity(design.n);
        let mut resid = Vec::with_capacity(design.n);
        for i in 0..design.n {
            let wi = probs[i] * (1.0 - probs[i]);
            let row = design.row(i);
            for r in 0..q {
                for s in 0..=r {
                    a[r * q + s] += wi * row[r] * row[s];
                }
            }
            w.push(wi);
            resid.push(y[i] - probs[i]);
        }
        for r in 0..q {
            for s in 0..r {
                a[s * q + r] = a[r * q + s];
            }
        }
        let chol = Cholesky::factor(&a, q).map_err(|c| Error::RankDeficient {
            column: design.names[c].clone(),
        })?;
        Ok(ScoreContext {
            design,
            resid,
            w,
            chol,
        })
    }

    /// 1-df score statistic `U^2 / V` for adding column `x`, where the
    /// candidate is first W-orthogonalized against the design. `None` when
    /// the residual variance vanishes (constant or collinear candidate).
    pub fn statistic(&self, x: &[f64]) -> Option<f64> {
        let q = self.design.q;
        let mut b = vec![0.0; q];
        let mut xwx = 0.0;
        for i in 0..self.design.n {
            let wx = self.w[i] * x[i];
            xwx += wx * x[i];
            for (bk, r) in b.iter_mut().zip(self.design.row(i)) {
                *bk += wx * r;
            }
        }
        let mut c = b.clone();
        self.chol.solve(&mut c);
        let (mut u, mut v) = (0.0, 0.0);
        for i in 0..self.design.n {
            let proj: f64 = self.design.row(i).iter().zip(&c).map(|(r, ck)| r * ck).sum();
            let resid_x = x[i] - proj;
            u += resid_x * self.resid[i];
            v += self.w[i] * resid_x * resid_x;
        }
        if !(v > 1e-9 * xwx) || !v.is_finite() {
            return None;
        }
        Some(u * u / v)
    }
}

/// Score statistic for adding `candidate` to the fitted model.
pub fn score_test(
    m: &GenotypeMatrix,
    fitted: &FitResult,
    spec: &DesignSpec,
    candidate: usize,
) -> Result<Option<f64>> {
    if spec.snp_indices.contains(&candidate) {
        return Err(Error::Argument(format!(
            "candidate SNP {candidate} is already in the design"
        )));
    }
    let ctx = ScoreContext::new(m, fitted, spec)?;
    let x = match m.genotype_column(candidate) {
        Ok(x) => x,
        Err(_) => return Ok(None),
    };
    Ok(ctx.statistic(&x))
}
