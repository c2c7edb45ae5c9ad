//! Dense symmetric positive-definite helpers for the small systems that
//! arise in model fitting (dimension = model size + 1).

/// Lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

/// Pivots below this fraction of the original diagonal count as singular.
const PIVOT_TOL: f64 = 1e-10;

impl Cholesky {
    /// Factor the row-major `dim x dim` matrix `a`. On failure returns the
    /// index of the first column found linearly dependent on earlier ones.
    pub fn factor(a: &[f64], dim: usize) -> Result<Self, usize> {
        debug_assert_eq!(a.len(), dim * dim);
        let mut l = vec![0.0; dim * dim];
        for j in 0..dim {
            let ajj = a[j * dim + j];
            let mut d = ajj;
            for k in 0..j {
                d -= l[j * dim + k] * l[j * dim + k];
            }
            if !d.is_finite() || ajj <= 0.0 || d <= PIVOT_TOL * ajj {
                return Err(j);
            }
            let djj = d.sqrt();
            l[j * dim + j] = djj;
            for i in j + 1..dim {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k];
                }
                l[i * dim + j] = s / djj;
            }
        }
        Ok(Cholesky { dim, l })
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.l[i * self.dim + i].ln()).sum::<f64>()
    }

    /// Solve L z = b in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solve L^T z = b in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}
