//! Streaming covariance estimates and their whitening transforms.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, CcaError, Result};
use crate::spectral::{inv_sqrt_psd, sym_eig};

const SINGULAR_HINT: &str = " (use a positive reg_lambda or a larger auxiliary sample)";

/// Inverse square root of a covariance whose trailing eigenvalues are
/// replaced by one constant:
/// `W = V_K diag(l^{-1/2}) V_K^T + c^{-1/2} (I - V_K V_K^T)`.
#[derive(Debug, Clone)]
pub struct CappedWhitener {
    pub top_vectors: DMatrix<f64>,
    pub top_eigs: DVector<f64>,
    pub tail_constant: f64,
}

impl CappedWhitener {
    pub fn dim(&self) -> usize {
        self.top_vectors.nrows()
    }

    /// `W v` in `O(dim * K)`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.top_vectors.tr_mul(v);
        let tail_scale = 1.0 / self.tail_constant.sqrt();
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.top_eigs.iter())
                .map(|(c, l)| c * (1.0 / l.sqrt() - tail_scale)),
        );
        v * tail_scale + &self.top_vectors * scaled
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let tail_scale = 1.0 / self.tail_constant.sqrt();
        let mut scaled = self.top_vectors.clone();
        for (j, l) in self.top_eigs.iter().enumerate() {
            scaled.column_mut(j).scale_mut(1.0 / l.sqrt() - tail_scale);
        }
        DMatrix::identity(n, n) * tail_scale + scaled * self.top_vectors.transpose()
    }
}

/// A whitening transform, either dense or rank-capped.
#[derive(Debug, Clone)]
pub enum Whitener {
    Full(DMatrix<f64>),
    Capped(CappedWhitener),
}

impl Whitener {
    pub fn dim(&self) -> usize {
        match self {
            Whitener::Full(w) => w.nrows(),
            Whitener::Capped(c) => c.dim(),
        }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Whitener::Full(w) => w * v,
            Whitener::Capped(c) => c.apply(v),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Whitener::Full(w) => w.clone(),
            Whitener::Capped(c) => c.to_dense(),
        }
    }
}

/// Running second-moment estimate of one view plus its cached whitener.
///
/// `cov` is the plain average of every outer product seen so far; the ridge
/// `reg_lambda * I` is added only when factorizing.
#[derive(Debug, Clone)]
pub struct WhitenerState {
    dim: usize,
    count: usize,
    cov: DMatrix<f64>,
    reg_lambda: f64,
    cap_rank: Option<usize>,
    cached: Option<Whitener>,
    stale: bool,
}

impl WhitenerState {
    /// Seed the estimate with the auxiliary sample: `cov = (1/tau) sum x x^T`.
    pub fn init_from_aux<'a, I>(aux: I, reg_lambda: f64, cap_rank: Option<usize>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a DVector<f64>>,
    {
        if !(reg_lambda >= 0.0) {
            return Err(CcaError::input(format!(
                "reg_lambda must be >= 0, got {reg_lambda}"
            )));
        }
        let mut iter = aux.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| CcaError::input("auxiliary sample is empty"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(CcaError::input("samples must have positive dimension"));
        }
        if let Some(k) = cap_rank {
            if k == 0 {
                return Err(CcaError::input("cap_rank must be positive"));
            }
        }
        let mut sum = first * first.transpose();
        let mut count = 1usize;
        for x in iter {
            check_dim("auxiliary sample", dim, x.len())?;
            sum.ger(1.0, x, x, 1.0);
            count += 1;
        }
        sum /= count as f64;
        Ok(WhitenerState {
            dim,
            count,
            cov: sum,
            reg_lambda,
            cap_rank,
            cached: None,
            stale: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn reg_lambda(&self) -> f64 {
        self.reg_lambda
    }

    pub fn cap_rank(&self) -> Option<usize> {
        self.cap_rank
    }

    /// `cov + reg_lambda I`.
    pub fn regularized_cov(&self) -> DMatrix<f64> {
        let mut c = self.cov.clone();
        for i in 0..self.dim {
            c[(i, i)] += self.reg_lambda;
        }
        c
    }

    /// `cov <- (n/(n+1)) cov + (1/(n+1)) x x^T`.
    pub fn update(&mut self, x: &DVector<f64>) -> Result<()> {
        check_dim("streamed sample", self.dim, x.len())?;
        let n = self.count as f64;
        self.cov.ger(1.0 / (n + 1.0), x, x, n / (n + 1.0));
        self.count += 1;
        self.stale = true;
        Ok(())
    }

    /// `(cov + reg_lambda I)^{-1/2}`.
    pub fn whitening_matrix(&self) -> Result<DMatrix<f64>> {
        inv_sqrt_psd(&self.cov, self.reg_lambda).map_err(with_hint)
    }

    /// Whitener keeping the top `k` eigenpairs of `cov + reg_lambda I` and
    /// flattening the rest to `max(reg_lambda, mean of discarded eigenvalues)`.
    pub fn capped_whitening_matrix(&self, k: usize) -> Result<CappedWhitener> {
        if k == 0 || k > self.dim {
            return Err(CcaError::input(format!(
                "cap rank {k} outside 1..={}",
                self.dim
            )));
        }
        let eig = sym_eig(&self.regularized_cov())?;
        let top_eigs = eig.eigenvalues.rows(0, k).into_owned();
        let lmin = top_eigs[k - 1];
        if !(lmin > 0.0) {
            return Err(CcaError::Singular {
                eigenvalue: lmin,
                hint: SINGULAR_HINT,
            });
        }
        let tail_constant = if k < self.dim {
            let residual: f64 = eig.eigenvalues.rows(k, self.dim - k).sum();
            self.reg_lambda.max(residual / (self.dim - k) as f64)
        } else {
            lmin
        };
        if !(tail_constant > 0.0) {
            return Err(CcaError::Singular {
                eigenvalue: tail_constant,
                hint: SINGULAR_HINT,
            });
        }
        Ok(CappedWhitener {
            top_vectors: eig.eigenvectors.columns(0, k).into_owned(),
            top_eigs,
            tail_constant,
        })
    }

    /// Recompute the cached whitener from the current estimate.
    pub fn refresh(&mut self) -> Result<&Whitener> {
        let w = match self.cap_rank {
            Some(k) if k < self.dim => Whitener::Capped(self.capped_whitening_matrix(k)?),
            _ => Whitener::Full(self.whitening_matrix()?),
        };
        self.stale = false;
        Ok(self.cached.insert(w))
    }

    /// The cached whitener, recomputed first if the estimate moved.
    pub fn current(&mut self) -> Result<&Whitener> {
        if self.stale || self.cached.is_none() {
            return self.refresh();
        }
        Ok(self.cached.as_ref().expect("checked above"))
    }

    /// The cached whitener as last computed, even if stale.
    pub fn cached(&self) -> Option<&Whitener> {
        self.cached.as_ref()
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }
}

fn with_hint(e: CcaError) -> CcaError {
    match e {
        CcaError::Singular { eigenvalue, .. } => CcaError::Singular {
            eigenvalue,
            hint: SINGULAR_HINT,
        },
        other => other,
    }
}

/// Auxiliary sample size guaranteeing (with probability `1 - delta`) that
/// both empirical covariances keep their smallest eigenvalue above half the
/// population one for every iteration.
pub fn min_aux_size(
    b: f64,
    r_x: f64,
    r_y: f64,
    d_x: usize,
    d_y: usize,
    delta: f64,
) -> Result<usize> {
    if !(b > 0.0 && r_x > 0.0 && r_y > 0.0) || d_x == 0 || d_y == 0 {
        return Err(CcaError::input(
            "B, r_x, r_y, d_x, d_y must all be positive",
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CcaError::input(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let rate = |r: f64| 3.0 * r * r / (6.0 * b * b + b * r);
    let log_inv = (1.0 / (1.0 - delta)).ln();
    let terms = |c: f64, d: usize| {
        let d = d as f64;
        [(2.0 * d / log_inv).ln() / c - 1.0, (2.0 * d).ln() / c]
    };
    let mut best = f64::NEG_INFINITY;
    for t in terms(rate(r_x), d_x)
        .into_iter()
        .chain(terms(rate(r_y), d_y))
    {
        best = best.max(t);
    }
    if !best.is_finite() {
        return Err(CcaError::Numerical(format!(
            "auxiliary size evaluated to {best}"
        )));
    }
    Ok(best.ceil().max(1.0) as usize)
}
