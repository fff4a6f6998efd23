//! Objectives, constraint-violation metrics, theory constants and the batch
//! (sample average approximation) baseline.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_dim, CcaError, Result};
use crate::rounding::CcaSolution;
use crate::sample::PairedSample;
use crate::spectral::{inv_sqrt_psd, spectral_norm, svd_thin, sym_eig};
use crate::whitening::min_aux_size;

const RHO_TOL: f64 = 1e-8;

/// Population covariances of a synthetic distribution together with its
/// canonical correlations.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub c_x: DMatrix<f64>,
    pub c_y: DMatrix<f64>,
    pub c_xy: DMatrix<f64>,
    /// Leading singular values of the whitened cross-covariance, descending.
    pub rho: Vec<f64>,
}

impl GroundTruth {
    /// Validates shapes, `rho` in `[0, 1)`, and that `rho` is the spectrum of
    /// the whitened cross-covariance (trailing singular values zero).
    pub fn new(
        c_x: DMatrix<f64>,
        c_y: DMatrix<f64>,
        c_xy: DMatrix<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        check_dim("C_x columns", c_x.nrows(), c_x.ncols())?;
        check_dim("C_y columns", c_y.nrows(), c_y.ncols())?;
        check_dim("C_xy rows", c_x.nrows(), c_xy.nrows())?;
        check_dim("C_xy columns", c_y.nrows(), c_xy.ncols())?;
        if rho.len() > c_x.nrows().min(c_y.nrows()) {
            return Err(CcaError::input("more correlations than min(d_x, d_y)"));
        }
        if rho.iter().any(|&r| !(0.0..1.0).contains(&r)) {
            return Err(CcaError::input("canonical correlations must lie in [0, 1)"));
        }
        if rho.windows(2).any(|w| w[0] < w[1]) {
            return Err(CcaError::input("canonical correlations must be descending"));
        }
        let gt = GroundTruth {
            c_x,
            c_y,
            c_xy,
            rho,
        };
        let sv = svd_thin(&gt.population_t()?)?.singular_values;
        for (i, &s) in sv.iter().enumerate() {
            let want = gt.rho.get(i).copied().unwrap_or(0.0);
            if (s - want).abs() > RHO_TOL {
                return Err(CcaError::input(format!(
                    "singular value {i} of the whitened cross-covariance is {s}, expected {want}"
                )));
            }
        }
        Ok(gt)
    }

    pub fn d_x(&self) -> usize {
        self.c_x.nrows()
    }

    pub fn d_y(&self) -> usize {
        self.c_y.nrows()
    }

    pub fn whitener_x(&self) -> Result<DMatrix<f64>> {
        inv_sqrt_psd(&self.c_x, 0.0)
    }

    pub fn whitener_y(&self) -> Result<DMatrix<f64>> {
        inv_sqrt_psd(&self.c_y, 0.0)
    }

    pub fn population_t(&self) -> Result<DMatrix<f64>> {
        population_t(self)
    }

    /// `(lambda_min(C_x), lambda_min(C_y))`.
    pub fn min_eigenvalues(&self) -> Result<(f64, f64)> {
        Ok((sym_eig(&self.c_x)?.min(), sym_eig(&self.c_y)?.min()))
    }

    /// Sum of the top-`k` canonical correlations.
    pub fn optimum(&self, k: usize) -> f64 {
        self.rho.iter().take(k).sum()
    }
}

/// `C_x^{-1/2} C_xy C_y^{-1/2}`.
pub fn population_t(gt: &GroundTruth) -> Result<DMatrix<f64>> {
    Ok(gt.whitener_x()? * &gt.c_xy * gt.whitener_y()?)
}

/// `<M, T> = Tr(M^T T)`.
pub fn lifted_objective(m: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<f64> {
    check_dim("objective rows", t.nrows(), m.nrows())?;
    check_dim("objective cols", t.ncols(), m.ncols())?;
    Ok(m.dot(t))
}

/// Sum of the `k` largest singular values of `t`.
pub fn optimum_value(t: &DMatrix<f64>, k: usize) -> Result<f64> {
    if k > t.nrows().min(t.ncols()) {
        return Err(CcaError::input(format!(
            "k = {k} exceeds min dimension {}",
            t.nrows().min(t.ncols())
        )));
    }
    Ok(svd_thin(t)?.singular_values.iter().take(k).sum())
}

/// `Tr(U_tilde^T C_xy V_tilde)`.
pub fn trace_objective(sol: &CcaSolution, c_xy: &DMatrix<f64>) -> Result<f64> {
    check_dim("C_xy rows", sol.u_tilde.nrows(), c_xy.nrows())?;
    check_dim("C_xy cols", sol.v_tilde.nrows(), c_xy.ncols())?;
    Ok((sol.u_tilde.transpose() * c_xy * &sol.v_tilde).trace())
}

/// `||F^T C F - I||_2`; zero for a matrix with no columns.
pub fn orthogonality_gap(f: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    check_dim("covariance vs factor rows", f.nrows(), c.nrows())?;
    check_dim("covariance columns", c.nrows(), c.ncols())?;
    let k = f.ncols();
    if k == 0 {
        return Ok(0.0);
    }
    spectral_norm(&(f.transpose() * c * f - DMatrix::identity(k, k)))
}

/// Streaming accumulator of the uncentered second moments of paired samples.
#[derive(Debug, Clone)]
pub struct Moments {
    sum_xx: DMatrix<f64>,
    sum_yy: DMatrix<f64>,
    sum_xy: DMatrix<f64>,
    count: usize,
}

impl Moments {
    pub fn new(d_x: usize, d_y: usize) -> Self {
        Moments {
            sum_xx: DMatrix::zeros(d_x, d_x),
            sum_yy: DMatrix::zeros(d_y, d_y),
            sum_xy: DMatrix::zeros(d_x, d_y),
            count: 0,
        }
    }

    pub fn add(&mut self, s: &PairedSample) -> Result<()> {
        check_dim("x sample", self.sum_xx.nrows(), s.x.len())?;
        check_dim("y sample", self.sum_yy.nrows(), s.y.len())?;
        self.sum_xx.ger(1.0, &s.x, &s.x, 1.0);
        self.sum_yy.ger(1.0, &s.y, &s.y, 1.0);
        self.sum_xy.ger(1.0, &s.x, &s.y, 1.0);
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `(mean x x^T, mean y y^T, mean x y^T)`.
    pub fn means(&self) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        if self.count == 0 {
            return Err(CcaError::input("no samples"));
        }
        let n = self.count as f64;
        Ok((&self.sum_xx / n, &self.sum_yy / n, &self.sum_xy / n))
    }
}

/// Uncentered second moments `(mean x x^T, mean y y^T, mean x y^T)`.
pub fn batch_moments(
    samples: &[PairedSample],
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let first = samples
        .first()
        .ok_or_else(|| CcaError::input("no samples"))?;
    let mut m = Moments::new(first.x.len(), first.y.len());
    for s in samples {
        m.add(s)?;
    }
    m.means()
}

#[derive(Debug, Clone)]
pub struct SaaResult {
    pub solution: CcaSolution,
    /// Sum of the top-`k` empirical canonical correlations.
    pub value: f64,
    /// Regularized empirical covariances the factors were whitened with.
    pub cov_x: DMatrix<f64>,
    pub cov_y: DMatrix<f64>,
}

/// Batch CCA on all samples: whiten the empirical cross-covariance and take
/// its top-`k` singular pairs.
pub fn saa_solve(samples: &[PairedSample], k: usize, reg_lambda: f64) -> Result<SaaResult> {
    let (cxx, cyy, cxy) = batch_moments(samples)?;
    saa_from_moments(&cxx, &cyy, &cxy, k, reg_lambda)
}

/// [`saa_solve`] on precomputed second moments.
pub fn saa_from_moments(
    cxx: &DMatrix<f64>,
    cyy: &DMatrix<f64>,
    cxy: &DMatrix<f64>,
    k: usize,
    reg_lambda: f64,
) -> Result<SaaResult> {
    if !(reg_lambda >= 0.0) {
        return Err(CcaError::input(format!(
            "reg_lambda must be nonnegative, got {reg_lambda}"
        )));
    }
    if k == 0 || k > cxy.nrows().min(cxy.ncols()) {
        return Err(CcaError::input(format!("k = {k} out of range")));
    }
    check_dim("C_xy rows", cxx.nrows(), cxy.nrows())?;
    check_dim("C_xy cols", cyy.nrows(), cxy.ncols())?;
    let cov_x = cxx + DMatrix::identity(cxx.nrows(), cxx.nrows()) * reg_lambda;
    let cov_y = cyy + DMatrix::identity(cyy.nrows(), cyy.nrows()) * reg_lambda;
    let wx = inv_sqrt_psd(&cov_x, 0.0).map_err(|e| with_hint(e, "x"))?;
    let wy = inv_sqrt_psd(&cov_y, 0.0).map_err(|e| with_hint(e, "y"))?;
    let t_hat = &wx * cxy * &wy;
    let svd = svd_thin(&t_hat)?;
    let u = svd.left.columns(0, k).into_owned();
    let v = svd.right.columns(0, k).into_owned();
    let value = svd.singular_values.iter().take(k).sum();
    Ok(SaaResult {
        solution: CcaSolution {
            u_tilde: &wx * &u,
            v_tilde: &wy * &v,
            u,
            v,
            selected_count: k,
            heuristic: false,
        },
        value,
        cov_x,
        cov_y,
    })
}

fn with_hint(e: CcaError, view: &str) -> CcaError {
    match e {
        CcaError::Singular { eigenvalue, .. } => CcaError::Singular {
            eigenvalue,
            hint: if view == "x" {
                "empirical x covariance is singular; increase reg_lambda"
            } else {
                "empirical y covariance is singular; increase reg_lambda"
            },
        },
        other => other,
    }
}

/// Constants and step sizes from the convergence analysis.
///
/// `kappa` uses `d = max(d_x, d_y)`; the MEG step and bound use the dilation
/// dimension `d_x + d_y`.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryConstants {
    pub b: f64,
    pub r_x: f64,
    pub r_y: f64,
    pub r: f64,
    pub d_x: usize,
    pub d_y: usize,
    pub d: usize,
    pub d_meg: usize,
    pub k: usize,
    pub t: usize,
    pub delta: f64,
    pub g: f64,
    pub kappa: f64,
    pub tau_min: usize,
    pub eta_msg: f64,
    pub eta_meg: f64,
    pub bound_msg: f64,
    pub bound_meg: f64,
}

impl TheoryConstants {
    /// Failure probability used when none is given: `1 / sqrt(T)`, capped at
    /// 0.5 so it stays inside `(0, 1)`.
    pub fn default_delta(t: usize) -> f64 {
        (1.0 / (t.max(1) as f64).sqrt()).min(0.5)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        b: f64,
        r_x: f64,
        r_y: f64,
        d_x: usize,
        d_y: usize,
        k: usize,
        t: usize,
        delta: f64,
    ) -> Result<Self> {
        let positive = [b, r_x, r_y, delta]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || d_x == 0 || d_y == 0 || k == 0 || t == 0 {
            return Err(CcaError::input(
                "theory constants need positive B, r_x, r_y, delta, d_x, d_y, k, T",
            ));
        }
        let r = r_x.min(r_y);
        let d = d_x.max(d_y);
        let d_meg = d_x + d_y;
        let g = 2.0 * b / (r_x * r_y).sqrt();
        let kappa = kappa(b, r, d);
        let kf = k as f64;
        let tf = t as f64;
        let eta_msg = 2.0 * kf.sqrt() / (g * tf.sqrt());
        let eta_meg = eta_meg(g, d_meg, t);
        let bound_msg = (2.0 * kf.sqrt() * g + 2.0 * kf * kappa + kf * b / r) / tf.sqrt();
        let bound_meg =
            2.0 * kf * (g * g * (d_meg as f64).ln() / tf).sqrt() + 2.0 * kf * kappa / tf.sqrt();
        let tau_min = min_aux_size(b, r_x, r_y, d_x, d_y, delta)?;
        Ok(TheoryConstants {
            b,
            r_x,
            r_y,
            r,
            d_x,
            d_y,
            d,
            d_meg,
            k,
            t,
            delta,
            g,
            kappa,
            tau_min,
            eta_msg,
            eta_meg,
            bound_msg,
            bound_meg,
        })
    }
}

/// `8 B^2 sqrt(2 ln d) / r^2`.
pub fn kappa(b: f64, r: f64, d: usize) -> f64 {
    8.0 * b * b * (2.0 * (d as f64).ln()).sqrt() / (r * r)
}

/// `(1/G) ln(1 + sqrt(ln d / (G T)))`.
pub fn eta_meg(g: f64, d: usize, t: usize) -> f64 {
    (1.0 + ((d as f64).ln() / (g * t as f64)).sqrt()).ln() / g
}
