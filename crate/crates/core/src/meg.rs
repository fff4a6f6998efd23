//! Inexact matrix exponentiated gradient (MEG) for CCA.
//!
//! Works in the dilated space of dimension `d = d_x + d_y` with density
//! matrices `{N : N >= 0, Tr N = 1, N <= I/k}`. Objectives reported on the
//! trace-`k` scale are `k <N, C>`.

use nalgebra::DMatrix;

use crate::error::{check_dim, CcaError, Result};
use crate::oracle::{dilate, GradientEstimate};
use crate::sample::PairedSample;
use crate::solver::{drive, Hook, IterateSolver, StreamConfig};
use crate::spectral::{entropy_cap, sym_eig, SymEig, DEFAULT_LOG_FLOOR};
use crate::whitening::WhitenerState;

/// Eigenvalues of the normalized update, before projection. The top
/// eigenvalue of the exponent is subtracted before exponentiating, which
/// cancels in the trace normalization.
fn exp_normalized(exponent: &DMatrix<f64>) -> Result<SymEig> {
    let eig = sym_eig(exponent)?;
    let shift = eig.max();
    let mut values = eig.eigenvalues.map(|l| (l - shift).exp());
    let total = values.sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(CcaError::Numerical(format!(
            "multiplicative update produced trace {total}"
        )));
    }
    values /= total;
    Ok(SymEig {
        eigenvalues: values,
        eigenvectors: eig.eigenvectors,
    })
}

fn log_of(eig: &SymEig) -> DMatrix<f64> {
    eig.recompose_with(|l| l.max(DEFAULT_LOG_FLOOR).ln())
}

fn check_trace_one(n: &DMatrix<f64>, what: &str) -> Result<()> {
    let tr = n.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(CcaError::input(format!(
            "{what} must have trace 1, got {tr}"
        )));
    }
    Ok(())
}

/// `exp(log N + eta C) / Tr(...)`.
pub fn meg_update(n: &DMatrix<f64>, c: &DMatrix<f64>, eta: f64) -> Result<DMatrix<f64>> {
    check_eta(eta)?;
    check_dim("update direction", n.nrows(), c.nrows())?;
    let exponent = log_of(&sym_eig(n)?) + c * eta;
    Ok(exp_normalized(&exponent)?.recompose())
}

/// Relative-entropy projection of a trace-one PSD matrix onto
/// `{Tr N = 1, 0 <= N <= I/k}`.
pub fn bregman_project(n_hat: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    check_trace_one(n_hat, "projection input")?;
    Ok(project_eig(sym_eig(n_hat)?, k)?.recompose())
}

fn project_eig(eig: SymEig, k: usize) -> Result<SymEig> {
    if k == 0 || k > eig.eigenvalues.len() {
        return Err(CcaError::input(format!(
            "k = {k} must lie in 1..={}",
            eig.eigenvalues.len()
        )));
    }
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = lambda.iter().sum();
    // re-normalize away rounding so the cap routine sees an exact trace
    let lambda: Vec<f64> = lambda.iter().map(|l| l / total).collect();
    let capped = entropy_cap(&lambda, 1.0 / k as f64, 1.0)?;
    Ok(SymEig {
        eigenvalues: capped.into(),
        eigenvectors: eig.eigenvectors,
    })
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(CcaError::input(format!(
            "step size must be positive, got {eta}"
        )))
    }
}

/// `k <N, C_pop>`: the trace-`k` objective of a density-scaled iterate.
pub fn meg_objective_scale(n: &DMatrix<f64>, c_pop: &DMatrix<f64>, k: usize) -> Result<f64> {
    check_dim("objective rows", n.nrows(), c_pop.nrows())?;
    check_dim("objective cols", n.ncols(), c_pop.ncols())?;
    Ok(k as f64 * n.dot(c_pop))
}

/// MEG iterate kept in eigendecomposed form so that `log N` is free.
#[derive(Debug, Clone)]
pub struct MegState {
    eig: SymEig,
    iter: usize,
    avg_sum: DMatrix<f64>,
    k: usize,
    d_x: usize,
}

impl MegState {
    /// Start from `N_0 = I / d`.
    pub fn new(d_x: usize, d_y: usize, k: usize) -> Result<Self> {
        let d = d_x + d_y;
        if k == 0 || k > d_x.min(d_y) {
            return Err(CcaError::input(format!(
                "k = {k} must lie in 1..={}",
                d_x.min(d_y)
            )));
        }
        let n0 = DMatrix::identity(d, d) / d as f64;
        Ok(MegState {
            eig: sym_eig(&n0)?,
            iter: 0,
            avg_sum: DMatrix::zeros(d, d),
            k,
            d_x,
        })
    }

    pub fn iterate(&self) -> DMatrix<f64> {
        self.eig.recompose()
    }

    pub fn eigen(&self) -> &SymEig {
        &self.eig
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    /// One multiplicative step with the dilation of `grad`, then projection.
    pub fn meg_step(&mut self, grad: &GradientEstimate, eta: f64) -> Result<()> {
        check_eta(eta)?;
        check_dim("gradient rows", self.d_x, grad.left.len())?;
        let dil = dilate(grad);
        check_dim("dilated gradient", self.eig.eigenvalues.len(), dil.dim())?;
        // the average runs over N_0 .. N_{T-1}
        self.avg_sum += self.eig.recompose();
        let exponent = log_of(&self.eig) + dil.matrix * eta;
        self.eig = project_eig(exp_normalized(&exponent)?, self.k)?;
        self.iter += 1;
        Ok(())
    }
}

impl IterateSolver for MegState {
    fn step(&mut self, grad: &GradientEstimate, eta: f64) -> Result<()> {
        self.meg_step(grad, eta)
    }

    /// Mean of the pre-step iterates; `N_0` before the first step.
    fn average(&self) -> DMatrix<f64> {
        if self.iter == 0 {
            return self.eig.recompose();
        }
        &self.avg_sum / self.iter as f64
    }

    fn iterations(&self) -> usize {
        self.iter
    }
}

/// Run MEG over `stream` and return the averaged density matrix together
/// with the final solver state.
pub fn run_meg<I>(
    stream: I,
    wx: &mut WhitenerState,
    wy: &mut WhitenerState,
    k: usize,
    cfg: &StreamConfig,
    hook: &mut Hook<'_>,
) -> Result<(DMatrix<f64>, MegState)>
where
    I: IntoIterator<Item = Result<PairedSample>>,
{
    let mut state = MegState::new(wx.dim(), wy.dim(), k)?;
    let avg = drive(&mut state, stream, wx, wy, cfg, hook)?;
    Ok((avg, state))
}
