//! Inexact matrix stochastic gradient (MSG) for CCA.
//!
//! Iterates live in `{M : ||M||_2 <= 1, ||M||_* <= k}`. Each step adds the
//! scaled rank-one gradient and projects back in Frobenius norm, which acts
//! on singular values only. The capped variant additionally keeps at most
//! `K` singular values.

use nalgebra::DMatrix;

use crate::error::{CcaError, Result};
use crate::oracle::GradientEstimate;
use crate::sample::PairedSample;
use crate::solver::{drive, Hook, IterateSolver, StreamConfig};
use crate::spectral::{project_capped_box_sum, svd_thin};
use crate::whitening::WhitenerState;

/// Frobenius projection onto `{||M||_2 <= 1, ||M||_* <= k}`.
pub fn project_f(m: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(CcaError::input("target rank k must be positive"));
    }
    let svd = svd_thin(m)?;
    let projected = project_capped_box_sum(svd.singular_values.as_slice(), k as f64)?;
    Ok(svd.recompose_with(&projected))
}

/// Keep the `cap` largest singular values of `m`, zero the rest.
pub fn cap_rank_truncate(m: &DMatrix<f64>, cap: usize) -> Result<DMatrix<f64>> {
    if cap == 0 {
        return Err(CcaError::input("cap rank must be at least 1"));
    }
    let svd = svd_thin(m)?;
    if cap >= svd.singular_values.len() {
        return Ok(m.clone());
    }
    let kept: Vec<f64> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| if i < cap { s } else { 0.0 })
        .collect();
    Ok(svd.recompose_with(&kept))
}

#[derive(Debug, Clone)]
pub struct MsgState {
    m: DMatrix<f64>,
    iter: usize,
    avg_sum: DMatrix<f64>,
    k: usize,
    cap_rank: Option<usize>,
}

impl MsgState {
    /// Start from `M = 0`.
    pub fn new(d_x: usize, d_y: usize, k: usize, cap_rank: Option<usize>) -> Result<Self> {
        if k == 0 || k > d_x.min(d_y) {
            return Err(CcaError::input(format!(
                "k = {k} must lie in 1..={}",
                d_x.min(d_y)
            )));
        }
        if let Some(cap) = cap_rank {
            if cap < k {
                return Err(CcaError::input(format!(
                    "cap rank {cap} must be at least k = {k}"
                )));
            }
        }
        Ok(MsgState {
            m: DMatrix::zeros(d_x, d_y),
            iter: 0,
            avg_sum: DMatrix::zeros(d_x, d_y),
            k,
            cap_rank,
        })
    }

    pub fn iterate(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap_rank(&self) -> Option<usize> {
        self.cap_rank
    }

    /// `M <- P_F(M + eta * grad)`, then rank truncation in capped mode.
    pub fn msg_step(&mut self, grad: &GradientEstimate, eta: f64) -> Result<()> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(CcaError::input(format!(
                "step size must be positive, got {eta}"
            )));
        }
        let mut next = self.m.clone();
        grad.add_scaled_to(&mut next, eta);
        let mut next = project_f(&next, self.k)?;
        if let Some(cap) = self.cap_rank {
            // truncation only shrinks singular values, so the result stays feasible
            next = cap_rank_truncate(&next, cap)?;
        }
        self.m = next;
        self.avg_sum += &self.m;
        self.iter += 1;
        Ok(())
    }
}

impl IterateSolver for MsgState {
    fn step(&mut self, grad: &GradientEstimate, eta: f64) -> Result<()> {
        self.msg_step(grad, eta)
    }

    /// Mean of the post-step iterates; zero before the first step.
    fn average(&self) -> DMatrix<f64> {
        if self.iter == 0 {
            return self.avg_sum.clone();
        }
        &self.avg_sum / self.iter as f64
    }

    fn iterations(&self) -> usize {
        self.iter
    }
}

/// Run MSG over `stream` and return the averaged iterate together with the
/// final solver state.
pub fn run_msg<I>(
    stream: I,
    wx: &mut WhitenerState,
    wy: &mut WhitenerState,
    k: usize,
    cap_rank: Option<usize>,
    cfg: &StreamConfig,
    hook: &mut Hook<'_>,
) -> Result<(DMatrix<f64>, MsgState)>
where
    I: IntoIterator<Item = Result<PairedSample>>,
{
    let mut state = MsgState::new(wx.dim(), wy.dim(), k, cap_rank)?;
    let avg = drive(&mut state, stream, wx, wy, cfg, hook)?;
    Ok((avg, state))
}
