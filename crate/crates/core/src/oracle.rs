//! First-order oracle: the rank-one inexact gradient built from one paired
//! sample and the current whiteners, its self-adjoint dilation, and the
//! population-whitened reference used for error diagnostics.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result};
use crate::spectral::spectral_norm;
use crate::whitening::Whitener;

/// Rank-one gradient `left * right^T`, kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

impl GradientEstimate {
    pub fn new(left: DVector<f64>, right: DVector<f64>) -> Self {
        GradientEstimate { left, right }
    }

    pub fn zeros(d_x: usize, d_y: usize) -> Self {
        GradientEstimate::new(DVector::zeros(d_x), DVector::zeros(d_y))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.left.len(), self.right.len())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose()
    }

    /// `||left|| * ||right||`, equal to both the Frobenius and the spectral norm.
    pub fn norm(&self) -> f64 {
        self.left.norm() * self.right.norm()
    }

    /// `M += eta * left * right^T` without materializing the gradient.
    pub fn add_scaled_to(&self, m: &mut DMatrix<f64>, eta: f64) {
        m.ger(eta, &self.left, &self.right, 1.0);
    }
}

/// `W_x x y^T W_y` with the empirical whiteners.
pub fn inexact_gradient(
    wx: &Whitener,
    wy: &Whitener,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<GradientEstimate> {
    check_dim("x sample vs whitener", wx.dim(), x.len())?;
    check_dim("y sample vs whitener", wy.dim(), y.len())?;
    Ok(GradientEstimate::new(wx.apply(x), wy.apply(y)))
}

/// Same construction with the population whiteners; diagnostics only.
pub fn reference_gradient(
    wx_pop: &DMatrix<f64>,
    wy_pop: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<GradientEstimate> {
    check_dim("x sample vs population whitener", wx_pop.ncols(), x.len())?;
    check_dim("y sample vs population whitener", wy_pop.ncols(), y.len())?;
    Ok(GradientEstimate::new(wx_pop * x, wy_pop * y))
}

/// Spectral norm of `g - d` (a matrix of rank at most two).
pub fn gradient_error(g: &GradientEstimate, d: &GradientEstimate) -> Result<f64> {
    check_dim("gradient rows", g.left.len(), d.left.len())?;
    check_dim("gradient cols", g.right.len(), d.right.len())?;
    spectral_norm(&(g.matrix() - d.matrix()))
}

/// Self-adjoint dilation `[[0, G], [G^T, 0]]` of a rank-one gradient.
///
/// Also holds the two rank-one terms of the explicit form
/// `1/2 (a; b)(a; b)^T - 1/2 (a; -b)(a; -b)^T`.
#[derive(Debug, Clone)]
pub struct DilatedGradient {
    pub matrix: DMatrix<f64>,
    pub plus: DVector<f64>,
    pub minus: DVector<f64>,
    pub split: usize,
}

impl DilatedGradient {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn dilate(g: &GradientEstimate) -> DilatedGradient {
    let (dx, dy) = g.shape();
    let d = dx + dy;
    let mut matrix = DMatrix::zeros(d, d);
    let block = g.matrix();
    matrix.view_mut((0, dx), (dx, dy)).copy_from(&block);
    matrix
        .view_mut((dx, 0), (dy, dx))
        .copy_from(&block.transpose());

    let mut plus = DVector::zeros(d);
    plus.rows_mut(0, dx).copy_from(&g.left);
    plus.rows_mut(dx, dy).copy_from(&g.right);
    let mut minus = plus.clone();
    minus.rows_mut(dx, dy).neg_mut();
    DilatedGradient {
        matrix,
        plus,
        minus,
        split: dx,
    }
}
