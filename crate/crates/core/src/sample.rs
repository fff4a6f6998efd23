use nalgebra::DVector;

/// One joint draw `(x, y)` from the two views.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl PairedSample {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Self {
        PairedSample { x, y }
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Self {
        PairedSample::new(DVector::from_row_slice(x), DVector::from_row_slice(y))
    }

    /// `max(||x||^2, ||y||^2)`.
    pub fn max_sq_norm(&self) -> f64 {
        self.x.norm_squared().max(self.y.norm_squared())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }
}
