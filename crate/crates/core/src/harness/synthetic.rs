//! Gaussian two-view data with prescribed canonical correlations.
//!
//! A latent pair `(a, b)` has identity marginals and cross-covariance
//! `Phi diag(rho) Psi^T`; the views are `x = L_x a`, `y = L_y b` for fixed
//! SPD mixings. Mixing leaves the whitened cross-covariance spectrum intact,
//! so the population canonical correlations are exactly `rho`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CcaError, Result};
use crate::evaluation::GroundTruth;
use crate::sample::PairedSample;
use crate::spectral::{sqrt_psd, svd_thin};

/// Named RNG streams derived from one seed.
pub const MODEL_STREAM: u64 = 1;
pub const DATA_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub d_x: usize,
    pub d_y: usize,
    pub rho: Vec<f64>,
    pub cond_x: f64,
    pub cond_y: f64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.d_x == 0 || self.d_y == 0 {
            return Err(CcaError::input("dimensions must be positive"));
        }
        if self.rho.len() > self.d_x.min(self.d_y) {
            return Err(CcaError::input(format!(
                "{} correlations do not fit in min(d_x, d_y) = {}",
                self.rho.len(),
                self.d_x.min(self.d_y)
            )));
        }
        if self.rho.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(CcaError::input("every correlation must lie in (0, 1)"));
        }
        if !(self.cond_x >= 1.0 && self.cond_y >= 1.0) {
            return Err(CcaError::input("condition numbers must be at least 1"));
        }
        Ok(())
    }
}

/// A fully drawn synthetic distribution, ready to sample from.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    d_x: usize,
    /// Maps a standard normal vector in `R^{d_x + d_y}` to a joint sample.
    sampler: DMatrix<f64>,
    truth: GroundTruth,
}

impl SyntheticModel {
    /// Draw `Phi`, `Psi` and the two mixings from `seed`'s model stream.
    pub fn new(spec: &SyntheticSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rho = spec.rho.clone();
        rho.sort_by(|a, b| b.total_cmp(a));
        let mut rng = stream(seed, MODEL_STREAM);
        let (dx, dy, k) = (spec.d_x, spec.d_y, rho.len());

        let phi = random_orthonormal(&mut rng, dx, k)?;
        let psi = random_orthonormal(&mut rng, dy, k)?;
        let l_x = random_mixing(&mut rng, dx, spec.cond_x)?;
        let l_y = random_mixing(&mut rng, dy, spec.cond_y)?;

        let cross = &phi * DMatrix::from_diagonal(&DVector::from_row_slice(&rho)) * psi.transpose();
        let d = dx + dy;
        let mut joint = DMatrix::identity(d, d);
        joint.view_mut((0, dx), (dx, dy)).copy_from(&cross);
        joint
            .view_mut((dx, 0), (dy, dx))
            .copy_from(&cross.transpose());
        let root = sqrt_psd(&joint)?;

        let mut mixing = DMatrix::zeros(d, d);
        mixing.view_mut((0, 0), (dx, dx)).copy_from(&l_x);
        mixing.view_mut((dx, dx), (dy, dy)).copy_from(&l_y);
        let sampler = mixing * root;

        let truth = GroundTruth::new(&l_x * &l_x, &l_y * &l_y, &l_x * &cross * &l_y, rho)?;
        Ok(SyntheticModel {
            d_x: dx,
            sampler,
            truth,
        })
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PairedSample {
        let d = self.sampler.nrows();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = &self.sampler * z;
        PairedSample::new(
            w.rows(0, self.d_x).into_owned(),
            w.rows(self.d_x, d - self.d_x).into_owned(),
        )
    }

    /// `n` samples from `seed`'s data stream.
    pub fn samples(&self, n: usize, seed: u64) -> Vec<PairedSample> {
        let mut rng = stream(seed, DATA_STREAM);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Draw a model and `n` samples from it.
pub fn gen_synthetic(
    spec: &SyntheticSpec,
    n: usize,
    seed: u64,
) -> Result<(Vec<PairedSample>, GroundTruth)> {
    let model = SyntheticModel::new(spec, seed)?;
    Ok((model.samples(n, seed), model.truth().clone()))
}

/// ChaCha generator for one named stream of `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if cols == 0 {
        return Ok(DMatrix::zeros(rows, 0));
    }
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(svd_thin(&g)?.left)
}

/// `Q diag(l) Q^T` with `l` log-spaced from 1 down to `1 / cond`.
fn random_mixing(rng: &mut ChaCha8Rng, d: usize, cond: f64) -> Result<DMatrix<f64>> {
    let q = random_orthonormal(rng, d, d)?;
    let values = DVector::from_fn(d, |i, _| {
        if d == 1 {
            1.0
        } else {
            cond.powf(-(i as f64) / (d - 1) as f64)
        }
    });
    Ok(crate::spectral::recompose(&q, &values))
}
