//! Randomized rounding of averaged iterates to rank-`k` extreme points, and
//! recovery of the CCA factors.
//!
//! Rounding keeps each singular (or eigen) direction with probability equal
//! to its weight, using systematic sampling. Exact inclusion probabilities
//! make the rounded point an unbiased estimate of the fractional one, so
//! every linear objective is preserved in expectation.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{check_dim, CcaError, Result};
use crate::spectral::{svd_thin, sym_eig};
use crate::whitening::Whitener;

const WEIGHT_TOL: f64 = 1e-9;
const SUM_TOL: f64 = 1e-8;
const BLOCK_NORM_FLOOR: f64 = 1e-8;

/// Draw an index set whose inclusion probabilities are exactly `w`.
///
/// With prefix sums `P_i`, index `i` is kept when some point `u + m`
/// (`u ~ U[0, 1)`, integer `m >= 0`, `u + m < sum(w)`) lands in
/// `[P_{i-1}, P_i)`. The set size is `floor(sum w)` or `ceil(sum w)`.
pub fn sample_k_subset<R: Rng + ?Sized>(w: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(CcaError::input("k must be positive"));
    }
    let mut weights = Vec::with_capacity(w.len());
    for (i, &wi) in w.iter().enumerate() {
        if !(-WEIGHT_TOL..=1.0 + WEIGHT_TOL).contains(&wi) {
            return Err(CcaError::input(format!(
                "weight {i} = {wi} lies outside [0, 1]"
            )));
        }
        weights.push(wi.clamp(0.0, 1.0));
    }
    let total: f64 = weights.iter().sum();
    let kf = k as f64;
    if total > kf + SUM_TOL {
        return Err(CcaError::input(format!(
            "weights sum to {total}, more than k = {k}"
        )));
    }
    if total > kf {
        weights.iter_mut().for_each(|x| *x *= kf / total);
    }
    let limit = total.min(kf);

    let u: f64 = rng.random();
    let mut selected = Vec::new();
    let mut lo = 0.0;
    let mut point = u;
    for (i, &wi) in weights.iter().enumerate() {
        if point >= limit {
            break;
        }
        let hi = lo + wi;
        if point >= lo && point < hi {
            selected.push(i);
            point += 1.0;
        }
        lo = hi;
    }
    Ok(selected)
}

/// Orthonormal factors of a rounded solution, before whitening.
#[derive(Debug, Clone)]
pub struct RankKFactors {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Set when the factors come from a procedure without accuracy
    /// guarantees.
    pub heuristic: bool,
}

impl RankKFactors {
    pub fn selected_count(&self) -> usize {
        self.u.ncols()
    }
}

/// Rounded CCA solution: orthonormal `u`, `v` and the whitened directions
/// `u_tilde = W_x u`, `v_tilde = W_y v`.
#[derive(Debug, Clone)]
pub struct CcaSolution {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub u_tilde: DMatrix<f64>,
    pub v_tilde: DMatrix<f64>,
    pub selected_count: usize,
    pub heuristic: bool,
}

/// Round a feasible MSG iterate. Returns the rounded matrix, whose singular
/// values are all 0 or 1, and its factors.
pub fn round_msg<R: Rng + ?Sized>(
    m_bar: &DMatrix<f64>,
    k: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, RankKFactors)> {
    let svd = svd_thin(m_bar)?;
    let chosen = sample_k_subset(svd.singular_values.as_slice(), k, rng)?;
    let u = svd.left.select_columns(&chosen);
    let v = svd.right.select_columns(&chosen);
    let rounded = &u * v.transpose();
    Ok((
        rounded,
        RankKFactors {
            u,
            v,
            heuristic: false,
        },
    ))
}

/// Round a density-scaled MEG iterate to an orthogonal projection of rank
/// at most `k`. The expectation of the result is `k * N_bar`.
pub fn round_meg<R: Rng + ?Sized>(
    n_bar: &DMatrix<f64>,
    k: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let eig = sym_eig(n_bar)?;
    let w: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| (k as f64 * l).clamp(0.0, 1.0 + WEIGHT_TOL))
        .collect();
    let chosen = sample_k_subset(&w, k, rng)?;
    let basis = eig.eigenvectors.select_columns(&chosen);
    Ok(&basis * basis.transpose())
}

/// Whiten the factors with the final covariance estimates.
pub fn extract_factors(f: &RankKFactors, wx: &Whitener, wy: &Whitener) -> Result<CcaSolution> {
    check_dim("u rows vs x whitener", wx.dim(), f.u.nrows())?;
    check_dim("v rows vs y whitener", wy.dim(), f.v.nrows())?;
    check_dim("factor column counts", f.u.ncols(), f.v.ncols())?;
    Ok(CcaSolution {
        u_tilde: apply_columns(wx, &f.u),
        v_tilde: apply_columns(wy, &f.v),
        u: f.u.clone(),
        v: f.v.clone(),
        selected_count: f.u.ncols(),
        heuristic: f.heuristic,
    })
}

fn apply_columns(w: &Whitener, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        out.set_column(j, &w.apply(&m.column(j).into_owned()));
    }
    out
}

/// Read CCA factors off a rank-`k` projection in the dilated space.
///
/// Top eigenvectors of a dilation have the form `(u; v) / sqrt(2)`, so each
/// basis vector is split into its two blocks, rescaled, and each block is
/// orthonormalized on its own. Pairs whose blocks vanish are dropped. The
/// result is always marked heuristic.
pub fn meg_factor_heuristic(p: &DMatrix<f64>, d_x: usize) -> Result<RankKFactors> {
    let d = p.nrows();
    if d_x == 0 || d_x >= d {
        return Err(CcaError::input(format!(
            "split {d_x} must lie strictly inside dimension {d}"
        )));
    }
    let d_y = d - d_x;
    let eig = sym_eig(p)?;
    let scale = std::f64::consts::SQRT_2;
    let mut us: Vec<nalgebra::DVector<f64>> = vec![];
    let mut vs: Vec<nalgebra::DVector<f64>> = vec![];
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= 0.5 {
            continue;
        }
        let col = eig.eigenvectors.column(j);
        let a = col.rows(0, d_x) * scale;
        let b = col.rows(d_x, d_y) * scale;
        let (Some(a), Some(b)) = (
            orthonormalize_against(&a, &us),
            orthonormalize_against(&b, &vs),
        ) else {
            log::warn!("dropping degenerate direction {j} while splitting the projection");
            continue;
        };
        us.push(a);
        vs.push(b);
    }
    Ok(RankKFactors {
        u: columns(d_x, &us),
        v: columns(d_y, &vs),
        heuristic: true,
    })
}

/// Modified Gram-Schmidt step; `None` when the residual is negligible.
fn orthonormalize_against(
    x: &nalgebra::DVector<f64>,
    basis: &[nalgebra::DVector<f64>],
) -> Option<nalgebra::DVector<f64>> {
    let mut r = x.clone();
    for q in basis {
        let c = q.dot(&r);
        r.axpy(-c, q, 1.0);
    }
    let norm = r.norm();
    (norm >= BLOCK_NORM_FLOOR).then(|| r / norm)
}

fn columns(rows: usize, cols: &[nalgebra::DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectral_norm;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn marginals(w: &[f64], k: usize, draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0usize; w.len()];
        for _ in 0..draws {
            let s = sample_k_subset(w, k, &mut rng).unwrap();
            assert!(s.len() <= k);
            for i in s {
                counts[i] += 1;
            }
        }
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    fn within_bands(w: &[f64], freq: &[f64], draws: usize) -> bool {
        w.iter().zip(freq).all(|(&p, &f)| {
            let sd = (p * (1.0 - p) / draws as f64).sqrt();
            (f - p).abs() <= 4.0 * sd + 1e-12
        })
    }

    #[test]
    fn subset_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..100 {
            assert_eq!(
                sample_k_subset(&[1.0, 1.0, 0.0], 2, &mut rng).unwrap(),
                vec![0, 1]
            );
        }
        let f = marginals(&[0.5, 0.5], 1, 10_000, 51);
        assert!(f.iter().all(|&x| (x - 0.5).abs() <= 0.015));
        let w = [0.9, 0.6, 0.5];
        assert!(within_bands(&w, &marginals(&w, 2, 20_000, 52), 20_000));
    }

    #[test]
    fn subset_rejects_bad_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        assert!(sample_k_subset(&[0.9, 0.9], 1, &mut rng).is_err());
        assert!(sample_k_subset(&[1.1], 1, &mut rng).is_err());
        assert!(sample_k_subset(&[-0.1], 1, &mut rng).is_err());
        assert!(sample_k_subset(&[0.5], 0, &mut rng).is_err());
    }

    #[test]
    fn subset_size_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let w = [0.3, 0.9, 0.4, 0.7, 0.2];
        let total: f64 = w.iter().sum();
        for _ in 0..500 {
            let s = sample_k_subset(&w, 3, &mut rng).unwrap();
            assert!(s.len() == total.floor() as usize || s.len() == total.ceil() as usize);
        }
        let a = sample_k_subset(&w, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_k_subset(&w, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_msg_partial_isometry_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let a = DMatrix::from_fn(4, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let svd = svd_thin(&a).unwrap();
        let m = svd.recompose_with(&[1.0, 1.0, 0.0]);
        for _ in 0..20 {
            let (r, f) = round_msg(&m, 2, &mut rng).unwrap();
            assert!((r - &m).amax() <= 1e-10);
            assert!(!f.heuristic);
        }
    }

    #[test]
    fn round_msg_scalar_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let m = DMatrix::from_element(1, 1, 0.3);
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let (r, _) = round_msg(&m, 1, &mut rng).unwrap();
            let v = r[(0, 0)];
            assert!(v == 0.0 || (v - 1.0).abs() < 1e-15);
            sum += v;
        }
        assert!((sum / 10_000.0 - 0.3).abs() <= 0.015);
    }

    #[test]
    fn round_msg_output_is_extreme_point_and_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let a = DMatrix::from_fn(4, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = svd_thin(&a).unwrap().recompose_with(&[0.8, 0.7, 0.4]);
        let test = DMatrix::from_fn(4, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let draws = 20_000;
        let mut vals = Vec::with_capacity(draws);
        for _ in 0..draws {
            let (r, _) = round_msg(&m, 2, &mut rng).unwrap();
            let sv = svd_thin(&r).unwrap().singular_values;
            assert!(sv.iter().all(|&s| s.abs() < 1e-9 || (s - 1.0).abs() < 1e-9));
            assert!(sv.iter().filter(|&&s| s > 0.5).count() <= 2);
            vals.push(r.dot(&test));
        }
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        assert!((mean - m.dot(&test)).abs() <= 4.0 * (var / draws as f64).sqrt());
    }

    #[test]
    fn round_meg_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let a = DMatrix::from_fn(5, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = svd_thin(&a).unwrap().left;
        let top = q.columns(0, 2).into_owned();
        let proj = &top * top.transpose();
        let n = &proj / 2.0;
        for _ in 0..10 {
            assert!((round_meg(&n, 2, &mut rng).unwrap() - &proj).amax() <= 1e-10);
        }

        // uniform density, k = 1: each eigen-direction chosen with 1/d
        let d = 4;
        let n = DMatrix::identity(d, d) / d as f64;
        let draws = 20_000;
        let mut diag_sum = DVector::zeros(d);
        for _ in 0..draws {
            let p = round_meg(&n, 1, &mut rng).unwrap();
            assert!((p.trace() - 1.0).abs() < 1e-10);
            assert!((&p * &p - &p).amax() < 1e-10);
            diag_sum += p.diagonal();
        }
        // any fixed direction is hit with probability 1/d in expectation
        let freq = diag_sum / draws as f64;
        assert!(freq.iter().all(|&f| (f - 0.25).abs() <= 0.02));
    }

    #[test]
    fn round_meg_preserves_linear_functionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let d = 5;
        let k = 2;
        let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = svd_thin(&a).unwrap().left;
        let lam = [0.4, 0.3, 0.15, 0.1, 0.05];
        let n = &q * DMatrix::from_diagonal(&DVector::from_row_slice(&lam)) * q.transpose();
        let b = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let test = &b + b.transpose();
        let draws = 20_000;
        let vals: Vec<f64> = (0..draws)
            .map(|_| round_meg(&n, k, &mut rng).unwrap().dot(&test))
            .collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let want = k as f64 * n.dot(&test);
        assert!((mean - want).abs() <= 4.0 * (var / draws as f64).sqrt());
    }

    #[test]
    fn extract_examples() {
        let f = RankKFactors {
            u: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            v: DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            heuristic: false,
        };
        let id = Whitener::Full(DMatrix::identity(2, 2));
        let s = extract_factors(&f, &id, &id).unwrap();
        assert_eq!(s.u_tilde, s.u);
        assert_eq!(s.v_tilde, s.v);
        assert_eq!(s.selected_count, 1);

        let half = Whitener::Full(DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0])));
        let s = extract_factors(&f, &half, &id).unwrap();
        assert_eq!(s.u_tilde.as_slice(), &[0.5, 0.0]);

        let wrong = Whitener::Full(DMatrix::identity(3, 3));
        assert!(extract_factors(&f, &wrong, &id).is_err());
    }

    #[test]
    fn extract_whitens_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = &a * a.transpose() + DMatrix::identity(4, 4);
        let w = crate::spectral::inv_sqrt_psd(&c, 0.0).unwrap();
        let q = svd_thin(&a).unwrap().left.columns(0, 2).into_owned();
        let f = RankKFactors {
            u: q.clone(),
            v: q,
            heuristic: false,
        };
        let wh = Whitener::Full(w);
        let s = extract_factors(&f, &wh, &wh).unwrap();
        let gram = s.u_tilde.transpose() * &c * &s.u_tilde;
        assert!((gram - DMatrix::identity(2, 2)).amax() <= 1e-10);
    }

    #[test]
    fn heuristic_scalar_case() {
        let v = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        let p = &v * v.transpose();
        let f = meg_factor_heuristic(&p, 1).unwrap();
        assert!(f.heuristic);
        assert!((f.u[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((f.v[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(f.u[(0, 0)] * f.v[(0, 0)] > 0.0);
    }

    #[test]
    fn heuristic_recovers_dilation_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let (dx, dy, k) = (5, 4, 2);
        let phi = svd_thin(&DMatrix::from_fn(dx, k, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }))
        .unwrap()
        .left;
        let psi = svd_thin(&DMatrix::from_fn(dy, k, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }))
        .unwrap()
        .left;
        let mut basis = DMatrix::zeros(dx + dy, k);
        basis.view_mut((0, 0), (dx, k)).copy_from(&phi);
        basis.view_mut((dx, 0), (dy, k)).copy_from(&psi);
        basis /= 2f64.sqrt();
        let p = &basis * basis.transpose();
        let f = meg_factor_heuristic(&p, dx).unwrap();
        assert_eq!(f.selected_count(), k);
        // pairs inside the degenerate eigenspace are not identifiable, the
        // lifted product is
        let got = &f.u * f.v.transpose();
        assert!((got - &phi * psi.transpose()).amax() <= 1e-8);
        let id = DMatrix::<f64>::identity(k, k);
        assert!(spectral_norm(&(f.u.transpose() * &f.u - &id)).unwrap() <= 1e-9);

        // single pair, recovered up to a common sign
        let p1 = basis.column(0) * basis.column(0).transpose();
        let f1 = meg_factor_heuristic(&p1, dx).unwrap();
        let sign = f1.u.column(0).dot(&phi.column(0)).signum();
        assert!((f1.u.column(0) * sign - phi.column(0)).amax() <= 1e-8);
        assert!((f1.v.column(0) * sign - psi.column(0)).amax() <= 1e-8);
    }

    #[test]
    fn heuristic_drops_single_view_directions() {
        let mut p = DMatrix::zeros(3, 3);
        p[(0, 0)] = 1.0;
        let f = meg_factor_heuristic(&p, 1).unwrap();
        assert_eq!(f.selected_count(), 0);
        assert!(f.heuristic);
    }
}
