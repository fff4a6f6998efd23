//! Dense symmetric and singular-value kernels, plus the two spectrum-level
//! projections that every solver reduces to:
//!
//! * [`project_capped_box_sum`]: Euclidean projection of a spectrum onto
//!   `{v : 0 <= v_i <= 1, sum(v) <= k}` (the nuclear/spectral ball, seen
//!   through its singular values).
//! * [`entropy_cap`]: relative-entropy projection of a probability spectrum
//!   onto `{0 <= v_i <= cap, sum(v) = target}`.
//!
//! Eigen- and singular values are always returned sorted descending, ties
//! broken by original index so results are deterministic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CcaError, Result};

/// Default floor applied to eigenvalues before taking matrix logarithms.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-8;

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: DVector<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
}

impl SymEig {
    /// `V diag(f(lambda)) V^T`.
    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mapped = self.eigenvalues.map(f);
        recompose(&self.eigenvectors, &mapped)
    }

    pub fn recompose(&self) -> DMatrix<f64> {
        recompose(&self.eigenvectors, &self.eigenvalues)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Thin SVD `A = left * diag(singular_values) * right^T` with
/// `m = min(rows, cols)` components.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub left: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub right: DMatrix<f64>,
}

impl ThinSvd {
    pub fn recompose_with(&self, values: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(values.len(), self.singular_values.len());
        let mut scaled = self.left.clone();
        for (j, &s) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.right.transpose()
    }

    pub fn recompose(&self) -> DMatrix<f64> {
        self.recompose_with(self.singular_values.as_slice())
    }
}

/// `V diag(values) V^T`.
pub fn recompose(vectors: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    let mut out = scaled * vectors.transpose();
    symmetrize_in_place(&mut out);
    out
}

pub fn symmetrize_in_place(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

fn check_finite(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CcaError::input(format!("{what} has non-finite entries")))
    }
}

fn check_symmetric(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(CcaError::input(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a, what)?;
    let scale = 1.0 + a.amax();
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(CcaError::input(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Indices sorting `values` descending, stable on ties.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Symmetric eigendecomposition. The input is symmetrized before
/// decomposing; asymmetry above `1e-8` relative is rejected.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<SymEig> {
    check_symmetric(a, "sym_eig input")?;
    let mut sym = a.clone();
    symmetrize_in_place(&mut sym);
    let n = sym.nrows();
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| CcaError::Numerical("symmetric eigensolver did not converge".into()))?;
    let order = descending_order(eig.eigenvalues.as_slice());
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin SVD with singular values sorted descending.
///
/// Computed by one-sided Jacobi rotations rather than the nalgebra SVD,
/// which returns wrong factors (or fails to terminate) on some
/// rank-deficient inputs. Left vectors paired with zero singular values are
/// completed to an orthonormal set.
pub fn svd_thin(a: &DMatrix<f64>) -> Result<ThinSvd> {
    check_finite(a, "svd input")?;
    let (rows, cols) = a.shape();
    if rows < cols {
        let t = svd_thin(&a.transpose())?;
        return Ok(ThinSvd {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        });
    }
    let n = cols;
    if n == 0 {
        return Ok(ThinSvd {
            left: DMatrix::zeros(rows, 0),
            singular_values: DVector::zeros(0),
            right: DMatrix::zeros(cols, 0),
        });
    }
    let (work, v) = jacobi_rotate(a.clone())?;
    let norms: Vec<f64> = (0..n).map(|j| work.column(j).norm()).collect();
    let order = descending_order(&norms);
    let scale = norms.iter().copied().fold(0.0, f64::max);
    let mut left = DMatrix::zeros(rows, n);
    let mut right = DMatrix::zeros(cols, n);
    let mut values = DVector::zeros(n);
    let mut missing = vec![];
    for (dst, &src) in order.iter().enumerate() {
        right.set_column(dst, &v.column(src));
        let s = norms[src];
        if s > JACOBI_NULL_TOL * scale && s > 0.0 {
            values[dst] = s;
            left.set_column(dst, &(work.column(src) / s));
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut left, &missing);
    Ok(ThinSvd {
        left,
        singular_values: values,
        right,
    })
}

const JACOBI_MAX_SWEEPS: usize = 80;
const JACOBI_NULL_TOL: f64 = 1e-14;

/// Orthogonalize the columns of `a` (rows >= cols) by plane rotations;
/// returns `(A V, V)`.
fn jacobi_rotate(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.ncols();
    let mut v = DMatrix::identity(n, n);
    let tol = n as f64 * f64::EPSILON;
    // Columns this small are rounding noise; rotating them never settles.
    let negligible = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = a.column(p).dot(&a.column(q));
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((a, v));
        }
    }
    Err(CcaError::Numerical(
        "Jacobi SVD did not converge within the sweep limit".into(),
    ))
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Fill the listed columns of `q` with unit vectors orthogonal to all other
/// columns, drawing candidates from the standard basis.
fn complete_orthonormal(q: &mut DMatrix<f64>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let rows = q.nrows();
    let mut filled: Vec<usize> = (0..q.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &j in missing {
        while candidate < rows {
            let mut e = DVector::zeros(rows);
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt for stability
            for _ in 0..2 {
                for &f in &filled {
                    let proj = q.column(f).dot(&e);
                    e.axpy(-proj, &q.column(f), 1.0);
                }
            }
            let norm = e.norm();
            if norm > 1e-6 {
                q.set_column(j, &(e / norm));
                filled.push(j);
                break;
            }
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(svd_thin(a)?
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max))
}

pub fn nuclear_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(svd_thin(a)?.singular_values.sum())
}

/// `(A + floor I)^{-1/2}` for symmetric positive definite `A + floor I`.
pub fn inv_sqrt_psd(a: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    if !(floor >= 0.0) {
        return Err(CcaError::input(format!("floor must be >= 0, got {floor}")));
    }
    let mut shifted = a.clone();
    if floor > 0.0 {
        for i in 0..shifted.nrows().min(shifted.ncols()) {
            shifted[(i, i)] += floor;
        }
    }
    let eig = sym_eig(&shifted)?;
    let lmin = eig.min();
    if !(lmin > 0.0) {
        return Err(CcaError::Singular {
            eigenvalue: lmin,
            hint: "",
        });
    }
    Ok(eig.recompose_with(|l| 1.0 / l.sqrt()))
}

/// Symmetric square root of a PSD matrix; small negative eigenvalues from
/// rounding are clamped to zero.
pub fn sqrt_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(a)?;
    Ok(eig.recompose_with(|l| l.max(0.0).sqrt()))
}

pub fn sym_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(a)?;
    Ok(eig.recompose_with(f64::exp))
}

/// Matrix logarithm of an SPD matrix; eigenvalues below `eig_floor` are
/// raised to it first.
pub fn sym_log(a: &DMatrix<f64>, eig_floor: f64) -> Result<DMatrix<f64>> {
    if !(eig_floor > 0.0) {
        return Err(CcaError::input(format!(
            "eig_floor must be > 0, got {eig_floor}"
        )));
    }
    let eig = sym_eig(a)?;
    Ok(eig.recompose_with(|l| l.max(eig_floor).ln()))
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Euclidean projection of `s` onto `{v : 0 <= v_i <= 1, sum(v) <= k}`.
///
/// If clipping to `[0, 1]` already satisfies the sum constraint that is the
/// answer. Otherwise the answer is `clip(s - mu, 0, 1)` where `mu > 0` solves
/// `sum_i clip(s_i - mu, 0, 1) = k`. The left side is piecewise linear and
/// nonincreasing in `mu` with kinks at `s_i - 1` and `s_i`, so `mu` is found
/// exactly by locating the bracketing pair of kinks and interpolating.
pub fn project_capped_box_sum(s: &[f64], k: f64) -> Result<Vec<f64>> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(CcaError::input(format!("k must be positive, got {k}")));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(CcaError::input("spectrum has non-finite entries"));
    }
    let clipped: Vec<f64> = s.iter().map(|&v| clip01(v)).collect();
    // the slack absorbs rounding in the shifted output, making P(P(s)) = P(s)
    if clipped.iter().sum::<f64>() <= k + SUM_SLACK * (1.0 + k) {
        return Ok(clipped);
    }
    let mu = capped_shift(s, k);
    Ok(s.iter().map(|&v| clip01(v - mu)).collect())
}

const SUM_SLACK: f64 = 1e-12;

fn clipped_mass(s: &[f64], mu: f64) -> f64 {
    s.iter().map(|&v| clip01(v - mu)).sum()
}

/// Root of `sum clip(s - mu, 0, 1) = k` with `mu > 0`, assuming the mass at
/// `mu = 0` exceeds `k`.
fn capped_shift(s: &[f64], k: f64) -> f64 {
    let mut kinks: Vec<f64> = s
        .iter()
        .flat_map(|&v| [v - 1.0, v])
        .filter(|&b| b > 0.0)
        .collect();
    kinks.push(0.0);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    // mass(0) > k and mass(max kink) = 0 < k, so a bracket exists.
    let mut lo = kinks[0];
    let mut mass_lo = clipped_mass(s, lo);
    for &hi in &kinks[1..] {
        let mass_hi = clipped_mass(s, hi);
        if mass_hi <= k {
            if mass_hi == k {
                return hi;
            }
            // linear on [lo, hi]
            return lo + (mass_lo - k) / (mass_lo - mass_hi) * (hi - lo);
        }
        lo = hi;
        mass_lo = mass_hi;
    }
    lo
}

/// Relative-entropy projection of a descending probability-like spectrum
/// onto `{0 <= v_i <= cap, sum(v) = trace_target}`.
///
/// The projection caps the `c` largest entries at `cap` and rescales the
/// rest by a common factor; `c` is the smallest count for which no rescaled
/// entry exceeds the cap. Uncapped entries keep their mutual ratios.
pub fn entropy_cap(lambda: &[f64], cap: f64, trace_target: f64) -> Result<Vec<f64>> {
    let m = lambda.len();
    if !(cap > 0.0 && cap <= 1.0) {
        return Err(CcaError::input(format!(
            "cap must lie in (0, 1], got {cap}"
        )));
    }
    if !(trace_target > 0.0) {
        return Err(CcaError::input(format!(
            "trace_target must be positive, got {trace_target}"
        )));
    }
    if lambda.iter().any(|&l| !l.is_finite() || l < 0.0) {
        return Err(CcaError::input("spectrum must be finite and nonnegative"));
    }
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return Err(CcaError::input("spectrum must be sorted descending"));
    }
    let total: f64 = lambda.iter().sum();
    if (total - trace_target).abs() > 1e-9 * trace_target.max(1.0) {
        return Err(CcaError::input(format!(
            "spectrum sums to {total}, expected {trace_target}"
        )));
    }
    if (m as f64) * cap < trace_target - 1e-9 {
        return Err(CcaError::Infeasible(format!(
            "{m} entries capped at {cap} cannot reach total {trace_target}"
        )));
    }

    // suffix[c] = sum of lambda[c..]
    let mut suffix = vec![0.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] + lambda[i];
    }
    for c in 0..=m {
        let mass = trace_target - c as f64 * cap;
        if c == m {
            if mass.abs() <= 1e-9 {
                return Ok(vec![cap; m]);
            }
            break;
        }
        if mass < -1e-12 {
            break;
        }
        let rest = suffix[c];
        if rest <= 0.0 {
            if mass <= 1e-12 {
                let mut out = vec![cap; c];
                out.resize(m, 0.0);
                return Ok(out);
            }
            // Remaining mass must land on entries that are exactly zero:
            // only possible when every one of them is forced to the cap.
            if (mass - (m - c) as f64 * cap).abs() <= 1e-9 {
                return Ok(vec![cap; m]);
            }
            return Err(CcaError::Degenerate(format!(
                "remaining {} entries are zero but must carry mass {mass}",
                m - c
            )));
        }
        let scale = mass / rest;
        if lambda[c] * scale <= cap {
            let mut out = vec![cap; c];
            out.extend(lambda[c..].iter().map(|&l| l * scale));
            return Ok(out);
        }
    }
    Err(CcaError::Degenerate(
        "no cap count yields a feasible spectrum".into(),
    ))
}
