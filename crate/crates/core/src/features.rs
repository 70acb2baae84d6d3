//! Sample-level statistics: Gaussian fits of signature sets, Fisher
//! discriminant reduction, and the Bhattacharyya distance statistic that
//! converts a spectral sample into a single scalar feature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generalized_eigh, jacobi_eigh, Cholesky, Matrix};
use crate::signatures::SignatureSet;

/// Condition-number threshold beyond which a covariance is regularized.
const COND_LIMIT: f64 = 1e12;
/// Relative ridge: lambda = 1e-6 * trace / dim.
const RIDGE_SCALE: f64 = 1e-6;
/// Absolute ridge floor for fully degenerate (zero-trace) covariances.
const RIDGE_FLOOR: f64 = 1e-12;

/// Mean vector and covariance matrix of a signature sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianStats {
    pub dim: usize,
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub sample_count: usize,
    /// Whether the ridge was applied to make the covariance positive definite.
    pub regularized: bool,
}

impl GaussianStats {
    /// Construct directly from known parameters (covariance must be square
    /// and symmetric; no regularization is applied).
    pub fn from_parts(mean: Vec<f64>, covariance: Matrix, sample_count: usize) -> Result<Self> {
        let dim = mean.len();
        if covariance.rows() != dim || covariance.cols() != dim {
            return Err(Error::DimensionMismatch("covariance does not match mean length".into()));
        }
        Ok(GaussianStats {
            dim,
            mean,
            covariance,
            sample_count,
            regularized: false,
        })
    }

    /// True when the sample is too small for a full-rank unregularized fit.
    pub fn is_underdetermined(&self) -> bool {
        self.sample_count < self.dim + 1
    }
}

/// Ridge a symmetric PSD matrix in place when it is singular or badly
/// conditioned. Returns the lambda that was added (0.0 when untouched).
fn regularize_covariance(cov: &mut Matrix) -> Result<f64> {
    let eig = jacobi_eigh(cov)?;
    let min = *eig.values.first().expect("non-empty");
    let max = *eig.values.last().expect("non-empty");
    let needs = min <= 0.0 || (min > 0.0 && max / min > COND_LIMIT);
    if !needs {
        return Ok(0.0);
    }
    let d = cov.rows() as f64;
    let mut lambda = RIDGE_SCALE * cov.trace() / d;
    if lambda <= 0.0 {
        lambda = RIDGE_FLOOR;
    }
    cov.add_diagonal(lambda);
    // The ridge must dominate any round-off negativity.
    if min + lambda <= 0.0 {
        cov.add_diagonal(-lambda);
        let bigger = min.abs() * 2.0 + lambda.max(RIDGE_FLOOR);
        cov.add_diagonal(bigger);
        return Ok(bigger);
    }
    Ok(lambda)
}

/// Fit mean and unbiased covariance (divisor N-1) to a signature sample,
/// applying the ridge when the covariance is singular or ill-conditioned.
pub fn fit_gaussian(set: &SignatureSet) -> Result<GaussianStats> {
    let n = set.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "Gaussian fit needs at least 2 signatures, got {n}"
        )));
    }
    if !set.has_finite_values() {
        return Err(Error::InvalidInput("signatures contain non-finite values".into()));
    }
    let d = set.dim();
    let mut mean = vec![0.0_f64; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(set.signature(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = Matrix::zeros(d, d);
    let mut centered = vec![0.0_f64; d];
    for i in 0..n {
        for (c, (v, m)) in centered.iter_mut().zip(set.signature(i).iter().zip(&mean)) {
            *c = v - m;
        }
        for a in 0..d {
            for b in a..d {
                let v = cov.at(a, b) + centered[a] * centered[b];
                cov.set(a, b, v);
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov.at(a, b) / denom;
            cov.set(a, b, v);
            cov.set(b, a, v);
        }
    }

    let lambda = regularize_covariance(&mut cov)?;
    Ok(GaussianStats {
        dim: d,
        mean,
        covariance: cov,
        sample_count: n,
        regularized: lambda > 0.0,
    })
}

/// Fisher discriminant projection: basis columns solve the generalized
/// eigenproblem `S_b v = lambda S_w v`, ordered by decreasing discriminant
/// ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdaProjection {
    pub input_dim: usize,
    pub output_dim: usize,
    /// d x k matrix of projection directions (columns).
    pub basis: Matrix,
    /// Generalized eigenvalues, sorted non-increasing, one per column.
    pub discriminant_ratios: Vec<f64>,
    pub regularized: bool,
}

/// Fit the Fisher discriminant basis from per-row class labels.
///
/// Requires at least two classes, at least two signatures per class, and
/// `k <= min(d, C-1)`.
pub fn fit_fda(data: &SignatureSet, k: usize) -> Result<FdaProjection> {
    let d = data.dim();
    let classes = data.classes_present();
    let c = classes.len();
    if c < 2 {
        return Err(Error::InvalidInput(format!(
            "FDA needs at least 2 classes, got {c}"
        )));
    }
    let k_max = d.min(c - 1);
    if k == 0 || k > k_max {
        return Err(Error::InvalidInput(format!(
            "FDA output dim {k} out of range 1..={k_max}"
        )));
    }
    if !data.has_finite_values() {
        return Err(Error::InvalidInput("signatures contain non-finite values".into()));
    }

    let n_total = data.len() as f64;
    let mut global_mean = vec![0.0_f64; d];
    for i in 0..data.len() {
        for (g, v) in global_mean.iter_mut().zip(data.signature(i)) {
            *g += v;
        }
    }
    for g in &mut global_mean {
        *g /= n_total;
    }

    let mut s_w = Matrix::zeros(d, d);
    let mut s_b = Matrix::zeros(d, d);
    for &class in &classes {
        let idx = data.indices_of_class(class);
        let n_c = idx.len();
        if n_c < 2 {
            return Err(Error::InvalidInput(format!(
                "class {class} has {n_c} signatures; FDA needs at least 2 per class"
            )));
        }
        let mut mu_c = vec![0.0_f64; d];
        for &i in &idx {
            for (m, v) in mu_c.iter_mut().zip(data.signature(i)) {
                *m += v;
            }
        }
        for m in &mut mu_c {
            *m /= n_c as f64;
        }
        for &i in &idx {
            let x = data.signature(i);
            for a in 0..d {
                let da = x[a] - mu_c[a];
                for b in a..d {
                    let v = s_w.at(a, b) + da * (x[b] - mu_c[b]);
                    s_w.set(a, b, v);
                }
            }
        }
        for a in 0..d {
            let da = mu_c[a] - global_mean[a];
            for b in a..d {
                let v = s_b.at(a, b) + n_c as f64 * da * (mu_c[b] - global_mean[b]);
                s_b.set(a, b, v);
            }
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            s_w.set(b, a, s_w.at(a, b));
            s_b.set(b, a, s_b.at(a, b));
        }
    }

    let lambda = regularize_covariance(&mut s_w)?;
    let eig = generalized_eigh(&s_b, &s_w).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(format!(
            "within-class scatter is singular despite regularization: {msg}"
        )),
        other => other,
    })?;

    // Largest generalized eigenvalues are the most discriminative directions.
    let mut basis = Matrix::zeros(d, k);
    let mut ratios = Vec::with_capacity(k);
    let n = eig.values.len();
    for col in 0..k {
        let src = n - 1 - col;
        for r in 0..d {
            basis.set(r, col, eig.vectors.at(r, src));
        }
        ratios.push(eig.values[src]);
    }
    Ok(FdaProjection {
        input_dim: d,
        output_dim: k,
        basis,
        discriminant_ratios: ratios,
        regularized: lambda > 0.0,
    })
}

/// Project every signature through the basis (`x -> B^T x`), preserving
/// labels.
pub fn project(proj: &FdaProjection, set: &SignatureSet) -> Result<SignatureSet> {
    if set.dim() != proj.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "projection expects dim {}, set has {}",
            proj.input_dim,
            set.dim()
        )));
    }
    let k = proj.output_dim;
    let mut out = SignatureSet::new(k);
    let mut row = vec![0.0_f64; k];
    for i in 0..set.len() {
        let x = set.signature(i);
        for (j, r) in row.iter_mut().enumerate() {
            *r = (0..proj.input_dim).map(|a| proj.basis.at(a, j) * x[a]).sum();
        }
        out.push(&row, set.trial(i), set.class(i))?;
    }
    Ok(out)
}

/// Bhattacharyya distance between two Gaussians, split into the
/// Mahalanobis-type mean term and the covariance-disparity log-determinant
/// term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BhattacharyyaFeature {
    /// Mean term: (1/8) (mu_t - mu_r)^T ((S_t + S_r)/2)^{-1} (mu_t - mu_r).
    pub d_b1: f64,
    /// Covariance disparity: (1/2) log(det M / sqrt(det S_t det S_r)).
    pub d_b2: f64,
    /// Total distance, exactly `d_b1 + d_b2`.
    pub d_b: f64,
    pub target_id: u32,
    pub reference_id: u32,
}

/// Compute the Bhattacharyya distance between a target and a reference
/// Gaussian. Everything runs through symmetric Cholesky factorizations; no
/// explicit inverse or raw determinant is formed.
pub fn bhattacharyya(target: &GaussianStats, reference: &GaussianStats) -> Result<BhattacharyyaFeature> {
    if target.dim != reference.dim {
        return Err(Error::DimensionMismatch(format!(
            "target dim {} vs reference dim {}",
            target.dim, reference.dim
        )));
    }
    let d = target.dim;
    let mut mid = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            mid.set(a, b, 0.5 * (target.covariance.at(a, b) + reference.covariance.at(a, b)));
        }
    }
    let chol_mid = Cholesky::factor(&mid)
        .map_err(|_| Error::Numerical("averaged covariance is not positive definite".into()))?;
    let chol_t = Cholesky::factor(&target.covariance)
        .map_err(|_| Error::Numerical("target covariance is not positive definite".into()))?;
    let chol_r = Cholesky::factor(&reference.covariance)
        .map_err(|_| Error::Numerical("reference covariance is not positive definite".into()))?;

    let delta: Vec<f64> = target.mean.iter().zip(&reference.mean).map(|(t, r)| t - r).collect();
    let y = chol_mid.solve_lower(&delta)?;
    let d_b1 = 0.125 * y.iter().map(|v| v * v).sum::<f64>();

    // 0.5 * (log det M - 0.5 (log det S_t + log det S_r)); nonnegative by
    // AM-GM, so round-off negatives clamp to zero.
    let d_b2 = (0.5 * (chol_mid.log_det() - 0.5 * (chol_t.log_det() + chol_r.log_det()))).max(0.0);

    Ok(BhattacharyyaFeature {
        d_b1,
        d_b2,
        d_b: d_b1 + d_b2,
        target_id: 0,
        reference_id: 0,
    })
}
