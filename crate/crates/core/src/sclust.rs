//! Unsupervised critical-class detection: Gaussian affinity graphs, the
//! normalized Laplacian, sigma-sweep eigengap curves, prominent-mode
//! selection (largest gap value / largest bandwidth), spectral clustering of
//! the embedding, and extraction of critical reheat classes from cluster
//! boundaries.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{canonical_labels, kmeans};
use crate::linalg::{jacobi_eigh, Matrix};
use crate::signatures::SignatureSet;

/// Default eigengap mode search range ("between the third and sixth
/// eigengap"). Exposed as configuration for other datasets.
pub const DEFAULT_MIN_MODE: usize = 3;
pub const DEFAULT_MAX_MODE: usize = 6;
/// Number of k-means restarts for the embedding clustering.
pub const KMEANS_RESTARTS: usize = 50;

/// Gaussian affinity graph with degree and normalized-Laplacian matrices.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    pub n: usize,
    pub sigma: f64,
    /// Symmetric nonnegative affinity with zero diagonal.
    pub weights: Matrix,
    /// Vertex degrees (row sums of the affinity).
    pub degrees: Vec<f64>,
    /// Normalized Laplacian `I - D^{-1/2} W D^{-1/2}`.
    pub laplacian: Matrix,
}

/// Build the affinity graph at neighborhood radius `sigma`:
/// `W[i,j] = exp(-||x_i - x_j||^2 / (2 sigma^2))` off the diagonal.
/// Vertices whose degree underflows to zero are rejected.
pub fn build_graph(signatures: &SignatureSet, sigma: f64) -> Result<AffinityGraph> {
    let n = signatures.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("graph needs at least 2 points, got {n}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    if !signatures.has_finite_values() {
        return Err(Error::InvalidInput("signatures contain non-finite values".into()));
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut weights = Matrix::zeros(n, n);
    for i in 0..n {
        let xi = signatures.signature(i);
        for j in (i + 1)..n {
            let xj = signatures.signature(j);
            let d2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            let w = (-d2 * inv).exp();
            weights.set(i, j, w);
            weights.set(j, i, w);
        }
    }
    let degrees: Vec<f64> = (0..n).map(|i| weights.row(i).iter().sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::Numerical(format!(
            "vertex {i} has zero degree at sigma = {sigma}; the graph is disconnected at machine precision"
        )));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut laplacian = Matrix::zeros(n, n);
    for i in 0..n {
        laplacian.set(i, i, 1.0);
        for j in (i + 1)..n {
            let v = -weights.at(i, j) * inv_sqrt[i] * inv_sqrt[j];
            laplacian.set(i, j, v);
            laplacian.set(j, i, v);
        }
    }
    Ok(AffinityGraph {
        n,
        sigma,
        weights,
        degrees,
        laplacian,
    })
}

/// Prominent-mode selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionAlgorithm {
    /// Largest gap value: the mode whose eigengap peaks highest over sigma.
    Lgv,
    /// Largest bandwidth: the mode whose eigengap stays above half its own
    /// peak over the widest sigma span.
    Lbw,
}

impl std::str::FromStr for SelectionAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lgv" => Ok(SelectionAlgorithm::Lgv),
            "lbw" => Ok(SelectionAlgorithm::Lbw),
            other => Err(Error::InvalidInput(format!("unknown algorithm {other:?} (expected lgv or lbw)"))),
        }
    }
}

impl std::fmt::Display for SelectionAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionAlgorithm::Lgv => write!(f, "lgv"),
            SelectionAlgorithm::Lbw => write!(f, "lbw"),
        }
    }
}

/// Selected prominent mode and dominant sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub algorithm: SelectionAlgorithm,
    pub mode: usize,
    pub sigma: f64,
}

/// Eigenvalue/eigengap curves over the sigma grid.
///
/// For each sigma the ascending eigenvalues `lambda_1..lambda_{max_mode+1}`
/// of the normalized Laplacian are stored together with the eigengaps
/// `g_k = lambda_{k+1} - lambda_k` for `k` in `min_mode..=max_mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sigma_grid: Vec<f64>,
    pub min_mode: usize,
    pub max_mode: usize,
    /// Per sigma: the first `max_mode + 1` eigenvalues, ascending.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Per sigma: `g_{min_mode}..g_{max_mode}`.
    pub gaps: Vec<Vec<f64>>,
    /// Filled once a selection algorithm has run.
    pub selected: Option<Selection>,
}

impl SweepResult {
    /// Gap curve of one mode across the grid.
    pub fn mode_curve(&self, mode: usize) -> Vec<f64> {
        let col = mode - self.min_mode;
        self.gaps.iter().map(|g| g[col]).collect()
    }

    /// Sweep curves as CSV: `sigma,g3,g4,g5,g6` (columns follow the mode
    /// range).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("sigma".to_string())
            .chain((self.min_mode..=self.max_mode).map(|k| format!("g{k}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, sigma) in self.sigma_grid.iter().enumerate() {
            let row: Vec<String> = std::iter::once(format!("{sigma}"))
                .chain(self.gaps[i].iter().map(|g| format!("{g}")))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Logarithmically spaced sigma grid; the default spans [1, 100] with 60
/// points.
pub fn log_sigma_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || stop <= start || points < 2 {
        return Err(Error::InvalidInput(format!(
            "bad sigma grid spec: start {start}, stop {stop}, points {points}"
        )));
    }
    let log_a = start.ln();
    let log_b = stop.ln();
    Ok((0..points)
        .map(|i| (log_a + (log_b - log_a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

pub fn default_sigma_grid() -> Vec<f64> {
    log_sigma_grid(1.0, 100.0, 60).unwrap()
}

/// Sweep the sigma grid, eigendecomposing the normalized Laplacian at each
/// radius and recording the eigengap curves. Sigma points are independent
/// and run in parallel.
pub fn sigma_sweep(
    signatures: &SignatureSet,
    sigma_grid: &[f64],
    min_mode: usize,
    max_mode: usize,
) -> Result<SweepResult> {
    if sigma_grid.is_empty() {
        return Err(Error::InvalidInput("sigma grid is empty".into()));
    }
    if sigma_grid[0] < 1.0 {
        return Err(Error::InvalidInput(format!(
            "sigma grid must start at 1.0 or above, got {}",
            sigma_grid[0]
        )));
    }
    for pair in sigma_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidInput("sigma grid must be strictly ascending".into()));
        }
    }
    if min_mode < 1 || max_mode < min_mode {
        return Err(Error::InvalidInput(format!(
            "bad mode range {min_mode}..={max_mode}"
        )));
    }
    let needed = max_mode + 1;
    if signatures.len() < needed {
        return Err(Error::InvalidInput(format!(
            "need at least {needed} points to read eigengap g{max_mode}, got {}",
            signatures.len()
        )));
    }

    let per_sigma: Vec<Result<(Vec<f64>, Vec<f64>)>> = sigma_grid
        .par_iter()
        .map(|&sigma| {
            let graph = build_graph(signatures, sigma)?;
            let eig = jacobi_eigh(&graph.laplacian).map_err(|e| match e {
                Error::Numerical(msg) => {
                    Error::Numerical(format!("eigensolver failed at sigma = {sigma}: {msg}"))
                }
                other => other,
            })?;
            let head: Vec<f64> = eig.values.iter().take(needed).copied().collect();
            let gaps: Vec<f64> = (min_mode..=max_mode)
                .map(|k| head[k] - head[k - 1])
                .collect();
            Ok((head, gaps))
        })
        .collect();

    let mut eigenvalues = Vec::with_capacity(sigma_grid.len());
    let mut gaps = Vec::with_capacity(sigma_grid.len());
    for item in per_sigma {
        let (ev, g) = item?;
        eigenvalues.push(ev);
        gaps.push(g);
    }
    Ok(SweepResult {
        sigma_grid: sigma_grid.to_vec(),
        min_mode,
        max_mode,
        eigenvalues,
        gaps,
        selected: None,
    })
}

/// Largest gap value: pick the mode with the highest eigengap anywhere on
/// the grid; the dominant sigma is where that mode peaks. Ties resolve
/// toward the smaller mode, then the smaller sigma.
pub fn select_lgv(sweep: &SweepResult) -> Result<(usize, f64)> {
    ensure_curves(sweep)?;
    let mut best_mode = sweep.min_mode;
    let mut best_peak = f64::NEG_INFINITY;
    let mut best_sigma = sweep.sigma_grid[0];
    for mode in sweep.min_mode..=sweep.max_mode {
        let (peak, sigma) = peak_of(sweep, mode);
        if peak > best_peak {
            best_peak = peak;
            best_mode = mode;
            best_sigma = sigma;
        }
    }
    Ok((best_mode, best_sigma))
}

/// Largest bandwidth: pick the mode whose eigengap exceeds half of its own
/// peak over the greatest total sigma length (trapezoidal measure over the
/// grid). The dominant sigma is still the mode's own peak location. Ties
/// resolve toward the smaller mode.
pub fn select_lbw(sweep: &SweepResult) -> Result<(usize, f64)> {
    ensure_curves(sweep)?;
    let mut best_mode = sweep.min_mode;
    let mut best_width = f64::NEG_INFINITY;
    for mode in sweep.min_mode..=sweep.max_mode {
        let width = bandwidth_of(sweep, mode);
        if width > best_width {
            best_width = width;
            best_mode = mode;
        }
    }
    let (_, sigma) = peak_of(sweep, best_mode);
    Ok((best_mode, sigma))
}

fn ensure_curves(sweep: &SweepResult) -> Result<()> {
    if sweep.sigma_grid.is_empty() || sweep.gaps.is_empty() {
        return Err(Error::InvalidInput("sweep has no curves".into()));
    }
    Ok(())
}

/// Highest gap value of one mode and the (smallest) sigma achieving it.
fn peak_of(sweep: &SweepResult, mode: usize) -> (f64, f64) {
    let curve = sweep.mode_curve(mode);
    let mut peak = f64::NEG_INFINITY;
    let mut at = sweep.sigma_grid[0];
    for (i, &g) in curve.iter().enumerate() {
        if g > peak {
            peak = g;
            at = sweep.sigma_grid[i];
        }
    }
    (peak, at)
}

/// Total sigma length where the mode's gap exceeds half its own peak:
/// trapezoidal integral of the indicator over the grid. A flat zero curve
/// has zero bandwidth.
fn bandwidth_of(sweep: &SweepResult, mode: usize) -> f64 {
    let curve = sweep.mode_curve(mode);
    let (peak, _) = peak_of(sweep, mode);
    let threshold = 0.5 * peak;
    let above: Vec<f64> = curve
        .iter()
        .map(|&g| if g > threshold { 1.0 } else { 0.0 })
        .collect();
    let mut width = 0.0;
    for i in 1..sweep.sigma_grid.len() {
        let h = sweep.sigma_grid[i] - sweep.sigma_grid[i - 1];
        width += 0.5 * (above[i - 1] + above[i]) * h;
    }
    width
}

/// Per-class clustering summary: the majority cluster and its purity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassClusterSummary {
    pub class: u32,
    pub majority_cluster: usize,
    /// Fraction of the class assigned to the majority cluster.
    pub purity: f64,
    /// Whether the majority was tied (resolved toward the previous class's
    /// cluster).
    pub tied: bool,
}

/// Clustering output: per-signature assignments, per-class majorities, and
/// the derived critical class set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub algorithm: Option<SelectionAlgorithm>,
    pub k: usize,
    pub sigma: f64,
    pub assignments: Vec<usize>,
    pub class_summary: Vec<ClassClusterSummary>,
    pub critical: BTreeSet<u32>,
}

/// Spectral clustering of the signatures at `(k, sigma)`: embed with the
/// `k` smallest-eigenvalue eigenvectors of the normalized Laplacian,
/// row-normalize, k-means the rows (k-means++ seeding, 50 restarts, best
/// inertia), then summarize cluster majorities per reheat class.
pub fn spectral_cluster(signatures: &SignatureSet, k: usize, sigma: f64, seed: u64) -> Result<ClusterReport> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("cluster count k = {k} must be at least 2")));
    }
    if k > signatures.len() {
        return Err(Error::InvalidInput(format!(
            "cluster count k = {k} exceeds {} points",
            signatures.len()
        )));
    }
    let graph = build_graph(signatures, sigma)?;
    let eig = jacobi_eigh(&graph.laplacian)?;
    let n = signatures.len();
    let mut embedding = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            embedding.set(i, j, eig.vectors.at(i, j));
        }
    }
    for i in 0..n {
        let norm: f64 = (0..k).map(|j| embedding.at(i, j).powi(2)).sum::<f64>().sqrt();
        if norm > 1e-300 {
            for j in 0..k {
                let v = embedding.at(i, j) / norm;
                embedding.set(i, j, v);
            }
        }
    }
    let clustering = kmeans(&embedding, k, seed, KMEANS_RESTARTS)?;
    let assignments = canonical_labels(&clustering.assignments);
    let class_summary = summarize_classes(signatures, &assignments, k)?;
    let critical = critical_classes(&class_summary);
    Ok(ClusterReport {
        algorithm: None,
        k,
        sigma,
        assignments,
        class_summary,
        critical,
    })
}

/// Majority cluster and purity per reheat class, ascending class order.
/// Majority ties resolve toward the previous class's majority cluster when
/// it is among the tied clusters, otherwise toward the smallest cluster id.
pub fn summarize_classes(
    signatures: &SignatureSet,
    assignments: &[usize],
    k: usize,
) -> Result<Vec<ClassClusterSummary>> {
    if assignments.len() != signatures.len() {
        return Err(Error::DimensionMismatch("assignment length".into()));
    }
    let mut summaries = Vec::new();
    let mut previous: Option<usize> = None;
    for class in signatures.classes_present() {
        let idx = signatures.indices_of_class(class);
        let mut counts = vec![0usize; k];
        for &i in &idx {
            counts[assignments[i]] += 1;
        }
        let top = *counts.iter().max().unwrap();
        let tied_clusters: Vec<usize> = (0..k).filter(|&c| counts[c] == top).collect();
        let tied = tied_clusters.len() > 1;
        let majority = if tied {
            match previous {
                Some(p) if tied_clusters.contains(&p) => p,
                _ => tied_clusters[0],
            }
        } else {
            tied_clusters[0]
        };
        summaries.push(ClassClusterSummary {
            class,
            majority_cluster: majority,
            purity: top as f64 / idx.len() as f64,
            tied,
        });
        previous = Some(majority);
    }
    Ok(summaries)
}

/// Critical classes are the cluster boundaries: every class whose majority
/// cluster differs from the previous class's majority cluster.
pub fn critical_classes(summary: &[ClassClusterSummary]) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for pair in summary.windows(2) {
        if pair[1].majority_cluster != pair[0].majority_cluster {
            out.insert(pair[1].class);
        }
    }
    out
}

/// Critical classes from a plain per-class majority-cluster list
/// (index = class).
pub fn critical_classes_from_majorities(majorities: &[usize]) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for c in 1..majorities.len() {
        if majorities[c] != majorities[c - 1] {
            out.insert(c as u32);
        }
    }
    out
}

/// Jaccard agreement between two critical-class sets; two empty sets agree
/// perfectly.
pub fn agreement(predicted: &BTreeSet<u32>, reference: &BTreeSet<u32>) -> f64 {
    if predicted.is_empty() && reference.is_empty() {
        return 1.0;
    }
    let intersection = predicted.intersection(reference).count() as f64;
    let union = predicted.union(reference).count() as f64;
    intersection / union
}

/// Adjusted Rand index between two partitions of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same points");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for i in 0..n {
        table[a[i] * kb + b[i]] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_table: f64 = table.iter().map(|&x| choose2(x)).sum();
    let sum_rows: f64 = rows.iter().map(|&x| choose2(x)).sum();
    let sum_cols: f64 = cols.iter().map(|&x| choose2(x)).sum();
    let total = choose2(n as u64);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-30 {
        return 1.0;
    }
    (sum_table - expected) / (max_index - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points_1d(values: &[f64]) -> SignatureSet {
        let mut s = SignatureSet::new(1);
        for &v in values {
            s.push(&[v], 0, 0).unwrap();
        }
        s
    }

    fn blob_set(centers: &[f64], per_blob: usize, spread: f64) -> SignatureSet {
        let mut s = SignatureSet::new(2);
        for (c, &center) in centers.iter().enumerate() {
            for i in 0..per_blob {
                let angle = i as f64 * 2.3999632297; // golden-angle spiral
                let r = spread * (i as f64 + 1.0) / per_blob as f64;
                s.push(&[center + r * angle.cos(), r * angle.sin()], 0, c as u32)
                    .unwrap();
            }
        }
        s
    }

    #[test]
    fn two_identical_points_give_known_graph() {
        let s = points_1d(&[5.0, 5.0]);
        let g = build_graph(&s, 3.0).unwrap();
        assert_eq!(g.weights.at(0, 0), 0.0);
        assert_eq!(g.weights.at(0, 1), 1.0);
        assert_eq!(g.weights.at(1, 0), 1.0);
        let eig = jacobi_eigh(&g.laplacian).unwrap();
        assert!((eig.values[0] - 0.0).abs() < 1e-12);
        assert!((eig.values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn huge_sigma_saturates_affinity() {
        let s = points_1d(&[0.0, 7.0]);
        let g = build_graph(&s, 1e9).unwrap();
        assert!((g.weights.at(0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smallest_eigenvector_follows_sqrt_degree() {
        let s = points_1d(&[0.0, 0.5, 1.5, 2.0, 4.0]);
        let g = build_graph(&s, 1.25).unwrap();
        let eig = jacobi_eigh(&g.laplacian).unwrap();
        assert!(eig.values[0].abs() < 1e-8);
        let expect: Vec<f64> = g.degrees.iter().map(|d| d.sqrt()).collect();
        let norm = expect.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut dot = 0.0;
        for i in 0..s.len() {
            dot += eig.vectors.at(i, 0) * expect[i] / norm;
        }
        assert!(dot.abs() > 1.0 - 1e-8, "cosine {dot}");
    }

    #[test]
    fn laplacian_eigenvalues_stay_in_range() {
        let s = blob_set(&[0.0, 8.0, 16.0], 8, 0.7);
        for sigma in [1.0, 2.5, 10.0] {
            let g = build_graph(&s, sigma).unwrap();
            assert!(g.laplacian.asymmetry() < 1e-10);
            let eig = jacobi_eigh(&g.laplacian).unwrap();
            assert!(eig.values[0] >= -1e-8);
            assert!(eig.values[0] <= 1e-8);
            assert!(*eig.values.last().unwrap() <= 2.0 + 1e-8);
        }
    }

    #[test]
    fn graph_rejects_degenerate_inputs() {
        assert!(build_graph(&points_1d(&[1.0]), 1.0).is_err());
        assert!(build_graph(&points_1d(&[0.0, 1.0]), 0.0).is_err());
        let mut bad = SignatureSet::new(1);
        bad.push(&[f64::NAN], 0, 0).unwrap();
        bad.push(&[0.0], 0, 0).unwrap();
        assert!(build_graph(&bad, 1.0).is_err());
        // Distances so large the kernel underflows to exact zero.
        let far = points_1d(&[0.0, 1e8]);
        let err = build_graph(&far, 1.0).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn sweep_validates_grid_and_size() {
        let s = blob_set(&[0.0, 10.0], 6, 0.5);
        assert!(sigma_sweep(&s, &[], 3, 6).is_err());
        assert!(sigma_sweep(&s, &[0.5, 2.0], 3, 6).is_err(), "grid below 1.0");
        assert!(sigma_sweep(&s, &[1.0, 1.0], 3, 6).is_err(), "not ascending");
        let tiny = blob_set(&[0.0], 5, 0.5);
        assert!(sigma_sweep(&tiny, &[1.0, 2.0], 3, 6).is_err(), "needs 7 points");
    }

    #[test]
    fn three_far_blobs_dominate_third_gap() {
        let s = blob_set(&[0.0, 60.0, 120.0], 8, 0.8);
        let grid = log_sigma_grid(1.0, 40.0, 12).unwrap();
        let sweep = sigma_sweep(&s, &grid, 3, 6).unwrap();
        let g3: f64 = sweep.mode_curve(3).iter().fold(f64::MIN, |a, &b| a.max(b));
        for mode in 4..=6 {
            let peak: f64 = sweep.mode_curve(mode).iter().fold(f64::MIN, |a, &b| a.max(b));
            assert!(g3 > peak, "g3 peak {g3} should beat g{mode} peak {peak}");
        }
        // All stored gaps are nonnegative by the ascending ordering.
        for row in &sweep.gaps {
            for &g in row {
                assert!(g >= -1e-8);
            }
        }
    }

    #[test]
    fn jittered_single_cluster_has_tiny_gaps_at_large_sigma() {
        let values: Vec<f64> = (0..10).map(|i| 1e-3 * i as f64).collect();
        let s = points_1d(&values);
        let sweep = sigma_sweep(&s, &[50.0, 100.0], 3, 6).unwrap();
        for row in &sweep.gaps {
            for &g in row {
                assert!(g < 1e-3, "gap {g} not tiny");
            }
        }
    }

    #[test]
    fn duplicated_points_keep_curves_finite_and_ordered() {
        let mut s = blob_set(&[0.0, 30.0], 6, 0.5);
        let copy = s.clone();
        s.append(&copy).unwrap();
        let grid = log_sigma_grid(1.0, 20.0, 6).unwrap();
        let sweep = sigma_sweep(&s, &grid, 3, 6).unwrap();
        for (ev, gaps) in sweep.eigenvalues.iter().zip(&sweep.gaps) {
            assert!(ev.iter().all(|v| v.is_finite()));
            assert!(gaps.iter().all(|g| g.is_finite() && *g >= -1e-8));
            for w in ev.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    fn synthetic_sweep(curves: Vec<(usize, Vec<f64>)>, grid: Vec<f64>) -> SweepResult {
        let min_mode = curves.iter().map(|(m, _)| *m).min().unwrap();
        let max_mode = curves.iter().map(|(m, _)| *m).max().unwrap();
        let gaps: Vec<Vec<f64>> = (0..grid.len())
            .map(|i| curves.iter().map(|(_, c)| c[i]).collect())
            .collect();
        SweepResult {
            sigma_grid: grid,
            min_mode,
            max_mode,
            eigenvalues: vec![],
            gaps,
            selected: None,
        }
    }

    #[test]
    fn lgv_takes_highest_peak() {
        let grid = vec![1.0, 2.0, 3.0, 4.0];
        let sweep = synthetic_sweep(
            vec![
                (3, vec![0.1, 0.5, 0.2, 0.1]),
                (4, vec![0.2, 0.9, 0.3, 0.1]),
                (5, vec![0.4, 0.1, 0.1, 0.1]),
                (6, vec![0.0, 0.0, 0.3, 0.0]),
            ],
            grid,
        );
        let (k, sigma) = select_lgv(&sweep).unwrap();
        assert_eq!(k, 4);
        assert_eq!(sigma, 2.0);
    }

    #[test]
    fn lgv_ties_resolve_to_smaller_mode() {
        let grid = vec![1.0, 2.0];
        let sweep = synthetic_sweep(
            vec![(3, vec![0.5, 0.1]), (4, vec![0.1, 0.5]), (5, vec![0.0; 2]), (6, vec![0.0; 2])],
            grid,
        );
        let (k, sigma) = select_lgv(&sweep).unwrap();
        assert_eq!(k, 3);
        assert_eq!(sigma, 1.0);
    }

    #[test]
    fn lbw_takes_widest_half_peak_span() {
        // g3 holds above half its peak across the whole grid; g4 spikes
        // higher but briefly.
        let grid: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let g3: Vec<f64> = (0..40).map(|_| 0.4).collect();
        let g4: Vec<f64> = (0..40).map(|i| if (4..8).contains(&i) { 0.9 } else { 0.0 }).collect();
        let g5 = vec![0.0; 40];
        let g6 = vec![0.0; 40];
        let sweep = synthetic_sweep(vec![(3, g3), (4, g4), (5, g5), (6, g6)], grid);
        let (k, _) = select_lbw(&sweep).unwrap();
        assert_eq!(k, 3);
        let (k_lgv, _) = select_lgv(&sweep).unwrap();
        assert_eq!(k_lgv, 4);
    }

    #[test]
    fn lbw_flat_zero_curve_has_zero_bandwidth() {
        let grid = vec![1.0, 2.0, 3.0];
        let sweep = synthetic_sweep(
            vec![(3, vec![0.0; 3]), (4, vec![0.1, 0.2, 0.1]), (5, vec![0.0; 3]), (6, vec![0.0; 3])],
            grid,
        );
        assert_eq!(bandwidth_of(&sweep, 3), 0.0);
        let (k, _) = select_lbw(&sweep).unwrap();
        assert_eq!(k, 4);
    }

    #[test]
    fn selection_is_scale_invariant() {
        let grid: Vec<f64> = (0..20).map(|i| 1.0 + 0.5 * i as f64).collect();
        let base: Vec<Vec<f64>> = vec![
            (0..20).map(|i| 0.3 + 0.01 * (i % 5) as f64).collect(),
            (0..20).map(|i| if i > 10 { 0.8 } else { 0.05 }).collect(),
            (0..20).map(|i| 0.1 + 0.002 * i as f64).collect(),
            (0..20).map(|_| 0.02).collect(),
        ];
        let make = |scale: f64| {
            synthetic_sweep(
                base.iter()
                    .enumerate()
                    .map(|(m, c)| (m + 3, c.iter().map(|v| v * scale).collect()))
                    .collect(),
                grid.clone(),
            )
        };
        let a = make(1.0);
        let b = make(137.0);
        assert_eq!(select_lgv(&a).unwrap(), select_lgv(&b).unwrap());
        assert_eq!(select_lbw(&a).unwrap(), select_lbw(&b).unwrap());
    }

    #[test]
    fn spectral_cluster_recovers_two_far_blobs() {
        let s = blob_set(&[0.0, 200.0], 10, 1.0);
        let report = spectral_cluster(&s, 2, 5.0, 13).unwrap();
        let truth: Vec<usize> = (0..20).map(|i| i / 10).collect();
        assert!((adjusted_rand_index(&report.assignments, &truth) - 1.0).abs() < 1e-12);
        assert_eq!(report.critical, BTreeSet::from([1]));
        for summary in &report.class_summary {
            assert_eq!(summary.purity, 1.0);
            assert!(!summary.tied);
        }
    }

    #[test]
    fn spectral_cluster_k_equals_n() {
        let s = points_1d(&[0.0, 2.0, 5.0, 9.0, 14.0]);
        let report = spectral_cluster(&s, 5, 10.0, 3).unwrap();
        let mut sorted = report.assignments.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn spectral_cluster_permutation_invariant_partition() {
        let s = blob_set(&[0.0, 100.0, 200.0], 7, 0.8);
        let report = spectral_cluster(&s, 3, 4.0, 99).unwrap();
        let perm: Vec<usize> = (0..s.len()).rev().collect();
        let shuffled = s.select(&perm);
        let report_shuffled = spectral_cluster(&shuffled, 3, 4.0, 99).unwrap();
        let mut unshuffled = vec![0usize; s.len()];
        for (new_pos, &orig) in perm.iter().enumerate() {
            unshuffled[orig] = report_shuffled.assignments[new_pos];
        }
        assert_eq!(
            canonical_labels(&report.assignments),
            canonical_labels(&unshuffled),
            "partition changed under input permutation"
        );
    }

    #[test]
    fn spectral_cluster_rejects_small_k() {
        let s = points_1d(&[0.0, 1.0, 2.0]);
        assert!(spectral_cluster(&s, 1, 1.0, 0).is_err());
        assert!(spectral_cluster(&s, 4, 1.0, 0).is_err());
    }

    #[test]
    fn critical_classes_from_boundary_patterns() {
        assert_eq!(
            critical_classes_from_majorities(&[0, 1, 1, 1, 2, 2]),
            BTreeSet::from([1, 4])
        );
        assert_eq!(
            critical_classes_from_majorities(&[0, 1, 2, 2, 3, 3]),
            BTreeSet::from([1, 2, 4])
        );
        assert_eq!(critical_classes_from_majorities(&[0, 0, 0, 0, 0, 0]), BTreeSet::new());
    }

    #[test]
    fn majority_tie_resolves_toward_previous_class() {
        let mut s = SignatureSet::new(1);
        // Class 0: firmly cluster 0. Class 1: split 2-2 between clusters 0
        // and 1; the tie resolves to class 0's cluster, so no boundary.
        for _ in 0..4 {
            s.push(&[0.0], 0, 0).unwrap();
        }
        for _ in 0..4 {
            s.push(&[1.0], 0, 1).unwrap();
        }
        let assignments = vec![0, 0, 0, 0, 0, 0, 1, 1];
        let summary = summarize_classes(&s, &assignments, 2).unwrap();
        assert!(summary[1].tied);
        assert_eq!(summary[1].majority_cluster, 0);
        assert_eq!(critical_classes(&summary), BTreeSet::new());
    }

    #[test]
    fn agreement_is_jaccard_with_empty_convention() {
        let a = BTreeSet::from([1, 4]);
        assert_eq!(agreement(&a, &a), 1.0);
        let b = BTreeSet::from([1, 2, 4]);
        assert!((agreement(&b, &a) - 2.0 / 3.0).abs() < 1e-12);
        let c = BTreeSet::from([1]);
        let d = BTreeSet::from([5]);
        assert_eq!(agreement(&c, &d), 0.0);
        assert_eq!(agreement(&BTreeSet::new(), &BTreeSet::new()), 1.0);
    }

    #[test]
    fn ari_extremes() {
        let a = vec![0, 0, 1, 1, 2, 2];
        assert!((adjusted_rand_index(&a, &a) - 1.0).abs() < 1e-12);
        let relabeled = vec![2, 2, 0, 0, 1, 1];
        assert!((adjusted_rand_index(&a, &relabeled) - 1.0).abs() < 1e-12);
        let b = vec![0, 1, 0, 1, 0, 1];
        assert!(adjusted_rand_index(&a, &b) < 0.2);
    }

    #[test]
    fn zero_eigenvalue_count_matches_components() {
        // Two far groups whose cross affinities underflow to exact zero.
        let s = points_1d(&[0.0, 1.0, 2.0, 1e6, 1e6 + 1.0, 1e6 + 2.0]);
        let g = build_graph(&s, 1.5).unwrap();
        let eig = jacobi_eigh(&g.laplacian).unwrap();
        let zeros = eig.values.iter().filter(|v| v.abs() <= 1e-8).count();
        assert_eq!(zeros, 2);
    }
}
