//! Reheat-cycle-count classification from the scalar Bhattacharyya feature:
//! a from-scratch one-vs-one RBF SVM trained by SMO, a stratified
//! cross-validated gamma/cost grid sweep, accuracy/confusion reporting, and
//! the nearest-neighbor / nearest-centroid baselines.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::derive_seed;

/// Default gamma grid of the parameter sweep: 0.5 to 1.4 in steps of 0.1.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.1 * i as f64).collect()
}

/// Default cost grid of the parameter sweep: decades from 1e-3 to 1e4.
pub fn default_cost_grid() -> Vec<f64> {
    (-3..=4).map(|e| 10f64.powi(e)).collect()
}

/// One training/evaluation point: the scalar feature of a labelled set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelledFeature {
    /// Bhattacharyya distance of the set against the pure reference.
    pub x: f64,
    /// Reheat class in `0..C`.
    pub y: u32,
    pub trial_id: u32,
    pub set_id: u32,
}

/// One pairwise soft-margin machine of the one-vs-one ensemble. Class `a`
/// plays the +1 role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub class_a: u32,
    pub class_b: u32,
    /// Standardized support feature values.
    pub support_x: Vec<f64>,
    /// alpha_i * y_i per support value.
    pub alpha_y: Vec<f64>,
    pub bias: f64,
}

impl PairMachine {
    /// Decision value at a standardized input.
    pub fn decision(&self, z: f64, gamma: f64) -> f64 {
        let mut f = self.bias;
        for (sx, ay) in self.support_x.iter().zip(&self.alpha_y) {
            let d = sx - z;
            f += ay * (-gamma * d * d).exp();
        }
        f
    }
}

/// Trained one-vs-one RBF SVM over the scalar feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub cost: f64,
    pub class_count: u32,
    /// z-score constants estimated from the training features.
    pub standardize_mean: f64,
    pub standardize_std: f64,
    pub machines: Vec<PairMachine>,
    pub seed: u64,
}

/// SMO stopping parameters. The KKT tolerance is 1e-3; sweeps are bounded.
#[derive(Debug, Clone, Copy)]
pub struct SmoParams {
    pub tol: f64,
    /// Consecutive violation-free sweeps required to declare convergence.
    pub quiet_passes: usize,
    /// Hard cap on total sweeps.
    pub max_sweeps: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            tol: 1e-3,
            quiet_passes: 2,
            max_sweeps: 2000,
        }
    }
}

/// Sequential minimal optimization on one binary problem.
/// `ys` entries are +1 or -1. Returns (alphas, bias).
///
/// Converges to the configured KKT tolerance, then keeps sweeping at a
/// tighter working tolerance while updates still make progress, so equal
/// problems (e.g. duplicated training sets) land on the same decision
/// function.
fn smo(xs: &[f64], ys: &[f64], gamma: f64, cost: f64, params: SmoParams, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let n = xs.len();
    let kernel = |i: usize, j: usize| {
        let d = xs[i] - xs[j];
        (-gamma * d * d).exp()
    };
    // Kernel cache: training problems here are small (a few hundred points).
    let k: Vec<f64> = (0..n * n)
        .map(|idx| kernel(idx / n, idx % n))
        .collect();
    let mut alpha = vec![0.0_f64; n];
    let mut bias = 0.0_f64;
    // Error cache: e[i] = f(x_i) - y_i with all alphas zero initially.
    let mut e: Vec<f64> = ys.iter().map(|y| -y).collect();

    let mut tol = params.tol;
    let mut phase = 0usize;
    let mut quiet = 0usize;
    let mut sweeps = 0usize;
    while sweeps < params.max_sweeps {
        if quiet >= params.quiet_passes {
            if phase == 1 {
                break;
            }
            phase = 1;
            quiet = 0;
            tol = (params.tol * 1e-3).max(1e-9);
        }
        sweeps += 1;
        let mut changed = 0usize;
        for i in 0..n {
            let r_i = e[i] * ys[i];
            if !((r_i < -tol && alpha[i] < cost) || (r_i > tol && alpha[i] > 0.0)) {
                continue;
            }
            // Second-choice heuristic: maximize |E_i - E_j| first, then scan
            // every other partner from a seeded random start until one makes
            // progress.
            let mut order: Vec<usize> = Vec::with_capacity(n);
            let mut best_j = usize::MAX;
            let mut best_gap = -1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (e[i] - e[j]).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best_j = j;
                }
            }
            if best_j != usize::MAX {
                order.push(best_j);
            }
            let start = rng.random_range(0..n);
            for off in 0..n {
                let j = (start + off) % n;
                if j != i && Some(&j) != order.first() {
                    order.push(j);
                }
            }

            for &j in &order {
                let eta = 2.0 * k[i * n + j] - k[i * n + i] - k[j * n + j];
                if eta >= -1e-12 {
                    continue;
                }
                let (lo, hi) = if (ys[i] - ys[j]).abs() > 0.5 {
                    // y_i != y_j
                    ((alpha[j] - alpha[i]).max(0.0), (cost + alpha[j] - alpha[i]).min(cost))
                } else {
                    ((alpha[i] + alpha[j] - cost).max(0.0), (alpha[i] + alpha[j]).min(cost))
                };
                if hi - lo < 1e-12 {
                    continue;
                }
                let mut aj_new = alpha[j] - ys[j] * (e[i] - e[j]) / eta;
                aj_new = aj_new.clamp(lo, hi);
                let d_aj = aj_new - alpha[j];
                if d_aj.abs() < 1e-12 {
                    continue;
                }
                let s = ys[i] * ys[j];
                let ai_new = alpha[i] - s * d_aj;
                let d_ai = ai_new - alpha[i];

                let b1 = bias - e[i] - ys[i] * d_ai * k[i * n + i] - ys[j] * d_aj * k[i * n + j];
                let b2 = bias - e[j] - ys[i] * d_ai * k[i * n + j] - ys[j] * d_aj * k[j * n + j];
                let new_bias = if ai_new > 0.0 && ai_new < cost {
                    b1
                } else if aj_new > 0.0 && aj_new < cost {
                    b2
                } else {
                    0.5 * (b1 + b2)
                };
                let d_b = new_bias - bias;
                for (t, err) in e.iter_mut().enumerate() {
                    *err += ys[i] * d_ai * k[i * n + t] + ys[j] * d_aj * k[j * n + t] + d_b;
                }
                alpha[i] = ai_new;
                alpha[j] = aj_new;
                bias = new_bias;
                changed += 1;
                break;
            }
        }
        if changed == 0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
    }
    (alpha, bias)
}

fn validate_classes(data: &[LabelledFeature]) -> Result<u32> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no training features".into()));
    }
    for f in data {
        if !f.x.is_finite() {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
    }
    let max = data.iter().map(|f| f.y).max().unwrap();
    let count = max + 1;
    if count < 2 {
        return Err(Error::InvalidInput("need at least 2 classes".into()));
    }
    for c in 0..count {
        if !data.iter().any(|f| f.y == c) {
            return Err(Error::InvalidInput(format!("class {c} has zero samples")));
        }
    }
    Ok(count)
}

/// Train the one-vs-one RBF SVM. Features are z-scored with population
/// statistics of the training data before the kernel. Deterministic given
/// the seed.
pub fn svm_train(data: &[LabelledFeature], gamma: f64, cost: f64, seed: u64) -> Result<SvmModel> {
    svm_train_with(data, gamma, cost, seed, SmoParams::default())
}

pub fn svm_train_with(
    data: &[LabelledFeature],
    gamma: f64,
    cost: f64,
    seed: u64,
    params: SmoParams,
) -> Result<SvmModel> {
    if !(gamma > 0.0) || !(cost > 0.0) {
        return Err(Error::InvalidInput("gamma and cost must be positive".into()));
    }
    let class_count = validate_classes(data)?;

    let n = data.len() as f64;
    let mean = data.iter().map(|f| f.x).sum::<f64>() / n;
    let var = data.iter().map(|f| (f.x - mean) * (f.x - mean)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-30 { var.sqrt() } else { 1.0 };

    let mut machines = Vec::new();
    for a in 0..class_count {
        for b in (a + 1)..class_count {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for f in data {
                if f.y == a {
                    xs.push((f.x - mean) / std);
                    ys.push(1.0);
                } else if f.y == b {
                    xs.push((f.x - mean) / std);
                    ys.push(-1.0);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, (a as u64) << 16 | b as u64));
            let (alpha, bias) = smo(&xs, &ys, gamma, cost, params, &mut rng);
            let mut support_x = Vec::new();
            let mut alpha_y = Vec::new();
            for i in 0..xs.len() {
                if alpha[i] > 1e-12 {
                    support_x.push(xs[i]);
                    alpha_y.push(alpha[i] * ys[i]);
                }
            }
            machines.push(PairMachine {
                class_a: a,
                class_b: b,
                support_x,
                alpha_y,
                bias,
            });
        }
    }
    Ok(SvmModel {
        gamma,
        cost,
        class_count,
        standardize_mean: mean,
        standardize_std: std,
        machines,
        seed,
    })
}

/// Predict the class of one feature by one-vs-one majority voting. A zero
/// decision value votes for the pair's smaller class index, and overall vote
/// ties resolve toward the smaller class index.
pub fn svm_predict(model: &SvmModel, x: f64) -> Result<u32> {
    if !x.is_finite() {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    let z = (x - model.standardize_mean) / model.standardize_std;
    let mut votes = vec![0u32; model.class_count as usize];
    for m in &model.machines {
        let f = m.decision(z, model.gamma);
        if f >= 0.0 {
            votes[m.class_a as usize] += 1;
        } else {
            votes[m.class_b as usize] += 1;
        }
    }
    let mut best = 0u32;
    let mut best_votes = 0u32;
    for (c, &v) in votes.iter().enumerate() {
        if v > best_votes {
            best_votes = v;
            best = c as u32;
        }
    }
    Ok(best)
}

/// Confusion matrix: rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn record(&mut self, truth: u32, predicted: u32) {
        self.counts[truth as usize * self.classes + predicted as usize] += 1;
    }

    pub fn at(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.classes).map(|p| self.at(truth, p)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.classes).map(|t| self.at(t, predicted)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.at(c, c)).sum()
    }

    /// Plain fraction of correct predictions, `trace / total`.
    pub fn fraction_correct(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.trace() as f64 / total as f64
    }

    /// One-vs-rest accuracy `(TP + TN) / total` for one class.
    pub fn one_vs_rest_accuracy(&self, class: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let tp = self.at(class, class);
        let fn_ = self.row_sum(class) - tp;
        let fp = self.col_sum(class) - tp;
        let tn = total - tp - fn_ - fp;
        (tp + tn) as f64 / total as f64
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("true_class".to_string())
            .chain((0..self.classes).map(|p| format!("pred_{p}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.classes {
            let row: Vec<String> = std::iter::once(t.to_string())
                .chain((0..self.classes).map(|p| self.at(t, p).to_string()))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Accuracy report of `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Plain fraction correct, `trace(confusion) / total`.
    pub overall_accuracy: f64,
    /// `(TP+TN)/total` per class, one-vs-rest.
    pub per_class_accuracy: Vec<f64>,
    /// Macro average of the one-vs-rest accuracies.
    pub macro_ovr_accuracy: f64,
    /// Fraction correct over heated samples only (true class >= 1).
    pub heated_only_accuracy: f64,
    /// Binary pure-vs-heated accuracy (true and predicted collapsed to
    /// class 0 vs rest).
    pub pure_vs_heated_accuracy: f64,
}

/// Evaluate a model on labelled features: confusion matrix, per-class
/// one-vs-rest accuracies, macro average, plain fraction-correct, plus the
/// heated-only and pure-vs-heated summaries.
pub fn evaluate(model: &SvmModel, data: &[LabelledFeature]) -> Result<(ConfusionMatrix, EvalMetrics)> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on empty data".into()));
    }
    let classes = model
        .class_count
        .max(data.iter().map(|f| f.y + 1).max().unwrap_or(0)) as usize;
    let mut confusion = ConfusionMatrix::new(classes);
    for f in data {
        let pred = svm_predict(model, f.x)?;
        confusion.record(f.y, pred);
    }
    Ok(metrics_from_confusion(&confusion))
}

/// Derive the metrics bundle from a filled confusion matrix.
pub fn metrics_from_confusion(confusion: &ConfusionMatrix) -> (ConfusionMatrix, EvalMetrics) {
    let classes = confusion.classes;
    let total = confusion.total();
    let per_class: Vec<f64> = (0..classes).map(|c| confusion.one_vs_rest_accuracy(c)).collect();
    let macro_ovr = per_class.iter().sum::<f64>() / classes.max(1) as f64;

    let heated_total: u64 = (1..classes).map(|c| confusion.row_sum(c)).sum();
    let heated_correct: u64 = (1..classes).map(|c| confusion.at(c, c)).sum();
    let heated_only = if heated_total == 0 {
        1.0
    } else {
        heated_correct as f64 / heated_total as f64
    };

    let mut binary_correct = confusion.at(0, 0);
    for t in 1..classes {
        for p in 1..classes {
            binary_correct += confusion.at(t, p);
        }
    }
    let pure_vs_heated = if total == 0 {
        0.0
    } else {
        binary_correct as f64 / total as f64
    };

    let metrics = EvalMetrics {
        overall_accuracy: confusion.fraction_correct(),
        per_class_accuracy: per_class,
        macro_ovr_accuracy: macro_ovr,
        heated_only_accuracy: heated_only,
        pure_vs_heated_accuracy: pure_vs_heated,
    };
    (confusion.clone(), metrics)
}

/// Result of the cross-validated parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSweepResult {
    pub best_gamma: f64,
    pub best_cost: f64,
    pub best_accuracy: f64,
    /// One row per (cost, gamma) cell, in cost-major order.
    pub table: Vec<GridCell>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gamma: f64,
    pub cost: f64,
    pub accuracy: f64,
}

impl GridSweepResult {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cost,gamma,cv_accuracy")?;
        for cell in &self.table {
            writeln!(w, "{},{},{}", cell.cost, cell.gamma, cell.accuracy)?;
        }
        Ok(())
    }
}

/// Stratified fold assignment: per class, indices are shuffled with a seed
/// derived from `(seed, class)` and dealt round-robin over folds. This rule
/// is part of the reproducibility contract.
pub fn stratified_folds(data: &[LabelledFeature], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let class_count = validate_classes(data)?;
    if folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    for c in 0..class_count {
        let n_c = data.iter().filter(|f| f.y == c).count();
        if n_c < folds {
            return Err(Error::InvalidInput(format!(
                "class {c} has {n_c} samples, fewer than {folds} folds"
            )));
        }
    }
    let mut assignment = vec![0usize; data.len()];
    for c in 0..class_count {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data[i].y == c).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xF01D + c as u64));
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Per-fold SMO seed, also part of the reproducibility contract.
pub fn fold_model_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, 0x5EED + fold as u64)
}

/// Stratified k-fold cross-validated accuracy over the gamma x cost grid.
/// Returns the argmax cell; ties break toward smaller cost, then smaller
/// gamma.
pub fn grid_sweep(
    data: &[LabelledFeature],
    gamma_grid: &[f64],
    cost_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridSweepResult> {
    if gamma_grid.is_empty() || cost_grid.is_empty() {
        return Err(Error::InvalidInput("parameter grids must be non-empty".into()));
    }
    let assignment = stratified_folds(data, folds, seed)?;

    let cells: Vec<(usize, usize)> = (0..cost_grid.len())
        .flat_map(|ci| (0..gamma_grid.len()).map(move |gi| (ci, gi)))
        .collect();
    let accuracies: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(ci, gi)| {
            let cost = cost_grid[ci];
            let gamma = gamma_grid[gi];
            let mut correct = 0u64;
            let mut total = 0u64;
            for fold in 0..folds {
                let train: Vec<LabelledFeature> = data
                    .iter()
                    .zip(&assignment)
                    .filter(|(_, &a)| a != fold)
                    .map(|(f, _)| *f)
                    .collect();
                let test: Vec<LabelledFeature> = data
                    .iter()
                    .zip(&assignment)
                    .filter(|(_, &a)| a == fold)
                    .map(|(f, _)| *f)
                    .collect();
                let model = svm_train(&train, gamma, cost, fold_model_seed(seed, fold))?;
                for f in &test {
                    if svm_predict(&model, f.x)? == f.y {
                        correct += 1;
                    }
                    total += 1;
                }
            }
            Ok(correct as f64 / total as f64)
        })
        .collect();

    let mut table = Vec::with_capacity(cells.len());
    for (&(ci, gi), acc) in cells.iter().zip(accuracies) {
        table.push(GridCell {
            gamma: gamma_grid[gi],
            cost: cost_grid[ci],
            accuracy: acc?,
        });
    }

    // Cost-major, gamma-minor ascending iteration with strict improvement
    // realizes the (smaller cost, then smaller gamma) tie-break.
    let mut best = &table[0];
    for cell in &table[1..] {
        if cell.accuracy > best.accuracy {
            best = cell;
        }
    }
    Ok(GridSweepResult {
        best_gamma: best.gamma,
        best_cost: best.cost,
        best_accuracy: best.accuracy,
        table: table.clone(),
        folds,
        seed,
    })
}

/// 1-nearest-neighbor baseline on `|x - x'|`. Distance ties resolve toward
/// the smaller class index.
pub fn baseline_1nn(train: &[LabelledFeature], test: &[LabelledFeature]) -> Result<ConfusionMatrix> {
    let class_count = validate_classes(train)?;
    let classes = class_count.max(test.iter().map(|f| f.y + 1).max().unwrap_or(0)) as usize;
    let mut confusion = ConfusionMatrix::new(classes);
    for t in test {
        let mut best_dist = f64::INFINITY;
        let mut best_class = u32::MAX;
        for tr in train {
            let d = (tr.x - t.x).abs();
            if d < best_dist || (d == best_dist && tr.y < best_class) {
                best_dist = d;
                best_class = tr.y;
            }
        }
        confusion.record(t.y, best_class);
    }
    Ok(confusion)
}

/// Nearest class-centroid baseline. Mean ties resolve toward the smaller
/// class index.
pub fn baseline_centroid(train: &[LabelledFeature], test: &[LabelledFeature]) -> Result<ConfusionMatrix> {
    let class_count = validate_classes(train)?;
    let mut centroids = vec![(0.0_f64, 0u64); class_count as usize];
    for f in train {
        let slot = &mut centroids[f.y as usize];
        slot.0 += f.x;
        slot.1 += 1;
    }
    let centroids: Vec<f64> = centroids.iter().map(|(s, n)| s / *n as f64).collect();
    let classes = class_count.max(test.iter().map(|f| f.y + 1).max().unwrap_or(0)) as usize;
    let mut confusion = ConfusionMatrix::new(classes);
    for t in test {
        let mut best_dist = f64::INFINITY;
        let mut best_class = 0u32;
        for (c, &m) in centroids.iter().enumerate() {
            let d = (m - t.x).abs();
            if d < best_dist {
                best_dist = d;
                best_class = c as u32;
            }
        }
        confusion.record(t.y, best_class);
    }
    Ok(confusion)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn features(values: &[(f64, u32)]) -> Vec<LabelledFeature> {
        values
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| LabelledFeature {
                x,
                y,
                trial_id: 0,
                set_id: i as u32,
            })
            .collect()
    }

    fn separable_two_class() -> Vec<LabelledFeature> {
        features(&[
            (0.0, 0),
            (0.1, 0),
            (0.2, 0),
            (10.0, 1),
            (10.1, 1),
            (10.2, 1),
        ])
    }

    fn asymmetric_two_class() -> Vec<LabelledFeature> {
        features(&[
            (0.0, 0),
            (0.1, 0),
            (0.2, 0),
            (10.0, 1),
            (10.1, 1),
            (10.2, 1),
            (10.4, 1),
        ])
    }

    #[test]
    fn separable_data_trains_to_perfect_accuracy() {
        let data = separable_two_class();
        let model = svm_train(&data, 1.0, 10.0, 7).unwrap();
        for f in &data {
            assert_eq!(svm_predict(&model, f.x).unwrap(), f.y);
        }
        assert_eq!(svm_predict(&model, 0.05).unwrap(), 0);
    }

    #[test]
    fn indistinguishable_classes_fall_back_to_tie_break() {
        // Both classes share the single feature value.
        let data = features(&[(1.0, 0), (1.0, 1), (1.0, 0), (1.0, 1)]);
        let model = svm_train(&data, 1.0, 1.0, 3).unwrap();
        let (conf, metrics) = evaluate(&model, &data).unwrap();
        assert_eq!(conf.total(), 4);
        assert!((metrics.overall_accuracy - 0.5).abs() < 1e-12);
        // Zero decision value votes toward the smaller class index.
        assert_eq!(svm_predict(&model, 1.0).unwrap(), 0);
    }

    #[test]
    fn duplicated_training_set_keeps_decision_function() {
        let data = separable_two_class();
        let mut doubled = data.clone();
        doubled.extend(data.iter().copied());
        let a = svm_train(&data, 1.0, 10.0, 7).unwrap();
        let b = svm_train(&doubled, 1.0, 10.0, 7).unwrap();
        for p in 0..100 {
            let x = -1.0 + 12.0 * p as f64 / 99.0;
            let za = (x - a.standardize_mean) / a.standardize_std;
            let zb = (x - b.standardize_mean) / b.standardize_std;
            let fa = a.machines[0].decision(za, a.gamma);
            let fb = b.machines[0].decision(zb, b.gamma);
            assert!(
                (fa - fb).abs() < 1e-6,
                "decision values diverge at x={x}: {fa} vs {fb}"
            );
        }
    }

    #[test]
    fn training_rejects_bad_inputs() {
        assert!(svm_train(&[], 1.0, 1.0, 0).is_err());
        let one_class = features(&[(0.0, 0), (1.0, 0)]);
        assert!(svm_train(&one_class, 1.0, 1.0, 0).is_err());
        let gap = features(&[(0.0, 0), (1.0, 2)]);
        assert!(svm_train(&gap, 1.0, 1.0, 0).is_err(), "class 1 has zero samples");
        let nan = features(&[(f64::NAN, 0), (1.0, 1)]);
        assert!(svm_train(&nan, 1.0, 1.0, 0).is_err());
        let data = separable_two_class();
        assert!(svm_train(&data, -1.0, 1.0, 0).is_err());
        assert!(svm_train(&data, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn predict_rejects_non_finite() {
        let model = svm_train(&separable_two_class(), 1.0, 10.0, 7).unwrap();
        assert!(svm_predict(&model, f64::NAN).is_err());
    }

    #[test]
    fn kkt_invariants_hold_after_training() {
        let data = features(&[
            (0.0, 0),
            (0.3, 0),
            (0.5, 0),
            (0.7, 1),
            (1.0, 1),
            (1.2, 1),
            (2.0, 2),
            (2.2, 2),
            (2.5, 2),
        ]);
        let cost = 5.0;
        let model = svm_train(&data, 1.0, cost, 11).unwrap();
        for m in &model.machines {
            let mut sum = 0.0;
            for &ay in &m.alpha_y {
                assert!(ay.abs() <= cost + 1e-9, "box constraint violated: {ay}");
                sum += ay;
            }
            assert!(sum.abs() <= 1e-8, "equality constraint violated: {sum}");
        }
    }

    #[test]
    fn far_field_prediction_is_seed_stable() {
        // Far beyond every support point the kernel terms vanish and the
        // bias sign decides; asymmetric class geometry keeps it away from 0.
        let data = asymmetric_two_class();
        let far = 1e4;
        let first = svm_train(&data, 1.0, 10.0, 1).unwrap();
        let expect = svm_predict(&first, far).unwrap();
        for seed in [2, 3] {
            let model = svm_train(&data, 1.0, 10.0, seed).unwrap();
            assert_eq!(svm_predict(&model, far).unwrap(), expect);
        }
    }

    #[test]
    fn monotone_separable_prediction_is_step_function() {
        let mut vals = Vec::new();
        for c in 0..4u32 {
            let base = 10.0 * c as f64;
            for k in 0..6 {
                vals.push((base + 0.2 * k as f64, c));
            }
        }
        let data = features(&vals);
        let model = svm_train(&data, 1.0, 10.0, 5).unwrap();
        let lo = -1.0;
        let hi = 32.0;
        let mut last = 0u32;
        for p in 0..1000 {
            let x = lo + (hi - lo) * p as f64 / 999.0;
            let pred = svm_predict(&model, x).unwrap();
            assert!(
                pred >= last,
                "prediction decreased from {last} to {pred} at x={x}"
            );
            last = pred;
        }
        assert_eq!(last, 3, "rightmost class should win at the right edge");
    }

    #[test]
    fn evaluate_matches_eq6_arithmetic() {
        // Binary confusion with TP=2, TN=2, FP=1, FN=0 for class 1.
        let mut conf = ConfusionMatrix::new(2);
        conf.record(1, 1);
        conf.record(1, 1);
        conf.record(0, 0);
        conf.record(0, 0);
        conf.record(0, 1);
        let (_, metrics) = metrics_from_confusion(&conf);
        assert!((metrics.per_class_accuracy[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn evaluate_perfect_predictions() {
        let data = separable_two_class();
        let model = svm_train(&data, 1.0, 10.0, 7).unwrap();
        let (conf, metrics) = evaluate(&model, &data).unwrap();
        assert_eq!(metrics.overall_accuracy, 1.0);
        assert_eq!(conf.trace(), conf.total());
        assert_eq!(metrics.pure_vs_heated_accuracy, 1.0);
        assert_eq!(metrics.heated_only_accuracy, 1.0);
    }

    #[test]
    fn constant_predictor_on_balanced_classes() {
        // All features identical: the model votes for class 0 everywhere, so
        // balanced 6-class data scores exactly 1/6 fraction-correct.
        let mut vals = Vec::new();
        for c in 0..6u32 {
            for _ in 0..4 {
                vals.push((2.0, c));
            }
        }
        let data = features(&vals);
        let model = svm_train(&data, 1.0, 1.0, 9).unwrap();
        let (conf, metrics) = evaluate(&model, &data).unwrap();
        assert!((metrics.overall_accuracy - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(conf.fraction_correct(), conf.trace() as f64 / conf.total() as f64);
    }

    #[test]
    fn grid_sweep_on_separable_data_hits_tie_break() {
        let mut vals = Vec::new();
        for k in 0..10 {
            vals.push((0.01 * k as f64, 0));
            vals.push((100.0 + 0.01 * k as f64, 1));
        }
        let data = features(&vals);
        let gamma_grid = [0.5, 1.0, 1.5, 2.0];
        let cost_grid = [0.1, 1.0, 10.0, 100.0];
        let sweep = grid_sweep(&data, &gamma_grid, &cost_grid, 5, 21).unwrap();
        for cell in &sweep.table {
            assert_eq!(cell.accuracy, 1.0, "cell ({}, {})", cell.cost, cell.gamma);
        }
        assert_eq!(sweep.best_cost, 0.1);
        assert_eq!(sweep.best_gamma, 0.5);
    }

    #[test]
    fn grid_sweep_is_deterministic() {
        let mut vals = Vec::new();
        for k in 0..15 {
            vals.push((0.3 * k as f64, (k % 3) as u32));
        }
        let data = features(&vals);
        let a = grid_sweep(&data, &[0.5, 1.0], &[1.0, 10.0], 3, 77).unwrap();
        let b = grid_sweep(&data, &[0.5, 1.0], &[1.0, 10.0], 3, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_sweep_validates_folds() {
        let data = features(&[(0.0, 0), (1.0, 1), (2.0, 0), (3.0, 1)]);
        assert!(grid_sweep(&data, &[1.0], &[1.0], 3, 0).is_err());
        assert!(grid_sweep(&data, &[], &[1.0], 2, 0).is_err());
    }

    #[test]
    fn default_grids_match_published_axes() {
        let gammas = default_gamma_grid();
        let costs = default_cost_grid();
        assert_eq!(gammas.len(), 10);
        assert!((gammas[0] - 0.5).abs() < 1e-12);
        assert!((gammas[9] - 1.4).abs() < 1e-12);
        assert!(gammas.iter().any(|&g| (g - 1.2).abs() < 1e-9));
        assert_eq!(costs.len(), 8);
        assert_eq!(costs[0], 1e-3);
        assert_eq!(costs[7], 1e4);
        assert!(costs.contains(&1e2));
    }

    #[test]
    fn nearest_neighbor_returns_exact_match_label() {
        let train = features(&[(0.0, 0), (5.0, 1), (10.0, 2)]);
        let test = features(&[(5.0, 1)]);
        let conf = baseline_1nn(&train, &test).unwrap();
        assert_eq!(conf.at(1, 1), 1);
    }

    #[test]
    fn centroid_uses_class_means() {
        let train = features(&[(-1.0, 0), (1.0, 0), (9.0, 1), (11.0, 1)]);
        // Means are 0 and 10; x = 4 is closer to class 0.
        let test = features(&[(4.0, 0)]);
        let conf = baseline_centroid(&train, &test).unwrap();
        assert_eq!(conf.at(0, 0), 1);
    }

    #[test]
    fn baselines_reject_empty_classes() {
        let train = features(&[(0.0, 0), (1.0, 2)]);
        let test = features(&[(0.0, 0)]);
        assert!(baseline_1nn(&train, &test).is_err());
        assert!(baseline_centroid(&train, &test).is_err());
    }

    #[test]
    fn confusion_csv_has_header_and_rows() {
        let mut conf = ConfusionMatrix::new(2);
        conf.record(0, 0);
        conf.record(1, 0);
        let mut buf = Vec::new();
        conf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("true_class,pred_0,pred_1\n"));
        assert!(text.contains("1,1,0"));
    }

    #[test]
    fn model_json_round_trip() {
        let model = svm_train(&separable_two_class(), 1.0, 10.0, 7).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: SvmModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }
}
