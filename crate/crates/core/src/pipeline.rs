//! End-to-end pipelines shared by the CLI, the C API, and the acceptance
//! suite: labelled-set training (reform, Gaussian fits, Bhattacharyya
//! features, grid-swept SVM) and per-trial clustering (subsample,
//! sigma-sweep, mode selection, spectral clustering).

use serde::{Deserialize, Serialize};

use crate::classifier::{
    default_cost_grid, default_gamma_grid, evaluate, grid_sweep, svm_train, ConfusionMatrix,
    EvalMetrics, GridSweepResult, LabelledFeature, SvmModel,
};
use crate::error::{Error, Result};
use crate::features::{bhattacharyya, fit_fda, fit_gaussian, project, FdaProjection, GaussianStats};
use crate::sclust::{
    select_lbw, select_lgv, sigma_sweep, spectral_cluster, ClusterReport, Selection,
    SelectionAlgorithm, SweepResult, DEFAULT_MAX_MODE, DEFAULT_MIN_MODE,
};
use crate::seeding::derive_seed;
use crate::signatures::SignatureSet;
use crate::synth::{
    reform_labelled_sets, LabelledSetPartition, Split, DEFAULT_SETS_PER_CLASS, DEFAULT_SET_SIZE,
    DEFAULT_TRAIN_FRACTION,
};

/// Training configuration: dataset reformation plus the SVM sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub sets_per_class: usize,
    pub set_size: usize,
    pub train_fraction: f64,
    pub folds: usize,
    pub gamma_grid: Vec<f64>,
    pub cost_grid: Vec<f64>,
    /// When set, signatures are FDA-reduced to this dimension before the
    /// Gaussian fits; by default the statistic runs in raw band space.
    pub fda_dim: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sets_per_class: DEFAULT_SETS_PER_CLASS,
            set_size: DEFAULT_SET_SIZE,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            folds: 5,
            gamma_grid: default_gamma_grid(),
            cost_grid: default_cost_grid(),
            fda_dim: None,
            seed: 7,
        }
    }
}

/// One labelled set reduced to its scalar feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub set_id: u32,
    pub class: u32,
    /// Trial of the set's first member (sets may mix trials after the
    /// shuffle-based reformation).
    pub trial: u32,
    pub split: Split,
    pub d_b1: f64,
    pub d_b2: f64,
    pub d_b: f64,
}

/// Persistable model bundle: everything needed to map raw signatures to a
/// class estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub fda: Option<FdaProjection>,
    /// Pure-oil reference statistics (fit on training class-0 signatures,
    /// in the feature space the model operates in).
    pub reference: GaussianStats,
    pub svm: SvmModel,
    pub set_size: usize,
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PipelineModel,
    pub sweep: GridSweepResult,
    pub features: Vec<FeatureRow>,
    pub train_confusion: ConfusionMatrix,
    pub test_confusion: ConfusionMatrix,
    pub train_metrics: EvalMetrics,
    pub test_metrics: EvalMetrics,
}

fn feature_rows(
    working: &SignatureSet,
    partition: &LabelledSetPartition,
    reference: &GaussianStats,
) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::with_capacity(partition.sets.len());
    for set in &partition.sets {
        let sample = working.select(&set.indices);
        let stats = fit_gaussian(&sample).map_err(|e| {
            Error::InvalidInput(format!("set {} is degenerate: {e}", set.set_id))
        })?;
        let mut feat = bhattacharyya(&stats, reference)?;
        feat.target_id = set.set_id;
        rows.push(FeatureRow {
            set_id: set.set_id,
            class: set.class,
            trial: working.trial(set.indices[0]),
            split: set.split,
            d_b1: feat.d_b1,
            d_b2: feat.d_b2,
            d_b: feat.d_b,
        });
    }
    Ok(rows)
}

fn labelled(rows: &[FeatureRow], split: Split) -> Vec<LabelledFeature> {
    rows.iter()
        .filter(|r| r.split == split)
        .map(|r| LabelledFeature {
            x: r.d_b,
            y: r.class,
            trial_id: r.trial,
            set_id: r.set_id,
        })
        .collect()
}

/// Run the full training pipeline on a labelled signature dataset.
///
/// Per labelled set: Gaussian fit, optional FDA reduction, Bhattacharyya
/// distance against the pure reference (class-0 statistics pooled over the
/// training split), then a stratified cross-validated `gamma x cost` sweep
/// and a final model at the sweep's argmax.
pub fn train_pipeline(data: &SignatureSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !data.classes_present().contains(&0) {
        return Err(Error::InvalidInput(
            "class 0 (pure oil) is missing; reference statistics need it".into(),
        ));
    }
    let partition = reform_labelled_sets(
        data,
        cfg.sets_per_class,
        cfg.set_size,
        cfg.train_fraction,
        cfg.seed,
    )?;

    // Indices of all signatures inside training sets, for FDA and reference.
    let train_indices: Vec<usize> = partition
        .sets
        .iter()
        .filter(|s| s.split == Split::Train)
        .flat_map(|s| s.indices.iter().copied())
        .collect();
    if train_indices.is_empty() {
        return Err(Error::InvalidInput("training split is empty".into()));
    }
    if !partition.sets.iter().any(|s| s.split == Split::Test) {
        return Err(Error::InvalidInput("test split is empty".into()));
    }

    let fda = match cfg.fda_dim {
        Some(k) => Some(fit_fda(&data.select(&train_indices), k)?),
        None => None,
    };
    let working = match &fda {
        Some(p) => project(p, data)?,
        None => data.clone(),
    };

    let train_class0: Vec<usize> = train_indices
        .iter()
        .copied()
        .filter(|&i| working.class(i) == 0)
        .collect();
    let reference = fit_gaussian(&working.select(&train_class0))?;

    let features = feature_rows(&working, &partition, &reference)?;
    let train_features = labelled(&features, Split::Train);
    let test_features = labelled(&features, Split::Test);

    let sweep = grid_sweep(
        &train_features,
        &cfg.gamma_grid,
        &cfg.cost_grid,
        cfg.folds,
        cfg.seed,
    )?;
    let svm = svm_train(
        &train_features,
        sweep.best_gamma,
        sweep.best_cost,
        derive_seed(cfg.seed, 0xF1A1),
    )?;
    let model = PipelineModel {
        fda,
        reference,
        svm,
        set_size: cfg.set_size,
    };
    let (train_confusion, train_metrics) = evaluate(&model.svm, &train_features)?;
    let (test_confusion, test_metrics) = evaluate(&model.svm, &test_features)?;
    Ok(TrainOutcome {
        model,
        sweep,
        features,
        train_confusion,
        test_confusion,
        train_metrics,
        test_metrics,
    })
}

/// One predicted set from `predict_sets`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub set_index: usize,
    pub size: usize,
    pub d_b: f64,
    pub predicted_class: u32,
}

/// Predict per-set class estimates for a signature stream: signatures are
/// chunked sequentially into sets of `set_size` (a trailing partial chunk is
/// kept when it still holds at least two signatures), each chunk is reduced
/// to its Bhattacharyya feature against the model's reference, and the SVM
/// votes on the feature.
pub fn predict_sets(model: &PipelineModel, data: &SignatureSet, set_size: usize) -> Result<Vec<PredictionRow>> {
    if set_size < 2 {
        return Err(Error::InvalidInput("set size must be at least 2".into()));
    }
    let working = match &model.fda {
        Some(p) => project(p, data)?,
        None => data.clone(),
    };
    if working.dim() != model.reference.dim {
        return Err(Error::DimensionMismatch(format!(
            "signatures have dim {}, model expects {}",
            working.dim(),
            model.reference.dim
        )));
    }
    if working.is_empty() {
        return Err(Error::InvalidInput("no signatures to predict on".into()));
    }
    if working.len() % set_size == 1 {
        return Err(Error::InvalidInput(format!(
            "trailing chunk of 1 signature cannot form a set ({} rows, set size {})",
            working.len(),
            set_size
        )));
    }
    let mut rows = Vec::new();
    let mut start = 0usize;
    let mut set_index = 0usize;
    while start < working.len() {
        let end = (start + set_size).min(working.len());
        let indices: Vec<usize> = (start..end).collect();
        let stats = fit_gaussian(&working.select(&indices))?;
        let feat = bhattacharyya(&stats, &model.reference)?;
        let predicted = crate::classifier::svm_predict(&model.svm, feat.d_b)?;
        rows.push(PredictionRow {
            set_index,
            size: end - start,
            d_b: feat.d_b,
            predicted_class: predicted,
        });
        set_index += 1;
        start = end;
    }
    Ok(rows)
}

/// Clustering configuration for one trial subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub sigma_grid: Vec<f64>,
    pub min_mode: usize,
    pub max_mode: usize,
    /// Per-class signature cap before the dense eigensolves.
    pub subsample_per_class: usize,
    pub algorithm: SelectionAlgorithm,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            sigma_grid: crate::sclust::default_sigma_grid(),
            min_mode: DEFAULT_MIN_MODE,
            max_mode: DEFAULT_MAX_MODE,
            subsample_per_class: 64,
            algorithm: SelectionAlgorithm::Lbw,
            seed: 7,
        }
    }
}

/// Sweep, select the prominent mode, and cluster one trial's signatures.
pub fn cluster_pipeline(trial_data: &SignatureSet, cfg: &ClusterConfig) -> Result<(SweepResult, ClusterReport)> {
    let sub = trial_data.subsample_per_class(cfg.subsample_per_class, cfg.seed);
    let mut sweep = sigma_sweep(&sub, &cfg.sigma_grid, cfg.min_mode, cfg.max_mode)?;
    let (mode, sigma) = match cfg.algorithm {
        SelectionAlgorithm::Lgv => select_lgv(&sweep)?,
        SelectionAlgorithm::Lbw => select_lbw(&sweep)?,
    };
    sweep.selected = Some(Selection {
        algorithm: cfg.algorithm,
        mode,
        sigma,
    });
    let mut report = spectral_cluster(&sub, mode, sigma, derive_seed(cfg.seed, 0xC105))?;
    report.algorithm = Some(cfg.algorithm);
    Ok((sweep, report))
}
