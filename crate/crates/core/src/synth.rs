//! Synthetic dataset generation and dataset reformation.
//!
//! The generator emulates the lab protocol's structure (trials x classes x
//! signatures per image) with a planted Gaussian drift model: each reheat
//! step shifts the class mean along a drift vector, designated critical
//! classes get a boosted step, and covariance inflates per step. Reformation
//! covers labelled-set construction with the 80:20 per-set split, per-trial
//! subsets, and ingestion of chemical ground-truth CSVs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::seeding::derive_seed;
use crate::signatures::SignatureSet;

fn default_trials() -> u32 {
    9
}
fn default_classes() -> u32 {
    6
}
fn default_per_class_per_trial() -> usize {
    900
}
fn default_bands() -> usize {
    9
}
fn default_base_mean() -> Vec<f64> {
    vec![520.0, 508.0, 562.0, 590.0, 612.0, 588.0, 540.0, 506.0, 478.0]
}
fn default_drift_step() -> Vec<f64> {
    // Non-axis-aligned drift, norm ~ 1.4x the within-class spread; adjacent
    // heated classes still overlap through the trial jitter.
    vec![0.35, 0.28, 0.60, 0.80, 0.66, 0.48, 0.24, 0.18, 0.13]
}
fn default_within_std() -> Vec<f64> {
    vec![1.0; 9]
}
fn default_cov_inflation() -> f64 {
    0.04
}
fn default_trial_jitter() -> f64 {
    0.35
}
fn default_critical_classes() -> BTreeSet<u32> {
    BTreeSet::from([1, 4])
}
fn default_critical_boost() -> f64 {
    10.0
}
fn default_seed() -> u64 {
    7
}

/// Configuration of the planted drift generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub trials: u32,
    pub classes: u32,
    pub signatures_per_class_per_trial: usize,
    pub bands: usize,
    /// Mean signature of the pure (class 0) oil.
    pub base_mean: Vec<f64>,
    /// Mean increment applied at every reheat step.
    pub drift_step: Vec<f64>,
    /// Per-band standard deviations of the within-class covariance
    /// (diagonal model), unless `within_class_cov` overrides it.
    pub within_class_std: Vec<f64>,
    /// Optional full within-class covariance (row-major), must be positive
    /// definite.
    pub within_class_cov: Option<Vec<Vec<f64>>>,
    /// Covariance scale grows by `(1 + inflation)` per reheat step.
    pub cov_inflation_per_step: f64,
    /// Standard deviation of the per-trial mean jitter.
    pub trial_jitter_std: f64,
    /// Classes whose incoming drift step is boosted; these are the planted
    /// critical classes.
    pub critical_classes: BTreeSet<u32>,
    pub critical_boost: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            trials: default_trials(),
            classes: default_classes(),
            signatures_per_class_per_trial: default_per_class_per_trial(),
            bands: default_bands(),
            base_mean: default_base_mean(),
            drift_step: default_drift_step(),
            within_class_std: default_within_std(),
            within_class_cov: None,
            cov_inflation_per_step: default_cov_inflation(),
            trial_jitter_std: default_trial_jitter(),
            critical_classes: default_critical_classes(),
            critical_boost: default_critical_boost(),
            seed: default_seed(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.classes == 0 || self.signatures_per_class_per_trial == 0 {
            return Err(Error::InvalidInput("all counts must be positive".into()));
        }
        if self.bands == 0 {
            return Err(Error::InvalidInput("band count must be positive".into()));
        }
        for (name, v) in [("base_mean", &self.base_mean), ("drift_step", &self.drift_step)] {
            if v.len() != self.bands {
                return Err(Error::InvalidInput(format!(
                    "{name} has {} entries, expected {}",
                    v.len(),
                    self.bands
                )));
            }
        }
        if self.within_class_cov.is_none() && self.within_class_std.len() != self.bands {
            return Err(Error::InvalidInput(format!(
                "within_class_std has {} entries, expected {}",
                self.within_class_std.len(),
                self.bands
            )));
        }
        if self.critical_classes.iter().any(|&c| c == 0 || c >= self.classes) {
            return Err(Error::InvalidInput(
                "critical classes must lie in 1..classes".into(),
            ));
        }
        if self.cov_inflation_per_step < 0.0 || self.trial_jitter_std < 0.0 || self.critical_boost <= 0.0 {
            return Err(Error::InvalidInput("scales must be nonnegative (boost positive)".into()));
        }
        Ok(())
    }

    /// Within-class covariance as a matrix (diagonal unless overridden).
    fn covariance(&self) -> Result<Matrix> {
        match &self.within_class_cov {
            Some(rows) => {
                if rows.len() != self.bands || rows.iter().any(|r| r.len() != self.bands) {
                    return Err(Error::InvalidInput("within_class_cov must be bands x bands".into()));
                }
                Matrix::from_rows(rows)
            }
            None => {
                let mut m = Matrix::zeros(self.bands, self.bands);
                for (i, s) in self.within_class_std.iter().enumerate() {
                    if *s <= 0.0 {
                        return Err(Error::InvalidInput("within-class std must be positive".into()));
                    }
                    m.set(i, i, s * s);
                }
                Ok(m)
            }
        }
    }

    /// Step multiplier entering class `c` (boosted at critical classes).
    fn step_factor(&self, class: u32) -> f64 {
        if self.critical_classes.contains(&class) {
            self.critical_boost
        } else {
            1.0
        }
    }

    /// Planted mean of one class in one trial (before sampling noise).
    pub fn class_mean(&self, jitter: &[f64], class: u32) -> Vec<f64> {
        let mut mu: Vec<f64> = self.base_mean.iter().zip(jitter).map(|(b, j)| b + j).collect();
        for step in 1..=class {
            let f = self.step_factor(step);
            for (m, d) in mu.iter_mut().zip(&self.drift_step) {
                *m += f * d;
            }
        }
        mu
    }
}

/// Ground truth emitted alongside a generated dataset: the planted critical
/// set per trial plus the drift configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// trial id -> planted critical classes.
    pub per_trial: BTreeMap<u32, BTreeSet<u32>>,
    pub drift_step: Vec<f64>,
    pub critical_boost: f64,
    pub critical_classes: BTreeSet<u32>,
}

/// A generated dataset: one SignatureSet per trial (class-major row order)
/// and the planted ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub trials: Vec<SignatureSet>,
    pub ground_truth: GroundTruth,
}

impl SynthDataset {
    /// All trials concatenated into one set.
    pub fn combined(&self) -> SignatureSet {
        let dim = self.trials.first().map_or(0, |t| t.dim());
        let mut all = SignatureSet::new(dim);
        for t in &self.trials {
            all.append(t).expect("uniform dims");
        }
        all
    }
}

/// Generate the dataset: class `c` of trial `t` draws from
/// `Gaussian(base + jitter_t + sum_{j<=c} boost_j * drift, (1+infl)^c * Cov)`.
/// Bit-reproducible per `(config, seed)`.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let cov = config.covariance()?;
    let chol = Cholesky::factor(&cov)
        .map_err(|_| Error::Numerical("within-class covariance is not positive definite".into()))?;
    let d = config.bands;
    let mut trials = Vec::with_capacity(config.trials as usize);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x7121 + trial as u64));
        let jitter: Vec<f64> = (0..d)
            .map(|_| config.trial_jitter_std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut set = SignatureSet::new(d);
        let mut z = vec![0.0_f64; d];
        let mut x = vec![0.0_f64; d];
        for class in 0..config.classes {
            let mu = config.class_mean(&jitter, class);
            let scale = (1.0 + config.cov_inflation_per_step).powf(class as f64 / 2.0);
            for _ in 0..config.signatures_per_class_per_trial {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                // x = mu + scale * L z
                for (i, xi) in x.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, zj) in z.iter().enumerate().take(i + 1) {
                        acc += chol.lower_entry(i, j) * zj;
                    }
                    *xi = mu[i] + scale * acc;
                }
                set.push(&x, trial, class)?;
            }
        }
        trials.push(set);
    }
    let per_trial: BTreeMap<u32, BTreeSet<u32>> = (0..config.trials)
        .map(|t| (t, config.critical_classes.clone()))
        .collect();
    Ok(SynthDataset {
        trials,
        ground_truth: GroundTruth {
            per_trial,
            drift_step: config.drift_step.clone(),
            critical_boost: config.critical_boost,
            critical_classes: config.critical_classes.clone(),
        },
    })
}

/// Train/test split tag of a labelled set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One labelled set: a fixed-size bundle of signatures of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledSet {
    pub set_id: u32,
    pub class: u32,
    pub split: Split,
    /// Row indices into the source SignatureSet.
    pub indices: Vec<usize>,
}

/// The reformed dataset: disjoint labelled sets per class with a per-set
/// 80:20 split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledSetPartition {
    pub sets_per_class: usize,
    pub set_size: usize,
    pub train_sets_per_class: usize,
    pub sets: Vec<LabelledSet>,
}

pub const DEFAULT_SETS_PER_CLASS: usize = 60;
pub const DEFAULT_SET_SIZE: usize = 135;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Reform class pools into labelled sets: per class, a seeded shuffle
/// followed by contiguous chunking into `sets_per_class` sets of `set_size`,
/// then a per-set split (sets are never divided across the split).
pub fn reform_labelled_sets(
    data: &SignatureSet,
    sets_per_class: usize,
    set_size: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<LabelledSetPartition> {
    if sets_per_class == 0 || set_size == 0 {
        return Err(Error::InvalidInput("set counts must be positive".into()));
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidInput("train fraction must lie in [0, 1]".into()));
    }
    let train_sets = (train_fraction * sets_per_class as f64).round() as usize;
    let train_sets = train_sets.min(sets_per_class);
    let mut sets = Vec::new();
    let mut set_id = 0u32;
    for class in data.classes_present() {
        let mut idx = data.indices_of_class(class);
        let needed = sets_per_class * set_size;
        if idx.len() < needed {
            return Err(Error::InvalidInput(format!(
                "class {class} has {} signatures, needs {needed} for {sets_per_class} sets of {set_size}",
                idx.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x2EF0 + class as u64));
        idx.shuffle(&mut rng);
        idx.truncate(needed);

        let mut positions: Vec<usize> = (0..sets_per_class).collect();
        let mut split_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5917 + class as u64));
        positions.shuffle(&mut split_rng);
        let train_positions: BTreeSet<usize> = positions[..train_sets].iter().copied().collect();

        for s in 0..sets_per_class {
            let members = idx[s * set_size..(s + 1) * set_size].to_vec();
            sets.push(LabelledSet {
                set_id,
                class,
                split: if train_positions.contains(&s) {
                    Split::Train
                } else {
                    Split::Test
                },
                indices: members,
            });
            set_id += 1;
        }
    }
    Ok(LabelledSetPartition {
        sets_per_class,
        set_size,
        train_sets_per_class: train_sets,
        sets,
    })
}

/// Split the dataset into per-trial subsets, ascending trial order. Each
/// subset holds all classes of one trial.
pub fn trial_subsets(data: &SignatureSet) -> Vec<(u32, SignatureSet)> {
    data.trials_present()
        .into_iter()
        .map(|trial| {
            let idx: Vec<usize> = (0..data.len()).filter(|&i| data.trial(i) == trial).collect();
            (trial, data.select(&idx))
        })
        .collect()
}

/// Chemical ground-truth entry for one (trial, class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChemicalEntry {
    pub class: u32,
    pub tbars_pct: f64,
    pub tbars_sig: bool,
    pub totox_pct: f64,
    pub totox_sig: bool,
}

/// Chemical measurements of one trial, per reheat class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChemicalRecord {
    pub trial: u32,
    pub entries: Vec<ChemicalEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemProperty {
    Tbars,
    Totox,
}

impl std::str::FromStr for ChemProperty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tbars" => Ok(ChemProperty::Tbars),
            "totox" => Ok(ChemProperty::Totox),
            other => Err(Error::InvalidInput(format!("unknown chemical property {other:?}"))),
        }
    }
}

fn parse_flag(s: &str, line: usize) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Format(format!("row {line}: bad significance flag {other:?}"))),
    }
}

/// Parse a chemical CSV with header
/// `trial,class,tbars_pct,tbars_sig,totox_pct,totox_sig`. Significance flags
/// are ingested, not re-derived.
pub fn load_chemical<R: Read>(reader: R) -> Result<Vec<ChemicalRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let expected = ["trial", "class", "tbars_pct", "tbars_sig", "totox_pct", "totox_sig"];
    let headers = r.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "chemical CSV header must be {}",
            expected.join(",")
        )));
    }
    let mut by_trial: BTreeMap<u32, Vec<ChemicalEntry>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != expected.len() {
            return Err(Error::Format(format!("row {line}: wrong field count")));
        }
        let trial: u32 = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad trial")))?;
        let class: u32 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad class")))?;
        if class == 0 {
            return Err(Error::Format(format!(
                "row {line}: class 0 is the pure reference and carries no chemical deltas"
            )));
        }
        let tbars_pct: f64 = rec[2]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad tbars_pct")))?;
        let totox_pct: f64 = rec[4]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row {line}: bad totox_pct")))?;
        if tbars_pct < 0.0 || totox_pct < 0.0 {
            return Err(Error::Format(format!("row {line}: percentages must be nonnegative")));
        }
        by_trial.entry(trial).or_default().push(ChemicalEntry {
            class,
            tbars_pct,
            tbars_sig: parse_flag(&rec[3], line)?,
            totox_pct,
            totox_sig: parse_flag(&rec[5], line)?,
        });
    }
    Ok(by_trial
        .into_iter()
        .map(|(trial, mut entries)| {
            entries.sort_by_key(|e| e.class);
            ChemicalRecord { trial, entries }
        })
        .collect())
}

/// Critical classes of one trial: the classes flagged significant for the
/// chosen property.
pub fn chemical_critical(record: &ChemicalRecord, property: ChemProperty) -> BTreeSet<u32> {
    record
        .entries
        .iter()
        .filter(|e| match property {
            ChemProperty::Tbars => e.tbars_sig,
            ChemProperty::Totox => e.totox_sig,
        })
        .map(|e| e.class)
        .collect()
}
