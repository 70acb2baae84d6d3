//! Command implementations behind the `oilmsi` binary, plus the run
//! manifest every artifact-producing command writes next to its outputs.
//!
//! Exit-code contract (enforced by the binary): 0 success, 1 computational
//! failure, 2 input/usage error.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::{baseline_1nn, baseline_centroid, metrics_from_confusion, EvalMetrics, LabelledFeature};
use crate::cube::{
    crop_signatures, load_msic, subtract_dark, window_filter, DarkFrame, FilterMode, WindowSpec,
};
use crate::error::{Error, Result};
use crate::pipeline::{
    cluster_pipeline, predict_sets, train_pipeline, ClusterConfig, PipelineModel, TrainConfig,
};
use crate::sclust::{ClusterReport, SelectionAlgorithm};
use crate::signatures::SignatureSet;
use crate::synth::{chemical_critical, generate, load_chemical, ChemProperty, GroundTruth, Split, SynthConfig};

/// Version stamp of every JSON artifact schema.
pub const SCHEMA_VERSION: u32 = 1;

/// Run manifest: one per artifact-producing command, written as
/// `manifest.json` next to the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub duration_ms: u128,
}

fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_json<P: AsRef<Path>, T: for<'de> Deserialize<'de>>(path: P) -> Result<T> {
    let file = std::fs::File::open(&path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

struct ManifestBuilder {
    command: String,
    seed: u64,
    config: serde_json::Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
}

impl ManifestBuilder {
    fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    fn input<P: AsRef<Path>>(&mut self, path: P) -> &mut Self {
        self.inputs.push(path.as_ref().display().to_string());
        self
    }

    fn output<P: AsRef<Path>>(&mut self, path: P) -> &mut Self {
        self.outputs.push(path.as_ref().display().to_string());
        self
    }

    fn finish(self, out_dir: &Path) -> Result<()> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            duration_ms: self.started.elapsed().as_millis(),
        };
        write_json(out_dir.join("manifest.json"), &manifest)
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// Declarative configuration file (TOML) with per-command sections; CLI
/// flags override individual fields.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub cluster: ClusterSection,
}

/// Sigma grid specification: logarithmic spacing over [start, stop].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SigmaGridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for SigmaGridSpec {
    fn default() -> Self {
        SigmaGridSpec {
            start: 1.0,
            stop: 100.0,
            points: 60,
        }
    }
}

impl SigmaGridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        crate::sclust::log_sigma_grid(self.start, self.stop, self.points)
    }

    /// Parse a `start:stop:points` flag value.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "sigma grid must be start:stop:points, got {text:?}"
            )));
        }
        Ok(SigmaGridSpec {
            start: parts[0]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad sigma start {:?}", parts[0])))?,
            stop: parts[1]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad sigma stop {:?}", parts[1])))?,
            points: parts[2]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad sigma point count {:?}", parts[2])))?,
        })
    }
}

/// Clustering section of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterSection {
    pub sigma_grid: SigmaGridSpec,
    pub min_mode: usize,
    pub max_mode: usize,
    pub subsample_per_class: usize,
    pub algorithm: SelectionAlgorithm,
    pub seed: u64,
}

impl Default for ClusterSection {
    fn default() -> Self {
        let c = ClusterConfig::default();
        ClusterSection {
            sigma_grid: SigmaGridSpec::default(),
            min_mode: c.min_mode,
            max_mode: c.max_mode,
            subsample_per_class: c.subsample_per_class,
            algorithm: c.algorithm,
            seed: c.seed,
        }
    }
}

impl ClusterSection {
    pub fn to_config(&self) -> Result<ClusterConfig> {
        Ok(ClusterConfig {
            sigma_grid: self.sigma_grid.build()?,
            min_mode: self.min_mode,
            max_mode: self.max_mode,
            subsample_per_class: self.subsample_per_class,
            algorithm: self.algorithm,
            seed: self.seed,
        })
    }
}

/// Load the TOML config file, or defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Format(format!("bad config file {}: {e}", p.display())))
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GroundTruthDoc {
    schema_version: u32,
    #[serde(flatten)]
    ground_truth: GroundTruth,
}

/// `simulate`: generate the synthetic dataset, persist signatures CSV,
/// ground-truth JSON, and the manifest.
pub fn cmd_simulate(config: &SynthConfig, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let mut manifest = ManifestBuilder::new("simulate", config.seed, serde_json::to_value(config)?);
    let dataset = generate(config)?;
    let combined = dataset.combined();

    let csv_path = out_dir.join("signatures.csv");
    combined.save_csv(&csv_path)?;
    manifest.output(&csv_path);

    let gt_path = out_dir.join("ground_truth.json");
    write_json(
        &gt_path,
        &GroundTruthDoc {
            schema_version: SCHEMA_VERSION,
            ground_truth: dataset.ground_truth.clone(),
        },
    )?;
    manifest.output(&gt_path);
    manifest.finish(out_dir)
}

/// Arguments of `preprocess`.
#[derive(Debug, Clone, Serialize)]
pub struct PreprocessArgs {
    pub cube: PathBuf,
    pub dark: PathBuf,
    pub window: Option<WindowSpec>,
    pub half_width: usize,
    pub mode: FilterMode,
    pub trial: u32,
    pub class: u32,
}

/// `preprocess`: dark-current subtraction, windowed filtering, window crop,
/// signatures CSV.
pub fn cmd_preprocess(args: &PreprocessArgs, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let mut manifest = ManifestBuilder::new("preprocess", 0, serde_json::to_value(args)?);
    manifest.input(&args.cube).input(&args.dark);

    let cube = load_msic(&args.cube)
        .map_err(|e| Error::InvalidInput(format!("cannot read cube {}: {e}", args.cube.display())))?;
    let dark_cube = load_msic(&args.dark).map_err(|e| {
        Error::InvalidInput(format!(
            "dark-current subtraction stage: cannot read dark frame {}: {e}",
            args.dark.display()
        ))
    })?;
    let dark = DarkFrame::from_cube(&dark_cube);

    let subtracted = subtract_dark(&cube, &dark)?;
    let filtered = window_filter(&subtracted, args.half_width, args.mode)?;
    let window = args
        .window
        .unwrap_or_else(|| WindowSpec::centered(filtered.height(), filtered.width(), WindowSpec::DEFAULT_SIDE));
    let mut set = crop_signatures(&filtered, window)?;
    set.relabel(args.trial, args.class);

    let csv_path = out_dir.join("signatures.csv");
    set.save_csv(&csv_path)?;
    manifest.output(&csv_path);
    manifest.finish(out_dir)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    schema_version: u32,
    model: PipelineModel,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricsDoc {
    schema_version: u32,
    best_gamma: f64,
    best_cost: f64,
    cv_accuracy: f64,
    train: EvalMetrics,
    test: EvalMetrics,
    baseline_1nn_test_accuracy: f64,
    baseline_centroid_test_accuracy: f64,
}

fn write_features_csv(path: &Path, rows: &[crate::pipeline::FeatureRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "set_id,reheat_class,trial,split,d_b1,d_b2,d_b")?;
    for r in rows {
        let split = match r.split {
            Split::Train => "train",
            Split::Test => "test",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.set_id, r.class, r.trial, split, r.d_b1, r.d_b2, r.d_b
        )?;
    }
    Ok(())
}

/// `train`: reform labelled sets, compute features, sweep the grid, fit the
/// final model, and persist model/metrics/confusions/sweep/features.
pub fn cmd_train(signatures: &Path, cfg: &TrainConfig, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let mut manifest = ManifestBuilder::new("train", cfg.seed, serde_json::to_value(cfg)?);
    manifest.input(signatures);

    let data = SignatureSet::load_csv(signatures)?;
    let outcome = train_pipeline(&data, cfg)?;

    let model_path = out_dir.join("model.json");
    write_json(
        &model_path,
        &ModelDoc {
            schema_version: SCHEMA_VERSION,
            model: outcome.model.clone(),
        },
    )?;
    manifest.output(&model_path);

    let train_feats: Vec<LabelledFeature> = outcome
        .features
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| LabelledFeature {
            x: r.d_b,
            y: r.class,
            trial_id: r.trial,
            set_id: r.set_id,
        })
        .collect();
    let test_feats: Vec<LabelledFeature> = outcome
        .features
        .iter()
        .filter(|r| r.split == Split::Test)
        .map(|r| LabelledFeature {
            x: r.d_b,
            y: r.class,
            trial_id: r.trial,
            set_id: r.set_id,
        })
        .collect();
    let nn = metrics_from_confusion(&baseline_1nn(&train_feats, &test_feats)?).1;
    let centroid = metrics_from_confusion(&baseline_centroid(&train_feats, &test_feats)?).1;

    let metrics_path = out_dir.join("metrics.json");
    write_json(
        &metrics_path,
        &MetricsDoc {
            schema_version: SCHEMA_VERSION,
            best_gamma: outcome.sweep.best_gamma,
            best_cost: outcome.sweep.best_cost,
            cv_accuracy: outcome.sweep.best_accuracy,
            train: outcome.train_metrics.clone(),
            test: outcome.test_metrics.clone(),
            baseline_1nn_test_accuracy: nn.overall_accuracy,
            baseline_centroid_test_accuracy: centroid.overall_accuracy,
        },
    )?;
    manifest.output(&metrics_path);

    let sweep_path = out_dir.join("sweep_table.csv");
    outcome.sweep.write_csv(std::fs::File::create(&sweep_path)?)?;
    manifest.output(&sweep_path);

    let train_conf_path = out_dir.join("confusion_train.csv");
    outcome.train_confusion.write_csv(std::fs::File::create(&train_conf_path)?)?;
    manifest.output(&train_conf_path);

    let test_conf_path = out_dir.join("confusion_test.csv");
    outcome.test_confusion.write_csv(std::fs::File::create(&test_conf_path)?)?;
    manifest.output(&test_conf_path);

    let features_path = out_dir.join("features.csv");
    write_features_csv(&features_path, &outcome.features)?;
    manifest.output(&features_path);

    manifest.finish(out_dir)
}

/// `predict`: load a model, chunk the signature stream into sets, emit
/// per-set class estimates.
pub fn cmd_predict(model_path: &Path, signatures: &Path, set_size: Option<usize>, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let doc: ModelDoc = read_json(model_path)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "model schema version {} unsupported",
            doc.schema_version
        )));
    }
    let size = set_size.unwrap_or(doc.model.set_size);
    let mut manifest = ManifestBuilder::new(
        "predict",
        doc.model.svm.seed,
        serde_json::json!({ "set_size": size, "model": model_path.display().to_string() }),
    );
    manifest.input(model_path).input(signatures);

    let data = SignatureSet::load_csv(signatures)?;
    let rows = predict_sets(&doc.model, &data, size)?;

    let pred_path = out_dir.join("predictions.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&pred_path)?);
    writeln!(w, "set_index,size,d_b,predicted_class")?;
    for r in &rows {
        writeln!(w, "{},{},{},{}", r.set_index, r.size, r.d_b, r.predicted_class)?;
    }
    drop(w);
    manifest.output(&pred_path);
    manifest.finish(out_dir)
}

/// One persisted clustering report.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub schema_version: u32,
    /// Trial id, or None for an amalgamated (cross-trial) run.
    pub trial: Option<u32>,
    pub amalgamated: bool,
    pub report: ClusterReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct CriticalsSummary {
    schema_version: u32,
    algorithm: SelectionAlgorithm,
    per_trial: BTreeMap<String, Vec<u32>>,
}

/// `cluster`: per-trial (default) or amalgamated sigma-sweep clustering.
/// Emits sweep curves CSV and a report JSON per run plus a summary of the
/// critical sets.
pub fn cmd_cluster(
    signatures: &Path,
    cfg: &ClusterConfig,
    amalgamate: bool,
    only_trial: Option<u32>,
    out_dir: &Path,
) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let mut manifest = ManifestBuilder::new(
        "cluster",
        cfg.seed,
        serde_json::json!({
            "algorithm": cfg.algorithm,
            "min_mode": cfg.min_mode,
            "max_mode": cfg.max_mode,
            "subsample_per_class": cfg.subsample_per_class,
            "sigma_points": cfg.sigma_grid.len(),
            "amalgamate": amalgamate,
        }),
    );
    manifest.input(signatures);
    let data = SignatureSet::load_csv(signatures)?;

    let runs: Vec<(Option<u32>, SignatureSet)> = if amalgamate {
        vec![(None, data)]
    } else {
        // Trials run independently; mixing them requires --amalgamate.
        crate::synth::trial_subsets(&data)
            .into_iter()
            .filter(|(t, _)| only_trial.map_or(true, |want| *t == want))
            .map(|(t, s)| (Some(t), s))
            .collect()
    };
    if runs.is_empty() {
        return Err(Error::InvalidInput(match only_trial {
            Some(t) => format!("trial {t} not present in the input"),
            None => "no signatures to cluster".into(),
        }));
    }

    let mut summary = BTreeMap::new();
    for (trial, subset) in &runs {
        let (sweep, report) = cluster_pipeline(subset, cfg)?;
        let tag = match trial {
            Some(t) => format!("trial{t}"),
            None => "all".to_string(),
        };
        let sweep_path = out_dir.join(format!("sweep_{tag}.csv"));
        sweep.write_csv(std::fs::File::create(&sweep_path)?)?;
        manifest.output(&sweep_path);

        let report_path = out_dir.join(format!("report_{tag}.json"));
        write_json(
            &report_path,
            &ReportDoc {
                schema_version: SCHEMA_VERSION,
                trial: *trial,
                amalgamated: amalgamate,
                report: report.clone(),
            },
        )?;
        manifest.output(&report_path);
        summary.insert(tag, report.critical.iter().copied().collect::<Vec<u32>>());
    }

    let summary_path = out_dir.join("criticals.json");
    write_json(
        &summary_path,
        &CriticalsSummary {
            schema_version: SCHEMA_VERSION,
            algorithm: cfg.algorithm,
            per_trial: summary,
        },
    )?;
    manifest.output(&summary_path);
    manifest.finish(out_dir)
}

fn format_set(set: &BTreeSet<u32>) -> String {
    set.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("|")
}

/// `eval`: join clustering reports with the chemical ground truth and score
/// the agreement (Jaccard) per trial and property.
pub fn cmd_eval(reports: &Path, chemical: &Path, property: Option<ChemProperty>, out_dir: &Path) -> Result<()> {
    ensure_out_dir(out_dir)?;
    let mut manifest = ManifestBuilder::new(
        "eval",
        0,
        serde_json::json!({ "property": property.map(|p| format!("{p:?}")) }),
    );
    manifest.input(reports).input(chemical);

    let report_paths: Vec<PathBuf> = if reports.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(reports)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .map_or(false, |n| n.starts_with("report_") && n.ends_with(".json"))
            })
            .collect();
        paths.sort();
        paths
    } else {
        vec![reports.to_path_buf()]
    };
    if report_paths.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no report_*.json files under {}",
            reports.display()
        )));
    }

    let records = load_chemical(std::io::BufReader::new(std::fs::File::open(chemical)?))?;
    let by_trial: BTreeMap<u32, &crate::synth::ChemicalRecord> =
        records.iter().map(|r| (r.trial, r)).collect();

    let properties: Vec<ChemProperty> = match property {
        Some(p) => vec![p],
        None => vec![ChemProperty::Tbars, ChemProperty::Totox],
    };

    let agreement_path = out_dir.join("agreement.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&agreement_path)?);
    writeln!(w, "trial,algorithm,property,predicted,reference,jaccard")?;
    let mut wrote_rows = false;
    for path in &report_paths {
        let doc: ReportDoc = read_json(path)?;
        let Some(trial) = doc.trial else {
            // Amalgamated reports have no matching chemical row per trial.
            continue;
        };
        let Some(record) = by_trial.get(&trial) else {
            continue;
        };
        let algorithm = doc
            .report
            .algorithm
            .map(|a| a.to_string())
            .unwrap_or_else(|| "unknown".to_string());
        for prop in &properties {
            let reference = chemical_critical(record, *prop);
            let score = crate::sclust::agreement(&doc.report.critical, &reference);
            let prop_name = match prop {
                ChemProperty::Tbars => "tbars",
                ChemProperty::Totox => "totox",
            };
            writeln!(
                w,
                "{trial},{algorithm},{prop_name},{},{},{score}",
                format_set(&doc.report.critical),
                format_set(&reference),
            )?;
            wrote_rows = true;
        }
    }
    drop(w);
    if !wrote_rows {
        return Err(Error::InvalidInput(
            "no (report, chemical) trial pairs matched; nothing to score".into(),
        ));
    }
    manifest.output(&agreement_path);
    manifest.finish(out_dir)
}

/// `report`: summarize a run directory (manifest plus any known artifacts)
/// as plain text; optionally persist the summary in a separate directory.
pub fn cmd_report(run_dir: &Path, out_dir: Option<&Path>) -> Result<String> {
    let manifest_path = run_dir.join("manifest.json");
    let manifest: RunManifest = read_json(&manifest_path).map_err(|e| {
        Error::InvalidInput(format!("{} is not a run directory: {e}", run_dir.display()))
    })?;
    let mut text = String::new();
    text.push_str(&format!(
        "run: {} (tool {}, seed {}, {} ms)\n",
        manifest.command, manifest.tool_version, manifest.seed, manifest.duration_ms
    ));
    text.push_str(&format!("inputs: {}\n", manifest.inputs.join(", ")));
    text.push_str(&format!("outputs: {}\n", manifest.outputs.join(", ")));

    let metrics_path = run_dir.join("metrics.json");
    if metrics_path.exists() {
        let doc: MetricsDoc = read_json(&metrics_path)?;
        text.push_str(&format!(
            "svm: gamma {} cost {} (cv accuracy {:.4})\n",
            doc.best_gamma, doc.best_cost, doc.cv_accuracy
        ));
        text.push_str(&format!(
            "train: overall {:.4} heated-only {:.4} pure-vs-heated {:.4}\n",
            doc.train.overall_accuracy, doc.train.heated_only_accuracy, doc.train.pure_vs_heated_accuracy
        ));
        text.push_str(&format!(
            "test: overall {:.4} heated-only {:.4} pure-vs-heated {:.4}\n",
            doc.test.overall_accuracy, doc.test.heated_only_accuracy, doc.test.pure_vs_heated_accuracy
        ));
        text.push_str(&format!(
            "baselines (test): 1-nn {:.4} centroid {:.4}\n",
            doc.baseline_1nn_test_accuracy, doc.baseline_centroid_test_accuracy
        ));
    }
    let criticals_path = run_dir.join("criticals.json");
    if criticals_path.exists() {
        let doc: CriticalsSummary = read_json(&criticals_path)?;
        text.push_str(&format!("critical classes ({}):\n", doc.algorithm));
        for (tag, set) in &doc.per_trial {
            let formatted: Vec<String> = set.iter().map(|c| c.to_string()).collect();
            text.push_str(&format!("  {tag}: {{{}}}\n", formatted.join(", ")));
        }
    }
    let agreement_path = run_dir.join("agreement.csv");
    if agreement_path.exists() {
        text.push_str("agreement with chemical analysis:\n");
        for line in std::fs::read_to_string(&agreement_path)?.lines().skip(1) {
            text.push_str(&format!("  {line}\n"));
        }
    }

    if let Some(out) = out_dir {
        ensure_out_dir(out)?;
        let mut manifest_out = ManifestBuilder::new("report", manifest.seed, serde_json::Value::Null);
        manifest_out.input(run_dir);
        let report_path = out.join("report.txt");
        std::fs::write(&report_path, &text)?;
        manifest_out.output(&report_path);
        manifest_out.finish(out)?;
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_grid_spec_parses_and_builds() {
        let spec = SigmaGridSpec::parse("1.0:50:5").unwrap();
        assert_eq!(spec.points, 5);
        let grid = spec.build().unwrap();
        assert_eq!(grid.len(), 5);
        assert!((grid[0] - 1.0).abs() < 1e-12);
        assert!((grid[4] - 50.0).abs() < 1e-9);
        assert!(SigmaGridSpec::parse("1:2").is_err());
        assert!(SigmaGridSpec::parse("a:b:c").is_err());
    }

    #[test]
    fn config_file_round_trips_through_toml() {
        let text = r#"
[synth]
trials = 2
classes = 3
signatures_per_class_per_trial = 50
critical_classes = [1]

[train]
sets_per_class = 5
set_size = 20
folds = 3

[cluster]
subsample_per_class = 16
algorithm = "lgv"

[cluster.sigma_grid]
start = 1.0
stop = 30.0
points = 8
"#;
        let cfg: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.synth.trials, 2);
        assert_eq!(cfg.train.sets_per_class, 5);
        assert_eq!(cfg.cluster.algorithm, SelectionAlgorithm::Lgv);
        let cluster = cfg.cluster.to_config().unwrap();
        assert_eq!(cluster.sigma_grid.len(), 8);
        // Untouched fields keep defaults.
        assert_eq!(cfg.train.folds, 3);
        assert_eq!(cfg.synth.bands, 9);
    }

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg: FileConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.synth, SynthConfig::default());
        assert_eq!(cfg.train, TrainConfig::default());
    }
}
