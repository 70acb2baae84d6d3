use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oilmsi_core::cli::{
    cmd_cluster, cmd_eval, cmd_predict, cmd_preprocess, cmd_report, cmd_simulate, cmd_train,
    load_config, PreprocessArgs, SigmaGridSpec,
};
use oilmsi_core::cube::{FilterMode, WindowSpec};
use oilmsi_core::error::{Error, Result};
use oilmsi_core::sclust::SelectionAlgorithm;
use oilmsi_core::synth::ChemProperty;

/// Reheated-oil analysis over transmittance multispectral images: synthetic
/// data, cube preprocessing, reheat-class estimation, and critical-class
/// clustering.
#[derive(Parser)]
#[command(name = "oilmsi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with planted drift and critical classes.
    Simulate {
        /// TOML configuration file (section [synth]).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the generator seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Preprocess one spectral cube into signatures: dark-current
    /// subtraction, windowed filter, window crop.
    Preprocess {
        /// Raw cube (MSIC container).
        #[arg(long)]
        cube: PathBuf,
        /// Dark frame (MSIC container, raw provenance).
        #[arg(long)]
        dark: PathBuf,
        /// Crop window as row,col,side; defaults to a centered 30x30.
        #[arg(long)]
        window: Option<String>,
        /// Filter half width w (the neighborhood spans 2w+1).
        #[arg(long, default_value_t = 15)]
        half_width: usize,
        /// Filter mode: mean (default) or median.
        #[arg(long, default_value = "mean")]
        mode: String,
        /// Trial label stamped on the signatures.
        #[arg(long, default_value_t = 0)]
        trial: u32,
        /// Reheat-class label stamped on the signatures.
        #[arg(long = "class", default_value_t = 0)]
        reheat_class: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the reheat-class estimator from a signatures CSV.
    Train {
        #[arg(long)]
        signatures: PathBuf,
        /// TOML configuration file (section [train]).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reduce signatures with FDA to this dimension before the
        /// statistics.
        #[arg(long)]
        fda_dim: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        sets_per_class: Option<usize>,
        #[arg(long)]
        set_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate reheat classes for a signature stream with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        signatures: PathBuf,
        /// Signatures per set; defaults to the model's training set size.
        #[arg(long)]
        set_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sigma-sweep spectral clustering and critical-class detection.
    Cluster {
        #[arg(long)]
        signatures: PathBuf,
        /// Prominent-mode selection: lgv or lbw.
        #[arg(long)]
        algorithm: String,
        /// TOML configuration file (section [cluster]).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Log-spaced sigma grid as start:stop:points.
        #[arg(long)]
        sigma_grid: Option<String>,
        /// Eigengap mode search range as min:max.
        #[arg(long)]
        mode_range: Option<String>,
        /// Per-class signature cap before the eigensolves.
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Pool all trials into one clustering run instead of per-trial
        /// analysis.
        #[arg(long)]
        amalgamate: bool,
        /// Restrict the per-trial analysis to one trial.
        #[arg(long)]
        trial: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score clustering reports against chemical ground truth.
    Eval {
        /// A report_*.json file or a cluster output directory.
        #[arg(long)]
        reports: PathBuf,
        /// Chemical CSV (trial,class,tbars_pct,tbars_sig,totox_pct,totox_sig).
        #[arg(long)]
        chemical: PathBuf,
        /// tbars, totox, or both.
        #[arg(long, default_value = "both")]
        property: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_window(text: &str) -> Result<WindowSpec> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidInput(format!(
            "window must be row,col,side, got {text:?}"
        )));
    }
    let parse = |s: &str, what: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("bad window {what} {s:?}")))
    };
    Ok(WindowSpec::new(
        parse(parts[0], "row")?,
        parse(parts[1], "col")?,
        parse(parts[2], "side")?,
    ))
}

fn parse_mode_range(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "mode range must be min:max, got {text:?}"
        )));
    }
    let lo = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidInput(format!("bad mode {:?}", parts[0])))?;
    let hi = parts[1]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidInput(format!("bad mode {:?}", parts[1])))?;
    Ok((lo, hi))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let mut cfg = load_config(config.as_deref())?.synth;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_simulate(&cfg, &out)
        }
        Command::Preprocess {
            cube,
            dark,
            window,
            half_width,
            mode,
            trial,
            reheat_class,
            out,
        } => {
            let args = PreprocessArgs {
                cube,
                dark,
                window: window.as_deref().map(parse_window).transpose()?,
                half_width,
                mode: mode.parse::<FilterMode>()?,
                trial,
                class: reheat_class,
            };
            cmd_preprocess(&args, &out)
        }
        Command::Train {
            signatures,
            config,
            seed,
            fda_dim,
            folds,
            sets_per_class,
            set_size,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?.train;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if fda_dim.is_some() {
                cfg.fda_dim = fda_dim;
            }
            if let Some(f) = folds {
                cfg.folds = f;
            }
            if let Some(n) = sets_per_class {
                cfg.sets_per_class = n;
            }
            if let Some(n) = set_size {
                cfg.set_size = n;
            }
            cmd_train(&signatures, &cfg, &out)
        }
        Command::Predict {
            model,
            signatures,
            set_size,
            out,
        } => cmd_predict(&model, &signatures, set_size, &out),
        Command::Cluster {
            signatures,
            algorithm,
            config,
            sigma_grid,
            mode_range,
            subsample,
            seed,
            amalgamate,
            trial,
            out,
        } => {
            let mut section = load_config(config.as_deref())?.cluster;
            section.algorithm = algorithm.parse::<SelectionAlgorithm>()?;
            if let Some(spec) = sigma_grid.as_deref() {
                section.sigma_grid = SigmaGridSpec::parse(spec)?;
            }
            if let Some(range) = mode_range.as_deref() {
                let (lo, hi) = parse_mode_range(range)?;
                section.min_mode = lo;
                section.max_mode = hi;
            }
            if let Some(cap) = subsample {
                section.subsample_per_class = cap;
            }
            if let Some(s) = seed {
                section.seed = s;
            }
            let cfg = section.to_config()?;
            cmd_cluster(&signatures, &cfg, amalgamate, trial, &out)
        }
        Command::Eval {
            reports,
            chemical,
            property,
            out,
        } => {
            let prop = match property.to_ascii_lowercase().as_str() {
                "both" => None,
                other => Some(other.parse::<ChemProperty>()?),
            };
            cmd_eval(&reports, &chemical, prop, &out)
        }
        Command::Report { run, out } => {
            let text = cmd_report(&run, out.as_deref())?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
