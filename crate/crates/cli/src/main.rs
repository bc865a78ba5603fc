use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod layout;

#[derive(Parser)]
#[command(name = "greenseg", version, about = "Indoor point cloud segmentation with hop features and boosted trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StyleArg {
    Block,
    View,
    Room,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F16,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    /// Leave classes absent from truth and prediction out of the mean.
    Skip,
    /// Count absent classes as IoU 0.
    Zero,
}

#[derive(Subcommand)]
enum Command {
    /// Merge per-object annotation files into one labeled file per room.
    Convert {
        #[arg(long)]
        s3dis_root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a family of labeled synthetic rooms as Area_<k>/<room>.txt.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        rooms: usize,
        #[arg(long, default_value_t = 6)]
        areas: u8,
        #[arg(long, default_value_t = 0.04)]
        spacing: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Split rooms into training and test units.
    Preprocess {
        #[arg(long, value_enum, default_value = "room")]
        style: StyleArg,
        #[arg(long, default_value_t = 0.04)]
        grid: f64,
        #[arg(long, default_value_t = 6)]
        test_area: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Block edge length in meters (block style).
        #[arg(long, default_value_t = 1.0)]
        block_size: f64,
        /// Points per unit for block and view styles.
        #[arg(long)]
        unit_points: Option<usize>,
        /// Units per split for the view style; by default enough to cover
        /// the downsampled points once.
        #[arg(long)]
        view_units: Option<usize>,
    },
    /// Unit-size statistics of a preprocessed directory.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Compute the 21 local attributes of every unit.
    Attributes {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        k_local: usize,
    },
    /// Hop features; fits the standardization on train/ when present.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        hops: usize,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.25,0.5,0.5")]
        ratios: Vec<f64>,
        #[arg(long, value_enum, default_value = "f32")]
        precision: PrecisionArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        params: PathBuf,
    },
    /// Fit the boosted-tree classifier on extracted features.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        trees: usize,
        #[arg(long, default_value_t = 6)]
        max_depth: usize,
        #[arg(long, default_value_t = 0.3)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exact thresholds instead of 256 histogram bins.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        no_class_weights: bool,
        /// Train even if some classes have no samples.
        #[arg(long)]
        allow_absent_classes: bool,
    },
    /// Label every point of the feature files.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted and true labels.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        fold: Option<u8>,
        #[arg(long, value_enum, default_value = "skip")]
        policy: PolicyArg,
    },
    /// Leave-one-area-out cross-validation over Area_1..Area_<folds>.
    Crossval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 6)]
        folds: u8,
        #[arg(long, default_value_t = 0.04)]
        grid: f64,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 128)]
        trees: usize,
        #[arg(long, value_enum, default_value = "f32")]
        precision: PrecisionArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of training points per room given to the classifier.
        #[arg(long, default_value_t = 1.0)]
        train_fraction: f64,
        #[arg(long)]
        allow_absent_classes: bool,
        #[arg(long, value_enum, default_value = "skip")]
        policy: PolicyArg,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Color a labeled cloud by class for external viewers.
    Visualize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Label file to use instead of the cloud's own labels.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        drop_class: Option<String>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    use commands::*;
    match Cli::parse().command {
        Command::Convert { s3dis_root, out } => convert(&s3dis_root, &out),
        Command::Synth {
            out,
            rooms,
            areas,
            spacing,
            seed,
        } => synth(&out, rooms, areas, spacing, seed),
        Command::Preprocess {
            style,
            grid,
            test_area,
            seed,
            input,
            out,
            block_size,
            unit_points,
            view_units,
        } => preprocess(PreprocessArgs {
            style,
            grid,
            test_area,
            seed,
            input,
            out,
            block_size,
            unit_points,
            view_units,
        }),
        Command::Stats { input } => stats(&input),
        Command::Attributes { input, out, k_local } => attributes(&input, &out, k_local),
        Command::Extract {
            input,
            out,
            hops,
            k,
            ratios,
            precision,
            seed,
            params,
        } => extract_features(ExtractArgs {
            input,
            out,
            hops,
            k,
            ratios,
            precision,
            seed,
            params,
        }),
        Command::Train {
            features,
            out,
            trees,
            max_depth,
            learning_rate,
            seed,
            exact,
            no_class_weights,
            allow_absent_classes,
        } => train(TrainArgs {
            features,
            out,
            trees,
            max_depth,
            learning_rate,
            seed,
            exact,
            class_weights: !no_class_weights,
            allow_absent_classes,
        }),
        Command::Predict {
            model,
            features,
            out,
        } => predict(&model, &features, &out),
        Command::Eval {
            pred,
            truth,
            report,
            json,
            fold,
            policy,
        } => eval(&pred, &truth, report.as_deref(), json.as_deref(), fold, policy),
        Command::Crossval {
            data,
            folds,
            grid,
            k,
            trees,
            precision,
            seed,
            train_fraction,
            allow_absent_classes,
            policy,
            report,
            json,
        } => crossval(CrossvalArgs {
            data,
            folds,
            grid,
            k,
            trees,
            precision,
            seed,
            train_fraction,
            allow_absent_classes,
            policy,
            report,
            json,
        }),
        Command::Visualize {
            input,
            out,
            labels,
            drop_class,
        } => visualize(&input, &out, labels.as_deref(), drop_class.as_deref()),
    }
}
