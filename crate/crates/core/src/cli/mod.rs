//! The `aggobs` command line: `run` an experiment from a config file, or
//! `verify` the likelihoods against their oracles.

pub mod config;
pub mod verify;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::RngCore;

use crate::aggregate::{direct_dataset, make_aggregate_dataset, AggregateDataset, Targets};
use crate::data::{
    load_csv, make_blobs, make_linear, split, Schema, SplitSpec, Standardizer, TabularDataset,
};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy, aggregate_trials, error_variance, mse, permutation_accuracy_with_mapping,
    TrialSummary,
};
use crate::likelihood::{AggregateLoss, TargetFamily};
use crate::model::ParamMap;
use crate::rng;
use crate::train::fit;

use config::{DatasetSource, Metric, RunConfig, Supervision};

#[derive(Debug, Parser)]
#[command(
    name = "aggobs",
    version,
    about = "Learning from aggregate observations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and print `dataset method metric mean std`.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for results, per-trial predictions, metadata and checkpoints.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write each trial's aggregate sets to the output directory.
        #[arg(long, requires = "out")]
        dump_sets: bool,
        /// Per-epoch training loss on stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Cross-check the closed-form likelihoods against brute-force oracles.
    Verify,
}

pub const HEADER: &str = "dataset\tmethod\tmetric\tmean\tstd";

/// Exit status for a failed run: 2 configuration, 3 data, 4 numerics.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::InvalidKind(_) | Error::Mismatch(_) | Error::Budget(_) => 2,
        Error::NonFinite(_) | Error::NonPositive { .. } => 4,
        _ => 3,
    }
}

/// One test-set prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Row index in the loaded dataset.
    pub row: usize,
    pub truth: f64,
    pub predicted: f64,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub seed: u64,
    pub value: f64,
    pub predictions: Vec<Prediction>,
    /// For permutation accuracy: `mapping[predicted] = true class`.
    pub mapping: Option<Vec<usize>>,
    pub loss_per_epoch: Vec<f64>,
    pub model: ParamMap,
    pub sets: AggregateDataset,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub dataset: String,
    pub method: String,
    pub metric: Metric,
    pub summary: TrialSummary,
    pub trials: Vec<TrialOutcome>,
    pub dropped_rows: usize,
}

impl Experiment {
    pub fn table(&self) -> String {
        format!(
            "{HEADER}\n{}\t{}\t{}\t{}\t{}\n",
            self.dataset,
            self.method,
            self.metric.name(),
            self.summary.mean,
            self.summary.std
        )
    }
}

fn derived_seed(seed: u64, stream: u64) -> u64 {
    rng::substream(seed, stream).next_u64()
}

fn load(config: &RunConfig) -> Result<TabularDataset> {
    let mut data = match &config.dataset {
        DatasetSource::Blobs(spec) => make_blobs(spec)?.0,
        DatasetSource::Linear(spec) => make_linear(spec)?.0,
        DatasetSource::Csv { path, schema } => {
            let schema = Schema::from_path(schema).map_err(|e| match e {
                Error::Io(msg) => Error::Config(format!("schema {}: {msg}", schema.display())),
                other => other,
            })?;
            load_csv(path, &schema)?
        }
    };
    data.name = config.name.clone();
    Ok(data)
}

/// Evaluates `metric` on individual predictions. Class predictions are
/// stored as indices in `f64`.
pub fn score(
    metric: Metric,
    predictions: &[Prediction],
    classes: usize,
) -> Result<(f64, Option<Vec<usize>>)> {
    let truth: Vec<f64> = predictions.iter().map(|p| p.truth).collect();
    let pred: Vec<f64> = predictions.iter().map(|p| p.predicted).collect();
    let labels = |v: &[f64]| v.iter().map(|&x| x as usize).collect::<Vec<_>>();
    match metric {
        Metric::Mse => Ok((mse(&pred, &truth)?, None)),
        Metric::ErrorVariance => Ok((error_variance(&pred, &truth)?, None)),
        Metric::Accuracy => Ok((accuracy(&labels(&pred), &labels(&truth))?, None)),
        Metric::PermutationAccuracy => {
            let (value, mapping) =
                permutation_accuracy_with_mapping(&labels(&pred), &labels(&truth), classes)?;
            Ok((value, Some(mapping)))
        }
    }
}

fn run_trial(
    config: &RunConfig,
    data: &TabularDataset,
    trial: usize,
    verbose: bool,
) -> Result<TrialOutcome> {
    let seed = config.seed.wrapping_add(trial as u64);
    let parts = split(data.len(), &SplitSpec::standard(seed))?;
    let train_raw = data.subset(&parts.train);
    let mut stats = Standardizer::fit(&train_raw)?;
    if config.family == TargetFamily::Poisson {
        // Counts must stay nonnegative integers.
        stats.target_mean = None;
    }
    let train = stats.apply(&train_raw)?;
    let test = stats.apply(&data.subset(&parts.test))?;

    let classes = train.targets.classes().unwrap_or(1);
    let sets = match config.supervision {
        Supervision::Direct => match &train.targets {
            Targets::Real(z) => direct_dataset(&train.features, z)?,
            Targets::Class { .. } => {
                return Err(Error::Config(
                    "supervised baseline needs real targets".into(),
                ))
            }
        },
        Supervision::Aggregate(tag) => {
            let count = config
                .sets
                .unwrap_or_else(|| tag.default_set_count(train.len()));
            let kind = config.kind(classes)?;
            make_aggregate_dataset(
                &train.features,
                &train.targets,
                &kind,
                count,
                derived_seed(seed, 1),
            )?
        }
    };
    let loss = AggregateLoss::new(sets.kind.clone(), config.family)?;
    let output = if config.family == TargetFamily::Categorical {
        classes
    } else {
        1
    };
    let mut model = ParamMap::initialized(
        config.architecture(train.dim(), output),
        config.family,
        derived_seed(seed, 2),
    )?;
    let mut train_config = config.train.clone();
    train_config.seed = seed;
    train_config.verbose = verbose;
    let report = fit(&mut model, &loss, &sets, &train_config)?;

    let truths: Vec<f64> = match &test.targets {
        Targets::Real(z) => z.clone(),
        Targets::Class { labels, .. } => labels.iter().map(|&c| c as f64).collect(),
    };
    let predictions = parts
        .test
        .iter()
        .zip(&test.features)
        .zip(truths)
        .map(|((&row, x), truth)| {
            let predicted = model.forward(x)?.point_prediction();
            if !predicted.is_finite() {
                return Err(Error::NonFinite("test prediction"));
            }
            Ok(Prediction {
                row,
                truth,
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (value, mapping) = score(config.metric, &predictions, classes)?;
    Ok(TrialOutcome {
        seed,
        value,
        predictions,
        mapping,
        loss_per_epoch: report.loss_per_epoch,
        model,
        sets,
    })
}

/// Runs all trials of `config`. Trial `t` uses seed `config.seed + t`.
pub fn run_experiment(config: &RunConfig, verbose: bool) -> Result<Experiment> {
    let data = load(config)?;
    if config.metric.is_classification() != data.targets.classes().is_some() {
        return Err(Error::Config(format!(
            "metric `{}` does not fit the targets of `{}`",
            config.metric.name(),
            data.name
        )));
    }
    let trials = (0..config.trials)
        .map(|t| run_trial(config, &data, t, verbose))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = trials.iter().map(|t| t.value).collect();
    Ok(Experiment {
        dataset: data.name.clone(),
        method: config.method(),
        metric: config.metric,
        summary: aggregate_trials(&values)?,
        trials,
        dropped_rows: data.dropped.len(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `results.tsv`, `predictions.tsv`, `metadata.tsv`, one checkpoint per
/// trial and, optionally, the aggregate sets.
pub fn write_outputs(
    experiment: &Experiment,
    config: &RunConfig,
    dir: &Path,
    dump_sets: bool,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("results.tsv"), &experiment.table())?;

    let mut predictions = String::from("trial\trow\ttruth\tprediction\n");
    for (t, trial) in experiment.trials.iter().enumerate() {
        for p in &trial.predictions {
            writeln!(predictions, "{t}\t{}\t{}\t{}", p.row, p.truth, p.predicted)
                .expect("string write");
        }
    }
    write_file(&dir.join("predictions.tsv"), &predictions)?;

    let mut meta = String::from("key\tvalue\n");
    let mut put =
        |k: &str, v: &dyn std::fmt::Display| writeln!(meta, "{k}\t{v}").expect("string write");
    put("dataset", &experiment.dataset);
    put("method", &experiment.method);
    put("metric", &experiment.metric.name());
    put("trials", &experiment.trials.len());
    put("seed", &config.seed);
    put("optimizer", &config.train.optimizer.name());
    put("lr", &config.train.optimizer.lr());
    put("epochs", &config.train.epochs);
    put("batch_size", &config.train.batch_size);
    put("dropped_rows", &experiment.dropped_rows);
    for (t, trial) in experiment.trials.iter().enumerate() {
        put(&format!("trial.{t}.seed"), &trial.seed);
        put(&format!("trial.{t}.sets"), &trial.sets.len());
        put(&format!("trial.{t}.value"), &trial.value);
        if let Some(last) = trial.loss_per_epoch.last() {
            put(&format!("trial.{t}.final_train_nll"), last);
        }
        if let Some(mapping) = &trial.mapping {
            let m: Vec<String> = mapping.iter().map(|c| c.to_string()).collect();
            put(&format!("trial.{t}.permutation"), &m.join(","));
        }
    }
    write_file(&dir.join("metadata.tsv"), &meta)?;

    for (t, trial) in experiment.trials.iter().enumerate() {
        let path = dir.join(format!("model_trial{t}.ckpt"));
        let file =
            File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        trial.model.save(&mut out)?;
        out.flush()?;
        if dump_sets {
            let path = dir.join(format!("sets_trial{t}.tsv"));
            let file =
                File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            trial.sets.write_debug_dump(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Entry point behind `main`; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Verify => match verify::run_checks() {
            Ok(checks) => {
                for c in &checks {
                    println!("{c}");
                }
                i32::from(!checks.iter().all(verify::Check::passed))
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Run {
            config,
            seed,
            out,
            dump_sets,
            verbose,
        } => {
            let result = RunConfig::from_path(&config, seed).and_then(|cfg| {
                let experiment = run_experiment(&cfg, verbose)?;
                if let Some(dir) = &out {
                    write_outputs(&experiment, &cfg, dir, dump_sets)?;
                }
                Ok(experiment.table())
            });
            match result {
                Ok(table) => {
                    print!("{table}");
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}
