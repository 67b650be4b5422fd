//! Experiment configuration: a line-oriented `key = value` file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::aggregate::{AggregationKind, AggregationTag, ClassDistanceMatrix};
use crate::data::{BlobSpec, LinearSpec};
use crate::error::{Error, Result};
use crate::likelihood::TargetFamily;
use crate::model::{Activation, Architecture};
use crate::train::{Optimizer, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Blobs(BlobSpec),
    Linear(LinearSpec),
    Csv { path: PathBuf, schema: PathBuf },
}

/// How the training split is turned into supervision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Supervision {
    /// Every training point with its own target.
    Direct,
    Aggregate(AggregationTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    PermutationAccuracy,
    Mse,
    ErrorVariance,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::PermutationAccuracy => "permutation_accuracy",
            Metric::Mse => "mse",
            Metric::ErrorVariance => "error_variance",
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, Metric::Accuracy | Metric::PermutationAccuracy)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Metric::Accuracy,
            Metric::PermutationAccuracy,
            Metric::Mse,
            Metric::ErrorVariance,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub dataset: DatasetSource,
    pub supervision: Supervision,
    pub set_size: usize,
    pub positive_class: usize,
    /// Number of aggregate sets; `None` picks the per-kind default.
    pub sets: Option<usize>,
    pub model: ModelKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub family: TargetFamily,
    pub train: TrainConfig,
    pub trials: usize,
    pub seed: u64,
    pub metric: Metric,
}

const KEYS: &[&str] = &[
    "dataset",
    "schema",
    "name",
    "aggregation",
    "k",
    "positive_class",
    "sets",
    "model",
    "hidden",
    "activation",
    "loss",
    "sigma",
    "scale",
    "optimizer",
    "lr",
    "epochs",
    "batch_size",
    "weight_decay",
    "trials",
    "seed",
    "metric",
    "classes",
    "n",
    "dim",
    "spread",
    "noise",
    "bias",
    "weights",
    "data_seed",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: bad value `{v}` for `{key}`"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad entry `{t}` in `{key}`")))
        })
        .collect()
}

impl RunConfig {
    /// Reads a config file; `seed` replaces the file's `seed` entry.
    pub fn from_path(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::parse_with_seed(&text, path.parent().unwrap_or(Path::new(".")), seed)
    }

    /// Relative dataset and schema paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        RunConfig::parse_with_seed(text, base, None)
    }

    pub fn parse_with_seed(text: &str, base: &Path, seed_override: Option<u64>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}`",
                    i + 1
                )));
            }
            if map
                .insert(key.to_owned(), (i + 1, value.trim().to_owned()))
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    i + 1
                )));
            }
        }
        let e = Entries { map };

        let seed: u64 = match seed_override {
            Some(s) => s,
            None => e.or("seed", 0)?,
        };
        let data_seed: u64 = e.or("data_seed", seed)?;
        let dataset = match e.raw("dataset") {
            None => return Err(Error::Config("missing `dataset`".into())),
            Some("blobs") => DatasetSource::Blobs(BlobSpec {
                classes: e.or("classes", 3)?,
                n: e.or("n", 3000)?,
                dim: e.or("dim", 2)?,
                spread: e.or("spread", 5.0)?,
                noise: e.or("noise", 0.5)?,
                seed: data_seed,
            }),
            Some("linear") => DatasetSource::Linear(LinearSpec {
                n: e.or("n", 5000)?,
                dim: e.or("dim", 5)?,
                noise: e.or("noise", 0.1)?,
                bias: e.or("bias", 0.0)?,
                weights: e.raw("weights").map(|w| list("weights", w)).transpose()?,
                seed: data_seed,
            }),
            Some(path) => {
                let schema = e
                    .raw("schema")
                    .ok_or_else(|| Error::Config("csv datasets need a `schema` file".into()))?;
                DatasetSource::Csv {
                    path: base.join(path),
                    schema: base.join(schema),
                }
            }
        };
        let name = match e.raw("name") {
            Some(n) => n.to_owned(),
            None => match &dataset {
                DatasetSource::Blobs(_) => "blobs".into(),
                DatasetSource::Linear(_) => "linear".into(),
                DatasetSource::Csv { path, .. } => path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into()),
            },
        };

        let supervision = match e.raw("aggregation") {
            None => return Err(Error::Config("missing `aggregation`".into())),
            Some("supervised" | "direct") => Supervision::Direct,
            Some(tag) => Supervision::Aggregate(
                tag.parse()
                    .map_err(|err: Error| Error::Config(err.to_string()))?,
            ),
        };
        let tag = match supervision {
            Supervision::Direct => None,
            Supervision::Aggregate(t) => Some(t),
        };
        let default_k = match tag {
            Some(AggregationTag::Similarity | AggregationTag::RankPair) => 2,
            Some(AggregationTag::Triplet) => 3,
            Some(_) => 4,
            None => 1,
        };
        let set_size = e.or("k", default_k)?;

        let model = match e.raw("model").unwrap_or("linear") {
            "linear" => ModelKind::Linear,
            "mlp" => ModelKind::Mlp,
            other => return Err(Error::Config(format!("unknown model `{other}`"))),
        };
        let default_family = match tag {
            Some(t) if t.is_classification() => "categorical",
            Some(AggregationTag::Sum) => "poisson",
            Some(AggregationTag::RankList) => "gumbel",
            _ => "gaussian",
        };
        let family_name = e.raw("loss").unwrap_or(default_family);
        let scale = if family_name == "cauchy" {
            e.or("scale", 1.0)?
        } else {
            e.or("sigma", 1.0)?
        };
        let family = TargetFamily::parse(family_name, scale)
            .map_err(|err| Error::Config(err.to_string()))?;

        let mut train = match model {
            ModelKind::Linear => TrainConfig::linear_default(seed),
            ModelKind::Mlp => TrainConfig::neural_default(seed),
        };
        let default_opt = train.optimizer.name();
        let lr = e.or("lr", train.optimizer.lr())?;
        train.optimizer = match e.raw("optimizer").unwrap_or(default_opt) {
            "sgd" => Optimizer::Sgd { lr },
            "adamw" => Optimizer::adamw(lr, e.or("weight_decay", Optimizer::DEFAULT_WEIGHT_DECAY)?),
            other => return Err(Error::Config(format!("unknown optimizer `{other}`"))),
        };
        train.epochs = e.or("epochs", train.epochs)?;
        train.batch_size = e.or("batch_size", train.batch_size)?;
        train
            .validate()
            .map_err(|err| Error::Config(err.to_string()))?;

        let default_metric = match tag {
            Some(t) if t.is_classification() => Metric::PermutationAccuracy,
            Some(AggregationTag::RankPair | AggregationTag::RankList) => Metric::ErrorVariance,
            _ => Metric::Mse,
        };
        let config = RunConfig {
            name,
            dataset,
            supervision,
            set_size,
            positive_class: e.or("positive_class", 1)?,
            sets: e.get("sets")?,
            model,
            hidden: match e.raw("hidden") {
                Some(h) => list("hidden", h)?,
                None => vec![64],
            },
            activation: e.or("activation", Activation::Relu)?,
            family,
            train,
            trials: e.or("trials", 10)?,
            seed,
            metric: e.or("metric", default_metric)?,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        let classification = self.family == TargetFamily::Categorical;
        if classification != self.metric.is_classification() {
            return Err(Error::Config(format!(
                "metric `{}` does not fit the {} loss",
                self.metric.name(),
                self.family
            )));
        }
        if self.supervision == Supervision::Direct
            && !matches!(self.family, TargetFamily::Gaussian { .. })
        {
            return Err(Error::Config(
                "supervised baseline uses the gaussian loss".into(),
            ));
        }
        let class_data = matches!(self.dataset, DatasetSource::Blobs(_));
        if class_data != classification {
            return Err(Error::Config(format!(
                "the {} loss does not fit the targets of `{}`",
                self.family, self.name
            )));
        }
        if self.sets == Some(0) {
            return Err(Error::Config("sets must be at least 1".into()));
        }
        // Surface kind/family incompatibilities before any data is touched.
        if let Supervision::Aggregate(_) = self.supervision {
            let classes = match &self.dataset {
                DatasetSource::Blobs(b) => b.classes,
                _ => 2,
            };
            let kind = self.kind(classes)?;
            crate::likelihood::AggregateLoss::new(kind, self.family)
                .map_err(|err| Error::Config(err.to_string()))?;
        }
        Ok(())
    }

    /// The aggregation for a dataset with `classes` classes.
    pub fn kind(&self, classes: usize) -> Result<AggregationKind> {
        let kind = match self.supervision {
            Supervision::Direct => AggregationKind::mean(1),
            Supervision::Aggregate(tag) => match tag {
                AggregationTag::Similarity => Ok(AggregationKind::similarity()),
                AggregationTag::Triplet => Ok(AggregationKind::triplet(
                    ClassDistanceMatrix::indicator(classes),
                )),
                AggregationTag::MultiInstance => {
                    AggregationKind::multi_instance(self.set_size, self.positive_class)
                }
                AggregationTag::Mean => AggregationKind::mean(self.set_size),
                AggregationTag::Sum => AggregationKind::sum(self.set_size),
                AggregationTag::RankPair => Ok(AggregationKind::rank_pair()),
                AggregationTag::RankList => AggregationKind::rank_list(self.set_size),
            },
        };
        kind.map_err(|err| Error::Config(err.to_string()))
    }

    pub fn architecture(&self, input: usize, output: usize) -> Architecture {
        match self.model {
            ModelKind::Linear => Architecture::Linear { input, output },
            ModelKind::Mlp => Architecture::Mlp {
                input,
                hidden: self.hidden.clone(),
                output,
                activation: self.activation,
            },
        }
    }

    /// Label for the method column, e.g. `mean[k=4]/gaussian/linear`.
    pub fn method(&self) -> String {
        let supervision = match self.supervision {
            Supervision::Direct => "supervised".to_owned(),
            Supervision::Aggregate(
                t @ (AggregationTag::MultiInstance
                | AggregationTag::Mean
                | AggregationTag::Sum
                | AggregationTag::RankList),
            ) => format!("{}[k={}]", t.name(), self.set_size),
            Supervision::Aggregate(t) => t.name().to_owned(),
        };
        let model = match self.model {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
        };
        format!("{supervision}/{}/{model}", self.family.name())
    }
}
