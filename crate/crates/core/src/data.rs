//! Tabular data: CSV ingestion with a column schema, standardization with
//! training statistics, seeded splits and synthetic generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::aggregate::Targets;
use crate::error::{ensure_positive, Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Target,
}

/// Column roles keyed by header name, in schema-file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub columns: Vec<(String, ColumnRole)>,
}

impl Schema {
    /// One `name<TAB>{numeric|categorical|target}` line per column. Blank
    /// lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (name, role) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!("schema line {}: expected name<TAB>role", n + 1))
            })?;
            let role = match role.trim() {
                "numeric" => ColumnRole::Numeric,
                "categorical" => ColumnRole::Categorical,
                "target" => ColumnRole::Target,
                other => {
                    return Err(Error::Config(format!(
                        "schema line {}: unknown role `{other}`",
                        n + 1
                    )))
                }
            };
            columns.push((name.trim().to_owned(), role));
        }
        let targets = columns
            .iter()
            .filter(|(_, r)| *r == ColumnRole::Target)
            .count();
        if targets != 1 {
            return Err(Error::Config(format!(
                "schema must declare exactly one target column, found {targets}"
            )));
        }
        Ok(Schema { columns })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Schema::parse(&std::fs::read_to_string(path)?)
    }
}

/// Where a feature column came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureColumn {
    Numeric(String),
    /// Indicator of `level` in categorical column `source`.
    OneHot {
        source: String,
        level: String,
    },
}

impl FeatureColumn {
    pub fn label(&self) -> String {
        match self {
            FeatureColumn::Numeric(name) => name.clone(),
            FeatureColumn::OneHot { source, level } => format!("{source}={level}"),
        }
    }
}

/// A row skipped during loading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DroppedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub targets: Targets,
    pub columns: Vec<FeatureColumn>,
    pub dropped: Vec<DroppedRow>,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn subset(&self, indices: &[usize]) -> TabularDataset {
        TabularDataset {
            name: self.name.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            targets: self.targets.subset(indices),
            columns: self.columns.clone(),
            dropped: Vec::new(),
        }
    }
}

enum Cell {
    Number(f64),
    Level(String),
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<TabularDataset> {
    let file = File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, schema, &name)
}

/// Parses comma-separated text with a header line. Rows with a wrong field
/// count, a missing value or an unparsable number are dropped and recorded.
pub fn read_csv<R: Read>(input: R, schema: &Schema, name: &str) -> Result<TabularDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Data(format!("unreadable header: {e}")))?
        .clone();
    let positions = schema
        .columns
        .iter()
        .map(|(col, role)| {
            header
                .iter()
                .position(|h| h == col)
                .map(|p| (p, *role))
                .ok_or_else(|| Error::Data(format!("column `{col}` not found in header")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut dropped = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                dropped.push(DroppedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            dropped.push(DroppedRow {
                line,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
            continue;
        }
        let parsed: std::result::Result<Vec<Cell>, String> = positions
            .iter()
            .map(|&(p, role)| {
                let field = &record[p];
                if field.is_empty() || field == "?" || field.eq_ignore_ascii_case("na") {
                    return Err(format!("missing value in `{}`", &header[p]));
                }
                match role {
                    ColumnRole::Categorical => Ok(Cell::Level(field.to_owned())),
                    _ => field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(Cell::Number)
                        .ok_or_else(|| format!("bad number `{field}` in `{}`", &header[p])),
                }
            })
            .collect();
        match parsed {
            Ok(cells) => rows.push(cells),
            Err(reason) => dropped.push(DroppedRow { line, reason }),
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "{name}: no usable rows ({} dropped)",
            dropped.len()
        )));
    }

    let mut levels: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (c, (_, role)) in schema.columns.iter().enumerate() {
        if *role == ColumnRole::Categorical {
            let set: BTreeSet<&str> = rows
                .iter()
                .map(|r| match &r[c] {
                    Cell::Level(s) => s.as_str(),
                    Cell::Number(_) => unreachable!("categorical cells hold levels"),
                })
                .collect();
            levels.insert(c, set.into_iter().map(str::to_owned).collect());
        }
    }
    let mut columns = Vec::new();
    for (c, (col, role)) in schema.columns.iter().enumerate() {
        match role {
            ColumnRole::Numeric => columns.push(FeatureColumn::Numeric(col.clone())),
            ColumnRole::Categorical => {
                columns.extend(levels[&c].iter().map(|level| FeatureColumn::OneHot {
                    source: col.clone(),
                    level: level.clone(),
                }))
            }
            ColumnRole::Target => {}
        }
    }

    let mut features = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for row in rows {
        let mut x = Vec::with_capacity(columns.len());
        for (c, cell) in row.into_iter().enumerate() {
            match (schema.columns[c].1, cell) {
                (ColumnRole::Target, Cell::Number(v)) => targets.push(v),
                (ColumnRole::Numeric, Cell::Number(v)) => x.push(v),
                (ColumnRole::Categorical, Cell::Level(s)) => {
                    x.extend(levels[&c].iter().map(|l| if *l == s { 1.0 } else { 0.0 }))
                }
                _ => unreachable!("cells are parsed according to their role"),
            }
        }
        features.push(x);
    }
    Ok(TabularDataset {
        name: name.to_owned(),
        features,
        targets: Targets::Real(targets),
        columns,
        dropped,
    })
}

/// Per-column training statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; `None` for (numerically) constant columns.
    pub std: Vec<Option<f64>>,
    /// Training target mean, for real-valued targets.
    pub target_mean: Option<f64>,
}

impl Standardizer {
    pub fn fit(train: &TabularDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training split"));
        }
        let n = train.len() as f64;
        let d = train.dim();
        let mean: Vec<f64> = (0..d)
            .map(|j| train.features.iter().map(|x| x[j]).sum::<f64>() / n)
            .collect();
        let std = (0..d)
            .map(|j| {
                let var = train
                    .features
                    .iter()
                    .map(|x| (x[j] - mean[j]).powi(2))
                    .sum::<f64>()
                    / n;
                let s = var.sqrt();
                (s > 1e-12 * mean[j].abs().max(1.0)).then_some(s)
            })
            .collect();
        let target_mean = match &train.targets {
            Targets::Real(v) => Some(v.iter().sum::<f64>() / n),
            Targets::Class { .. } => None,
        };
        Ok(Standardizer {
            mean,
            std,
            target_mean,
        })
    }

    pub fn apply(&self, data: &TabularDataset) -> Result<TabularDataset> {
        if data.dim() != self.mean.len() {
            return Err(Error::Dimension {
                context: "standardized columns",
                expected: self.mean.len(),
                got: data.dim(),
            });
        }
        let features = data
            .features
            .iter()
            .map(|x| {
                x.iter()
                    .zip(self.mean.iter().zip(&self.std))
                    .map(|(v, (m, s))| match s {
                        Some(s) => (v - m) / s,
                        None => v - m,
                    })
                    .collect()
            })
            .collect();
        let targets = match (&data.targets, self.target_mean) {
            (Targets::Real(v), Some(m)) => Targets::Real(v.iter().map(|t| t - m).collect()),
            (t, _) => t.clone(),
        };
        Ok(TabularDataset {
            name: data.name.clone(),
            features,
            targets,
            columns: data.columns.clone(),
            dropped: data.dropped.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// 60/20/20.
    pub fn standard(seed: u64) -> Self {
        SplitSpec {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("train fraction", self.train)?;
        ensure_positive("validation fraction", self.validation)?;
        ensure_positive("test fraction", self.test)?;
        let total = self.train + self.validation + self.test;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "split fractions sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Row indices of each partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions a seeded permutation of `0..n`: validation and test take
/// `floor(fraction * n)` rows each, train takes the rest.
pub fn split(n: usize, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if n < 3 {
        return Err(Error::Data(format!("cannot split {n} rows three ways")));
    }
    let n_val = (spec.validation * n as f64).floor() as usize;
    let n_test = (spec.test * n as f64).floor() as usize;
    let n_train = n - n_val - n_test;
    let perm = rng::permutation(&mut rng::seeded(spec.seed), n);
    Ok(Split {
        train: perm[..n_train].to_vec(),
        validation: perm[n_train..n_train + n_val].to_vec(),
        test: perm[n_train + n_val..].to_vec(),
    })
}

fn standard_normal(r: &mut rng::Rng) -> f64 {
    r.sample(StandardNormal)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub n: usize,
    pub dim: usize,
    /// Centers are drawn uniformly from `[-spread, spread]^dim`.
    pub spread: f64,
    pub noise: f64,
    pub seed: u64,
}

/// Isotropic Gaussian clusters; point `i` belongs to class `i % classes`.
/// Returns the data and the class centers.
pub fn make_blobs(spec: &BlobSpec) -> Result<(TabularDataset, Vec<Vec<f64>>)> {
    if spec.classes < 2 || spec.n < spec.classes || spec.dim == 0 {
        return Err(Error::Config(format!(
            "blobs need classes >= 2, n >= classes and dim >= 1 (got {}, {}, {})",
            spec.classes, spec.n, spec.dim
        )));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Config(format!(
            "blob noise must be nonnegative, got {}",
            spec.noise
        )));
    }
    ensure_positive("blob spread", spec.spread)?;
    let mut r = rng::seeded(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.dim)
                .map(|_| rng::uniform(&mut r, -spec.spread, spec.spread))
                .collect()
        })
        .collect();
    let labels: Vec<usize> = (0..spec.n).map(|i| i % spec.classes).collect();
    let features = labels
        .iter()
        .map(|&c| {
            centers[c]
                .iter()
                .map(|m| m + spec.noise * standard_normal(&mut r))
                .collect()
        })
        .collect();
    Ok((
        TabularDataset {
            name: "blobs".into(),
            features,
            targets: Targets::Class {
                labels,
                classes: spec.classes,
            },
            columns: (0..spec.dim)
                .map(|j| FeatureColumn::Numeric(format!("x{j}")))
                .collect(),
            dropped: Vec::new(),
        },
        centers,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSpec {
    pub n: usize,
    pub dim: usize,
    pub noise: f64,
    pub bias: f64,
    /// True weights; drawn from a standard normal when `None`.
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
}

/// `y = w . x + bias + noise * e` with standard normal `x` and `e`.
/// Returns the data and the true weights.
pub fn make_linear(spec: &LinearSpec) -> Result<(TabularDataset, Vec<f64>)> {
    if spec.n == 0 || spec.dim == 0 {
        return Err(Error::Config(
            "linear data needs n >= 1 and dim >= 1".into(),
        ));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Config(format!(
            "noise must be nonnegative, got {}",
            spec.noise
        )));
    }
    let mut r = rng::seeded(spec.seed);
    let weights = match &spec.weights {
        Some(w) if w.len() != spec.dim => {
            return Err(Error::Dimension {
                context: "true weights",
                expected: spec.dim,
                got: w.len(),
            })
        }
        Some(w) => w.clone(),
        None => (0..spec.dim).map(|_| standard_normal(&mut r)).collect(),
    };
    let features: Vec<Vec<f64>> = (0..spec.n)
        .map(|_| (0..spec.dim).map(|_| standard_normal(&mut r)).collect())
        .collect();
    let targets = features
        .iter()
        .map(|x| {
            let signal: f64 = x.iter().zip(&weights).map(|(a, b)| a * b).sum();
            signal + spec.bias + spec.noise * standard_normal(&mut r)
        })
        .collect();
    Ok((
        TabularDataset {
            name: "linear".into(),
            features,
            targets: Targets::Real(targets),
            columns: (0..spec.dim)
                .map(|j| FeatureColumn::Numeric(format!("x{j}")))
                .collect(),
            dropped: Vec::new(),
        },
        weights,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn schema(text: &str) -> Schema {
        Schema::parse(text).unwrap()
    }

    fn reals(t: &Targets) -> &[f64] {
        match t {
            Targets::Real(v) => v,
            Targets::Class { .. } => panic!("expected real targets"),
        }
    }

    #[test]
    fn schema_parsing() {
        let s = schema("# comment\na\tnumeric\n\nb\tcategorical\ny\ttarget\n");
        assert_eq!(s.columns.len(), 3);
        assert_eq!(s.columns[1], ("b".to_owned(), ColumnRole::Categorical));
        assert!(Schema::parse("a\tnumeric\n").is_err());
        assert!(Schema::parse("a\tnumeric\ny\ttarget\nz\ttarget\n").is_err());
        assert!(Schema::parse("a numeric\ny\ttarget\n").is_err());
        assert!(Schema::parse("a\tinteger\ny\ttarget\n").is_err());
    }

    #[test]
    fn numeric_file_loads_in_order() {
        let text = "a,b,y\n1,2,3\n4,5,6\n7,8.5,9\n";
        let d = read_csv(
            text.as_bytes(),
            &schema("a\tnumeric\nb\tnumeric\ny\ttarget\n"),
            "t",
        )
        .unwrap();
        assert_eq!(
            d.features,
            vec![vec![1.0, 2.0], vec![4.0, 5.0], vec![7.0, 8.5]]
        );
        assert_eq!(reals(&d.targets), &[3.0, 6.0, 9.0]);
        assert!(d.dropped.is_empty());
    }

    #[test]
    fn malformed_rows_are_dropped_with_line_numbers() {
        let text = "a,y\n1,2\nx,3\n4\n5,\n6,7\n";
        let d = read_csv(text.as_bytes(), &schema("a\tnumeric\ny\ttarget\n"), "t").unwrap();
        assert_eq!(d.features, vec![vec![1.0], vec![6.0]]);
        let lines: Vec<u64> = d.dropped.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
        let err = read_csv(
            "a,y\nx,1\n".as_bytes(),
            &schema("a\tnumeric\ny\ttarget\n"),
            "t",
        );
        assert!(matches!(err, Err(Error::Data(_))));
        let err = read_csv(
            "a,z\n1,1\n".as_bytes(),
            &schema("a\tnumeric\ny\ttarget\n"),
            "t",
        );
        assert!(matches!(err, Err(Error::Data(_))));
    }

    #[test]
    fn categorical_columns_are_one_hot() {
        let text = "sex,len,rings\nM,0.5,10\nF,0.4,7\nI,0.3,5\nM,0.6,12\n";
        let s = schema("sex\tcategorical\nlen\tnumeric\nrings\ttarget\n");
        let d = read_csv(text.as_bytes(), &s, "abalone").unwrap();
        assert_eq!(d.dim(), 4);
        let labels: Vec<String> = d.columns.iter().map(FeatureColumn::label).collect();
        assert_eq!(labels, vec!["sex=F", "sex=I", "sex=M", "len"]);
        for x in &d.features {
            assert_eq!(x[..3].iter().sum::<f64>(), 1.0);
        }
        assert_eq!(d.features[0], vec![0.0, 0.0, 1.0, 0.5]);
    }

    #[test]
    fn load_csv_reads_files() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "a,y\n1,2\n").unwrap();
        let d = load_csv(f.path(), &schema("a\tnumeric\ny\ttarget\n")).unwrap();
        assert_eq!(d.len(), 1);
        assert!(load_csv(
            Path::new("/nonexistent/file.csv"),
            &schema("a\tnumeric\ny\ttarget\n")
        )
        .is_err());
    }

    fn toy(features: Vec<Vec<f64>>, targets: Vec<f64>) -> TabularDataset {
        let d = features[0].len();
        TabularDataset {
            name: "toy".into(),
            features,
            targets: Targets::Real(targets),
            columns: (0..d)
                .map(|j| FeatureColumn::Numeric(format!("x{j}")))
                .collect(),
            dropped: Vec::new(),
        }
    }

    #[test]
    fn standardization_uses_training_statistics() {
        let (data, _) = make_linear(&LinearSpec {
            n: 300,
            dim: 3,
            noise: 0.5,
            bias: 4.0,
            weights: None,
            seed: 1,
        })
        .unwrap();
        let shifted = TabularDataset {
            features: data
                .features
                .iter()
                .map(|x| x.iter().map(|v| 3.0 * v + 7.0).collect())
                .collect(),
            ..data
        };
        let s = split(shifted.len(), &SplitSpec::standard(2)).unwrap();
        let train = shifted.subset(&s.train);
        let stats = Standardizer::fit(&train).unwrap();
        let z = stats.apply(&train).unwrap();
        let n = z.len() as f64;
        for j in 0..3 {
            let mean = z.features.iter().map(|x| x[j]).sum::<f64>() / n;
            let var = z
                .features
                .iter()
                .map(|x| (x[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(var.sqrt(), 1.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(
            reals(&z.targets).iter().sum::<f64>() / n,
            0.0,
            epsilon = 1e-10
        );
        let test = stats.apply(&shifted.subset(&s.test)).unwrap();
        let test_mean = test.features.iter().map(|x| x[0]).sum::<f64>() / test.len() as f64;
        assert_ne!(test_mean, 0.0);
        assert!(Standardizer::fit(&shifted.subset(&[])).is_err());
    }

    #[test]
    fn constant_columns_are_centered_only() {
        let d = toy(
            vec![vec![0.1, 1.0], vec![0.1, 2.0], vec![0.1, 3.0]],
            vec![1.0, 2.0, 3.0],
        );
        let stats = Standardizer::fit(&d).unwrap();
        assert_eq!(stats.std[0], None);
        let z = stats.apply(&d).unwrap();
        for x in &z.features {
            assert!(x[0].abs() < 1e-15 && x[0].is_finite());
        }
        assert_eq!(reals(&z.targets), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn split_examples() {
        let s = split(10, &SplitSpec::standard(5)).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (6, 2, 2));
        assert_eq!(s, split(10, &SplitSpec::standard(5)).unwrap());
        assert_ne!(s, split(10, &SplitSpec::standard(6)).unwrap());
        let s = split(11, &SplitSpec::standard(0)).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (7, 2, 2));
        assert!(split(2, &SplitSpec::standard(0)).is_err());
        let bad = SplitSpec {
            train: 0.5,
            ..SplitSpec::standard(0)
        };
        assert!(split(10, &bad).is_err());
    }

    #[test]
    fn blob_examples() {
        let spec = BlobSpec {
            classes: 3,
            n: 100,
            dim: 2,
            spread: 5.0,
            noise: 0.0,
            seed: 9,
        };
        let (d, centers) = make_blobs(&spec).unwrap();
        let Targets::Class { labels, classes } = &d.targets else {
            panic!("blobs carry class labels");
        };
        assert_eq!(*classes, 3);
        for (x, &c) in d.features.iter().zip(labels) {
            assert_eq!(x, &centers[c]);
        }
        let mut counts = [0usize; 3];
        labels.iter().for_each(|&c| counts[c] += 1);
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        assert_eq!(make_blobs(&spec).unwrap().0, d);
        assert!(make_blobs(&BlobSpec { classes: 1, ..spec }).is_err());
        assert!(make_blobs(&BlobSpec { n: 2, ..spec }).is_err());
    }

    #[test]
    fn linear_generator_respects_given_weights() {
        let (d, w) = make_linear(&LinearSpec {
            n: 50,
            dim: 2,
            noise: 0.0,
            bias: 1.5,
            weights: Some(vec![2.0, -1.0]),
            seed: 3,
        })
        .unwrap();
        assert_eq!(w, vec![2.0, -1.0]);
        for (x, y) in d.features.iter().zip(reals(&d.targets)) {
            assert_abs_diff_eq!(*y, 2.0 * x[0] - x[1] + 1.5, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn split_partitions_the_rows(n in 3usize..500, seed in any::<u64>()) {
            let s = split(n, &SplitSpec::standard(seed)).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.test.len(), (0.2 * n as f64).floor() as usize);
        }
    }
}
