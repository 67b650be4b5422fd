//! Aggregate functions `T: Z^K -> Y` and synthesis of aggregate datasets.
//!
//! Class indices are zero-based throughout. Rank-list observations are
//! zero-based orderings: `order[0]` is the position of the largest target.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng;

/// Consecutive resamples tolerated before giving up on a set.
pub const MAX_RESAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggregationTag {
    Similarity,
    Triplet,
    MultiInstance,
    Mean,
    Sum,
    RankPair,
    RankList,
}

impl AggregationTag {
    pub const ALL: [AggregationTag; 7] = [
        AggregationTag::Similarity,
        AggregationTag::Triplet,
        AggregationTag::MultiInstance,
        AggregationTag::Mean,
        AggregationTag::Sum,
        AggregationTag::RankPair,
        AggregationTag::RankList,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregationTag::Similarity => "similarity",
            AggregationTag::Triplet => "triplet",
            AggregationTag::MultiInstance => "multi_instance",
            AggregationTag::Mean => "mean",
            AggregationTag::Sum => "sum",
            AggregationTag::RankPair => "rank_pair",
            AggregationTag::RankList => "rank_list",
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(
            self,
            AggregationTag::Similarity | AggregationTag::Triplet | AggregationTag::MultiInstance
        )
    }

    /// Default number of sets drawn from `n` labeled points.
    pub fn default_set_count(self, n: usize) -> usize {
        match self {
            AggregationTag::Similarity => 2 * n,
            AggregationTag::Triplet => 3 * n,
            AggregationTag::RankPair => 10 * n,
            _ => n,
        }
    }
}

impl fmt::Display for AggregationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AggregationTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidKind(format!("unknown aggregation `{s}`")))
    }
}

/// Square matrix of distances between classes.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassDistanceMatrix {
    classes: usize,
    values: Vec<f64>,
}

impl ClassDistanceMatrix {
    /// Row-major `classes x classes` matrix with a zero diagonal.
    pub fn new(classes: usize, values: Vec<f64>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::Empty("class distance matrix"));
        }
        if values.len() != classes * classes {
            return Err(Error::Dimension {
                context: "class distance matrix",
                expected: classes * classes,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("class distance matrix"));
        }
        if (0..classes).any(|i| values[i * classes + i] != 0.0) {
            return Err(Error::InvalidKind(
                "class distance matrix needs a zero diagonal".into(),
            ));
        }
        Ok(ClassDistanceMatrix { classes, values })
    }

    /// `d(i, j) = [i != j]`.
    pub fn indicator(classes: usize) -> Self {
        let values = (0..classes * classes)
            .map(|ij| {
                if ij / classes == ij % classes {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        ClassDistanceMatrix { classes, values }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes + j]
    }
}

/// Which aggregate function produced an observation, and its set size.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationKind {
    tag: AggregationTag,
    set_size: usize,
    distance: Option<ClassDistanceMatrix>,
    positive_class: Option<usize>,
}

impl AggregationKind {
    pub fn similarity() -> Self {
        Self::plain(AggregationTag::Similarity, 2)
    }

    pub fn triplet(distance: ClassDistanceMatrix) -> Self {
        AggregationKind {
            tag: AggregationTag::Triplet,
            set_size: 3,
            distance: Some(distance),
            positive_class: None,
        }
    }

    pub fn multi_instance(set_size: usize, positive_class: usize) -> Result<Self> {
        check_set_size(AggregationTag::MultiInstance, set_size, 2)?;
        Ok(AggregationKind {
            tag: AggregationTag::MultiInstance,
            set_size,
            distance: None,
            positive_class: Some(positive_class),
        })
    }

    /// Mean of `set_size` targets. `set_size = 1` is ordinary supervision.
    pub fn mean(set_size: usize) -> Result<Self> {
        check_set_size(AggregationTag::Mean, set_size, 1)?;
        Ok(Self::plain(AggregationTag::Mean, set_size))
    }

    pub fn sum(set_size: usize) -> Result<Self> {
        check_set_size(AggregationTag::Sum, set_size, 1)?;
        Ok(Self::plain(AggregationTag::Sum, set_size))
    }

    pub fn rank_pair() -> Self {
        Self::plain(AggregationTag::RankPair, 2)
    }

    pub fn rank_list(set_size: usize) -> Result<Self> {
        check_set_size(AggregationTag::RankList, set_size, 2)?;
        Ok(Self::plain(AggregationTag::RankList, set_size))
    }

    fn plain(tag: AggregationTag, set_size: usize) -> Self {
        AggregationKind {
            tag,
            set_size,
            distance: None,
            positive_class: None,
        }
    }

    pub fn tag(&self) -> AggregationTag {
        self.tag
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn distance(&self) -> Option<&ClassDistanceMatrix> {
        self.distance.as_ref()
    }

    pub fn positive_class(&self) -> Option<usize> {
        self.positive_class
    }

    /// Applies the aggregate function to the targets at `indices`.
    pub fn observe(&self, targets: &Targets, indices: &[usize]) -> Result<Observation> {
        if indices.len() != self.set_size {
            return Err(Error::Dimension {
                context: "aggregate set",
                expected: self.set_size,
                got: indices.len(),
            });
        }
        match (self.tag, targets) {
            (AggregationTag::Similarity, Targets::Class { labels, classes }) => {
                Ok(Observation::Binary(agg_similarity(
                    labels[indices[0]],
                    labels[indices[1]],
                    *classes,
                )?))
            }
            (AggregationTag::Triplet, Targets::Class { labels, classes }) => {
                let d = self
                    .distance
                    .as_ref()
                    .expect("triplet kind carries a distance");
                if d.classes() != *classes {
                    return Err(Error::Dimension {
                        context: "triplet distance classes",
                        expected: *classes,
                        got: d.classes(),
                    });
                }
                Ok(Observation::Binary(agg_triplet(
                    labels[indices[0]],
                    labels[indices[1]],
                    labels[indices[2]],
                    d,
                )?))
            }
            (AggregationTag::MultiInstance, Targets::Class { labels, classes }) => {
                let zs: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
                for &z in &zs {
                    check_class(z, *classes)?;
                }
                let positive = self
                    .positive_class
                    .expect("multi-instance kind carries a class");
                check_class(positive, *classes)?;
                Ok(Observation::Binary(agg_multi_instance(&zs, positive)?))
            }
            (AggregationTag::Mean, Targets::Real(zs)) => {
                let set: Vec<f64> = indices.iter().map(|&i| zs[i]).collect();
                Ok(Observation::Real(agg_mean(&set)?))
            }
            (AggregationTag::Sum, Targets::Real(zs)) => {
                let set: Vec<f64> = indices.iter().map(|&i| zs[i]).collect();
                Ok(Observation::Real(agg_sum(&set)?))
            }
            (AggregationTag::RankPair, Targets::Real(zs)) => Ok(Observation::Binary(
                agg_rank_pair(zs[indices[0]], zs[indices[1]])?,
            )),
            (AggregationTag::RankList, Targets::Real(zs)) => {
                let set: Vec<f64> = indices.iter().map(|&i| zs[i]).collect();
                Ok(Observation::Order(agg_rank_list(&set)?))
            }
            (tag, _) => Err(Error::Mismatch(format!(
                "{tag} aggregation does not apply to {} targets",
                targets.describe()
            ))),
        }
    }

    /// Checks that an observation has the variant this kind produces.
    pub fn accepts(&self, observation: &Observation) -> bool {
        match observation {
            Observation::Binary(_) => matches!(
                self.tag,
                AggregationTag::Similarity
                    | AggregationTag::Triplet
                    | AggregationTag::MultiInstance
                    | AggregationTag::RankPair
            ),
            Observation::Real(_) => matches!(self.tag, AggregationTag::Mean | AggregationTag::Sum),
            Observation::Order(order) => {
                self.tag == AggregationTag::RankList && is_permutation(order, self.set_size)
            }
        }
    }
}

fn check_set_size(tag: AggregationTag, set_size: usize, min: usize) -> Result<()> {
    if set_size < min {
        Err(Error::InvalidKind(format!(
            "{tag} needs sets of at least {min}, got {set_size}"
        )))
    } else {
        Ok(())
    }
}

fn check_class(z: usize, classes: usize) -> Result<()> {
    if z < classes {
        Ok(())
    } else {
        Err(Error::ClassOutOfRange { index: z, classes })
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order
            .iter()
            .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// The aggregate observation `Y`.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Binary(bool),
    Real(f64),
    Order(Vec<usize>),
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Binary(b) => write!(f, "{}", u8::from(*b)),
            Observation::Real(v) => write!(f, "{v}"),
            Observation::Order(order) => write!(f, "{}", join(order)),
        }
    }
}

/// Individual targets of a labeled dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Class { labels: Vec<usize>, classes: usize },
    Real(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Class { labels, .. } => labels.len(),
            Targets::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn classes(&self) -> Option<usize> {
        match self {
            Targets::Class { classes, .. } => Some(*classes),
            Targets::Real(_) => None,
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Class { labels, classes } => Targets::Class {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                classes: *classes,
            },
            Targets::Real(v) => Targets::Real(indices.iter().map(|&i| v[i]).collect()),
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            Targets::Class { .. } => "class",
            Targets::Real(_) => "real",
        }
    }
}

/// One set of feature vectors with its aggregate observation.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateExample {
    pub features: Vec<Vec<f64>>,
    pub observation: Observation,
    /// Indices of the labeled points the set was drawn from.
    pub sources: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateDataset {
    pub examples: Vec<AggregateExample>,
    pub kind: AggregationKind,
    pub feature_dim: usize,
    pub class_count: Option<usize>,
    pub generator_seed: u64,
}

impl AggregateDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Writes one `indices<TAB>observation<TAB>kind` record per set.
    pub fn write_debug_dump<W: Write>(&self, mut out: W) -> Result<()> {
        for ex in &self.examples {
            writeln!(
                out,
                "{}\t{}\t{}",
                join(&ex.sources),
                ex.observation,
                self.kind.tag()
            )?;
        }
        Ok(())
    }

    /// Rebuilds a dataset from a debug dump and the labeled source features.
    pub fn read_debug_dump<R: BufRead>(
        input: R,
        features: &[Vec<f64>],
        kind: AggregationKind,
        class_count: Option<usize>,
        generator_seed: u64,
    ) -> Result<AggregateDataset> {
        let feature_dim = check_features(features)?;
        let mut examples = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Data(format!("dump line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad("expected three tab-separated fields"));
            }
            let tag: AggregationTag = fields[2].parse()?;
            if tag != kind.tag() {
                return Err(bad("kind tag does not match"));
            }
            let sources = parse_indices(fields[0]).ok_or_else(|| bad("bad indices"))?;
            if sources.len() != kind.set_size() || sources.iter().any(|&i| i >= features.len()) {
                return Err(bad("indices out of range"));
            }
            let observation = match tag {
                AggregationTag::Mean | AggregationTag::Sum => {
                    Observation::Real(fields[1].parse().map_err(|_| bad("bad real observation"))?)
                }
                AggregationTag::RankList => {
                    Observation::Order(parse_indices(fields[1]).ok_or_else(|| bad("bad order"))?)
                }
                _ => match fields[1] {
                    "0" => Observation::Binary(false),
                    "1" => Observation::Binary(true),
                    _ => return Err(bad("bad binary observation")),
                },
            };
            if !kind.accepts(&observation) {
                return Err(bad("observation does not fit the kind"));
            }
            examples.push(AggregateExample {
                features: sources.iter().map(|&i| features[i].clone()).collect(),
                observation,
                sources,
            });
        }
        Ok(AggregateDataset {
            examples,
            kind,
            feature_dim,
            class_count,
            generator_seed,
        })
    }
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_indices(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|t| t.parse().ok()).collect()
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let dim = features
        .first()
        .map(Vec::len)
        .ok_or(Error::Empty("labeled data"))?;
    if let Some(bad) = features.iter().find(|x| x.len() != dim) {
        return Err(Error::Dimension {
            context: "feature vector",
            expected: dim,
            got: bad.len(),
        });
    }
    Ok(dim)
}

/// `Y = [z1 = z2]`.
pub fn agg_similarity(z1: usize, z2: usize, classes: usize) -> Result<bool> {
    check_class(z1, classes)?;
    check_class(z2, classes)?;
    Ok(z1 == z2)
}

/// `Y = [d(z1, z2) < d(z1, z3)]`; ties give `false`.
pub fn agg_triplet(z1: usize, z2: usize, z3: usize, d: &ClassDistanceMatrix) -> Result<bool> {
    for z in [z1, z2, z3] {
        check_class(z, d.classes())?;
    }
    Ok(d.get(z1, z2) < d.get(z1, z3))
}

/// Whether any member of the set is the positive class.
pub fn agg_multi_instance(zs: &[usize], positive_class: usize) -> Result<bool> {
    if zs.is_empty() {
        return Err(Error::Empty("multi-instance set"));
    }
    Ok(zs.contains(&positive_class))
}

pub fn agg_mean(zs: &[f64]) -> Result<f64> {
    Ok(agg_sum(zs)? / zs.len() as f64)
}

pub fn agg_sum(zs: &[f64]) -> Result<f64> {
    if zs.is_empty() {
        return Err(Error::Empty("aggregate set"));
    }
    Ok(zs.iter().sum())
}

/// `Y = [z1 > z2]`. A tie asks the caller to resample.
pub fn agg_rank_pair(z1: f64, z2: f64) -> Result<bool> {
    if z1 == z2 {
        Err(Error::Resample)
    } else {
        Ok(z1 > z2)
    }
}

/// Ordering of the set from largest to smallest target.
pub fn agg_rank_list(zs: &[f64]) -> Result<Vec<usize>> {
    if zs.is_empty() {
        return Err(Error::Empty("rank list"));
    }
    let mut order: Vec<usize> = (0..zs.len()).collect();
    order.sort_by(|&a, &b| zs[b].total_cmp(&zs[a]));
    if order.windows(2).any(|w| zs[w[0]] == zs[w[1]]) {
        return Err(Error::Resample);
    }
    Ok(order)
}

/// Draws `count` sets of `kind.set_size()` points uniformly with replacement
/// and labels each with the aggregate function.
pub fn make_aggregate_dataset(
    features: &[Vec<f64>],
    targets: &Targets,
    kind: &AggregationKind,
    count: usize,
    seed: u64,
) -> Result<AggregateDataset> {
    let feature_dim = check_features(features)?;
    if targets.len() != features.len() {
        return Err(Error::Dimension {
            context: "targets",
            expected: features.len(),
            got: targets.len(),
        });
    }
    let mut rng = rng::seeded(seed);
    let n = features.len();
    let k = kind.set_size();
    let mut examples = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0;
        let (sources, observation) = loop {
            let sources: Vec<usize> = (0..k).map(|_| rng::index(&mut rng, n)).collect();
            match kind.observe(targets, &sources) {
                Ok(obs) => break (sources, obs),
                Err(Error::Resample) => {
                    attempts += 1;
                    if attempts >= MAX_RESAMPLES {
                        return Err(Error::RetryExhausted(attempts));
                    }
                }
                Err(e) => return Err(e),
            }
        };
        examples.push(AggregateExample {
            features: sources.iter().map(|&i| features[i].clone()).collect(),
            observation,
            sources,
        });
    }
    Ok(AggregateDataset {
        examples,
        kind: kind.clone(),
        feature_dim,
        class_count: targets.classes(),
        generator_seed: seed,
    })
}

/// Each labeled point as its own singleton mean set, in order.
pub fn direct_dataset(features: &[Vec<f64>], targets: &[f64]) -> Result<AggregateDataset> {
    let feature_dim = check_features(features)?;
    if targets.len() != features.len() {
        return Err(Error::Dimension {
            context: "targets",
            expected: features.len(),
            got: targets.len(),
        });
    }
    let examples = features
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (x, &z))| AggregateExample {
            features: vec![x.clone()],
            observation: Observation::Real(z),
            sources: vec![i],
        })
        .collect();
    Ok(AggregateDataset {
        examples,
        kind: AggregationKind::mean(1)?,
        feature_dim,
        class_count: None,
        generator_seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64, -(i as f64)]).collect()
    }

    #[test]
    fn similarity_examples() {
        assert!(agg_similarity(3, 3, 6).unwrap());
        assert!(!agg_similarity(3, 5, 6).unwrap());
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(agg_similarity(a, b, 4), agg_similarity(b, a, 4));
            }
        }
        assert_eq!(
            agg_similarity(4, 0, 4),
            Err(Error::ClassOutOfRange {
                index: 4,
                classes: 4
            })
        );
    }

    #[test]
    fn triplet_examples() {
        let d = ClassDistanceMatrix::indicator(3);
        assert!(agg_triplet(0, 0, 1, &d).unwrap());
        assert!(!agg_triplet(0, 1, 2, &d).unwrap());
        assert!(!agg_triplet(0, 1, 0, &d).unwrap());
        assert!(agg_triplet(0, 1, 3, &d).is_err());
    }

    #[test]
    fn triplet_indicator_enumeration() {
        for c in 1..=5 {
            let d = ClassDistanceMatrix::indicator(c);
            for z1 in 0..c {
                for z2 in 0..c {
                    for z3 in 0..c {
                        let expected = z1 == z2 && z1 != z3;
                        assert_eq!(agg_triplet(z1, z2, z3, &d).unwrap(), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn distance_matrix_validation() {
        assert!(ClassDistanceMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
        assert!(ClassDistanceMatrix::new(2, vec![0.5, 1.0, 1.0, 0.0]).is_err());
        assert!(ClassDistanceMatrix::new(2, vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn multi_instance_examples() {
        assert!(!agg_multi_instance(&[2, 2, 2], 1).unwrap());
        assert!(agg_multi_instance(&[2, 1, 2], 1).unwrap());
        assert!(agg_multi_instance(&[1, 2, 2], 1).unwrap());
        assert!(agg_multi_instance(&[2, 2, 1], 1).unwrap());
        assert!(agg_multi_instance(&[], 1).is_err());
    }

    #[test]
    fn mean_and_sum_examples() {
        assert_eq!(agg_mean(&[1.0, 2.0, 3.0, 6.0]).unwrap(), 3.0);
        assert_eq!(agg_mean(&[2.5; 7]).unwrap(), 2.5);
        let mut r = rng::seeded(11);
        for _ in 0..20 {
            let set: Vec<f64> = (0..5).map(|_| rng::uniform(&mut r, -3.0, 3.0)).collect();
            assert_eq!(agg_mean(&set).unwrap(), agg_sum(&set).unwrap() / 5.0);
        }
        assert!(agg_mean(&[]).is_err());
        assert!(agg_sum(&[]).is_err());
    }

    #[test]
    fn rank_examples() {
        assert!(agg_rank_pair(2.0, 1.0).unwrap());
        assert!(!agg_rank_pair(1.0, 2.0).unwrap());
        assert_eq!(agg_rank_pair(1.0, 1.0), Err(Error::Resample));
        assert_eq!(agg_rank_list(&[3.0, 1.0, 2.0]).unwrap(), vec![0, 2, 1]);
        assert_eq!(
            agg_rank_list(&[4.0, 3.0, 2.0, 1.0]).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert_eq!(
            agg_rank_list(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![3, 2, 1, 0]
        );
        assert_eq!(agg_rank_list(&[1.0, 2.0, 1.0]), Err(Error::Resample));
    }

    #[test]
    fn kind_constraints() {
        assert!(AggregationKind::multi_instance(1, 0).is_err());
        assert!(AggregationKind::rank_list(1).is_err());
        assert!(AggregationKind::mean(0).is_err());
        assert_eq!(AggregationKind::similarity().set_size(), 2);
        assert_eq!(
            AggregationKind::triplet(ClassDistanceMatrix::indicator(3)).set_size(),
            3
        );
        assert!(AggregationKind::similarity().distance().is_none());
        assert!(AggregationKind::rank_pair().accepts(&Observation::Binary(true)));
        assert!(!AggregationKind::rank_pair().accepts(&Observation::Real(1.0)));
        let list = AggregationKind::rank_list(3).unwrap();
        assert!(list.accepts(&Observation::Order(vec![2, 0, 1])));
        assert!(!list.accepts(&Observation::Order(vec![2, 2, 1])));
    }

    #[test]
    fn single_point_similarity_dataset() {
        let targets = Targets::Class {
            labels: vec![1],
            classes: 3,
        };
        let data =
            make_aggregate_dataset(&points(1), &targets, &AggregationKind::similarity(), 5, 9)
                .unwrap();
        assert_eq!(data.len(), 5);
        assert!(data
            .examples
            .iter()
            .all(|e| e.observation == Observation::Binary(true)));
    }

    #[test]
    fn two_class_similarity_rate_is_one_half() {
        let targets = Targets::Class {
            labels: vec![0, 1],
            classes: 2,
        };
        let n = 20_000;
        let data =
            make_aggregate_dataset(&points(2), &targets, &AggregationKind::similarity(), n, 4)
                .unwrap();
        let ones = data
            .examples
            .iter()
            .filter(|e| e.observation == Observation::Binary(true))
            .count();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() <= 3.0 * sd);
    }

    #[test]
    fn generation_is_deterministic_and_consistent() {
        let z: Vec<f64> = (0..30)
            .map(|i| ((i * 7) % 11) as f64 + 0.1 * i as f64)
            .collect();
        let kind = AggregationKind::rank_list(4).unwrap();
        let targets = Targets::Real(z.clone());
        let a = make_aggregate_dataset(&points(30), &targets, &kind, 200, 42).unwrap();
        let b = make_aggregate_dataset(&points(30), &targets, &kind, 200, 42).unwrap();
        assert_eq!(a, b);
        for ex in &a.examples {
            assert_eq!(ex.observation, kind.observe(&targets, &ex.sources).unwrap());
            let set: Vec<f64> = ex.sources.iter().map(|&i| z[i]).collect();
            assert_eq!(
                ex.observation,
                Observation::Order(agg_rank_list(&set).unwrap())
            );
        }
    }

    #[test]
    fn constant_targets_exhaust_rank_retries() {
        let targets = Targets::Real(vec![1.0; 4]);
        let err = make_aggregate_dataset(&points(4), &targets, &AggregationKind::rank_pair(), 3, 0)
            .unwrap_err();
        assert_eq!(err, Error::RetryExhausted(MAX_RESAMPLES));
    }

    #[test]
    fn kind_target_mismatch_is_rejected() {
        let targets = Targets::Real(vec![1.0, 2.0]);
        assert!(matches!(
            make_aggregate_dataset(&points(2), &targets, &AggregationKind::similarity(), 3, 0),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn debug_dump_round_trip() {
        let feats = points(12);
        let z: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        for kind in [
            AggregationKind::mean(4).unwrap(),
            AggregationKind::rank_pair(),
            AggregationKind::rank_list(3).unwrap(),
        ] {
            let data =
                make_aggregate_dataset(&feats, &Targets::Real(z.clone()), &kind, 50, 3).unwrap();
            let mut buf = Vec::new();
            data.write_debug_dump(&mut buf).unwrap();
            let back = AggregateDataset::read_debug_dump(&buf[..], &feats, kind, None, 3).unwrap();
            assert_eq!(back, data);
        }
    }

    #[test]
    fn debug_dump_format() {
        let feats = points(3);
        let targets = Targets::Class {
            labels: vec![0, 1, 0],
            classes: 2,
        };
        let data =
            make_aggregate_dataset(&feats, &targets, &AggregationKind::similarity(), 2, 1).unwrap();
        let mut buf = Vec::new();
        data.write_debug_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, ex) in text.lines().zip(&data.examples) {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields[0], format!("{},{}", ex.sources[0], ex.sources[1]));
            assert_eq!(fields[2], "similarity");
        }
    }
}
