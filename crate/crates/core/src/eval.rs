//! Metrics: accuracy, permutation-optimal accuracy, MSE and error variance,
//! plus mean/std aggregation across trials.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{ensure_len, Error, Result};

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// row/column potentials, O(n^3)). Returns `perm` with row `i` assigned to
/// column `perm[i]`.
pub fn linear_sum_assignment(cost: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = cost.len();
    for row in cost {
        ensure_len("cost matrix row", n, row.len())?;
        if row.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("assignment cost"));
        }
    }
    // 1-based working arrays; index 0 is the virtual root column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        way[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    Ok(perm)
}

/// Counts with rows indexed by true class and columns by predicted class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(pred: &[usize], truth: &[usize], classes: usize) -> Result<Self> {
        ensure_len("predictions", truth.len(), pred.len())?;
        let mut counts = vec![0; classes * classes];
        for (&p, &t) in pred.iter().zip(truth) {
            for index in [p, t] {
                if index >= classes {
                    return Err(Error::ClassOutOfRange { index, classes });
                }
            }
            counts[t * classes + p] += 1;
        }
        Ok(ConfusionMatrix { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    ensure_len("predictions", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Best accuracy over all relabelings of the predictions, together with the
/// relabeling: `mapping[pred_class] = true_class`.
pub fn permutation_accuracy_with_mapping(
    pred: &[usize],
    truth: &[usize],
    classes: usize,
) -> Result<(f64, Vec<usize>)> {
    if truth.is_empty() && pred.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let confusion = ConfusionMatrix::new(pred, truth, classes)?;
    let cost: Vec<Vec<f64>> = (0..classes)
        .map(|t| {
            (0..classes)
                .map(|p| -(confusion.get(t, p) as f64))
                .collect()
        })
        .collect();
    let truth_to_pred = linear_sum_assignment(&cost)?;
    let agreed: u64 = truth_to_pred
        .iter()
        .enumerate()
        .map(|(t, &p)| confusion.get(t, p))
        .sum();
    let mut mapping = vec![0; classes];
    for (t, &p) in truth_to_pred.iter().enumerate() {
        mapping[p] = t;
    }
    Ok((agreed as f64 / confusion.total() as f64, mapping))
}

pub fn permutation_accuracy(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    Ok(permutation_accuracy_with_mapping(pred, truth, classes)?.0)
}

fn residuals(pred: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    ensure_len("predictions", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    Ok(truth.iter().zip(pred).map(|(t, p)| t - p).collect())
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    let r = residuals(pred, truth)?;
    Ok(r.iter().map(|e| e * e).sum::<f64>() / r.len() as f64)
}

/// Population variance of the residuals: the MSE after the best constant shift.
pub fn error_variance(pred: &[f64], truth: &[f64]) -> Result<f64> {
    let r = residuals(pred, truth)?;
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    Ok(r.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSummary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std: f64,
    pub trials: usize,
}

pub fn aggregate_trials(values: &[f64]) -> Result<TrialSummary> {
    if values.is_empty() {
        return Err(Error::Empty("trial values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(TrialSummary {
        mean,
        std,
        trials: values.len(),
    })
}

/// Metric name to summary, ordered by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub metrics: BTreeMap<String, TrialSummary>,
}

impl MetricsReport {
    pub fn insert(&mut self, metric: &str, values: &[f64]) -> Result<()> {
        self.metrics
            .insert(metric.to_owned(), aggregate_trials(values)?);
        Ok(())
    }

    /// `metric<TAB>mean<TAB>std` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (name, s) in &self.metrics {
            writeln!(out, "{name}\t{}\t{}", s.mean, s.std).expect("writing to a String");
        }
        out
    }
}
