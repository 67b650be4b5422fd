//! Closed-form aggregate likelihoods and their gradients with respect to the
//! per-instance distribution parameters.
//!
//! Every `*_prob` function returns the probability of the positive event
//! together with its gradient for each member of the set; every `*_nll`
//! function returns a [`LossResult`]. Gradient layouts follow
//! [`TargetParams::grad_len`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::aggregate::{
    AggregateExample, AggregationKind, AggregationTag, ClassDistanceMatrix, Observation,
};
use crate::dists::{self, erf_deriv, log_sum_exp, logistic};
use crate::error::{ensure_len, ensure_positive, Error, Result};

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Per-instance distribution parameters, the output of the parameter map.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetParams {
    ClassProbs(Vec<f64>),
    GaussLoc {
        mu: f64,
        sigma: f64,
    },
    CauchyLoc {
        a: f64,
        b: f64,
    },
    PoissonRate(f64),
    /// Gumbel location with unit scale.
    GumbelScore(f64),
    ExpRate(f64),
}

impl TargetParams {
    /// Length of this parameter's gradient vector: every field in order.
    pub fn grad_len(&self) -> usize {
        match self {
            TargetParams::ClassProbs(p) => p.len(),
            TargetParams::GaussLoc { .. } | TargetParams::CauchyLoc { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetParams::ClassProbs(p) => {
                if p.is_empty() {
                    return Err(Error::Empty("class probabilities"));
                }
                if p.iter().any(|&v| v.is_nan() || v <= 0.0) {
                    return Err(Error::NonPositive {
                        name: "class probability",
                        value: p.iter().copied().fold(f64::INFINITY, f64::min),
                    });
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Mismatch(format!(
                        "class probabilities sum to {total}"
                    )));
                }
                Ok(())
            }
            TargetParams::GaussLoc { sigma, .. } => ensure_positive("sigma", *sigma),
            TargetParams::CauchyLoc { b, .. } => ensure_positive("b", *b),
            TargetParams::PoissonRate(l) | TargetParams::ExpRate(l) => {
                ensure_positive("lambda", *l)
            }
            TargetParams::GumbelScore(s) => {
                if s.is_finite() {
                    Ok(())
                } else {
                    Err(Error::NonFinite("gumbel score"))
                }
            }
        }
    }

    /// Point prediction of the individual target.
    ///
    /// Classes predict the arg-max; location families their location;
    /// Poisson its mean; exponential rates the score `-ln(lambda)` (larger
    /// score, larger target).
    pub fn point_prediction(&self) -> f64 {
        match self {
            TargetParams::ClassProbs(p) => argmax(p) as f64,
            TargetParams::GaussLoc { mu, .. } => *mu,
            TargetParams::CauchyLoc { a, .. } => *a,
            TargetParams::PoissonRate(l) => *l,
            TargetParams::GumbelScore(s) => *s,
            TargetParams::ExpRate(l) => -l.ln(),
        }
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
            if x > bv {
                (i, x)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// The distribution family assumed for individual targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetFamily {
    Categorical,
    Gaussian { sigma: f64 },
    Cauchy { scale: f64 },
    Poisson,
    Gumbel,
    Exponential,
}

impl TargetFamily {
    pub fn name(&self) -> &'static str {
        match self {
            TargetFamily::Categorical => "categorical",
            TargetFamily::Gaussian { .. } => "gaussian",
            TargetFamily::Cauchy { .. } => "cauchy",
            TargetFamily::Poisson => "poisson",
            TargetFamily::Gumbel => "gumbel",
            TargetFamily::Exponential => "exponential",
        }
    }

    /// Parses a family name; `scale` fills the Gaussian sigma or Cauchy scale.
    pub fn parse(name: &str, scale: f64) -> Result<Self> {
        let family = match name {
            "categorical" => TargetFamily::Categorical,
            "gaussian" => TargetFamily::Gaussian { sigma: scale },
            "cauchy" => TargetFamily::Cauchy { scale },
            "poisson" => TargetFamily::Poisson,
            "gumbel" => TargetFamily::Gumbel,
            "exponential" => TargetFamily::Exponential,
            other => return Err(Error::Config(format!("unknown loss family `{other}`"))),
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetFamily::Gaussian { sigma } => ensure_positive("sigma", sigma),
            TargetFamily::Cauchy { scale } => ensure_positive("scale", scale),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for TargetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TargetFamily {
    type Err = Error;

    /// Unit scale for the two-parameter families.
    fn from_str(s: &str) -> Result<Self> {
        TargetFamily::parse(s, 1.0)
    }
}

/// An aggregate function paired with the family of the individual targets.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateLoss {
    kind: AggregationKind,
    family: TargetFamily,
}

impl AggregateLoss {
    pub fn new(kind: AggregationKind, family: TargetFamily) -> Result<Self> {
        use AggregationTag as T;
        family.validate()?;
        let ok = match kind.tag() {
            T::Similarity | T::Triplet | T::MultiInstance => family == TargetFamily::Categorical,
            T::Mean => matches!(
                family,
                TargetFamily::Gaussian { .. } | TargetFamily::Cauchy { .. }
            ),
            T::Sum => family == TargetFamily::Poisson,
            T::RankPair => matches!(
                family,
                TargetFamily::Gaussian { .. }
                    | TargetFamily::Gumbel
                    | TargetFamily::Cauchy { .. }
                    | TargetFamily::Exponential
            ),
            T::RankList => family == TargetFamily::Gumbel,
        };
        if ok {
            Ok(AggregateLoss { kind, family })
        } else {
            Err(Error::Mismatch(format!(
                "no closed-form likelihood for {} observations of {} targets",
                kind.tag(),
                family
            )))
        }
    }

    pub fn kind(&self) -> &AggregationKind {
        &self.kind
    }

    pub fn family(&self) -> TargetFamily {
        self.family
    }
}

/// A probability and its gradient with respect to each set member.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbGrad {
    pub prob: f64,
    pub grads: Vec<Vec<f64>>,
}

/// Negative log-likelihood of one example and its per-instance gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct LossResult {
    pub nll: f64,
    pub grad_theta: Vec<Vec<f64>>,
}

/// `p(Y = 1) = sum_i p1[i] p2[i]`.
pub fn sim_prob(p1: &[f64], p2: &[f64]) -> Result<ProbGrad> {
    ensure_len("similarity simplex", p1.len(), p2.len())?;
    let prob = p1.iter().zip(p2).map(|(a, b)| a * b).sum();
    Ok(ProbGrad {
        prob,
        grads: vec![p2.to_vec(), p1.to_vec()],
    })
}

/// `p(Y = 1) = sum over d(i,j) < d(i,k) of p1[i] p2[j] p3[k]`.
pub fn triplet_prob(
    p1: &[f64],
    p2: &[f64],
    p3: &[f64],
    d: &ClassDistanceMatrix,
) -> Result<ProbGrad> {
    let c = d.classes();
    for p in [p1, p2, p3] {
        ensure_len("triplet simplex", c, p.len())?;
    }
    let mut prob = 0.0;
    let mut g1 = vec![0.0; c];
    let mut g2 = vec![0.0; c];
    let mut g3 = vec![0.0; c];
    for i in 0..c {
        for j in 0..c {
            for k in 0..c {
                if d.get(i, j) < d.get(i, k) {
                    prob += p1[i] * p2[j] * p3[k];
                    g1[i] += p2[j] * p3[k];
                    g2[j] += p1[i] * p3[k];
                    g3[k] += p1[i] * p2[j];
                }
            }
        }
    }
    Ok(ProbGrad {
        prob,
        grads: vec![g1, g2, g3],
    })
}

/// `p(Y = 1) = 1 - prod_i (1 - p_i[positive])`.
pub fn multi_instance_prob(ps: &[Vec<f64>], positive_class: usize) -> Result<ProbGrad> {
    if ps.is_empty() {
        return Err(Error::Empty("multi-instance set"));
    }
    let c = ps[0].len();
    for p in ps {
        ensure_len("multi-instance simplex", c, p.len())?;
    }
    if positive_class >= c {
        return Err(Error::ClassOutOfRange {
            index: positive_class,
            classes: c,
        });
    }
    let q: Vec<f64> = ps.iter().map(|p| 1.0 - p[positive_class]).collect();
    // prefix[i] = prod_{j<i} q_j, suffix[i] = prod_{j>=i} q_j
    let mut prefix = vec![1.0; q.len() + 1];
    let mut suffix = vec![1.0; q.len() + 1];
    for i in 0..q.len() {
        prefix[i + 1] = prefix[i] * q[i];
    }
    for i in (0..q.len()).rev() {
        suffix[i] = suffix[i + 1] * q[i];
    }
    let grads = (0..q.len())
        .map(|i| {
            let mut g = vec![0.0; c];
            g[positive_class] = prefix[i] * suffix[i + 1];
            g
        })
        .collect();
    Ok(ProbGrad {
        prob: 1.0 - prefix[q.len()],
        grads,
    })
}

/// Binary cross entropy of `p(Y = 1)` against `y`, chained through `dp`.
pub fn binary_nll(p_y1: f64, y: bool, dp: &[Vec<f64>]) -> LossResult {
    let p = p_y1.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let (nll, dnll_dp) = if y {
        (-p.ln(), -1.0 / p)
    } else {
        (-(1.0 - p).ln(), 1.0 / (1.0 - p))
    };
    LossResult {
        nll,
        grad_theta: scale_grads(dp, dnll_dp),
    }
}

fn scale_grads(grads: &[Vec<f64>], factor: f64) -> Vec<Vec<f64>> {
    grads
        .iter()
        .map(|g| g.iter().map(|v| v * factor).collect())
        .collect()
}

/// Squared error between `y` and the mean location: `(y - mean(mu))^2`.
///
/// Constant terms and the variance factor of the Gaussian likelihood are
/// dropped; `sigma` only has to be positive. Gradient layout is `[d_mu, d_sigma]`
/// with `d_sigma = 0`.
pub fn mean_gauss_nll(y: f64, mus: &[f64], sigma: f64) -> Result<LossResult> {
    ensure_positive("sigma", sigma)?;
    if mus.is_empty() {
        return Err(Error::Empty("mean set"));
    }
    let k = mus.len() as f64;
    let residual = y - mus.iter().sum::<f64>() / k;
    let g = -2.0 / k * residual;
    Ok(LossResult {
        nll: residual * residual,
        grad_theta: vec![vec![g, 0.0]; mus.len()],
    })
}

/// `-ln` Cauchy density at `y` with location `mean(a)` and scale `mean(b)`.
/// Gradient layout is `[d_a, d_b]`.
pub fn mean_cauchy_nll(y: f64, locs: &[f64], scales: &[f64]) -> Result<LossResult> {
    ensure_len("cauchy scales", locs.len(), scales.len())?;
    if locs.is_empty() {
        return Err(Error::Empty("mean set"));
    }
    for &b in scales {
        ensure_positive("b", b)?;
    }
    let k = locs.len() as f64;
    let a = locs.iter().sum::<f64>() / k;
    let b = scales.iter().sum::<f64>() / k;
    let u = (y - a) / b;
    let nll = (PI * b).ln() + (1.0 + u * u).ln();
    let d_a = -2.0 * u / (b * (1.0 + u * u));
    let d_b = 1.0 / b - 2.0 * u * u / (b * (1.0 + u * u));
    Ok(LossResult {
        nll,
        grad_theta: vec![vec![d_a / k, d_b / k]; locs.len()],
    })
}

/// `-ln Poisson(y; sum(lambda))`.
pub fn sum_poisson_nll(y: u64, lambdas: &[f64]) -> Result<LossResult> {
    if lambdas.is_empty() {
        return Err(Error::Empty("sum set"));
    }
    for &l in lambdas {
        ensure_positive("lambda", l)?;
    }
    let total: f64 = lambdas.iter().sum();
    let nll = -dists::poisson_log_pmf(y, total)?;
    let g = 1.0 - y as f64 / total;
    Ok(LossResult {
        nll,
        grad_theta: vec![vec![g]; lambdas.len()],
    })
}

/// `p(Z1 > Z2) = (1 + erf((mu1 - mu2) / sqrt(2 (sigma1^2 + sigma2^2)))) / 2`
/// for independent Gaussians. Gradient layout is `[d_mu, d_sigma]`.
pub fn rank_gauss_prob(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<ProbGrad> {
    rank_gauss_prob_with(dists::erf, mu1, mu2, sigma1, sigma2)
}

/// [`rank_gauss_prob`] with a caller-supplied error function.
pub fn rank_gauss_prob_with<F: Fn(f64) -> f64>(
    erf: F,
    mu1: f64,
    mu2: f64,
    sigma1: f64,
    sigma2: f64,
) -> Result<ProbGrad> {
    ensure_positive("sigma1", sigma1)?;
    ensure_positive("sigma2", sigma2)?;
    let diff = mu1 - mu2;
    let s = (2.0 * (sigma1 * sigma1 + sigma2 * sigma2)).sqrt();
    let z = diff / s;
    let prob = 0.5 * (1.0 + erf(z));
    let dz = 0.5 * erf_deriv(z);
    let d_mu = dz / s;
    // dz/dsigma_i = -diff / s^2 * ds/dsigma_i, ds/dsigma_i = 2 sigma_i / s
    let d_sigma = |sigma: f64| dz * (-diff / (s * s)) * (2.0 * sigma / s);
    Ok(ProbGrad {
        prob,
        grads: vec![vec![d_mu, d_sigma(sigma1)], vec![-d_mu, d_sigma(sigma2)]],
    })
}

/// Fixed shared variance form: `(1 + erf((mu1 - mu2) / (2 sigma))) / 2`.
pub fn rank_gauss_prob_homoscedastic(mu1: f64, mu2: f64, sigma: f64) -> Result<f64> {
    ensure_positive("sigma", sigma)?;
    Ok(0.5 * (1.0 + dists::erf((mu1 - mu2) / (2.0 * sigma))))
}

/// `p(Z1 > Z2) = logistic(s1 - s2)` for unit-scale Gumbel scores.
pub fn rank_gumbel_prob(s1: f64, s2: f64) -> ProbGrad {
    let prob = logistic(s1 - s2);
    let g = prob * (1.0 - prob);
    ProbGrad {
        prob,
        grads: vec![vec![g], vec![-g]],
    }
}

/// `p(Z1 > Z2) = atan((a1 - a2) / (b1 + b2)) / pi + 1/2`. Layout `[d_a, d_b]`.
pub fn rank_cauchy_prob(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<ProbGrad> {
    ensure_positive("b1", b1)?;
    ensure_positive("b2", b2)?;
    let scale = b1 + b2;
    let u = (a1 - a2) / scale;
    let prob = u.atan() / PI + 0.5;
    let du = 1.0 / (PI * (1.0 + u * u));
    let d_a = du / scale;
    let d_b = -du * u / scale;
    Ok(ProbGrad {
        prob,
        grads: vec![vec![d_a, d_b], vec![-d_a, d_b]],
    })
}

/// `p(Z1 > Z2) = lambda2 / (lambda1 + lambda2)` for exponential targets.
pub fn rank_exponential_prob(lambda1: f64, lambda2: f64) -> Result<ProbGrad> {
    ensure_positive("lambda1", lambda1)?;
    ensure_positive("lambda2", lambda2)?;
    let total = lambda1 + lambda2;
    let prob = lambda2 / total;
    Ok(ProbGrad {
        prob,
        grads: vec![
            vec![-lambda2 / (total * total)],
            vec![lambda1 / (total * total)],
        ],
    })
}

/// Plackett-Luce negative log-likelihood of the scores being in decreasing
/// order as given: `-sum_{i<K-1} [s_i - logsumexp(s_i..s_K)]`.
pub fn listwise_gumbel_nll(scores: &[f64]) -> Result<LossResult> {
    if scores.len() < 2 {
        return Err(Error::InvalidKind(format!(
            "listwise likelihood needs at least two scores, got {}",
            scores.len()
        )));
    }
    let k = scores.len();
    let mut nll = 0.0;
    let mut grad = vec![0.0; k];
    for i in 0..k - 1 {
        let tail = &scores[i..];
        let lse = log_sum_exp(tail)?;
        nll += lse - scores[i];
        grad[i] -= 1.0;
        for (j, &s) in tail.iter().enumerate() {
            grad[i + j] += (s - lse).exp();
        }
    }
    Ok(LossResult {
        nll,
        grad_theta: grad.into_iter().map(|g| vec![g]).collect(),
    })
}

fn class_probs(theta: &TargetParams) -> Result<&[f64]> {
    match theta {
        TargetParams::ClassProbs(p) => Ok(p),
        other => Err(variant_mismatch("class probabilities", other)),
    }
}

fn family_matches(family: TargetFamily, theta: &TargetParams) -> bool {
    matches!(
        (family, theta),
        (TargetFamily::Categorical, TargetParams::ClassProbs(_))
            | (TargetFamily::Gaussian { .. }, TargetParams::GaussLoc { .. })
            | (TargetFamily::Cauchy { .. }, TargetParams::CauchyLoc { .. })
            | (TargetFamily::Poisson, TargetParams::PoissonRate(_))
            | (TargetFamily::Gumbel, TargetParams::GumbelScore(_))
            | (TargetFamily::Exponential, TargetParams::ExpRate(_))
    )
}

fn variant_mismatch(expected: &str, got: &TargetParams) -> Error {
    Error::Mismatch(format!("expected {expected} parameters, got {got:?}"))
}

/// Per-example negative log-likelihood for any supported loss.
pub fn aggregate_nll(
    loss: &AggregateLoss,
    example: &AggregateExample,
    thetas: &[TargetParams],
) -> Result<LossResult> {
    let kind = &loss.kind;
    ensure_len("parameter set", kind.set_size(), thetas.len())?;
    if !kind.accepts(&example.observation) {
        return Err(Error::Mismatch(format!(
            "{:?} is not a {} observation",
            example.observation,
            kind.tag()
        )));
    }
    if let Some(bad) = thetas.iter().find(|t| !family_matches(loss.family, t)) {
        return Err(variant_mismatch(loss.family.name(), bad));
    }
    let binary = |obs: &Observation| matches!(obs, Observation::Binary(true));
    match kind.tag() {
        AggregationTag::Similarity => {
            let pg = sim_prob(class_probs(&thetas[0])?, class_probs(&thetas[1])?)?;
            Ok(binary_nll(pg.prob, binary(&example.observation), &pg.grads))
        }
        AggregationTag::Triplet => {
            let d = kind.distance().expect("triplet kind carries a distance");
            let pg = triplet_prob(
                class_probs(&thetas[0])?,
                class_probs(&thetas[1])?,
                class_probs(&thetas[2])?,
                d,
            )?;
            Ok(binary_nll(pg.prob, binary(&example.observation), &pg.grads))
        }
        AggregationTag::MultiInstance => {
            let ps = thetas
                .iter()
                .map(|t| class_probs(t).map(<[f64]>::to_vec))
                .collect::<Result<Vec<_>>>()?;
            let pos = kind
                .positive_class()
                .expect("multi-instance kind carries a class");
            let pg = multi_instance_prob(&ps, pos)?;
            Ok(binary_nll(pg.prob, binary(&example.observation), &pg.grads))
        }
        AggregationTag::Mean => {
            let Observation::Real(y) = example.observation else {
                unreachable!("checked by accepts")
            };
            match loss.family {
                TargetFamily::Gaussian { .. } => {
                    let mut mus = Vec::with_capacity(thetas.len());
                    let mut sigma = f64::NAN;
                    for t in thetas {
                        match t {
                            TargetParams::GaussLoc { mu, sigma: s } => {
                                mus.push(*mu);
                                sigma = *s;
                            }
                            other => return Err(variant_mismatch("gaussian", other)),
                        }
                    }
                    mean_gauss_nll(y, &mus, sigma)
                }
                _ => {
                    let (locs, scales): (Vec<f64>, Vec<f64>) = thetas
                        .iter()
                        .map(|t| match t {
                            TargetParams::CauchyLoc { a, b } => Ok((*a, *b)),
                            other => Err(variant_mismatch("cauchy", other)),
                        })
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .unzip();
                    mean_cauchy_nll(y, &locs, &scales)
                }
            }
        }
        AggregationTag::Sum => {
            let Observation::Real(y) = example.observation else {
                unreachable!("checked by accepts")
            };
            if !(y >= 0.0 && y.fract() == 0.0 && y < 2f64.powi(53)) {
                return Err(Error::Data(format!(
                    "poisson sum observation must be a nonnegative integer, got {y}"
                )));
            }
            let lambdas = thetas
                .iter()
                .map(|t| match t {
                    TargetParams::PoissonRate(l) => Ok(*l),
                    other => Err(variant_mismatch("poisson", other)),
                })
                .collect::<Result<Vec<_>>>()?;
            sum_poisson_nll(y as u64, &lambdas)
        }
        AggregationTag::RankPair => {
            let pg = match (&thetas[0], &thetas[1]) {
                (
                    TargetParams::GaussLoc { mu: m1, sigma: s1 },
                    TargetParams::GaussLoc { mu: m2, sigma: s2 },
                ) => rank_gauss_prob(*m1, *m2, *s1, *s2)?,
                (TargetParams::GumbelScore(s1), TargetParams::GumbelScore(s2)) => {
                    rank_gumbel_prob(*s1, *s2)
                }
                (
                    TargetParams::CauchyLoc { a: a1, b: b1 },
                    TargetParams::CauchyLoc { a: a2, b: b2 },
                ) => rank_cauchy_prob(*a1, *a2, *b1, *b2)?,
                (TargetParams::ExpRate(l1), TargetParams::ExpRate(l2)) => {
                    rank_exponential_prob(*l1, *l2)?
                }
                (other, _) => return Err(variant_mismatch(loss.family.name(), other)),
            };
            Ok(binary_nll(pg.prob, binary(&example.observation), &pg.grads))
        }
        AggregationTag::RankList => {
            let Observation::Order(order) = &example.observation else {
                unreachable!("checked by accepts")
            };
            let scores = order
                .iter()
                .map(|&i| match &thetas[i] {
                    TargetParams::GumbelScore(s) => Ok(*s),
                    other => Err(variant_mismatch("gumbel", other)),
                })
                .collect::<Result<Vec<_>>>()?;
            let ranked = listwise_gumbel_nll(&scores)?;
            let mut grad_theta = vec![Vec::new(); thetas.len()];
            for (pos, &i) in order.iter().enumerate() {
                grad_theta[i] = ranked.grad_theta[pos].clone();
            }
            Ok(LossResult {
                nll: ranked.nll,
                grad_theta,
            })
        }
    }
}

#[cfg(test)]
mod tests;
