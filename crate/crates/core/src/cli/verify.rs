//! Cross-checks of the closed-form likelihoods against the brute-force and
//! numerical references in `oracle`.

use std::fmt;

use crate::aggregate::{
    agg_multi_instance, agg_similarity, agg_triplet, AggregateExample, AggregationKind,
    ClassDistanceMatrix, Observation,
};
use crate::error::Result;
use crate::eval::linear_sum_assignment;
use crate::likelihood::{
    listwise_gumbel_nll, multi_instance_prob, rank_gauss_prob_with, sim_prob, sum_poisson_nll,
    triplet_prob, AggregateLoss, TargetFamily,
};
use crate::model::{batch_loss_and_grad, Activation, Architecture, ParamMap};
use crate::oracle;
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\tmax_error={:.3e}\ttolerance={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.tolerance
        )
    }
}

const SEED: u64 = 0x5eed;

fn simplex(r: &mut Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| rng::uniform(r, 0.05, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn max_error<I: IntoIterator<Item = Result<f64>>>(errors: I) -> Result<f64> {
    errors.into_iter().try_fold(0.0, |m: f64, e| Ok(m.max(e?)))
}

/// Runs every check with the library's own `erf`.
pub fn run_checks() -> Result<Vec<Check>> {
    run_checks_with(crate::dists::erf)
}

/// Runs every check; `erf` is used wherever the checked code needs the
/// error function, so a faulty implementation can be substituted.
pub fn run_checks_with<E: Fn(f64) -> f64 + Copy>(erf: E) -> Result<Vec<Check>> {
    let mut r = rng::seeded(SEED);
    let mut checks = Vec::new();

    let uniform = vec![1.0 / 3.0; 3];
    let p = triplet_prob(
        &uniform,
        &uniform,
        &uniform,
        &ClassDistanceMatrix::indicator(3),
    )?
    .prob;
    checks.push(Check {
        name: "triplet_uniform_three_classes_is_2/9",
        max_error: (p - 2.0 / 9.0).abs(),
        tolerance: 1e-12,
    });

    let classes = [2, 3, 5];
    let sim = max_error((0..50).map(|i| {
        let c = classes[i % 3];
        let ps = vec![simplex(&mut r, c), simplex(&mut r, c)];
        let closed = sim_prob(&ps[0], &ps[1])?.prob;
        let brute = oracle::enumerate_class_likelihood(
            &ps,
            |z| agg_similarity(z[0], z[1], c).unwrap(),
            &true,
        )?;
        Ok((closed - brute).abs())
    }))?;
    checks.push(Check {
        name: "similarity_vs_enumeration",
        max_error: sim,
        tolerance: 1e-12,
    });

    let trip = max_error((0..50).map(|i| {
        let c = classes[i % 3];
        let d = ClassDistanceMatrix::indicator(c);
        let ps: Vec<Vec<f64>> = (0..3).map(|_| simplex(&mut r, c)).collect();
        let closed = triplet_prob(&ps[0], &ps[1], &ps[2], &d)?.prob;
        let brute = oracle::enumerate_class_likelihood(
            &ps,
            |z| agg_triplet(z[0], z[1], z[2], &d).unwrap(),
            &true,
        )?;
        Ok((closed - brute).abs())
    }))?;
    checks.push(Check {
        name: "triplet_vs_enumeration",
        max_error: trip,
        tolerance: 1e-12,
    });

    let mi = max_error((0..50).map(|i| {
        let c = classes[i % 3];
        let k = 2 + i % 2;
        let pos = rng::index(&mut r, c);
        let ps: Vec<Vec<f64>> = (0..k).map(|_| simplex(&mut r, c)).collect();
        let closed = multi_instance_prob(&ps, pos)?.prob;
        let brute = oracle::enumerate_class_likelihood(
            &ps,
            |z| agg_multi_instance(z, pos).unwrap(),
            &true,
        )?;
        Ok((closed - brute).abs())
    }))?;
    checks.push(Check {
        name: "multi_instance_vs_enumeration",
        max_error: mi,
        tolerance: 1e-12,
    });

    let erf_err = max_error((0..40).map(|i| {
        let x = -4.0 + 8.0 * i as f64 / 39.0;
        let quad =
            oracle::integrate(|t| (-t * t).exp(), 0.0, x, 32) * std::f64::consts::FRAC_2_SQRT_PI;
        Ok((erf(x) - quad).abs())
    }))?;
    checks.push(Check {
        name: "erf_vs_quadrature",
        max_error: erf_err,
        tolerance: 1e-12,
    });

    let rank = max_error((0..20).map(|_| {
        let (mu1, mu2) = (
            rng::uniform(&mut r, -2.0, 2.0),
            rng::uniform(&mut r, -2.0, 2.0),
        );
        let (s1, s2) = (
            rng::uniform(&mut r, 0.3, 2.0),
            rng::uniform(&mut r, 0.3, 2.0),
        );
        let closed = rank_gauss_prob_with(erf, mu1, mu2, s1, s2)?.prob;
        Ok((closed - oracle::quad_rank_gauss(mu1, mu2, s1, s2)?).abs())
    }))?;
    checks.push(Check {
        name: "rank_gaussian_vs_quadrature",
        max_error: rank,
        tolerance: 1e-6,
    });

    let poisson = max_error((0..30).map(|_| {
        let k = 1 + rng::index(&mut r, 4);
        let lambdas: Vec<f64> = (0..k).map(|_| rng::uniform(&mut r, 0.2, 4.0)).collect();
        let y = rng::index(&mut r, 15) as u64;
        let closed = (-sum_poisson_nll(y, &lambdas)?.nll).exp();
        let brute = oracle::poisson_convolution_pmf(&lambdas, y)?;
        Ok((closed - brute).abs() / brute)
    }))?;
    checks.push(Check {
        name: "sum_poisson_vs_convolution",
        max_error: poisson,
        tolerance: 1e-10,
    });

    let listwise = max_error((0..30).map(|_| {
        let k = 2 + rng::index(&mut r, 4);
        let scores: Vec<f64> = (0..k).map(|_| rng::uniform(&mut r, -2.0, 2.0)).collect();
        let closed = (-listwise_gumbel_nll(&scores)?.nll).exp();
        let identity: Vec<usize> = (0..k).collect();
        Ok((closed - oracle::plackett_luce_prob(&scores, &identity)).abs())
    }))?;
    checks.push(Check {
        name: "listwise_vs_plackett_luce",
        max_error: listwise,
        tolerance: 1e-12,
    });

    checks.push(Check {
        name: "end_to_end_gradients_vs_finite_differences",
        max_error: gradient_check(&mut r)?,
        tolerance: 1e-4,
    });

    let assignment = max_error((0..30).map(|i| {
        let n = 1 + i % 6;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng::uniform(&mut r, -5.0, 5.0)).collect())
            .collect();
        let perm = linear_sum_assignment(&cost)?;
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        Ok((total - oracle::exhaustive_assignment(&cost)?.1).abs())
    }))?;
    checks.push(Check {
        name: "assignment_vs_exhaustive_search",
        max_error: assignment,
        tolerance: 1e-9,
    });

    Ok(checks)
}

/// Every aggregation/family pairing composed with a linear map and a tanh MLP.
fn gradient_check(r: &mut Rng) -> Result<f64> {
    let cat = TargetFamily::Categorical;
    let losses = [
        (AggregationKind::similarity(), cat),
        (
            AggregationKind::triplet(ClassDistanceMatrix::indicator(3)),
            cat,
        ),
        (AggregationKind::multi_instance(3, 0)?, cat),
        (
            AggregationKind::mean(4)?,
            TargetFamily::Gaussian { sigma: 1.0 },
        ),
        (
            AggregationKind::mean(3)?,
            TargetFamily::Cauchy { scale: 1.0 },
        ),
        (AggregationKind::sum(3)?, TargetFamily::Poisson),
        (
            AggregationKind::rank_pair(),
            TargetFamily::Gaussian { sigma: 1.0 },
        ),
        (AggregationKind::rank_pair(), TargetFamily::Gumbel),
        (
            AggregationKind::rank_pair(),
            TargetFamily::Cauchy { scale: 1.0 },
        ),
        (AggregationKind::rank_pair(), TargetFamily::Exponential),
        (AggregationKind::rank_list(3)?, TargetFamily::Gumbel),
    ];
    let dim = 3;
    let mut worst: f64 = 0.0;
    for (kind, family) in losses {
        let loss = AggregateLoss::new(kind, family)?;
        let out = if family == cat { 3 } else { 1 };
        for arch in [
            Architecture::Linear {
                input: dim,
                output: out,
            },
            Architecture::Mlp {
                input: dim,
                hidden: vec![4],
                output: out,
                activation: Activation::Tanh,
            },
        ] {
            for _ in 0..20 {
                let weights: Vec<f64> = (0..arch.param_count())
                    .map(|_| rng::uniform(r, -0.8, 0.8))
                    .collect();
                let batch: Vec<AggregateExample> = (0..2)
                    .map(|_| random_example(r, loss.kind(), dim))
                    .collect();
                let map = ParamMap::new(arch.clone(), family, weights.clone())?;
                let (_, grad) = batch_loss_and_grad(&map, &loss, &batch)?;
                let numeric = oracle::finite_diff_grad(
                    |w| {
                        ParamMap::new(arch.clone(), family, w.to_vec())
                            .and_then(|m| batch_loss_and_grad(&m, &loss, &batch))
                            .map_or(f64::NAN, |(l, _)| l)
                    },
                    &weights,
                    None,
                )?;
                worst = worst.max(oracle::relative_error(&grad.values, &numeric));
            }
        }
    }
    Ok(worst)
}

fn random_example(r: &mut Rng, kind: &AggregationKind, dim: usize) -> AggregateExample {
    use crate::aggregate::AggregationTag as T;
    let observation = match kind.tag() {
        T::Mean => Observation::Real(rng::uniform(r, -2.0, 2.0)),
        T::Sum => Observation::Real(rng::index(r, 8) as f64),
        T::RankList => Observation::Order(rng::permutation(r, kind.set_size())),
        _ => Observation::Binary(rng::unit(r) < 0.5),
    };
    AggregateExample {
        features: (0..kind.set_size())
            .map(|_| (0..dim).map(|_| rng::uniform(r, -1.5, 1.5)).collect())
            .collect(),
        observation,
        sources: Vec::new(),
    }
}
