use super::*;
use crate::aggregate::{agg_triplet, ClassDistanceMatrix};
use crate::oracle::{self, enumerate_class_likelihood, finite_diff_grad, relative_error};
use crate::rng::{self, Rng};
use approx::assert_abs_diff_eq;

fn simplex(rng: &mut Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| rng::uniform(rng, 0.05, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn flatten(thetas: &[TargetParams]) -> Vec<f64> {
    thetas
        .iter()
        .flat_map(|t| match t {
            TargetParams::ClassProbs(p) => p.clone(),
            TargetParams::GaussLoc { mu, sigma } => vec![*mu, *sigma],
            TargetParams::CauchyLoc { a, b } => vec![*a, *b],
            TargetParams::PoissonRate(v)
            | TargetParams::GumbelScore(v)
            | TargetParams::ExpRate(v) => {
                vec![*v]
            }
        })
        .collect()
}

fn unflatten(template: &[TargetParams], flat: &[f64]) -> Vec<TargetParams> {
    let mut at = 0;
    template
        .iter()
        .map(|t| {
            let n = t.grad_len();
            let v = &flat[at..at + n];
            at += n;
            match t {
                TargetParams::ClassProbs(_) => TargetParams::ClassProbs(v.to_vec()),
                TargetParams::GaussLoc { .. } => TargetParams::GaussLoc {
                    mu: v[0],
                    sigma: v[1],
                },
                TargetParams::CauchyLoc { .. } => TargetParams::CauchyLoc { a: v[0], b: v[1] },
                TargetParams::PoissonRate(_) => TargetParams::PoissonRate(v[0]),
                TargetParams::GumbelScore(_) => TargetParams::GumbelScore(v[0]),
                TargetParams::ExpRate(_) => TargetParams::ExpRate(v[0]),
            }
        })
        .collect()
}

fn example(observation: Observation, k: usize) -> AggregateExample {
    AggregateExample {
        features: vec![vec![]; k],
        observation,
        sources: (0..k).collect(),
    }
}

/// Draws a random (loss, example, thetas) instance for every loss in scope.
fn random_instances(rng: &mut Rng) -> Vec<(AggregateLoss, AggregateExample, Vec<TargetParams>)> {
    let bit = |rng: &mut Rng| rng::unit(rng) < 0.5;
    let mut out = Vec::new();
    let c = 2 + rng::index(rng, 4);
    let probs = |rng: &mut Rng, k: usize| -> Vec<TargetParams> {
        (0..k)
            .map(|_| TargetParams::ClassProbs(simplex(rng, c)))
            .collect()
    };
    out.push((
        AggregateLoss::new(AggregationKind::similarity(), TargetFamily::Categorical).unwrap(),
        example(Observation::Binary(bit(rng)), 2),
        probs(rng, 2),
    ));
    out.push((
        AggregateLoss::new(
            AggregationKind::triplet(ClassDistanceMatrix::indicator(c)),
            TargetFamily::Categorical,
        )
        .unwrap(),
        example(Observation::Binary(bit(rng)), 3),
        probs(rng, 3),
    ));
    out.push((
        AggregateLoss::new(
            AggregationKind::multi_instance(3, rng::index(rng, c)).unwrap(),
            TargetFamily::Categorical,
        )
        .unwrap(),
        example(Observation::Binary(bit(rng)), 3),
        probs(rng, 3),
    ));
    let k = 1 + rng::index(rng, 5);
    let sigma = rng::uniform(rng, 0.3, 2.0);
    out.push((
        AggregateLoss::new(
            AggregationKind::mean(k).unwrap(),
            TargetFamily::Gaussian { sigma },
        )
        .unwrap(),
        example(Observation::Real(rng::uniform(rng, -3.0, 3.0)), k),
        (0..k)
            .map(|_| TargetParams::GaussLoc {
                mu: rng::uniform(rng, -3.0, 3.0),
                sigma,
            })
            .collect(),
    ));
    out.push((
        AggregateLoss::new(
            AggregationKind::mean(k).unwrap(),
            TargetFamily::Cauchy { scale: 1.0 },
        )
        .unwrap(),
        example(Observation::Real(rng::uniform(rng, -3.0, 3.0)), k),
        (0..k)
            .map(|_| TargetParams::CauchyLoc {
                a: rng::uniform(rng, -3.0, 3.0),
                b: rng::uniform(rng, 0.3, 2.0),
            })
            .collect(),
    ));
    out.push((
        AggregateLoss::new(AggregationKind::sum(k).unwrap(), TargetFamily::Poisson).unwrap(),
        example(Observation::Real(rng::index(rng, 12) as f64), k),
        (0..k)
            .map(|_| TargetParams::PoissonRate(rng::uniform(rng, 0.2, 4.0)))
            .collect(),
    ));
    let pair = |rng: &mut Rng, family: TargetFamily| -> Vec<TargetParams> {
        (0..2)
            .map(|_| {
                let loc = rng::uniform(rng, -2.0, 2.0);
                let scale = rng::uniform(rng, 0.3, 2.0);
                match family {
                    TargetFamily::Gaussian { .. } => TargetParams::GaussLoc {
                        mu: loc,
                        sigma: scale,
                    },
                    TargetFamily::Cauchy { .. } => TargetParams::CauchyLoc { a: loc, b: scale },
                    TargetFamily::Gumbel => TargetParams::GumbelScore(loc),
                    _ => TargetParams::ExpRate(scale),
                }
            })
            .collect()
    };
    for family in [
        TargetFamily::Gaussian { sigma: 1.0 },
        TargetFamily::Gumbel,
        TargetFamily::Cauchy { scale: 1.0 },
        TargetFamily::Exponential,
    ] {
        out.push((
            AggregateLoss::new(AggregationKind::rank_pair(), family).unwrap(),
            example(Observation::Binary(bit(rng)), 2),
            pair(rng, family),
        ));
    }
    let k = 2 + rng::index(rng, 4);
    out.push((
        AggregateLoss::new(AggregationKind::rank_list(k).unwrap(), TargetFamily::Gumbel).unwrap(),
        example(Observation::Order(rng::permutation(rng, k)), k),
        (0..k)
            .map(|_| TargetParams::GumbelScore(rng::uniform(rng, -2.0, 2.0)))
            .collect(),
    ));
    out
}

#[test]
fn sim_prob_examples() {
    let u = vec![0.1; 10];
    assert_abs_diff_eq!(sim_prob(&u, &u).unwrap().prob, 0.1, epsilon = 1e-15);
    assert_eq!(sim_prob(&[1.0, 0.0], &[0.0, 1.0]).unwrap().prob, 0.0);
    assert!(sim_prob(&[1.0, 0.0], &[0.0, 0.5, 0.5]).is_err());
}

#[test]
fn triplet_prob_examples() {
    let d = ClassDistanceMatrix::indicator(3);
    let u = vec![1.0 / 3.0; 3];
    assert_abs_diff_eq!(
        triplet_prob(&u, &u, &u, &d).unwrap().prob,
        2.0 / 9.0,
        epsilon = 1e-12
    );
    let e1 = [1.0, 0.0, 0.0];
    let e2 = [0.0, 1.0, 0.0];
    assert_eq!(triplet_prob(&e1, &e1, &e2, &d).unwrap().prob, 1.0);
    assert!(triplet_prob(&e1, &e1, &[0.5, 0.5], &d).is_err());
}

#[test]
fn classification_likelihoods_match_enumeration() {
    let mut rng = rng::seeded(100);
    for c in 2..=5 {
        let d = ClassDistanceMatrix::indicator(c);
        for _ in 0..20 {
            let ps: Vec<Vec<f64>> = (0..3).map(|_| simplex(&mut rng, c)).collect();
            let sim = sim_prob(&ps[0], &ps[1]).unwrap().prob;
            let sim_ref = enumerate_class_likelihood(&ps[..2], |z| z[0] == z[1], &true).unwrap();
            assert_abs_diff_eq!(sim, sim_ref, epsilon = 1e-12);

            let tri = triplet_prob(&ps[0], &ps[1], &ps[2], &d).unwrap().prob;
            let tri_ref = enumerate_class_likelihood(
                &ps,
                |z| agg_triplet(z[0], z[1], z[2], &d).unwrap(),
                &true,
            )
            .unwrap();
            assert_abs_diff_eq!(tri, tri_ref, epsilon = 1e-12);

            let pos = rng::index(&mut rng, c);
            let mi = multi_instance_prob(&ps, pos).unwrap().prob;
            let mi_ref = enumerate_class_likelihood(&ps, |z| z.contains(&pos), &true).unwrap();
            assert_abs_diff_eq!(mi, mi_ref, epsilon = 1e-12);
        }
    }
}

#[test]
fn triplet_with_general_distance_matches_enumeration() {
    let mut rng = rng::seeded(8);
    let c = 4;
    let mut values = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            if i != j {
                // small integer distances so ties occur
                values[i * c + j] = (1 + rng::index(&mut rng, 3)) as f64;
            }
        }
    }
    let d = ClassDistanceMatrix::new(c, values).unwrap();
    for _ in 0..20 {
        let ps: Vec<Vec<f64>> = (0..3).map(|_| simplex(&mut rng, c)).collect();
        let tri = triplet_prob(&ps[0], &ps[1], &ps[2], &d).unwrap().prob;
        let tri_ref =
            enumerate_class_likelihood(&ps, |z| d.get(z[0], z[1]) < d.get(z[0], z[2]), &true)
                .unwrap();
        assert_abs_diff_eq!(tri, tri_ref, epsilon = 1e-12);
    }
}

#[test]
fn triplet_is_invariant_under_common_class_permutation() {
    let mut rng = rng::seeded(5);
    for c in 2..=5 {
        let d = ClassDistanceMatrix::indicator(c);
        for _ in 0..10 {
            let ps: Vec<Vec<f64>> = (0..3).map(|_| simplex(&mut rng, c)).collect();
            let perm = rng::permutation(&mut rng, c);
            let permuted: Vec<Vec<f64>> = ps
                .iter()
                .map(|p| perm.iter().map(|&i| p[i]).collect())
                .collect();
            let a = triplet_prob(&ps[0], &ps[1], &ps[2], &d).unwrap().prob;
            let b = triplet_prob(&permuted[0], &permuted[1], &permuted[2], &d)
                .unwrap()
                .prob;
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}

#[test]
fn multi_instance_examples() {
    let half = vec![0.5, 0.5];
    let p = multi_instance_prob(&[half.clone(), half.clone()], 0).unwrap();
    assert_abs_diff_eq!(p.prob, 0.75, epsilon = 1e-15);
    let sure = vec![1.0, 0.0];
    assert_eq!(
        multi_instance_prob(&[half.clone(), sure, half], 0)
            .unwrap()
            .prob,
        1.0
    );
    assert!(multi_instance_prob(&[], 0).is_err());
    assert!(multi_instance_prob(&[vec![0.5, 0.5]], 2).is_err());
}

#[test]
fn multi_instance_gradient_handles_certain_members() {
    let p = multi_instance_prob(&[vec![1.0, 0.0], vec![0.3, 0.7]], 0).unwrap();
    assert_eq!(p.grads[0][0], 0.7);
    assert_eq!(p.grads[1][0], 0.0);
}

#[test]
fn binary_nll_examples() {
    let r = binary_nll(0.5, true, &[vec![1.0]]);
    assert_abs_diff_eq!(r.nll, 2f64.ln(), epsilon = 1e-15);
    let r = binary_nll(0.3, true, &[vec![1.0]]);
    assert!(r.grad_theta[0][0] < 0.0);
    assert_abs_diff_eq!(r.grad_theta[0][0], -1.0 / 0.3, epsilon = 1e-12);
    assert_abs_diff_eq!(binary_nll(0.75, false, &[]).nll, 4f64.ln(), epsilon = 1e-14);
    assert!(binary_nll(0.0, true, &[]).nll.is_finite());
}

#[test]
fn mean_gauss_examples() {
    let r = mean_gauss_nll(2.0, &[1.0, 3.0], 1.0).unwrap();
    assert_eq!(r.nll, 0.0);
    assert!(r.grad_theta.iter().all(|g| g[0] == 0.0));
    let r = mean_gauss_nll(1.5, &[4.0], 1.0).unwrap();
    assert_eq!(r.nll, 6.25);
    let r = mean_gauss_nll(5.0, &[1.0, 2.0, 3.0, 6.0], 1.0).unwrap();
    assert_eq!(r.nll, 4.0);
    for g in &r.grad_theta {
        assert_eq!(g[0], -1.0);
    }
    let mus = [1.0, 2.0, 3.0, 6.0];
    let fd = finite_diff_grad(|m| mean_gauss_nll(5.0, m, 1.0).unwrap().nll, &mus, None).unwrap();
    for v in fd {
        assert_abs_diff_eq!(v, -1.0, epsilon = 1e-8);
    }
    assert!(mean_gauss_nll(0.0, &[1.0], 0.0).is_err());
}

#[test]
fn mean_cauchy_examples() {
    let (locs, scales) = ([1.0, -1.0, 3.0], [0.5, 1.0, 1.5]);
    let r = mean_cauchy_nll(1.0, &locs, &scales).unwrap();
    assert_abs_diff_eq!(r.nll, (PI * 1.0).ln(), epsilon = 1e-14);
    assert!(r.grad_theta.iter().all(|g| g[0].abs() < 1e-15));
    assert!(mean_cauchy_nll(0.0, &[0.0], &[0.0]).is_err());
}

#[test]
fn sum_poisson_examples() {
    let r = sum_poisson_nll(0, &[1.0, 2.0]).unwrap();
    assert_abs_diff_eq!(r.nll, 3.0, epsilon = 1e-14);
    let r = sum_poisson_nll(6, &[2.5, 3.5]).unwrap();
    assert!(r.grad_theta.iter().all(|g| g[0].abs() < 1e-15));
    let r = sum_poisson_nll(5, &[2.5, 3.5]).unwrap();
    assert!(r.grad_theta.iter().all(|g| g[0] != 0.0));
    let reference = oracle::poisson_convolution_pmf(&[2.0, 2.0], 5).unwrap();
    let r = sum_poisson_nll(5, &[2.0, 2.0]).unwrap();
    assert_abs_diff_eq!(r.nll, -reference.ln(), epsilon = 1e-9);
}

#[test]
fn sum_poisson_matches_convolution() {
    let mut rng = rng::seeded(77);
    for _ in 0..30 {
        let k = 1 + rng::index(&mut rng, 4);
        let lambdas: Vec<f64> = (0..k).map(|_| rng::uniform(&mut rng, 0.1, 5.0)).collect();
        let y = rng::index(&mut rng, 15) as u64;
        let reference = oracle::poisson_convolution_pmf(&lambdas, y).unwrap();
        let nll = sum_poisson_nll(y, &lambdas).unwrap().nll;
        assert_abs_diff_eq!((-nll).exp(), reference, epsilon = 1e-9);
    }
}

#[test]
fn rank_gauss_examples() {
    assert_eq!(rank_gauss_prob(0.7, 0.7, 1.0, 2.0).unwrap().prob, 0.5);
    let sigma = 0.8;
    let p = rank_gauss_prob(2.0 * sigma, 0.0, sigma, sigma)
        .unwrap()
        .prob;
    let reference =
        0.5 * (1.0 + oracle::integrate(|t| 2.0 / PI.sqrt() * (-t * t).exp(), 0.0, 1.0, 32));
    assert_abs_diff_eq!(reference, 0.9213504, epsilon = 1e-6);
    assert_abs_diff_eq!(p, reference, epsilon = 1e-10);
    let h = rank_gauss_prob_homoscedastic(2.0 * sigma, 0.0, sigma).unwrap();
    assert_abs_diff_eq!(h, p, epsilon = 1e-15);
    assert!(rank_gauss_prob(0.0, 0.0, 0.0, 1.0).is_err());
}

#[test]
fn rank_gauss_matches_quadrature() {
    let mut rng = rng::seeded(31);
    for _ in 0..20 {
        let (m1, m2) = (
            rng::uniform(&mut rng, -2.0, 2.0),
            rng::uniform(&mut rng, -2.0, 2.0),
        );
        let (s1, s2) = (
            rng::uniform(&mut rng, 0.2, 2.0),
            rng::uniform(&mut rng, 0.2, 2.0),
        );
        let p = rank_gauss_prob(m1, m2, s1, s2).unwrap().prob;
        let q = oracle::quad_rank_gauss(m1, m2, s1, s2).unwrap();
        assert_abs_diff_eq!(p, q, epsilon = 1e-6);
    }
}

#[test]
fn rank_gauss_shift_invariance_is_exact_on_dyadic_inputs() {
    let mut rng = rng::seeded(2);
    let dyadic = |rng: &mut Rng| (rng::index(rng, 1 << 16) as f64 - 32768.0) / 1024.0;
    for _ in 0..200 {
        let (m1, m2, c) = (dyadic(&mut rng), dyadic(&mut rng), dyadic(&mut rng));
        let a = rank_gauss_prob(m1 + c, m2 + c, 0.7, 0.7).unwrap().prob;
        let b = rank_gauss_prob(m1, m2, 0.7, 0.7).unwrap().prob;
        assert_eq!(a, b);
    }
}

#[test]
fn rank_gumbel_examples() {
    assert_eq!(rank_gumbel_prob(1.2, 1.2).prob, 0.5);
    assert_abs_diff_eq!(rank_gumbel_prob(3f64.ln(), 0.0).prob, 0.75, epsilon = 1e-15);
    let mut rng = rng::seeded(3);
    for _ in 0..50 {
        let (a, b) = (
            rng::uniform(&mut rng, -5.0, 5.0),
            rng::uniform(&mut rng, -5.0, 5.0),
        );
        assert_abs_diff_eq!(
            rank_gumbel_prob(a, b).prob + rank_gumbel_prob(b, a).prob,
            1.0,
            epsilon = 1e-15
        );
    }
}

#[test]
fn rank_cauchy_examples() {
    assert_eq!(rank_cauchy_prob(0.3, 0.3, 1.0, 2.0).unwrap().prob, 0.5);
    assert_abs_diff_eq!(
        rank_cauchy_prob(3.0, 0.0, 1.0, 2.0).unwrap().prob,
        0.75,
        epsilon = 1e-15
    );
    let mut rng = rng::seeded(4);
    for _ in 0..50 {
        let a = rng::uniform(&mut rng, -5.0, 5.0);
        let b = rng::uniform(&mut rng, -5.0, 5.0);
        let (s1, s2) = (
            rng::uniform(&mut rng, 0.1, 2.0),
            rng::uniform(&mut rng, 0.1, 2.0),
        );
        let total = rank_cauchy_prob(a, b, s1, s2).unwrap().prob
            + rank_cauchy_prob(b, a, s2, s1).unwrap().prob;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }
    assert!(rank_cauchy_prob(0.0, 0.0, -1.0, 1.0).is_err());
}

#[test]
fn rank_exponential_examples() {
    assert_eq!(rank_exponential_prob(2.0, 2.0).unwrap().prob, 0.5);
    assert_eq!(rank_exponential_prob(1.0, 3.0).unwrap().prob, 0.75);
    let mut rng = rng::seeded(6);
    for _ in 0..100 {
        let (s1, s2) = (
            rng::uniform(&mut rng, -4.0, 4.0),
            rng::uniform(&mut rng, -4.0, 4.0),
        );
        let e = rank_exponential_prob((-s1).exp(), (-s2).exp())
            .unwrap()
            .prob;
        assert_abs_diff_eq!(e, rank_gumbel_prob(s1, s2).prob, epsilon = 1e-12);
    }
    assert!(rank_exponential_prob(0.0, 1.0).is_err());
}

#[test]
fn listwise_examples() {
    let (s1, s2) = (0.4, -1.3);
    let pair = listwise_gumbel_nll(&[s1, s2]).unwrap();
    assert_abs_diff_eq!(pair.nll, -logistic(s1 - s2).ln(), epsilon = 1e-15);
    let equal = listwise_gumbel_nll(&[0.2; 3]).unwrap();
    assert_abs_diff_eq!(equal.nll, 6f64.ln(), epsilon = 1e-14);
    assert!(listwise_gumbel_nll(&[1.0]).is_err());
}

#[test]
fn listwise_matches_plackett_luce_brute_force() {
    let mut rng = rng::seeded(12);
    for _ in 0..20 {
        let scores: Vec<f64> = (0..4).map(|_| rng::uniform(&mut rng, -2.0, 2.0)).collect();
        assert_abs_diff_eq!(oracle::plackett_luce_total(&scores), 1.0, epsilon = 1e-10);
        let identity = [0, 1, 2, 3];
        let p = oracle::plackett_luce_prob(&scores, &identity);
        let nll = listwise_gumbel_nll(&scores).unwrap().nll;
        assert_abs_diff_eq!((-nll).exp(), p, epsilon = 1e-10);
    }
}

#[test]
fn aggregate_nll_examples() {
    let loss =
        AggregateLoss::new(AggregationKind::similarity(), TargetFamily::Categorical).unwrap();
    let thetas = [
        TargetParams::ClassProbs(vec![1.0, 0.0]),
        TargetParams::ClassProbs(vec![0.0, 1.0]),
    ];
    let r = aggregate_nll(&loss, &example(Observation::Binary(false), 2), &thetas).unwrap();
    assert!(r.nll.abs() < 1e-11);

    let loss = AggregateLoss::new(
        AggregationKind::mean(4).unwrap(),
        TargetFamily::Gaussian { sigma: 1.0 },
    )
    .unwrap();
    let thetas: Vec<TargetParams> = [1.0, 2.0, 3.0, 6.0]
        .iter()
        .map(|&mu| TargetParams::GaussLoc { mu, sigma: 1.0 })
        .collect();
    let r = aggregate_nll(&loss, &example(Observation::Real(5.0), 4), &thetas).unwrap();
    assert_eq!(r, mean_gauss_nll(5.0, &[1.0, 2.0, 3.0, 6.0], 1.0).unwrap());
}

#[test]
fn aggregate_nll_rejects_mismatches() {
    let loss = AggregateLoss::new(AggregationKind::rank_pair(), TargetFamily::Gumbel).unwrap();
    let thetas = [
        TargetParams::GumbelScore(0.0),
        TargetParams::GumbelScore(1.0),
    ];
    assert!(aggregate_nll(&loss, &example(Observation::Real(1.0), 2), &thetas).is_err());
    assert!(aggregate_nll(&loss, &example(Observation::Binary(true), 2), &thetas[..1]).is_err());
    let wrong = [TargetParams::ExpRate(1.0), TargetParams::ExpRate(1.0)];
    assert!(aggregate_nll(&loss, &example(Observation::Binary(true), 2), &wrong).is_err());
    assert!(AggregateLoss::new(AggregationKind::sum(3).unwrap(), TargetFamily::Gumbel).is_err());
    assert!(AggregateLoss::new(AggregationKind::similarity(), TargetFamily::Poisson).is_err());
    let poisson =
        AggregateLoss::new(AggregationKind::sum(1).unwrap(), TargetFamily::Poisson).unwrap();
    assert!(aggregate_nll(
        &poisson,
        &example(Observation::Real(1.5), 1),
        &[TargetParams::PoissonRate(1.0)]
    )
    .is_err());
}

#[test]
fn every_loss_gradient_matches_finite_differences() {
    let mut rng = rng::seeded(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        for (loss, ex, thetas) in random_instances(&mut rng) {
            let analytic = aggregate_nll(&loss, &ex, &thetas).unwrap();
            let flat = flatten(&thetas);
            let fd = finite_diff_grad(
                |w| {
                    aggregate_nll(&loss, &ex, &unflatten(&thetas, w))
                        .unwrap()
                        .nll
                },
                &flat,
                None,
            )
            .unwrap();
            let a: Vec<f64> = analytic.grad_theta.concat();
            let err = relative_error(&a, &fd);
            assert!(err <= 1e-5, "{:?}: rel err {err}", loss.kind().tag());
            worst = worst.max(err);
        }
    }
    assert!(worst.is_finite());
}

#[test]
fn probabilities_stay_in_unit_interval() {
    let mut rng = rng::seeded(99);
    for _ in 0..100 {
        for (loss, ex, thetas) in random_instances(&mut rng) {
            let r = aggregate_nll(&loss, &ex, &thetas).unwrap();
            assert!(r.nll.is_finite());
            if !matches!(
                loss.kind().tag(),
                AggregationTag::Mean | AggregationTag::Sum
            ) {
                assert!(r.nll >= 0.0);
            }
            assert!(r.grad_theta.iter().flatten().all(|g| g.is_finite()));
        }
    }
}
