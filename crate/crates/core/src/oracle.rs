//! Brute-force and numerical references for the closed-form likelihoods.
//!
//! Nothing here calls into `likelihood` or the special functions in `dists`;
//! the cross-checks are only meaningful while the two routes stay apart.

use itertools::Itertools;

use crate::error::{ensure_positive, Error, Result};

/// Largest outcome space `enumerate_class_likelihood` will walk.
pub const ENUMERATION_BUDGET: usize = 1_000_000;
/// Largest matrix `exhaustive_assignment` will search.
pub const MAX_EXHAUSTIVE_CLASSES: usize = 8;
/// Half-width, in standard deviations, of the quadrature box.
pub const QUAD_HALF_WIDTH: f64 = 8.0;

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            acc += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += acc * half;
    }
    total
}

/// `sum over z in C^K of prod_i p_i(z_i) [T(z) = y]`.
pub fn enumerate_class_likelihood<Y, T>(ps: &[Vec<f64>], aggregate: T, y: &Y) -> Result<f64>
where
    Y: PartialEq,
    T: Fn(&[usize]) -> Y,
{
    let classes = ps
        .first()
        .map(Vec::len)
        .ok_or(Error::Empty("enumeration"))?;
    let outcomes = (0..ps.len()).try_fold(1usize, |acc, _| acc.checked_mul(classes));
    match outcomes {
        Some(n) if n <= ENUMERATION_BUDGET => {}
        _ => {
            return Err(Error::Budget(format!(
                "{classes}^{} outcomes exceed {ENUMERATION_BUDGET}",
                ps.len()
            )))
        }
    }
    let mut total = 0.0;
    for z in (0..ps.len()).map(|_| 0..classes).multi_cartesian_product() {
        if aggregate(&z) == *y {
            total += z.iter().zip(ps).map(|(&zi, p)| p[zi]).product::<f64>();
        }
    }
    Ok(total)
}

fn normal_density(z: f64, mu: f64, sigma: f64) -> f64 {
    let u = (z - mu) / sigma;
    (-0.5 * u * u).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `p(Z1 > Z2)` for independent normals by 2-D quadrature of the joint
/// density over the half-plane, truncated to an 8-sigma box.
pub fn quad_rank_gauss(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<f64> {
    ensure_positive("sigma1", sigma1)?;
    ensure_positive("sigma2", sigma2)?;
    let (lo1, hi1) = (
        mu1 - QUAD_HALF_WIDTH * sigma1,
        mu1 + QUAD_HALF_WIDTH * sigma1,
    );
    let (lo2, hi2) = (
        mu2 - QUAD_HALF_WIDTH * sigma2,
        mu2 + QUAD_HALF_WIDTH * sigma2,
    );
    let inner = |z1: f64| {
        let top = z1.min(hi2);
        if top <= lo2 {
            0.0
        } else {
            integrate(|z2| normal_density(z2, mu2, sigma2), lo2, top, 64)
        }
    };
    Ok(integrate(
        |z1| normal_density(z1, mu1, sigma1) * inner(z1),
        lo1,
        hi1,
        64,
    ))
}

/// Central-difference gradient. The default step is `1e-5 * max(1, |w_i|)`.
pub fn finite_diff_grad<F: Fn(&[f64]) -> f64>(
    f: F,
    point: &[f64],
    epsilon: Option<f64>,
) -> Result<Vec<f64>> {
    let mut w = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let h = epsilon.unwrap_or(1e-5) * point[i].abs().max(1.0);
        w[i] = point[i] + h;
        let up = f(&w);
        w[i] = point[i] - h;
        let down = f(&w);
        w[i] = point[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::NonFinite("finite difference evaluation"));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// `max|a - b| / max(max|a|, max|b|)`, zero when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Minimum-cost assignment by trying all `C!` permutations.
pub fn exhaustive_assignment(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    if n > MAX_EXHAUSTIVE_CLASSES {
        return Err(Error::Budget(format!(
            "{n}! permutations exceed the {MAX_EXHAUSTIVE_CLASSES}-class limit"
        )));
    }
    if let Some(row) = cost.iter().find(|r| r.len() != n) {
        return Err(Error::Dimension {
            context: "assignment cost row",
            expected: n,
            got: row.len(),
        });
    }
    let mut best = ((0..n).collect::<Vec<_>>(), f64::INFINITY);
    for perm in (0..n).permutations(n) {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        if total < best.1 {
            best = (perm, total);
        }
    }
    if n == 0 {
        best.1 = 0.0;
    }
    Ok(best)
}

/// `P(sum_i Z_i = y)` for independent `Z_i ~ Poisson(lambda_i)` by discrete
/// convolution of the individual pmfs (computed by the ratio recurrence).
pub fn poisson_convolution_pmf(lambdas: &[f64], y: u64) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::Empty("poisson convolution"));
    }
    let len = y as usize + 1;
    let pmf = |lambda: f64| {
        let mut p = vec![0.0; len];
        p[0] = (-lambda).exp();
        for k in 1..len {
            p[k] = p[k - 1] * lambda / k as f64;
        }
        p
    };
    let mut acc = vec![0.0; len];
    acc[0] = 1.0;
    for &lambda in lambdas {
        ensure_positive("lambda", lambda)?;
        let p = pmf(lambda);
        let mut next = vec![0.0; len];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &b) in p[..len - i].iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    Ok(acc[y as usize])
}

/// Plackett-Luce probability of `order` (largest first) as a direct product
/// of top-choice ratios `e^{s_i} / sum_{j remaining} e^{s_j}`.
pub fn plackett_luce_prob(scores: &[f64], order: &[usize]) -> f64 {
    let weights: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
    let mut remaining: f64 = weights.iter().sum();
    let mut prob = 1.0;
    for &i in order {
        prob *= weights[i] / remaining;
        remaining -= weights[i];
    }
    prob
}

/// Sum of [`plackett_luce_prob`] over every ordering.
pub fn plackett_luce_total(scores: &[f64]) -> f64 {
    (0..scores.len())
        .permutations(scores.len())
        .map(|order| plackett_luce_prob(scores, &order))
        .sum()
}

/// Ordinary least squares `argmin_b ||X b - y||^2` via the normal equations
/// and Gaussian elimination with partial pivoting.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(Error::Empty("design matrix"));
    }
    if rows.len() != y.len() {
        return Err(Error::Dimension {
            context: "least squares targets",
            expected: rows.len(),
            got: y.len(),
        });
    }
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &t) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * t;
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::NonFinite("singular normal equations"));
        }
        a.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let factor = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (x, y) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * y;
                }
            }
        }
    }
    Ok((0..p).map(|i| a[i][p] / a[i][i]).collect())
}
