//! Monte Carlo statistics with a fixed reduction order.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

/// Sum by a balanced binary tree whose shape depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and 95% normal confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let m = mean(xs);
        let ci = if n < 2 {
            0.0
        } else {
            let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
            Z95 * (pairwise_sum(&dev) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        Self { mean: m, ci, n }
    }
}

/// Column-wise [`Estimate`]s of equally long sample rows.
pub fn column_estimates(rows: &[Vec<f64>]) -> Vec<Estimate> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width).map(|j| Estimate::from_samples(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())).collect()
}

/// Ranks 1..=n, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let order: Vec<usize> = (0..xs.len()).sorted_by(|&a, &b| xs[a].total_cmp(&xs[b])).collect();
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman rank correlation; 0 when either sample is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Exact one-sided p-value P(ρ ≤ ρ_obs) under exchangeability, by enumerating all
/// permutations of y (n ≤ 9).
pub fn spearman_p_negative(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = y.len();
    if n != x.len() || !(2..=9).contains(&n) {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let observed = pearson(&rx, &ry);
    let mut hits = 0usize;
    let mut total = 0usize;
    for perm in ry.iter().copied().permutations(n) {
        total += 1;
        if pearson(&rx, &perm) <= observed + 1e-12 {
            hits += 1;
        }
    }
    Some(hits as f64 / total as f64)
}

/// Least-squares slope of y on x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
