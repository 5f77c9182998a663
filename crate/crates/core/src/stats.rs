//! Goodness-of-fit tests used to compare simulated samples with closed forms.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Bins with a smaller expected count are merged into their neighbour.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Counts of `samples` in `[edges[i], edges[i+1])`; values outside are dropped.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len().saturating_sub(1)];
    for &v in samples {
        let idx = edges.partition_point(|&e| e <= v);
        if idx > 0 && idx < edges.len() {
            counts[idx - 1] += 1;
        }
    }
    counts
}

/// Pearson χ² of observed counts against expected probabilities.
///
/// `probs` need not sum to one: the remainder is treated as one extra bin whose
/// observed count is `n_total − Σ observed`.
pub fn chi_square(observed: &[u64], probs: &[f64], n_total: u64) -> Result<TestResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(Error::Domain("observed and expected bins differ".into()));
    }
    let n = n_total as f64;
    let mut cells: Vec<(f64, f64)> = observed.iter().zip(probs).map(|(&o, &p)| (o as f64, p * n)).collect();
    let rest_obs = n - cells.iter().map(|c| c.0).sum::<f64>();
    let rest_exp = n - cells.iter().map(|c| c.1).sum::<f64>();
    if rest_exp > 1e-9 * n || rest_obs > 0.0 {
        cells.push((rest_obs, rest_exp.max(0.0)));
    }

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for cell in cells {
        acc = (acc.0 + cell.0, acc.1 + cell.1);
        if acc.1 >= MIN_EXPECTED {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match merged.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => merged.push(acc),
        }
    }
    if merged.len() < 2 {
        return Err(Error::Domain("too few bins for a chi-square test".into()));
    }

    let statistic: f64 = merged.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = merged.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(TestResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// χ² test of `samples` against a CDF using the bins delimited by `edges`.
pub fn chi_square_cdf(samples: &[f64], edges: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    let counts = histogram(samples, edges);
    let probs: Vec<f64> = edges.windows(2).map(|w| cdf(w[1]) - cdf(w[0])).collect();
    chi_square(&counts, &probs, samples.len() as u64)
}

/// `k+1` edges splitting `[lo, hi]` into bins of equal probability under `cdf`.
///
/// `cdf` must be continuous and nondecreasing on `[lo, hi]`; inner edges are
/// located by bisection.
pub fn quantile_edges(cdf: impl Fn(f64) -> f64, lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let (flo, fhi) = (cdf(lo), cdf(hi));
    let mut edges = Vec::with_capacity(k + 1);
    edges.push(lo);
    for i in 1..k {
        let target = flo + (fhi - flo) * i as f64 / k as f64;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if cdf(m) < target {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-14 * (1.0 + m.abs()) {
                break;
            }
        }
        edges.push(0.5 * (a + b));
    }
    edges.push(hi);
    edges
}

/// Kolmogorov distribution tail `P{K > t}`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.18 {
        // Small-t form converges faster here.
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * t * t)).exp();
        let s: f64 = (0..50).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / t * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut total = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * t * t).exp();
        total += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * total).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against `cdf`.
///
/// The p-value uses the asymptotic law with the Stephens correction
/// `(√n + 0.12 + 0.11/√n)·D`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(Error::Domain("KS test needs at least one sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sq = n.sqrt();
    Ok(TestResult {
        statistic: d,
        dof: sorted.len(),
        p_value: kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d),
    })
}

/// KS test against the exponential law with the given rate.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<TestResult> {
    ks_test(samples, |v| if v <= 0.0 { 0.0 } else { -(-rate * v).exp_m1() })
}
