//! Time to solution, bootstrap intervals and the small statistical toolkit
//! used by the benchmark and acceptance checks.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::rng::{Stream, DOMAIN_BOOTSTRAP};

/// Sample rate of the reference FPGA sampler, in samples per second.
pub const DEFAULT_SAMPLE_RATE: f64 = 7.0e7;

/// Runs needed to reach the ground state with 99% confidence, times the
/// duration of one run. Returns `f64::INFINITY` when `p_gnd` is zero. For
/// `p_gnd >= 0.99` one run suffices and the ratio is clamped to 1.
pub fn time_to_solution(n_samples: u64, p_gnd: f64, sample_rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_gnd) {
        return Err(invalid("p_gnd", format!("{p_gnd} not in [0, 1]")));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid("sample_rate", format!("{sample_rate} must be positive")));
    }
    let run = n_samples as f64 / sample_rate;
    if p_gnd == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ratio = if p_gnd >= 0.99 {
        1.0
    } else {
        libm::log(0.01) / libm::log1p(-p_gnd)
    };
    Ok(run * ratio)
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

/// Percentile bootstrap interval for the mean of 0/1 outcomes.
///
/// The interval is widened if needed so that it contains the sample mean.
pub fn bootstrap_ci(outcomes: &[bool], level: f64, resamples: u32, seed: u64) -> Result<(f64, f64)> {
    if outcomes.is_empty() {
        return Err(Error::Empty);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid("level", format!("{level} not in (0, 1)")));
    }
    if resamples == 0 {
        return Err(invalid("resamples", "must be at least 1"));
    }
    let n = outcomes.len();
    let p_hat = outcomes.iter().filter(|&&x| x).count() as f64 / n as f64;
    let stream = Stream::new(seed);
    let mut means = Vec::with_capacity(resamples as usize);
    for r in 0..resamples {
        let mut hits = 0usize;
        let mut block = [0u32; 4];
        for k in 0..n {
            if k % 4 == 0 {
                block = stream.block(DOMAIN_BOOTSTRAP, u64::from(r), (k / 4) as u32);
            }
            let idx = ((u64::from(block[k % 4]) * n as u64) >> 32) as usize;
            hits += usize::from(outcomes[idx]);
        }
        means.push(hits as f64 / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let low = quantile_sorted(&means, alpha).min(p_hat);
    let high = quantile_sorted(&means, 1.0 - alpha).max(p_hat);
    Ok((low, high))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            what: "fit ys",
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(invalid("points", "need at least 2 points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("xs", "all abscissae equal"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / libm::sqrt(vx * vy))
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ln_choose = |i: u64| {
        libm::lgamma(n as f64 + 1.0) - libm::lgamma(i as f64 + 1.0) - libm::lgamma((n - i) as f64 + 1.0)
    };
    let (lp, lq) = (libm::log(p), libm::log1p(-p));
    let terms: Vec<f64> = (k..=n).map(|i| ln_choose(i) + i as f64 * lp + (n - i) as f64 * lq).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| libm::exp(t - max)).sum();
    libm::exp(max + libm::log(sum)).min(1.0)
}

/// Exact one-sided McNemar test on paired 0/1 outcomes. Returns the p-value
/// for the alternative "`a` succeeds more often than `b`".
pub fn mcnemar_one_sided(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "paired outcomes",
            expected: a.len(),
            found: b.len(),
        });
    }
    let only_a = a.iter().zip(b).filter(|(&x, &y)| x && !y).count() as u64;
    let only_b = a.iter().zip(b).filter(|(&x, &y)| !x && y).count() as u64;
    Ok(binomial_upper_tail(only_a, only_a + only_b, 0.5))
}
