//! Hypothesis tests and summaries used by the experiments.
//!
//! All p-values are two-sided; the direction of an effect is reported
//! separately in [`TestResult::direction`].

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use special::{normal_sf, student_t_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
    None,
}

impl Direction {
    pub fn of(x: f64) -> Self {
        if x > 0.0 {
            Direction::Positive
        } else if x < 0.0 {
            Direction::Negative
        } else {
            Direction::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
    /// Mean (t-tests) or median (rank test) difference.
    pub effect: f64,
    pub direction: Direction,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Paired t-test on the per-pair differences.
pub fn paired_t_test(differences: &[f64]) -> Result<TestResult> {
    let mut r = one_sample_t_test(differences, 0.0)?;
    r.test = "paired t-test".into();
    Ok(r)
}

/// One-sample t-test of `values` against `mu0`.
pub fn one_sample_t_test(values: &[f64], mu0: f64) -> Result<TestResult> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("t-test needs n >= 2, got {n}")));
    }
    let shifted: Vec<f64> = values.iter().map(|v| v - mu0).collect();
    let m = mean(&shifted);
    let sd = sample_sd(&shifted);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("zero variance in t-test sample".into()));
    }
    let t = m / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    Ok(TestResult {
        test: "one-sample t-test".into(),
        statistic: t,
        p_value: student_t_two_sided(t, df),
        n,
        n2: None,
        df: Some(df),
        effect: m,
        direction: Direction::of(m),
        notes: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwuMethod {
    /// Exact when n1*n2 <= 400 or the smaller sample has fewer than 8
    /// values; normal approximation otherwise.
    Auto,
    Exact,
    Normal,
}

/// Mann-Whitney U test of `x` against `y`; the statistic is U for `x`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<TestResult> {
    mann_whitney_u_with(x, y, MwuMethod::Auto)
}

pub fn mann_whitney_u_with(x: &[f64], y: &[f64], method: MwuMethod) -> Result<TestResult> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InsufficientData("Mann-Whitney U needs two non-empty samples".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::invalid("Mann-Whitney U input contains NaN"));
    }
    let n = n1 + n2;
    // Doubled midranks keep every rank an integer.
    let mut idx: Vec<usize> = (0..n).collect();
    let value = |i: usize| if i < n1 { x[i] } else { y[i - n1] };
    idx.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
    let mut rank2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && value(idx[j]) == value(idx[i]) {
            j += 1;
        }
        // positions i+1..=j share rank (i+1+j)/2
        let r2 = (i + 1 + j) as u64;
        for &k in &idx[i..j] {
            rank2[k] = r2;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let r1_2: u64 = rank2[..n1].iter().sum();
    let u = r1_2 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;
    let mu = (n1 * n2) as f64 / 2.0;

    let use_exact = match method {
        MwuMethod::Exact => true,
        MwuMethod::Normal => false,
        MwuMethod::Auto => n1 * n2 <= 400 || (n1.min(n2) < 8 && n <= 1000),
    };
    let (p_value, note) = if use_exact {
        (exact_mwu_p(&rank2, n1, r1_2), "exact permutation distribution")
    } else {
        let nf = n as f64;
        let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            (1.0, "normal approximation; all values tied")
        } else {
            let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
            ((2.0 * normal_sf(z)).min(1.0), "normal approximation with tie and continuity correction")
        }
    };
    let effect = median(x) - median(y);
    Ok(TestResult {
        test: "Mann-Whitney U".into(),
        statistic: u,
        p_value,
        n: n1,
        n2: Some(n2),
        df: None,
        effect,
        direction: Direction::of(effect),
        notes: vec![note.into()],
    })
}

/// Two-sided exact p-value: share of all n1-subsets whose doubled rank sum
/// is at least as far from its mean as the observed one.
fn exact_mwu_p(rank2: &[u64], n1: usize, observed: u64) -> f64 {
    let n = rank2.len();
    let max_sum: usize = rank2.iter().map(|&r| r as usize).sum();
    // dist[c][s]: number of c-subsets with doubled rank sum s
    let mut dist = vec![vec![0.0f64; max_sum + 1]; n1 + 1];
    dist[0][0] = 1.0;
    let mut reach = 0usize;
    for &r in rank2 {
        let r = r as usize;
        reach += r;
        for c in (1..=n1).rev() {
            let (lo, hi) = dist.split_at_mut(c);
            let prev = &lo[c - 1];
            let cur = &mut hi[0];
            for s in (r..=reach.min(max_sum)).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let center2 = (n1 * (n + 1)) as i64; // mean doubled rank sum
    let obs_dev = (observed as i64 - center2).abs();
    let total: f64 = dist[n1].iter().sum();
    let extreme: f64 = dist[n1]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - center2).abs() >= obs_dev)
        .map(|(_, c)| c)
        .sum();
    (extreme / total).min(1.0)
}

/// Pearson product-moment correlation and its two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::invalid(format!("pearson: lengths {} and {} differ", n, y.len())));
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!("pearson needs n >= 3, got {n}")));
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("pearson: constant input".into()));
    }
    let rho = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    // Perfectly collinear up to rounding.
    let p = if 1.0 - rho * rho <= 4.0 * f64::EPSILON {
        0.0
    } else {
        student_t_two_sided(rho * (df / (1.0 - rho * rho)).sqrt(), df)
    };
    Ok((rho, p))
}

/// Standardize with the sample standard deviation. A constant input yields
/// all zeros and a logged warning.
pub fn zscores(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "z-scores need n >= 2, got {}",
            values.len()
        )));
    }
    let m = mean(values);
    let sd = sample_sd(values);
    if !(sd > 0.0) {
        log::warn!("z-scores of a constant vector; returning zeros");
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_t_zero_mean() {
        let r = paired_t_test(&[-1.0, -2.5, 1.0, 2.5]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.direction, Direction::None);
    }

    #[test]
    fn paired_t_small_sample() {
        // Oracle: numeric integration of the t(2) density beyond t.
        let r = paired_t_test(&[1.0, 2.0, 3.0]).unwrap();
        assert!((r.statistic - 3.4641016151377544).abs() < 1e-12);
        assert_eq!(r.df, Some(2.0));
        assert!((r.p_value - 0.07417990022744853).abs() < 5e-4);
        assert!((r.p_value - 0.07417990022744853).abs() < 1e-12);
    }

    #[test]
    fn paired_t_errors() {
        assert!(matches!(paired_t_test(&[5.0, 5.0, 5.0]), Err(Error::Degenerate(_))));
        assert!(matches!(paired_t_test(&[1.0]), Err(Error::InsufficientData(_))));
        assert!(one_sample_t_test(&[3.0], 0.0).is_err());
    }

    #[test]
    fn one_sample_matches_paired() {
        let a = one_sample_t_test(&[1.0, 2.0, 3.0], 0.0).unwrap();
        let b = paired_t_test(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(a.p_value, b.p_value);
        let sym = one_sample_t_test(&[4.0, 6.0, 3.0, 7.0], 5.0).unwrap();
        assert_eq!(sym.p_value, 1.0);
    }

    #[test]
    fn mwu_exact_separated_samples() {
        // Enumerating all 20 splits: only U = 0 and U = 9 are as extreme.
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        assert_eq!(r.direction, Direction::Negative);
    }

    #[test]
    fn mwu_identical_samples() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0, 3.0, 9.0, 6.0, 10.0];
        for m in [MwuMethod::Auto, MwuMethod::Normal, MwuMethod::Exact] {
            let r = mann_whitney_u_with(&x, &x, m).unwrap();
            assert!(r.p_value >= 0.99, "{m:?}: {}", r.p_value);
        }
    }

    #[test]
    fn mwu_all_tied() {
        let x = [2.0; 9];
        let y = [2.0; 11];
        for m in [MwuMethod::Normal, MwuMethod::Exact] {
            assert_eq!(mann_whitney_u_with(&x, &y, m).unwrap().p_value, 1.0);
        }
        assert!(mann_whitney_u(&[], &y).is_err());
    }

    #[test]
    fn pearson_lines() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let (r, p) = pearson(&x, &y).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert_eq!(p, 0.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().0 + 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[1.0; 5]).is_err());
    }

    #[test]
    fn pearson_fixture_matches_direct_formula() {
        let x = [1.2, 2.3, 2.9, 4.1, 5.0, 6.2, 6.8, 8.1, 9.0, 10.3];
        let y = [2.1, 1.9, 3.5, 3.9, 5.5, 5.2, 7.9, 7.7, 9.8, 9.1];
        // Oracle: raw-moment form n*Sxy - Sx*Sy over sqrt of the variances.
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        let want = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        let (r, p) = pearson(&x, &y).unwrap();
        assert!((r - want).abs() < 1e-12);
        assert!((r - 0.9626946970808127).abs() < 1e-12);
        assert!((p - 8.09999051972695e-06).abs() / 8.1e-6 < 1e-8);
    }

    #[test]
    fn zscore_examples() {
        let z = zscores(&[0.0, 10.0]).unwrap();
        assert!((z[0] + 0.7071067811865475).abs() < 1e-12);
        assert!((z[1] - 0.7071067811865475).abs() < 1e-12);
        assert_eq!(zscores(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0; 3]);
        let std = zscores(&[3.0, 1.0, 4.0, 1.0, 5.0]).unwrap();
        let again = zscores(&std).unwrap();
        for (a, b) in std.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(zscores(&[1.0]).is_err());
    }
}
