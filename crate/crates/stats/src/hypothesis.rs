//! Hypothesis tests used across the behavioral and probing analyses.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{Result, StatsError};

/// Largest sample for which the Wilcoxon null distribution is enumerated
/// exactly; larger samples use the normal approximation.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WelchT,
    WilcoxonExact,
    WilcoxonNormal,
    Permutation,
    PearsonSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom where the reference distribution has them.
    pub df: Option<f64>,
    /// Effective sample size (after dropping zeros, for Wilcoxon).
    pub n: usize,
    pub method: TestMethod,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}

fn student_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::InvalidInput(format!(
            "Welch t-test needs at least 2 values per sample (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::UndefinedTest(
            "both samples have zero variance".into(),
        ));
    }
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2)
        / (sa.powi(2) / (a.len() - 1) as f64 + sb.powi(2) / (b.len() - 1) as f64);
    Ok(TestResult {
        statistic: t,
        p_value: student_two_sided(t, df),
        df: Some(df),
        n: a.len() + b.len(),
        method: TestMethod::WelchT,
    })
}

/// Signed ranks of the nonzero differences: `(rank of |d|, d > 0)`.
/// Tied magnitudes share the mean of the ranks they span.
fn signed_ranks(differences: &[f64]) -> Vec<(f64, bool)> {
    let mut nz: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    nz.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for d in &nz[i..=j] {
            out.push((rank, *d > 0.0));
        }
        i = j + 1;
    }
    out
}

fn rank_sums(ranks: &[(f64, bool)]) -> (f64, f64) {
    ranks.iter().fold((0.0, 0.0), |(p, m), &(r, pos)| {
        if pos {
            (p + r, m)
        } else {
            (p, m + r)
        }
    })
}

fn nonzero_ranks(differences: &[f64]) -> Result<Vec<(f64, bool)>> {
    if differences.iter().any(|d| d.is_nan()) {
        return Err(StatsError::InvalidInput("NaN difference".into()));
    }
    let ranks = signed_ranks(differences);
    if ranks.is_empty() {
        return Err(StatsError::UndefinedTest("all differences are zero".into()));
    }
    Ok(ranks)
}

/// Exact two-sided Wilcoxon signed-rank test.
///
/// The null distribution of the positive rank sum is built by counting all
/// `2^n` sign assignments; ranks are doubled so tied (half-integer) ranks
/// stay integral.
pub fn wilcoxon_exact(differences: &[f64]) -> Result<TestResult> {
    let ranks = nonzero_ranks(differences)?;
    let n = ranks.len();
    if n > 62 {
        return Err(StatsError::InvalidInput(format!(
            "exact enumeration over 2^{n} sign patterns is not supported"
        )));
    }
    let (t_plus, t_minus) = rank_sums(&ranks);
    let w = t_plus.min(t_minus);

    let doubled: Vec<usize> = ranks.iter().map(|(r, _)| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let w2 = (2.0 * w).round() as usize;
    let below: f64 = counts[..=w2].iter().sum();
    let p = (2.0 * below / 2f64.powi(n as i32)).min(1.0);
    Ok(TestResult {
        statistic: w,
        p_value: p,
        df: None,
        n,
        method: TestMethod::WilcoxonExact,
    })
}

/// Normal approximation to the two-sided Wilcoxon signed-rank test, with
/// tie-corrected variance and a 0.5 continuity correction.
pub fn wilcoxon_normal(differences: &[f64]) -> Result<TestResult> {
    let ranks = nonzero_ranks(differences)?;
    let n = ranks.len() as f64;
    let (t_plus, t_minus) = rank_sums(&ranks);
    let w = t_plus.min(t_minus);

    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let mut j = i;
        while j + 1 < ranks.len() && ranks[j + 1].0 == ranks[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = (w - mean + 0.5) / var.sqrt();
        (2.0 * Normal::standard().cdf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: w,
        p_value: p,
        df: None,
        n: ranks.len(),
        method: TestMethod::WilcoxonNormal,
    })
}

/// Two-sided Wilcoxon signed-rank test of paired differences against zero.
///
/// Zero differences are dropped; `W` is the smaller of the two signed-rank
/// sums. Exact for up to [`WILCOXON_EXACT_MAX_N`] nonzero differences.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<TestResult> {
    let n = differences.iter().filter(|d| **d != 0.0).count();
    if n <= WILCOXON_EXACT_MAX_N {
        wilcoxon_exact(differences)
    } else {
        wilcoxon_normal(differences)
    }
}

/// `p = (1 + #{null >= observed}) / (1 + K)`.
pub fn permutation_test_r2(observed: f64, null: &[f64]) -> Result<TestResult> {
    if null.is_empty() {
        return Err(StatsError::InvalidInput("no null statistics".into()));
    }
    let at_least = null.iter().filter(|&&v| v >= observed).count();
    Ok(TestResult {
        statistic: observed,
        p_value: (1 + at_least) as f64 / (1 + null.len()) as f64,
        df: None,
        n: null.len(),
        method: TestMethod::Permutation,
    })
}

/// Bonferroni-adjusted p-value, `min(1, p·m)`.
pub fn bonferroni(p: f64, m: u64) -> f64 {
    debug_assert!(m >= 1, "comparison count must be positive");
    (p * m.max(1) as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub test: TestResult,
}

/// Simple linear regression of `y` on `x` with the slope t-test
/// (equivalently, the Pearson correlation test on `n - 2` df).
pub fn pearson_slope_test(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(StatsError::ShapeMismatch(format!(
            "{} predictors for {} responses",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::InvalidInput(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::UndefinedTest("predictor has zero variance".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::UndefinedTest("response has zero variance".into()));
    }
    let slope = sxy / sxx;
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let one_minus = 1.0 - r * r;
    let t = if one_minus <= 0.0 {
        f64::INFINITY.copysign(r)
    } else {
        r * (df / one_minus).sqrt()
    };
    let p_value = if t.is_infinite() { 0.0 } else { student_two_sided(t, df) };
    Ok(PearsonResult {
        slope,
        intercept: my - slope * mx,
        r,
        test: TestResult {
            statistic: t,
            p_value,
            df: Some(df),
            n,
            method: TestMethod::PearsonSlope,
        },
    })
}
