//! Shared scalar statistics: moments, nearest-rank percentiles, and the
//! Student-t tail probability used by the regression and topic-shift tests.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the n−1 denominator. Zero for n < 2.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Nearest-rank percentile on a pre-sorted sample: the value at rank
/// ceil(p/100 · n), 1-based, clamped into the sample.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("percentile of empty sample"));
    }
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    let rank = rank.clamp(1, n);
    Ok(sorted[rank - 1])
}

// Lanczos approximation, g = 7, n = 9. Accurate to ~1e-13 for x > 0.
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta function I_x(a, b), evaluated by the
/// continued-fraction expansion (modified Lentz) to better than 1e-10.
pub fn reg_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // Use the symmetry transform for faster convergence.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd step
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value for a Student-t statistic with `df` degrees of freedom:
/// p = I_{df/(df+t²)}(df/2, 1/2).
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    reg_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Outcome of a one-sample or paired t-test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Set when the sample has zero variance around a nonzero mean, where the
    /// t statistic is unbounded and p is reported as 0 by convention.
    pub degenerate: bool,
}

/// One-sample t-test of `xs` against `mu0`. Zero-variance samples return
/// p = 1 when the mean equals `mu0` and p = 0 (flagged degenerate) otherwise.
pub fn one_sample_t(xs: &[f64], mu0: f64) -> Result<TTest> {
    if xs.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 1,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let sd = sample_sd(xs);
    let df = n - 1.0;
    if sd == 0.0 {
        return Ok(if m == mu0 {
            TTest {
                t: 0.0,
                df,
                p: 1.0,
                degenerate: false,
            }
        } else {
            TTest {
                t: if m > mu0 { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p: 0.0,
                degenerate: true,
            }
        });
    }
    let t = (m - mu0) / (sd / n.sqrt());
    Ok(TTest {
        t,
        df,
        p: student_t_two_sided_p(t, df),
        degenerate: false,
    })
}

/// Paired t-test of `after` against `before`: a one-sample test of the
/// elementwise differences against zero.
pub fn paired_t(before: &[f64], after: &[f64]) -> Result<TTest> {
    if before.len() != after.len() {
        return Err(Error::LengthMismatch {
            left: before.len(),
            right: after.len(),
        });
    }
    let diffs: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    one_sample_t(&diffs, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0) - 0.0).abs() < TOL);
        assert!((ln_gamma(2.0) - 0.0).abs() < TOL);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < TOL);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < TOL);
    }

    #[test]
    fn incomplete_beta_bounds_and_symmetry() {
        assert_eq!(reg_incomplete_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(reg_incomplete_beta(2.0, 3.0, 1.0), 1.0);
        // I_x(a,b) = 1 - I_{1-x}(b,a)
        let x = 0.37;
        let lhs = reg_incomplete_beta(2.5, 4.0, x);
        let rhs = 1.0 - reg_incomplete_beta(4.0, 2.5, 1.0 - x);
        assert!((lhs - rhs).abs() < TOL);
        // I_x(1,1) = x
        assert!((reg_incomplete_beta(1.0, 1.0, 0.42) - 0.42).abs() < TOL);
    }

    #[test]
    fn t_two_sided_p_reference_values() {
        // Frozen from an independent implementation of the t distribution.
        assert!((student_t_two_sided_p(2.0, 10.0) - 0.07338803477074039).abs() < 1e-10);
        assert!((student_t_two_sided_p(3.0, 5.0) - 0.03009924789746257).abs() < 1e-10);
        assert!((student_t_two_sided_p(0.5, 30.0) - 0.6207230048851273).abs() < 1e-10);
        assert!((student_t_two_sided_p(12.0, 8.0) - 2.14386674768877e-6).abs() < 1e-14);
    }

    #[test]
    fn t_p_symmetric_and_monotone() {
        for &df in &[1.0, 3.0, 17.0, 120.0] {
            let mut prev = 1.0;
            for i in 0..60 {
                let t = i as f64 * 0.25;
                let p = student_t_two_sided_p(t, df);
                let p_neg = student_t_two_sided_p(-t, df);
                assert!((p - p_neg).abs() < 1e-14);
                assert!(p <= prev + 1e-14, "p not nonincreasing in |t|");
                prev = p;
            }
        }
    }

    #[test]
    fn one_sample_zero_variance_conventions() {
        let flat = [0.5, 0.5, 0.5];
        let at_mean = one_sample_t(&flat, 0.5).unwrap();
        assert_eq!(at_mean.p, 1.0);
        assert!(!at_mean.degenerate);
        let off_mean = one_sample_t(&flat, 0.0).unwrap();
        assert_eq!(off_mean.p, 0.0);
        assert!(off_mean.degenerate);
    }

    #[test]
    fn paired_t_hand_case() {
        // diffs {0.45, 0.40, 0.50}: mean 0.45, sd 0.05, t = 0.45/(0.05/sqrt(3))
        let before = [-0.9, -0.8, -1.0];
        let after = [-0.45, -0.40, -0.50];
        let tt = paired_t(&before, &after).unwrap();
        assert!((tt.t - 15.588457268119896).abs() < 1e-9);
        assert!((tt.p - 0.004089996689521373).abs() < 1e-10);
    }

    #[test]
    fn percentile_nearest_rank_small_samples() {
        let s = [-1.0, 1.0];
        assert_eq!(percentile_nearest_rank(&s, 2.5).unwrap(), -1.0);
        assert_eq!(percentile_nearest_rank(&s, 97.5).unwrap(), 1.0);
        let one = [3.0];
        assert_eq!(percentile_nearest_rank(&one, 50.0).unwrap(), 3.0);
    }

    #[test]
    fn sample_sd_two_points() {
        assert!((sample_sd(&[-1.0, 1.0]) - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert_eq!(sample_sd(&[0.0, 0.0, 0.0]), 0.0);
    }
}
