use nalgebra::{DMatrix, DVector};

use crate::error::invalid;
use crate::Result;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// `log e ≈ slope · log n + log_exponent · log log(n+1) + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub log_exponent: f64,
    pub intercept: f64,
}

fn check_pairs(pairs: &[(f64, f64)], min: usize) -> Result<()> {
    if pairs.len() < min {
        return Err(invalid(format!("rate fit needs at least {min} pairs")));
    }
    if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(invalid("rate fit needs strictly increasing n"));
    }
    if pairs.iter().any(|&(n, e)| !(n >= 1.0 && e > 0.0 && e.is_finite())) {
        return Err(invalid("rate fit needs n ≥ 1 and positive finite errors"));
    }
    Ok(())
}

fn least_squares(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Vec<f64> {
    let cols = rows[0].len();
    let a = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-12).expect("both factors computed");
    x.iter().copied().collect()
}

/// Three-parameter fit over `(n, e_n)` pairs.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    check_pairs(pairs, 4)?;
    let rows = pairs
        .iter()
        .map(|&(n, _)| vec![n.ln(), (n + 1.0).ln().ln(), 1.0])
        .collect();
    let rhs = pairs.iter().map(|&(_, e)| e.ln()).collect();
    let x = least_squares(rows, rhs);
    Ok(RateFit {
        slope: x[0],
        log_exponent: x[1],
        intercept: x[2],
    })
}

/// Plain log-log fit `log e ≈ slope · log n + intercept`, returning `(slope, intercept)`.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    check_pairs(pairs, 2)?;
    let rows = pairs.iter().map(|&(n, _)| vec![n.ln(), 1.0]).collect();
    let rhs = pairs.iter().map(|&(_, e)| e.ln()).collect();
    let x = least_squares(rows, rhs);
    Ok((x[0], x[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_value() {
        // 0 of 10 at z = 1.96: upper = z²/(n + z²)
        let (lo, hi) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo, 0.0);
        assert!((hi - 1.96f64.powi(2) / (10.0 + 1.96f64.powi(2))).abs() < 1e-12);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn exact_power_law() {
        let pairs: Vec<_> = (1..=8).map(|k| (k as f64 * 4.0, 1.0 / (k as f64 * 4.0))).collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-10);
        assert!(fit.log_exponent.abs() < 1e-9);
        let (slope, intercept) = fit_slope(&pairs).unwrap();
        assert!((slope + 1.0).abs() < 1e-12 && intercept.abs() < 1e-12);
    }

    #[test]
    fn synthetic_log_factor() {
        let pairs: Vec<_> = (4..=10)
            .map(|p| {
                let n = f64::from(1 << p);
                (n, n.powi(-2) * (n + 1.0).ln().sqrt())
            })
            .collect();
        let fit = fit_rate(&pairs).unwrap();
        assert!((fit.slope + 2.0).abs() < 5e-2, "{fit:?}");
        assert!((fit.log_exponent - 0.5).abs() < 5e-2, "{fit:?}");
    }

    #[test]
    fn bad_pairs_rejected() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5), (3.0, 0.3)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5), (3.0, 0.0), (4.0, 0.1)]).is_err());
        assert!(fit_slope(&[(2.0, 1.0), (2.0, 0.5)]).is_err());
    }
}
