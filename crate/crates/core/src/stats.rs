//! Small statistics toolbox: sample mean/SE, jackknife, and the χ²
//! goodness-of-fit machinery used by the acceptance gates.

use crate::error::{Error, Result};

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Two-sided z-score of `a − b` for independent estimates (se may be 0).
pub fn z_score(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let joint = (se_a * se_a + se_b * se_b).sqrt();
    if joint == 0.0 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b) / joint
    }
}

/// Jackknife standard error of an estimator given its leave-one-out values.
pub fn jackknife_se(loo: &[f64]) -> f64 {
    let n = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / n;
    let ss = loo.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    ((n - 1.0) / n * ss).sqrt()
}

/// Sample covariance of paired observations with jackknife SE.
/// Errors below 30 pairs (the SE is unreliable there).
pub fn covariance_jackknife(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pairs.len();
    if n < 30 {
        return Err(Error::Degenerate(format!("need >= 30 trajectories, got {n}")));
    }
    let nf = n as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let cov = (sxy - sx * sy / nf) / (nf - 1.0);
    let loo: Vec<f64> = pairs
        .iter()
        .map(|&(x, y)| {
            let m = nf - 1.0;
            ((sxy - x * y) - (sx - x) * (sy - y) / m) / (m - 1.0)
        })
        .collect();
    Ok((cov, jackknife_se(&loo)))
}

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9; ~15 significant digits).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = 0.99999999999980993;
    for (i, &c) in COEF.iter().enumerate() {
        a += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut k = a;
        for _ in 0..500 {
            k += 1.0;
            term *= x / k;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q(a, x), Lentz
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / 1e-300;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            c = b + an / c;
            if c.abs() < 1e-300 {
                c = 1e-300;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - (-x + a * x.ln() - ln_gamma(a)).exp() * h
    }
}

/// CDF of the χ² distribution with `df` degrees of freedom.
pub fn chi2_cdf(x: f64, df: usize) -> f64 {
    reg_lower_gamma(df as f64 / 2.0, x / 2.0)
}

#[derive(Clone, Debug)]
pub struct Chi2Report {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// χ² goodness-of-fit of observed nonnegative-integer counts against the
/// Poisson(λ) pmf, pooling cells from the right until every expected count
/// is at least `min_expected`.
pub fn chi2_gof_poisson(observed_values: &[u64], lambda: f64, min_expected: f64) -> Result<Chi2Report> {
    let n = observed_values.len();
    if n < 10 {
        return Err(Error::Degenerate("need at least 10 observations".into()));
    }
    let max_v = *observed_values.iter().max().unwrap() as usize;
    let mut hist = vec![0u64; max_v + 1];
    for &v in observed_values {
        hist[v as usize] += 1;
    }
    // Poisson pmf, recursively
    let mut pmf = Vec::with_capacity(max_v + 2);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for k in 1..=max_v {
        p *= lambda / k as f64;
        pmf.push(p);
    }
    // cells 0..max_v plus the right tail
    let tail_p = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    let mut cells: Vec<(f64, f64)> = hist
        .iter()
        .enumerate()
        .map(|(k, &o)| (o as f64, pmf[k] * n as f64))
        .collect();
    cells.push((0.0, tail_p * n as f64));
    // pool from the right, then from the left, until expected >= min_expected
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(o, e) in &cells {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= min_expected {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            pooled.push(acc);
        }
    }
    if pooled.len() < 2 {
        return Err(Error::Degenerate("fewer than 2 cells after pooling".into()));
    }
    let statistic: f64 = pooled.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = pooled.len() - 1;
    let p_value = 1.0 - chi2_cdf(statistic, df);
    Ok(Chi2Report { statistic, df, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn chi2_quantiles() {
        // chi2_{0.99} critical values: df=5 → 15.0863, df=9 → 21.6660
        assert!((chi2_cdf(15.0863, 5) - 0.99).abs() < 1e-4);
        assert!((chi2_cdf(21.6660, 9) - 0.99).abs() < 1e-4);
        assert!((chi2_cdf(6.63490, 1) - 0.99).abs() < 1e-4);
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let var: f64 = (2.25 + 0.25 + 0.25 + 2.25) / 3.0;
        assert!((se - (var / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn covariance_of_correlated_pairs() {
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        // X = U, Y = U + small noise: cov ≈ var(U) = 1/12
        let pairs: Vec<(f64, f64)> = (0..5000)
            .map(|_| {
                let u = next();
                (u, u + 0.01 * (next() - 0.5))
            })
            .collect();
        let (cov, se) = covariance_jackknife(&pairs).unwrap();
        assert!((cov - 1.0 / 12.0).abs() < 4.0 * se, "cov {cov} se {se}");
        assert!(se > 0.0);
    }

    #[test]
    fn covariance_refuses_small_samples() {
        let pairs = vec![(0.0, 0.0); 10];
        assert!(covariance_jackknife(&pairs).is_err());
    }

    #[test]
    fn gof_accepts_true_poisson() {
        // deterministic LCG draws from Poisson(2) via inversion
        let mut rng_state = 99u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        let lambda: f64 = 2.0;
        let draws: Vec<u64> = (0..20000)
            .map(|_| {
                let u = next();
                let mut cum = (-lambda).exp();
                let mut pk = cum;
                let mut k = 0u64;
                while u > cum && k < 100 {
                    k += 1;
                    pk *= lambda / k as f64;
                    cum += pk;
                }
                k
            })
            .collect();
        let rep = chi2_gof_poisson(&draws, lambda, 5.0).unwrap();
        assert!(rep.p_value > 0.01, "p = {}", rep.p_value);
    }

    #[test]
    fn gof_rejects_wrong_mean() {
        let draws: Vec<u64> = (0..5000).map(|i| (i % 5) as u64).collect(); // mean 2, not Poisson
        let rep = chi2_gof_poisson(&draws, 2.0, 5.0).unwrap();
        assert!(rep.p_value < 0.01);
    }
}
