//! Reference distributions used by the tests in this module.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// Upper tail of the central chi-square distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let d = ChiSquared::new(df).expect("positive degrees of freedom");
    d.sf(x).clamp(0.0, 1.0)
}

pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(df).expect("positive degrees of freedom").cdf(x)
}

pub fn chi2_quantile(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive degrees of freedom").inverse_cdf(p)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

pub fn normal_sf(z: f64) -> f64 {
    std_normal().sf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// CDF of the noncentral chi-square distribution as a Poisson mixture of
/// central chi-square CDFs with `df + 2j` degrees of freedom.
pub fn noncentral_chi2_cdf(x: f64, df: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return chi2_cdf(x, df);
    }
    let half = lambda / 2.0;
    // Sum outward from the Poisson mode so large noncentralities don't
    // underflow the leading weights.
    let mode = half.floor() as u64;
    let weight = |j: u64| (-half + j as f64 * half.ln() - ln_gamma(j as f64 + 1.0)).exp();
    let term = |j: u64| weight(j) * chi2_cdf(x, df + 2.0 * j as f64);
    let mut total = 0.0;
    let mut j = mode;
    loop {
        total += term(j);
        if weight(j) < 1e-17 || j == u64::MAX {
            break;
        }
        j += 1;
    }
    let mut j = mode;
    while j > 0 {
        j -= 1;
        let w = weight(j);
        total += w * chi2_cdf(x, df + 2.0 * j as f64);
        if w < 1e-17 {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_reference_values() {
        // scipy.stats.chi2.sf(7.2, 3)
        assert!((chi2_sf(7.2, 3.0) - 0.065_789_05).abs() < 1e-7);
        assert!((chi2_quantile(0.95, 3.0) - 7.814_727_9).abs() < 1e-6);
    }

    #[test]
    fn noncentral_reduces_to_central() {
        for x in [0.5, 3.0, 7.8, 20.0] {
            assert!((noncentral_chi2_cdf(x, 3.0, 0.0) - chi2_cdf(x, 3.0)).abs() < 1e-12);
            assert!((noncentral_chi2_cdf(x, 3.0, 1e-12) - chi2_cdf(x, 3.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn noncentral_reference() {
        // scipy.stats.ncx2.cdf(7.814727903251178, 3, 10.8)
        let v = noncentral_chi2_cdf(7.814_727_903_251_178, 3.0, 10.8);
        assert!((v - 0.204_148_9).abs() < 1e-6, "{v}");
        // large noncentrality stays normalized
        let v = noncentral_chi2_cdf(2000.0, 3.0, 1500.0);
        assert!(v > 0.99 && v <= 1.0, "{v}");
    }
}
