//! Mann–Whitney U with Cliff's delta.

use super::dist::normal_sf;
use super::fdr::bonferroni;
use super::ranks::{midranks, tie_term};
use super::{check_finite, Result, TestResult};

/// Smaller-sample size at or below which the exact null distribution is used.
pub const EXACT_MAX_MIN_SIZE: usize = 12;

/// U for `a`: pairs with a > b count 1, ties count 0.5.
pub fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// δ = P(a > b) - P(a < b). Negative when `a` tends to be smaller.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> f64 {
    2.0 * u_statistic(a, b) / (a.len() * b.len()) as f64 - 1.0
}

/// Two-sided Mann–Whitney test of `a` against `b`.
///
/// The p-value is exact (permutation distribution of the doubled mid-rank
/// sum, so ties are handled exactly) when the smaller sample has at most
/// [`EXACT_MAX_MIN_SIZE`] observations; otherwise a tie-corrected normal
/// approximation with continuity correction. `p_adjusted` is the Bonferroni
/// adjustment for `corrections` comparisons.
pub fn mann_whitney(a: &[f64], b: &[f64], corrections: usize) -> Result<TestResult> {
    check_finite(a, "Mann-Whitney sample a")?;
    check_finite(b, "Mann-Whitney sample b")?;
    let (m, n) = (a.len(), b.len());
    let u = u_statistic(a, b);
    let exact = m.min(n) <= EXACT_MAX_MIN_SIZE;
    let p = if exact { exact_p(a, b, u) } else { normal_p(a, b, u) };
    let mut result = TestResult::new(u, None, p).with_effect("cliffs_delta", Some(cliffs_delta(a, b)));
    result.exact = exact;
    result.p_adjusted = Some(bonferroni(result.p_value, corrections));
    Ok(result)
}

fn exact_p(a: &[f64], b: &[f64], u: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = midranks(&pooled);
    // Enumerate subsets of the smaller size; U of the subset is symmetric.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let pick = m.min(n);
    let max_sum: usize = {
        let mut d = doubled.clone();
        d.sort_unstable_by(|x, y| y.cmp(x));
        d.iter().take(pick).sum()
    };
    // counts[j][s]: number of j-subsets whose doubled rank sum is s
    let mut counts = vec![vec![0f64; max_sum + 1]; pick + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for j in (1..=pick).rev() {
            let (lower, upper) = counts.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let dist = &counts[pick];
    let total: f64 = dist.iter().sum();
    // U_subset = R_subset − pick(pick+1)/2; center at pick·other/2.
    let other = m + n - pick;
    let offset = (pick * (pick + 1)) as f64 / 2.0;
    let center = (pick * other) as f64 / 2.0;
    let u_small = if pick == m { u } else { (m * n) as f64 - u };
    let observed = (u_small - center).abs();
    let mut tail = 0.0;
    for (s, &c) in dist.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let u_s = s as f64 / 2.0 - offset;
        if (u_s - center).abs() >= observed - 1e-9 {
            tail += c;
        }
    }
    (tail / total).min(1.0)
}

fn normal_p(a: &[f64], b: &[f64], u: f64) -> f64 {
    let (m, n) = (a.len() as f64, b.len() as f64);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (_, ties) = midranks(&pooled);
    let big_n = m + n;
    let var = m * n / 12.0 * ((big_n + 1.0) - tie_term(&ties) / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let diff = (u - m * n / 2.0).abs();
    let z = ((diff - 0.5).max(0.0)) / var.sqrt();
    (2.0 * normal_sf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_separation() {
        let r = mann_whitney(&[1.0, 2.0], &[3.0, 4.0], 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.effect_size, Some(-1.0));
        // exact: 2 of 6 arrangements are as extreme
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_lists() {
        let x = [0.3, 0.5, 0.5, 0.9];
        let r = mann_whitney(&x, &x, 3).unwrap();
        assert_eq!(r.effect_size, Some(0.0));
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.p_adjusted, Some(1.0));
    }

    #[test]
    fn empty_rejected() {
        assert!(mann_whitney(&[], &[1.0], 1).is_err());
    }

    #[test]
    fn large_sample_uses_normal() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 10.5).collect();
        let r = mann_whitney(&a, &b, 1).unwrap();
        assert!(!r.exact);
        // scipy.stats.mannwhitneyu(a, b, method="asymptotic").pvalue
        assert!((r.p_value - 0.000_124_77).abs() < 1e-6, "{}", r.p_value);
    }
}
