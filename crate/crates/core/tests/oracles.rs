//! Independent reimplementations checked against the library.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svi_core::ingest::{parse_response, Decision};
use svi_core::stats::dist::chi2_sf;
use svi_core::stats::kruskal::epsilon_squared;
use svi_core::stats::mann_whitney::u_statistic;
use svi_core::stats::ranks::midranks;
use svi_core::stats::{chisq_power, cochran_q, kruskal_wallis, mann_whitney, wilcoxon_signed_rank, BinaryBlockMatrix};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Q from row and column totals: (k-1)(k ΣC² - T²) / (kT - ΣR²).
fn cochran_totals(rows: &[Vec<u8>]) -> f64 {
    let k = rows[0].len() as f64;
    let mut col = vec![0.0; rows[0].len()];
    let (mut total, mut row_sq) = (0.0, 0.0);
    for r in rows {
        let s: f64 = r.iter().map(|&x| x as f64).sum();
        total += s;
        row_sq += s * s;
        for (c, &x) in col.iter_mut().zip(r) {
            *c += x as f64;
        }
    }
    let col_sq: f64 = col.iter().map(|c| c * c).sum();
    (k - 1.0) * (k * col_sq - total * total) / (k * total - row_sq)
}

#[test]
fn cochran_matches_totals_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for trial in 0..400 {
        let blocks = rng.random_range(2..40);
        let k = rng.random_range(2..6);
        let bias: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let rows: Vec<Vec<u8>> =
            (0..blocks).map(|_| bias.iter().map(|&p| u8::from(rng.random::<f64>() < p)).collect()).collect();
        if rows.iter().all(|r| r.iter().all(|&x| x == r[0])) {
            continue;
        }
        let q = cochran_totals(&rows);
        let r = cochran_q(&BinaryBlockMatrix::new(rows).unwrap()).unwrap();
        assert!(close(r.statistic, q, 1e-12), "trial {trial}: {} vs {q}", r.statistic);
        assert_eq!(r.df, Some(k as u32 - 1));
        assert!(close(r.p_value, chi2_sf(q, (k - 1) as f64), 1e-12));
        checked += 1;
    }
    assert!(checked > 300);
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

fn brute_mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let center = (a.len() * b.len()) as f64 / 2.0;
    let observed = (u_statistic(a, b) - center).abs();
    let all = subsets(pooled.len(), a.len());
    let hits = all
        .iter()
        .filter(|idx| {
            let x: Vec<f64> = idx.iter().map(|&i| pooled[i]).collect();
            let y: Vec<f64> = (0..pooled.len()).filter(|i| !idx.contains(i)).map(|i| pooled[i]).collect();
            (u_statistic(&x, &y) - center).abs() >= observed - 1e-9
        })
        .count();
    hits as f64 / all.len() as f64
}

#[test]
fn mann_whitney_exact_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..150 {
        let m = rng.random_range(1..7);
        let n = rng.random_range(1..7);
        // Coarse values so ties are common.
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64 / 5.0).collect();
        let r = mann_whitney(&a, &b, 1).unwrap();
        assert!(r.exact);
        let p = brute_mann_whitney_p(&a, &b);
        assert!(close(r.p_value, p, 1e-12), "{a:?} {b:?}: {} vs {p}", r.p_value);
    }
}

#[test]
fn wilcoxon_exact_matches_sign_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..150 {
        let n = rng.random_range(1..11);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        if d.is_empty() {
            assert_eq!(r.p_value, 1.0);
            continue;
        }
        let (ranks, _) = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
        let total: f64 = ranks.iter().sum();
        let w: f64 = ranks.iter().zip(&d).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
        let observed = (w - total / 2.0).abs();
        let hits = (0u32..(1 << d.len()))
            .filter(|mask| {
                let wp: f64 = (0..d.len()).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
                (wp - total / 2.0).abs() >= observed - 1e-9
            })
            .count();
        let p = hits as f64 / (1u64 << d.len()) as f64;
        assert!(close(r.p_value, p, 1e-12), "{d:?}: {} vs {p}", r.p_value);
        assert!(close(r.statistic, w.min(total - w), 1e-12));
    }
}

#[test]
fn kruskal_matches_rank_variance_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let k = rng.random_range(2..5);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let n = rng.random_range(2..9);
                (0..n).map(|_| rng.random_range(0..10) as f64 / 10.0).collect()
            })
            .collect();
        let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
        let (ranks, _) = midranks(&pooled);
        let n = pooled.len() as f64;
        let grand = (n + 1.0) / 2.0;
        let denom: f64 = ranks.iter().map(|r| (r - grand).powi(2)).sum();
        if denom == 0.0 {
            continue;
        }
        let mut at = 0;
        let mut between = 0.0;
        for g in &groups {
            let mean_rank = ranks[at..at + g.len()].iter().sum::<f64>() / g.len() as f64;
            between += g.len() as f64 * (mean_rank - grand).powi(2);
            at += g.len();
        }
        let h = (n - 1.0) * between / denom;
        let r = kruskal_wallis(&groups).unwrap();
        assert!(close(r.statistic, h, 1e-10), "{} vs {h}", r.statistic);
        assert_eq!(r.df, Some(k as u32 - 1));
        let eps = epsilon_squared(h, k, pooled.len());
        match (r.effect_size, eps) {
            (Some(x), Some(y)) => assert!(close(x, y, 1e-12)),
            (x, y) => assert_eq!(x, y),
        }
    }
}

#[test]
fn noncentral_power_matches_simulation() {
    for (w, n) in [(0.2, 120), (0.3, 120), (0.4, 80)] {
        let analytic = chisq_power(w, 0.05, 3, n);
        let simulated = common::simulated_power(w, n as u64, 20_000, 5);
        assert!((analytic - simulated).abs() < 0.03, "w={w} n={n}: {analytic} vs {simulated}");
    }
}

#[test]
fn golden_parser_corpus() {
    for (text, decision, confidence, reasoning) in common::WELL_FORMED {
        let out = parse_response(text);
        let rec = out.record.as_ref().unwrap_or_else(|| panic!("rejected: {text}\n{:?}", out.failure_reason));
        let want = if decision == "agree" { Decision::Agree } else { Decision::Disagree };
        assert_eq!(rec.decision, want);
        assert_eq!(rec.confidence, confidence);
        assert_eq!(rec.reasoning, reasoning);
        for wrapped in common::wrappers(text) {
            assert_eq!(parse_response(&wrapped).record, out.record, "{wrapped}");
        }
    }
    for (text, reason) in common::malformed() {
        let out = parse_response(&text);
        assert!(!out.is_valid(), "accepted: {text}");
        assert_eq!(out.failure_reason, Some(reason), "{text}");
    }
}
