//! Deterministic workloads for the criterion benches.

use svi_core::stats::BinaryBlockMatrix;

/// Low-discrepancy sequence in [0, 1): the fractional parts of `i * phi`.
pub fn weyl(n: usize, offset: f64) -> Vec<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    (0..n).map(|i| (offset + i as f64 * PHI).fract()).collect()
}

/// `blocks` rows of four binary outcomes whose last column endorses more often.
pub fn block_matrix(blocks: usize) -> BinaryBlockMatrix {
    let u = weyl(blocks, 0.1);
    let rows = u.iter().map(|&x| (0..4).map(|j| u8::from(x < 0.3 + 0.1 * j as f64)).collect()).collect();
    BinaryBlockMatrix::new(rows).expect("rectangular")
}

/// Three groups of `n` values with shifted locations.
pub fn shifted_groups(n: usize) -> Vec<Vec<f64>> {
    (0..3).map(|g| weyl(n, 0.05 * g as f64).iter().map(|x| x + 0.2 * g as f64).collect()).collect()
}

/// Noisy model completions; the JSON body comes in several wrappings.
pub fn completions(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let decision = if i % 2 == 0 { "agree" } else { "disagree" };
            let score = i % 101;
            let body = format!(
                r#"{{"decision": "{decision}", "confidence": {score}, "adherence_to_laws": 50, "adherence_to_social_ethics": {score}, "objective_positive_consequences": 40, "objective_negative_consequences": 60, "reasoning": "case {i}"}}"#
            );
            match i % 3 {
                0 => body,
                1 => format!("```json\n{body}\n```"),
                _ => format!("Here is my answer.\n{body}\nThanks."),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_are_valid() {
        assert_eq!(block_matrix(50).n_blocks(), 50);
        assert!(weyl(100, 0.0).iter().all(|x| (0.0..1.0).contains(x)));
        for c in completions(9) {
            assert!(svi_core::parse_response(&c).record.is_some(), "{c}");
        }
    }
}
