//! Shared numeric primitives: probability flooring, entropy, divergences, rank correlation.

/// Smallest probability any distribution entry is allowed to take.
pub const PROB_FLOOR: f64 = 1e-12;

/// Escapes one CSV field: quotes it when it contains a comma, quote, or
/// newline, doubling any embedded quotes.
pub(crate) fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Largest potential value: the potential of a floor-probability token.
pub fn max_potential() -> f64 {
    -PROB_FLOOR.ln()
}

/// Clamps every entry to at least [`PROB_FLOOR`], renormalizes to sum 1,
/// then clamps once more so no entry dips below the floor after division.
///
/// Input entries must be finite and non-negative with a positive sum.
pub fn floor_and_normalize(probs: &mut [f64]) {
    for p in probs.iter_mut() {
        *p = p.max(PROB_FLOOR);
    }
    let sum: f64 = probs.iter().sum();
    debug_assert!(sum.is_finite() && sum > 0.0);
    for p in probs.iter_mut() {
        *p = (*p / sum).max(PROB_FLOOR);
    }
}

/// Shannon entropy in nats: -sum p ln p. Zero entries contribute zero.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// KL divergence D(p || q) in nats, summed over the support of `p`.
/// Every `q` entry on that support must be positive.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

/// Total variation distance: half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(&pi, &qi)| (pi - qi).abs()).sum::<f64>()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the smallest entry; ties go to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold equal values; each gets the mean 1-based rank
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
///
/// Returns `None` when fewer than two pairs are given or either side has
/// zero rank variance, in which case the correlation is undefined.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mean;
        let dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_potential_matches_floor() {
        // -ln(1e-12) = 12 ln 10
        assert!((max_potential() - 12.0 * 10.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn floor_preserves_clean_distributions() {
        let mut p = vec![0.25, 0.25, 0.25, 0.25];
        floor_and_normalize(&mut p);
        assert_eq!(p, vec![0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn floor_lifts_zero_entries() {
        let mut p = vec![1.0, 0.0, 0.0];
        floor_and_normalize(&mut p);
        assert!(p.iter().all(|&x| x >= PROB_FLOOR));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_of_uniform_is_log_n() {
        let p = vec![0.25; 4];
        assert!((shannon_entropy(&p) - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_point_mass_is_zero() {
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = vec![0.3, 0.7];
        assert_eq!(kl_divergence(&p, &p), 0.0);
    }

    #[test]
    fn kl_half_half_vs_quarter_three_quarter() {
        // 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75) = 0.5 ln 2 + 0.5 ln(2/3)
        let got = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]);
        let want = 0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.143_841_036_225_89).abs() < 1e-9);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((total_variation(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((total_variation(&[0.6, 0.4], &[0.4, 0.6]) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
    }

    #[test]
    fn spearman_perfect_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let up = [10.0, 20.0, 30.0, 40.0];
        let down = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&x, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_undefined_cases() {
        assert_eq!(spearman(&[1.0], &[2.0]), None);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn spearman_handles_ties_with_average_ranks() {
        // x has a tie; correlation should still be well-defined and positive
        let x = [1.0, 2.0, 2.0, 4.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        let r = spearman(&x, &y).unwrap();
        assert!(r > 0.9 && r <= 1.0);
    }
}
