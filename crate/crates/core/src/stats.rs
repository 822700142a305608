//! Rank statistics used to check trend compliance.

/// Average (fractional) ranks, 1-based, ties sharing the mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation of `values` against their index. Returns 0 for
/// fewer than two values or a constant series.
pub fn spearman_vs_index(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let index: Vec<f64> = (0..n).map(|i| i as f64).collect();
    pearson(&ranks(&index), &ranks(values))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// True when a rank correlation points the way `direction` (±1) asks.
/// NaN (a constant series) never agrees.
pub fn agrees_with_direction(rho: f64, direction: f64) -> bool {
    rho * direction > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_handle_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn spearman_extremes() {
        assert!((spearman_vs_index(&[1.0, 2.0, 5.0, 9.0]) - 1.0).abs() < 1e-12);
        assert!((spearman_vs_index(&[9.0, 5.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman_vs_index(&[3.0, 3.0, 3.0]), 0.0);
    }

    /// Brute-force check: for distinct values, Spearman equals
    /// 1 - 6 Σd² / (n(n²-1)).
    #[test]
    fn matches_closed_form_without_ties() {
        let v = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0];
        let n = v.len() as f64;
        let mut sorted: Vec<f64> = v.to_vec();
        sorted.sort_by(f64::total_cmp);
        let d2: f64 = v
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let r = sorted.iter().position(|s| s == x).unwrap() as f64;
                (r - i as f64).powi(2)
            })
            .sum();
        let expected = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        assert!((spearman_vs_index(&v) - expected).abs() < 1e-12);
    }
}
