//! Small descriptive-statistics helpers shared by the estimators.

/// Mean and population standard deviation (denominator `n`).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardizes in place to mean 0 and population sd 1. Returns `false` and
/// leaves the data untouched when the spread is zero.
pub fn standardize_in_place(values: &mut [f64]) -> bool {
    let (mean, sd) = mean_sd(values);
    if !(sd > 0.0) || !sd.is_finite() {
        return false;
    }
    for v in values.iter_mut() {
        *v = (*v - mean) / sd;
    }
    true
}

pub fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Linear-interpolated quantile of already sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn count_distinct_sorted(sorted: &[f64]) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[1] != w[0]).count()
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_sd() {
        let (m, s) = mean_sd(&[0.0, 1.0]);
        assert_eq!(m, 0.5);
        assert_eq!(s, 0.5);
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn constant_is_not_standardized() {
        let mut v = [2.0; 5];
        assert!(!standardize_in_place(&mut v));
        assert_eq!(v, [2.0; 5]);
    }
}
