//! Small numeric helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Normal};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divide by n). Exactly zero for constant
/// input, which mean rounding would otherwise miss.
pub(crate) fn population_std(xs: &[f64]) -> f64 {
    if xs.iter().all(|x| *x == xs[0]) {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    var.sqrt()
}

/// Sample standard deviation (divide by n - 1); requires at least 2 values.
pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    debug_assert!(xs.len() >= 2);
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

pub(crate) fn sort_ascending(xs: &mut [f64]) {
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN in sorted data"));
}

/// Linearly interpolated percentile of pre-sorted data, `p` in [0, 1].
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Two-sided standard-normal quantile for a coverage level in (0, 1).
///
/// The 80% level is pinned to 1.28 so default-level parametric widths match
/// the documented formula digit for digit.
pub(crate) fn two_sided_z(level: f64) -> f64 {
    debug_assert!(0.0 < level && level < 1.0);
    if (level - 0.80).abs() < 1e-12 {
        return 1.28;
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    std_normal.inverse_cdf(0.5 + level / 2.0)
}

/// Pearson correlation of paired samples; used by generator checks.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(xs.len() >= 2);
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn population_std_matches_hand_computation() {
        assert_relative_eq!(
            population_std(&[0.2, 0.5, 0.8]),
            0.06f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn percentile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(percentile_sorted(&xs, 0.0), 1.0);
        assert_relative_eq!(percentile_sorted(&xs, 1.0), 4.0);
        assert_relative_eq!(percentile_sorted(&xs, 0.5), 2.5);
    }

    #[test]
    fn z_level_pinned_at_80_and_standard_elsewhere() {
        assert_eq!(two_sided_z(0.80), 1.28);
        assert_relative_eq!(two_sided_z(0.90), 1.6448536269514722, epsilon = 1e-8);
        assert_relative_eq!(two_sided_z(0.95), 1.959963984540054, epsilon = 1e-8);
    }

    #[test]
    fn correlation_of_identical_samples_is_one() {
        let xs = [0.1, 0.4, 0.2, 0.9];
        assert_relative_eq!(correlation(&xs, &xs), 1.0, epsilon = 1e-12);
    }
}
