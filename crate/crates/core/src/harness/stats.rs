//! Binomial confidence intervals.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` at quantile `z`.
/// With `n = 0` nothing is known and the interval is `[0, 1]`.
pub fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn wilson95(successes: u64, n: u64) -> (f64, f64) {
    wilson(successes, n, Z95)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // 10/100 at 95%: (0.05522914, 0.17436566), cross-checked with statsmodels.
        let (lo, hi) = wilson95(10, 100);
        assert!((lo - 0.055_229_137).abs() < 1e-7, "{lo}");
        assert!((hi - 0.174_365_66).abs() < 1e-7, "{hi}");
        let (lo, hi) = wilson95(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.08);
        let (lo, hi) = wilson95(50, 50);
        assert!(lo > 0.92 && (hi - 1.0).abs() < 1e-12);
        assert_eq!(wilson95(0, 0), (0.0, 1.0));
    }

    #[test]
    fn contains_point_estimate() {
        for n in [1u64, 7, 100, 5000] {
            for k in [0, n / 3, n / 2, n] {
                let (lo, hi) = wilson95(k, n);
                let p = k as f64 / n as f64;
                assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
            }
        }
    }
}
