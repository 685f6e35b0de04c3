use std::f64::consts::PI;

/// Smoothed Heaviside of `x = φ/ε`: 1 for `x ≤ −1`, 0 for `x ≥ 1`,
/// `½(1 − x − sin(πx)/π)` in between. Non-increasing and C¹.
#[inline]
pub fn smoothed_heaviside(x: f64) -> f64 {
    if x <= -1.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 - x - (PI * x).sin() / PI)
    }
}

/// Smoothing delta `ζ(x) = −dH/dx = ½(1 + cos πx)` on `|x| < 1`, zero outside.
/// Integrates to one.
#[inline]
pub fn smoothing_delta(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * x).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn heaviside_reference_values() {
        assert_eq!(smoothed_heaviside(-5.0), 1.0);
        assert_eq!(smoothed_heaviside(5.0), 0.0);
        assert!((smoothed_heaviside(0.0) - 0.5).abs() < 1e-15);
        let expected = 0.5 * (1.0 - 0.5 - 1.0 / PI);
        assert!((smoothed_heaviside(0.5) - expected).abs() < 1e-15);
        assert!((smoothed_heaviside(0.5) - 0.090845).abs() < 1e-6);
    }

    #[test]
    fn delta_reference_values() {
        assert_eq!(smoothing_delta(2.0), 0.0);
        assert_eq!(smoothing_delta(-1.0), 0.0);
        assert!((smoothing_delta(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn delta_integrates_to_one() {
        let n = 20_000;
        let dx = 2.0 / n as f64;
        let trap: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * smoothing_delta(-1.0 + i as f64 * dx)
            })
            .sum::<f64>()
            * dx;
        assert!((trap - 1.0).abs() < 1e-8, "{trap}");
    }

    #[test]
    fn delta_is_minus_heaviside_derivative() {
        for i in -99..100 {
            let x = i as f64 / 100.0;
            let d = 1e-6;
            let fd = -(smoothed_heaviside(x + d) - smoothed_heaviside(x - d)) / (2.0 * d);
            assert!((fd - smoothing_delta(x)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn profile_symmetries(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            prop_assert!((smoothed_heaviside(x) + smoothed_heaviside(-x) - 1.0).abs() < 1e-14);
            prop_assert_eq!(smoothing_delta(x), smoothing_delta(-x));
            prop_assert!(smoothing_delta(x) >= 0.0);
            let h = smoothed_heaviside(x);
            prop_assert!((0.0..=1.0).contains(&h));
            if x <= y {
                prop_assert!(smoothed_heaviside(x) >= smoothed_heaviside(y));
            }
        }
    }
}
