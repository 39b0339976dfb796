use ctm_core::fit::{exponential_decay, line_fit};
use proptest::prelude::*;

#[test]
fn noisy_line_matches_hand_computation() {
    // slope = sxy/sxx = 6/5, residuals -0.2, -0.4, 1.4, -0.8 so sse = 2.8.
    let f = line_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 5.0, 4.0]);
    assert!((f.slope - 1.2).abs() < 1e-12);
    assert!((f.intercept - 1.2).abs() < 1e-12);
    assert!((f.slope_error - (2.8f64 / 2.0 / 5.0).sqrt()).abs() < 1e-12);
}

#[test]
fn decay_fit_skips_floor_and_needs_three_points() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    assert!(exponential_decay(&xs, &[1.0, 0.5, 0.0, 0.0], 1e-12).is_none());
    let f = exponential_decay(&xs, &[1.0, (-0.5f64).exp(), (-1.0f64).exp(), 0.0], 1e-12).unwrap();
    assert!((f.beta - 0.5).abs() < 1e-12 && (f.amplitude - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn exact_line_is_recovered(slope in -5.0f64..5.0, intercept in -5.0f64..5.0, n in 3usize..40) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
        let f = line_fit(&xs, &ys);
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!((f.intercept - intercept).abs() < 1e-10);
        prop_assert!(f.slope_error < 1e-8);
    }

    #[test]
    fn exact_exponential_is_recovered(beta in 0.01f64..3.0, amp in 0.1f64..10.0, sign in prop::bool::ANY) {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (if sign { amp } else { -amp }) * (-beta * x).exp()).collect();
        let f = exponential_decay(&xs, &ys, 0.0).unwrap();
        prop_assert!((f.beta - beta).abs() < 1e-10);
        prop_assert!((f.amplitude - amp).abs() < 1e-9 * amp);
        prop_assert!(f.r2 > 1.0 - 1e-12);
    }
}
