use std::f64::consts::TAU;

use gmol_core::{metric_coefficients, rotate_periodic, uniform_lines, AngularGrid, ShapeCurve64};
use proptest::prelude::*;

/// Smooth star-shaped curve `c + a cos(2πx + φ) + b sin(4πx)` inside radius `R`.
fn shape_strategy() -> impl Strategy<Value = ShapeCurve64> {
    (
        prop::sample::select(vec![8usize, 16, 32]),
        1.0..3.0f64,
        0.0..0.3f64,
        0.0..0.2f64,
        0.0..TAU,
        1.5..4.0f64,
    )
        .prop_map(|(m, c, a, b, phi, gap)| {
            let grid = AngularGrid::new(m).unwrap();
            ShapeCurve64::from_fn(grid, c + gap, |x| c + a * (TAU * x + phi).cos() + b * (2.0 * TAU * x).sin())
                .unwrap()
        })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f1_and_f2_cancel(shape in shape_strategy(), lines in 2usize..12) {
        let metric = metric_coefficients(&shape, &uniform_lines::<f64>(lines)).unwrap();
        for (a, b) in metric.f1.iter().zip(&metric.f2) {
            prop_assert_eq!(a + b, 0.0);
        }
    }

    #[test]
    fn f6_squared_is_four_f4(shape in shape_strategy(), lines in 2usize..12) {
        let metric = metric_coefficients(&shape, &uniform_lines::<f64>(lines)).unwrap();
        for (f6, f4) in metric.f6.as_slice().iter().zip(metric.f4.as_slice()) {
            prop_assert!(*f4 >= 0.0);
            prop_assert!((f6 * f6 - 4.0 * f4).abs() <= 8.0 * f64::EPSILON * (f6 * f6).max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn f0_is_positive(shape in shape_strategy(), lines in 2usize..12) {
        let metric = metric_coefficients(&shape, &uniform_lines::<f64>(lines)).unwrap();
        prop_assert!(metric.f0.as_slice().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn coefficients_follow_a_cyclic_shift(shape in shape_strategy(), shift in 0usize..64, lines in 2usize..8) {
        let t = uniform_lines::<f64>(lines);
        let base = metric_coefficients(&shape, &t).unwrap();
        let moved = metric_coefficients(&shape.rotated(shift), &t).unwrap();
        prop_assert_eq!(rotate_periodic(&base.f1, shift), moved.f1.clone());
        prop_assert_eq!(rotate_periodic(&base.f3, shift), moved.f3.clone());
        prop_assert_eq!(rotate_periodic(&base.f1_prime, shift), moved.f1_prime.clone());
        for n in 0..=lines {
            for (a, b) in [(&base.f0, &moved.f0), (&base.f4, &moved.f4), (&base.f6, &moved.f6), (&base.f8, &moved.f8), (&base.f9, &moved.f9)] {
                prop_assert_eq!(rotate_periodic(a.row(n), shift), b.row(n).to_vec());
            }
        }
    }
}

/// Coefficients at nodes shared by the `M` and `2M` grids approach the
/// `4M` values at second order.
#[test]
fn refinement_is_second_order() {
    let shape_on = |m: usize| {
        ShapeCurve64::from_fn(AngularGrid::new(m).unwrap(), 3.0, |x| {
            1.0 + 0.15 * (TAU * x).cos() + 0.05 * (2.0 * TAU * x).sin()
        })
        .unwrap()
    };
    let t = uniform_lines::<f64>(4);
    let reference = metric_coefficients(&shape_on(256), &t).unwrap();
    let error = |m: usize| {
        let metric = metric_coefficients(&shape_on(m), &t).unwrap();
        let stride = 256 / m;
        let mut e = 0.0f64;
        for j in 0..m {
            e = e.max((metric.f1[j] - reference.f1[j * stride]).abs());
            for n in 0..=4 {
                e = e.max((metric.f0[(n, j)] - reference.f0[(n, j * stride)]).abs());
                e = e.max((metric.f6[(n, j)] - reference.f6[(n, j * stride)]).abs());
            }
        }
        e
    };
    let (e32, e64) = (error(32), error(64));
    let order = (e32 / e64).log2();
    assert!(order >= 1.9, "observed order {order} ({e32:e} -> {e64:e})");
}

#[test]
fn circle_has_trivial_coefficients_in_single_precision() {
    let grid = AngularGrid::new(16).unwrap();
    let shape = gmol_core::ShapeCurve32::circle(grid, 1.0, 2.0).unwrap();
    let metric = metric_coefficients(&shape, &uniform_lines::<f32>(5)).unwrap();
    assert!(metric.f1.iter().all(|&v| v == 0.0));
    assert!(metric.f3.iter().all(|&v| rel(v as f64, 1.0) < 1e-6));
}
