use std::f64::consts::PI;

use mqci_core::multiplier::*;
use mqci_core::Error;
use proptest::prelude::*;

/// Univariate Poisson multiplier on `[0, π/h]`: geometric sum over the images.
fn poisson(h: f64, x: f64) -> (f64, f64) {
    let q = (-2.0 * PI / h).exp();
    let k = q / (1.0 - q);
    let e = (2.0 * x).exp();
    let den = 1.0 + k * (e + 1.0);
    (1.0 / den, -2.0 * k * e / (den * den))
}

#[test]
fn poisson_multiplier_closed_form() {
    for &h in &[1.0, 0.5, 0.25] {
        let m = m_eval(-1.0, 1, h, &[PI / (2.0 * h)]).unwrap();
        assert!((m - (1.0 - (-PI / h).exp())).abs() < 1e-14, "h {h}: {m}");
        for &x in &[0.3, 1.1, 0.6 * PI / h, PI / h - 1.0] {
            let (v, _) = poisson(h, x);
            assert!((m_eval(-1.0, 1, h, &[x]).unwrap() - v).abs() <= 1e-13 * v.max(1e-300) + 1e-16);
        }
    }
    assert!((m_eval(-1.0, 1, 1.0, &[PI / 2.0]).unwrap() - (1.0 - (-PI).exp())).abs() < 1e-14);
}

#[test]
fn poisson_derivative_matches_analytic() {
    for &h in &[0.5, 0.25, 0.125] {
        for &x in &[PI / h - 0.5, PI / h - 2.0, 0.8 * PI / h] {
            let (_, dv) = poisson(h, x);
            let d = m_partial(-1.0, 1, h, &[1], &[x]).unwrap();
            assert!((d.value - dv).abs() <= 1e-6 * dv.abs().max(1e-3), "h {h} x {x}: {} vs {dv}", d.value);
            assert!(d.consistent);
        }
    }
}

#[test]
fn value_at_origin_for_positive_exponent() {
    for &h in &[0.5, 0.125] {
        assert_eq!(m_eval(0.5, 1, h, &[0.0]).unwrap(), 1.0);
        assert_eq!(m_eval(0.5, 2, h, &[0.0, 0.0]).unwrap(), 1.0);
    }
}

#[test]
fn first_partial_vanishes_at_origin() {
    let d = m_partial(2.5, 1, 0.25, &[1], &[0.0]).unwrap();
    assert!(d.value.abs() < 1e-9);
}

#[test]
fn stencil_may_not_cross_a_face() {
    let h = 0.25;
    let m = Multiplier::new(0.5, 1, h).unwrap();
    let face = PI / h;
    assert!(matches!(m.partial(&[1], &[face - 0.5 * m.step()]), Err(Error::StencilCrossesFace { .. })));
    assert!(m.partial(&[1], &[face - 2.0 * m.step()]).is_ok());
    assert!(m.partial(&[3], &[1.0]).is_err());
}

#[test]
fn norm_of_m_grows_like_cell_volume() {
    let q = QuadConfig::for_dim(1);
    let pts: Vec<(f64, f64)> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&h| (h, l1_norm_dgamma(0.5, 1, h, &[0], &q).unwrap().value))
        .collect();
    let (slope, _) = mqci_core::bench::loglog_slope(&pts).unwrap();
    assert!((slope + 1.0).abs() < 0.01, "{slope}");
    // Mean value over the cell is below one and bounded away from zero.
    for (h, n) in pts {
        let mean = n / (2.0 * PI / h);
        assert!(mean > 0.5 && mean < 1.0);
    }
}

#[test]
fn derivative_norms_are_positive_and_far_shells_decay() {
    let q = QuadConfig::for_dim(1);
    for &alpha in &[0.5, -2.5] {
        let n = l1_norm_dgamma(alpha, 1, 0.25, &[1], &q).unwrap();
        assert!(n.value > 0.0 && n.error_bar >= 0.0);
        assert!(n.inconsistent_fraction() < 0.01);
        let p = scaling_fit(alpha, 1, &[0.25, 0.125, 0.0625, 0.03125], &[vec![1]], &q).unwrap();
        for r in &p.region_sups {
            assert!(r.region_iii_within_envelope(1), "{r:?}");
        }
    }
}

#[test]
fn inadmissible_order_is_rejected() {
    let q = QuadConfig::for_dim(1);
    assert!(matches!(l1_norm_dgamma(-1.0, 1, 0.25, &[1], &q), Err(Error::ParameterRange { .. })));
    assert!(matches!(l1_norm_dgamma(-2.5, 1, 0.25, &[4], &q), Err(Error::ParameterRange { .. })));
}

#[test]
fn scaling_fit_needs_a_wide_h_range() {
    let q = QuadConfig::for_dim(1);
    assert!(matches!(scaling_fit(0.5, 1, &[0.25, 0.125, 0.0625], &[vec![1]], &q), Err(Error::DegenerateAbscissa)));
    assert!(matches!(scaling_fit(0.5, 1, &[0.25, 0.2, 0.15, 0.1], &[vec![1]], &q), Err(Error::DegenerateAbscissa)));
}

#[test]
fn mikhlin_suprema_in_one_dimension() {
    let q = QuadConfig::for_dim(1);
    let reports: Vec<MikhlinReport> =
        [0.25, 0.125].iter().map(|&h| mikhlin_check(0.5, 1, h, 1, &q).unwrap()).collect();
    for r in &reports {
        assert!(r.entries[0].sup <= 1.0);
        assert!(r.entries[1].sup.is_finite() && r.entries[1].sup > 0.0);
    }
    let spread = mikhlin_spread(&reports);
    assert_eq!(spread[0].1, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplier_is_even_and_bounded(x in -40.0f64..40.0, y in -40.0f64..40.0, k in 0usize..3) {
        let alpha = [0.5, -2.5, 2.5][k];
        let h = 0.25;
        let m = Multiplier::new(alpha, 2, h).unwrap();
        let v = m.eval(&[x, y]).unwrap();
        prop_assert!(v >= 0.0 && v <= 1.0);
        prop_assert!((v - m.eval(&[-x, -y]).unwrap()).abs() <= 1e-15);
        prop_assert!((v - m.eval(&[y, x]).unwrap()).abs() <= 1e-15);
    }

    #[test]
    fn first_partial_is_odd(x in 0.1f64..12.0) {
        let m = Multiplier::new(0.5, 1, 0.25).unwrap();
        prop_assume!(m.face_distance(&[x]) > 2.0 * m.step());
        let a = m.partial(&[1], &[x]).unwrap().value;
        let b = m.partial(&[1], &[-x]).unwrap().value;
        prop_assert!((a + b).abs() <= 1e-9);
    }
}
