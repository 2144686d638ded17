use std::f64::consts::PI;
use std::sync::Arc;

use mqci_core::cardinal::{symbol_coefficients, synthesize_with, CoefficientKind, SynthesisConfig};
use mqci_core::interp::*;
use mqci_core::kernel::MultiquadricParams;
use mqci_core::lattice::IndexBox;
use proptest::prelude::*;

fn bump(x: &[f64]) -> f64 {
    let t = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
    if t > 0.0 {
        t * t * t
    } else {
        0.0
    }
}

fn interpolant(alpha: f64, h: f64, g: impl Fn(&[f64]) -> f64) -> Interpolant {
    let s = sample(g, h, IndexBox::symmetric(1, (1.0 / h) as i64 + 2)).unwrap();
    Interpolant::build(alpha, s, 1e-10, 2.0).unwrap()
}

#[test]
fn interpolant_reproduces_samples() {
    for &alpha in &[0.5, -2.5, -1.0] {
        let it = interpolant(alpha, 0.25, bump);
        for j in -6..=6 {
            let x = 0.25 * j as f64;
            assert!((it.eval(&[x]).unwrap() - bump(&[x])).abs() <= it.accuracy(), "alpha {alpha} j {j}");
        }
    }
}

#[test]
fn interpolant_is_linear() {
    let h = 0.125;
    let f = |x: &[f64]| bump(x);
    let g = |x: &[f64]| (1.0 - x[0].abs()).max(0.0);
    let b = IndexBox::symmetric(1, 10);
    let sf = sample(f, h, b.clone()).unwrap();
    let sg = sample(g, h, b).unwrap();
    let combo = sf.scaled(2.0).add(&sg.scaled(-0.5)).unwrap();
    let p = MultiquadricParams::new(0.5, 1.0 / h, 1).unwrap();
    let table = Arc::new(synthesize_with(&p, &SynthesisConfig::new(1e-10, 26.0)).unwrap());
    let i_f = Interpolant::with_table(table.clone(), sf).unwrap();
    let i_g = Interpolant::with_table(table.clone(), sg).unwrap();
    let i_c = Interpolant::with_table(table, combo).unwrap();
    for k in 0..40 {
        let x = [-1.7 + 0.0871 * k as f64];
        let lhs = i_c.eval(&x).unwrap();
        let rhs = 2.0 * i_f.eval(&x).unwrap() - 0.5 * i_g.eval(&x).unwrap();
        assert!((lhs - rhs).abs() <= 1e-13);
    }
}

#[test]
fn shifting_samples_translates_the_interpolant() {
    let h = 0.25;
    let s = sample(bump, h, IndexBox::symmetric(1, 4)).unwrap();
    let moved = s.shifted(0, 1);
    let p = MultiquadricParams::new(-2.5, 1.0 / h, 1).unwrap();
    let table = Arc::new(synthesize_with(&p, &SynthesisConfig::new(1e-10, 16.0)).unwrap());
    let a = Interpolant::with_table(table.clone(), s).unwrap();
    let b = Interpolant::with_table(table, moved).unwrap();
    for k in 0..30 {
        let x = -1.5 + 0.1013 * k as f64;
        let d = (b.eval(&[x + h]).unwrap() - a.eval(&[x]).unwrap()).abs();
        assert!(d <= 2.0 * a.accuracy() + 1e-12, "{d}");
    }
}

#[test]
fn table_must_match_the_spacing() {
    let s = sample(bump, 0.25, IndexBox::symmetric(1, 4)).unwrap();
    let p = MultiquadricParams::new(0.5, 2.0, 1).unwrap();
    let table = Arc::new(synthesize_with(&p, &SynthesisConfig::new(1e-8, 8.0)).unwrap());
    assert!(Interpolant::with_table(table, s).is_err());
}

#[test]
fn cardinal_and_phi_forms_agree() {
    let h = 0.25;
    let s = sample(bump, h, IndexBox::symmetric(1, 4)).unwrap();
    let gmax = s.max_abs();
    let it = Interpolant::build(-2.5, s, 1e-10, 2.0).unwrap();
    let p = MultiquadricParams::new(-2.5, 1.0 / h, 1).unwrap();
    let a = symbol_coefficients(&p, CoefficientKind::SymbolP, 64, 512).unwrap();
    let form = it.phi_form(&a).unwrap();
    for k in 0..100 {
        let x = [-2.0 + 4.0 * (k as f64 + 0.5) / 100.0];
        let d = (it.eval(&x).unwrap() - form.eval(&x).unwrap()).abs();
        assert!(d <= 1e-6 * gmax, "x {:?}: {d}", x);
    }
    assert!(form.tail_bound() <= 1e-6);
}

#[test]
fn phi_form_needs_periodic_symbol() {
    let it = interpolant(0.5, 0.25, bump);
    let p = MultiquadricParams::new(-2.5, 4.0, 1).unwrap();
    let a = symbol_coefficients(&p, CoefficientKind::SymbolP, 16, 128).unwrap();
    assert!(it.phi_form(&a).is_err());
}

#[test]
fn fourier_identity_holds_in_band() {
    for &(h, k) in &[(0.25, 4usize), (0.125, 6)] {
        let f = SincPower::in_band(k, 1, h, 0.8);
        let r = fourier_identity_residual(&f, h, 0.5, &IdentityConfig::default()).unwrap();
        assert!(r.residual <= 1e-6, "h {h}: {r:?}");
        assert!(r.reference_norm > 0.1);
    }
}

#[test]
fn fourier_identity_of_zero_is_zero() {
    let mut f = SincPower::in_band(4, 1, 0.25, 0.8);
    f.amplitude = 0.0;
    assert_eq!(fourier_identity_residual(&f, 0.25, 0.5, &IdentityConfig::default()).unwrap().residual, 0.0);
}

#[test]
fn out_of_band_function_is_rejected() {
    let f = SincPower::in_band(4, 1, 0.25, 1.2);
    assert!(fourier_identity_residual(&f, 0.25, 0.5, &IdentityConfig::default()).is_err());
}

#[test]
fn sinc_power_transform_pair() {
    // f(0) = (2π)^{-1} ∫ f̂.
    let f = SincPower::in_band(4, 1, 0.25, 0.8);
    let (x, w) = mqci_core::quad::composite(&[-f.band_edge(), -0.5 * f.band_edge(), 0.0, 0.5 * f.band_edge(), f.band_edge()], 20);
    let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * f.hat(&[*x])).sum();
    assert!((integral / (2.0 * PI) - f.eval(&[0.0])).abs() < 1e-13);
}

#[test]
fn lp_norm_of_a_constant() {
    let w = Window::cube(2, 1.5);
    for &p in &[1.0, 2.0, 3.5] {
        let n = lp_norm(|_| Ok(2.0), p, &w, 0.25).unwrap();
        assert!((n - 2.0 * w.measure().powf(1.0 / p)).abs() < 1e-12);
    }
    assert_eq!(lp_norm(|x| Ok(x[0] - x[1]), f64::INFINITY, &w, 0.25).unwrap(), 3.0);
    assert!(lp_norm(|_| Ok(1.0), 0.5, &w, 0.25).is_err());
    assert!(lp_norm(|_| Ok(1.0), 2.0, &w, 0.4).is_err());
}

#[test]
fn bspline_reference_values() {
    assert!((bspline(4, 0.0) - 2.0 / 3.0).abs() < 1e-15);
    assert!((bspline(4, 1.0) - 1.0 / 6.0).abs() < 1e-15);
    assert!((bspline(3, 0.5) - 0.5).abs() < 1e-15);
    assert_eq!(bspline(3, 1.5), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bsplines_partition_unity(m in 1usize..10, t in -0.5f64..0.5) {
        let s: f64 = (-12..=12).map(|j| bspline(m, t - j as f64)).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_norms_respect_hoelder(p in 1.0f64..6.0, a in -2.0f64..2.0) {
        let w = Window::cube(1, 1.0);
        let f = |x: &[f64]| Ok((a * x[0]).sin() + 0.3);
        let l1 = lp_norm(f, 1.0, &w, 1.0 / 64.0).unwrap();
        let lp = lp_norm(f, p, &w, 1.0 / 64.0).unwrap();
        prop_assert!(l1 <= w.measure().powf(1.0 - 1.0 / p) * lp * (1.0 + 1e-12));
    }
}
