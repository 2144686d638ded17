//! The lattice interpolant `I^h g(x) = Σ_j g(hj) L_{α,1/h}(x/h − j)`, its
//! φ-basis form, discrete `L_p` norms and the Fourier-side identity check.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{fabs, floor, pow, round, sin};

use crate::cardinal::{
    convolve, eval_cardinal, phi_series_tail, synthesize_with, CardinalTable, CoefficientKind, CoefficientSequence,
    SynthesisConfig,
};
use crate::kernel::{cardinal_spectrum_with_period, MultiquadricParams, PeriodizationConfig};
use crate::lattice::IndexBox;
use crate::quad::composite;
use crate::sum::Accumulator;
use crate::{Error, Result};

/// Samples `g(hj)` on an index box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeSamples {
    pub h: f64,
    pub index_box: IndexBox,
    pub values: Vec<f64>,
}

impl LatticeSamples {
    pub fn new(h: f64, index_box: IndexBox, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain { what: "lattice spacing h", value: h });
        }
        if values.len() != index_box.len() {
            return Err(Error::InvalidParams("sample count does not match the index box"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("samples must be finite"));
        }
        Ok(Self { h, index_box, values })
    }

    pub fn dim(&self) -> usize {
        self.index_box.dim()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(fabs(*v)))
    }

    pub fn l1(&self) -> f64 {
        crate::sum::sum(self.values.iter().map(|v| fabs(*v)))
    }

    /// Largest `|j|_∞` in the box.
    pub fn index_reach(&self) -> i64 {
        self.index_box.lo.iter().chain(&self.index_box.hi).map(|v| v.abs()).max().unwrap_or(0)
    }

    /// The same data moved by `by` lattice steps along `axis`.
    pub fn shifted(&self, axis: usize, by: i64) -> Self {
        let mut b = self.index_box.clone();
        b.lo[axis] += by;
        b.hi[axis] += by;
        Self { h: self.h, index_box: b, values: self.values.clone() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { h: self.h, index_box: self.index_box.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Pointwise sum of samples on the same box.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.index_box != other.index_box || self.h != other.h {
            return Err(Error::InvalidParams("samples must share h and index box"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { h: self.h, index_box: self.index_box.clone(), values })
    }
}

/// `values[j] = f(hj)` over the box.
pub fn sample(f: impl Fn(&[f64]) -> f64, h: f64, index_box: IndexBox) -> Result<LatticeSamples> {
    let d = index_box.dim();
    let mut values = Vec::with_capacity(index_box.len());
    let mut x = vec![0.0; d];
    index_box.for_each(|j| {
        for a in 0..d {
            x[a] = h * j[a] as f64;
        }
        values.push(f(&x));
    });
    LatticeSamples::new(h, index_box, values)
}

/// Scale-matched interpolant: the table is for `c = 1/h`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    params: MultiquadricParams,
    h: f64,
    samples: LatticeSamples,
    table: Arc<CardinalTable>,
    truncation_radius: usize,
    active: Vec<(Vec<i64>, f64)>,
}

impl Interpolant {
    /// Table radius (in `x/h` units) needed to evaluate on `|x|_∞ ≤ eval_radius`.
    pub fn required_table_radius(samples: &LatticeSamples, eval_radius: f64) -> f64 {
        eval_radius / samples.h + samples.index_reach() as f64
    }

    /// Synthesize a matching table and wrap it.
    pub fn build(alpha: f64, samples: LatticeSamples, accuracy: f64, eval_radius: f64) -> Result<Self> {
        let params = MultiquadricParams::new(alpha, 1.0 / samples.h, samples.dim())?;
        let cfg = SynthesisConfig::new(accuracy, Self::required_table_radius(&samples, eval_radius));
        let table = Arc::new(synthesize_with(&params, &cfg)?);
        Self::with_table(table, samples)
    }

    /// Wrap an existing table; it must be for `c = 1/h` and the sample dimension.
    pub fn with_table(table: Arc<CardinalTable>, samples: LatticeSamples) -> Result<Self> {
        let params = *table.params();
        if params.dim() != samples.dim() {
            return Err(Error::InvalidParams("table and samples differ in dimension"));
        }
        if fabs(params.c() * samples.h - 1.0) > 1e-12 {
            return Err(Error::InvalidParams("table shape parameter must equal 1/h"));
        }
        let mut active = Vec::new();
        let mut slot = 0;
        samples.index_box.for_each(|j| {
            let v = samples.values[slot];
            if v != 0.0 {
                active.push((j.to_vec(), v));
            }
            slot += 1;
        });
        let truncation_radius = floor(table.spatial_radius()) as usize;
        Ok(Self { params, h: samples.h, samples, table, truncation_radius, active })
    }

    pub fn params(&self) -> &MultiquadricParams {
        &self.params
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn samples(&self) -> &LatticeSamples {
        &self.samples
    }

    pub fn table(&self) -> &Arc<CardinalTable> {
        &self.table
    }

    pub fn truncation_radius(&self) -> usize {
        self.truncation_radius
    }

    /// Error bound on each value from table accuracy alone.
    pub fn accuracy(&self) -> f64 {
        self.table.accuracy_estimate() * self.samples.l1().max(1.0)
    }

    /// `Σ_j g(hj) L(x/h − j)` over the nonzero samples.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let d = self.params.dim();
        if x.len() != d {
            return Err(Error::InvalidParams("point dimension does not match interpolant"));
        }
        let mut y = [0.0; 8];
        let mut acc = Accumulator::new();
        for (j, v) in &self.active {
            for a in 0..d {
                y[a] = x[a] / self.h - j[a] as f64;
            }
            acc.add(v * eval_cardinal(&self.table, &y[..d])?);
        }
        Ok(acc.value())
    }

    /// φ-basis weights `(a ⋆ g)_m` for coefficients of the dilated params.
    pub fn phi_form(&self, coeffs: &CoefficientSequence) -> Result<PhiForm> {
        if !self.params.has_periodic_symbol() {
            return Err(Error::ParameterRange { alpha: self.params.alpha(), requirement: "alpha < -d - 1/2" });
        }
        if coeffs.kind != CoefficientKind::SymbolP || coeffs.dim != self.params.dim() {
            return Err(Error::InvalidParams("phi form needs symbol_P coefficients of matching dimension"));
        }
        let (index_box, weights) = convolve(&coeffs.index_box(), &coeffs.values, &self.samples.index_box, &self.samples.values);
        let reach = self.table.spatial_radius();
        let tail_bound = phi_series_tail(&self.params, coeffs, reach, self.samples.l1());
        Ok(PhiForm { params: self.params, h: self.h, index_box, weights, tail_bound })
    }
}

/// `I^h g(x) = Σ_m w_m φ_{α,1/h}(x/h − m)`.
#[derive(Debug, Clone)]
pub struct PhiForm {
    params: MultiquadricParams,
    h: f64,
    index_box: IndexBox,
    weights: Vec<f64>,
    tail_bound: f64,
}

impl PhiForm {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index_box(&self) -> &IndexBox {
        &self.index_box
    }

    /// Estimated contribution of the coefficients cut off at the box edge.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let d = self.params.dim();
        if x.len() != d {
            return Err(Error::InvalidParams("point dimension does not match interpolant"));
        }
        let mut y = vec![0.0; d];
        let mut acc = Accumulator::new();
        let mut slot = 0;
        self.index_box.for_each(|m| {
            for a in 0..d {
                y[a] = x[a] / self.h - m[a] as f64;
            }
            acc.add(self.weights[slot] * self.params.phi(&y));
            slot += 1;
        });
        Ok(acc.value())
    }
}

/// Evaluate the φ-form of `interp` at `x`.
pub fn eval_phi_form(interp: &Interpolant, coeffs: &CoefficientSequence, x: &[f64]) -> Result<f64> {
    interp.phi_form(coeffs)?.eval(x)
}

/// An axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self { lo: vec![-half_width; dim], hi: vec![half_width; dim] }
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Trapezoid-weighted discrete `L_p` norm of `f` over the window;
/// `p = ∞` gives the grid maximum.
pub fn lp_norm(f: impl Fn(&[f64]) -> Result<f64>, p: f64, window: &Window, grid_step: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain { what: "norm exponent p", value: p });
    }
    if !(grid_step > 0.0) {
        return Err(Error::Domain { what: "grid step", value: grid_step });
    }
    let d = window.lo.len();
    if d == 0 || window.hi.len() != d {
        return Err(Error::InvalidParams("window bounds must have equal, nonzero length"));
    }
    let mut counts = Vec::with_capacity(d);
    for a in 0..d {
        let n = (window.hi[a] - window.lo[a]) / grid_step;
        let k = round(n);
        if !(k >= 1.0) || fabs(n - k) > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidParams("grid step must divide the window evenly"));
        }
        counts.push(k as i64);
    }
    let grid = IndexBox::new(vec![0; d], counts.clone())?;
    let mut x = vec![0.0; d];
    let mut acc = Accumulator::new();
    let mut worst: f64 = 0.0;
    let mut err = None;
    grid.for_each(|i| {
        if err.is_some() {
            return;
        }
        let mut w = 1.0;
        for a in 0..d {
            x[a] = window.lo[a] + i[a] as f64 * grid_step;
            w *= if i[a] == 0 || i[a] == counts[a] { 0.5 * grid_step } else { grid_step };
        }
        match f(&x) {
            Ok(v) => {
                let v = fabs(v);
                if p.is_infinite() {
                    worst = worst.max(v);
                } else {
                    acc.add(w * pow(v, p));
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(if p.is_infinite() { worst } else { pow(acc.value(), 1.0 / p) })
}

/// `‖u − v‖_p` on the window grid.
pub fn lp_error(
    u: impl Fn(&[f64]) -> Result<f64>,
    v: impl Fn(&[f64]) -> Result<f64>,
    p: f64,
    window: &Window,
    grid_step: f64,
) -> Result<f64> {
    lp_norm(|x| Ok(u(x)? - v(x)?), p, window, grid_step)
}

/// `f(x) = A Π_i sinc(a x_i)^k` with `sinc t = sin t / t`.
///
/// `f̂(ξ) = A Π_i (π/a) B_k(ξ_i/(2a))` with `B_k` the centered cardinal
/// B-spline of order `k`, supported on `|ξ_i| ≤ k a`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SincPower {
    pub power: usize,
    pub scale: f64,
    pub amplitude: f64,
    pub dim: usize,
}

impl SincPower {
    /// Band edge `k a` placed at `fraction · π/h`.
    pub fn in_band(power: usize, dim: usize, h: f64, fraction: f64) -> Self {
        Self { power, scale: fraction * PI / (power as f64 * h), amplitude: 1.0, dim }
    }

    pub fn band_edge(&self) -> f64 {
        self.power as f64 * self.scale
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for &xi in x {
            let t = self.scale * xi;
            let s = if fabs(t) < 1e-8 { 1.0 - t * t / 6.0 } else { sin(t) / t };
            v *= pow(s, self.power as f64);
        }
        v
    }

    pub fn hat(&self, xi: &[f64]) -> f64 {
        let mut v = self.amplitude;
        for &w in xi {
            v *= PI / self.scale * bspline(self.power, w / (2.0 * self.scale));
        }
        v
    }
}

/// Centered cardinal B-spline of order `m` (degree `m − 1`), unit integral.
pub fn bspline(m: usize, t: f64) -> f64 {
    let half = m as f64 / 2.0;
    if fabs(t) >= half {
        return 0.0;
    }
    // Evaluate on the nearer side of the center for accuracy.
    let t = -fabs(t);
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for k in 1..m {
        fact *= k as f64;
    }
    for i in 0..=m {
        let arg = t + half - i as f64;
        if arg <= 0.0 {
            break;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * pow(arg, (m - 1) as f64);
        binom = binom * (m - i) as f64 / (i + 1) as f64;
    }
    acc / fact
}

/// Settings for [`fourier_identity_residual`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityConfig {
    /// Half-width of the comparison window.
    pub window: f64,
    /// Comparison grid points per lattice step `h`.
    pub points_per_h: usize,
    /// Samples with `|f(hj)| ≤ cutoff · max|f|` beyond this are dropped.
    pub sample_cutoff: f64,
    /// Accuracy requested from the spatial cardinal table.
    pub table_accuracy: f64,
    /// Gauss points per B-spline knot interval.
    pub gauss_order: usize,
    pub periodization: PeriodizationConfig,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            window: 2.0,
            points_per_h: 4,
            sample_cutoff: 1e-11,
            table_accuracy: 1e-10,
            gauss_order: 24,
            periodization: PeriodizationConfig::default(),
        }
    }
}

/// The two sides of `Î^h f = (Σ_j f̂(· − 2πj/h)) m_{α,h}` compared in space.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentityReport {
    /// Relative discrete `L_2` difference over the window.
    pub residual: f64,
    /// Discrete `L_2` norm of the Fourier-side evaluation.
    pub reference_norm: f64,
    pub table_accuracy: f64,
    pub samples_used: usize,
}

/// Compare the spatially evaluated interpolant of an in-band `f` with the
/// inverse transform of `f̂·m_{α,h}` (one alias term per cell, since
/// `f̂` lives inside the fundamental cell).
pub fn fourier_identity_residual(f: &SincPower, h: f64, alpha: f64, cfg: &IdentityConfig) -> Result<IdentityReport> {
    let d = f.dim;
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Domain { what: "lattice spacing h", value: h });
    }
    if !(f.band_edge() < PI / h) {
        return Err(Error::InvalidParams("test function is not strictly inside the band"));
    }
    if f.amplitude == 0.0 {
        return Ok(IdentityReport { residual: 0.0, reference_norm: 0.0, table_accuracy: 0.0, samples_used: 0 });
    }
    let params = MultiquadricParams::new(alpha, 1.0 / h, d)?;
    let q = cfg.points_per_h;

    // Spatial side: truncate where |f| ≤ cutoff; sinc^k decays like |a x|^{-k}.
    let reach = pow(cfg.sample_cutoff, -1.0 / f.power as f64) / f.scale;
    let jmax = libm::ceil(reach / h) as i64;
    let samples = sample(|x| f.eval(x), h, IndexBox::symmetric(d, jmax))?;
    let scfg = SynthesisConfig::new(cfg.table_accuracy, cfg.window / h + jmax as f64).with_points_per_unit(q);
    let table = Arc::new(synthesize_with(&params, &scfg)?);
    let interp = Interpolant::with_table(table.clone(), samples)?;

    // Fourier side: Gauss panels between the B-spline knots of f̂.
    let k = f.power;
    let knots: Vec<f64> = (0..=k).map(|i| 2.0 * f.scale * (i as f64 - k as f64 / 2.0)).collect();
    let (nodes, weights) = composite(&knots, cfg.gauss_order);
    let period = 2.0 * PI / h;
    let unit = MultiquadricParams::new(alpha, 1.0, d)?;
    // Aliased multiplier values m(ξ0 + 2πℓ/h) for |ℓ|_∞ ≤ L.
    let lmax = 3i64;
    let lbox = IndexBox::symmetric(d, lmax);
    let nbox = IndexBox::new(vec![0; d], vec![nodes.len() as i64 - 1; d])?;
    let mut rows: Vec<(Vec<f64>, f64, Vec<f64>)> = Vec::new();
    let mut xi = vec![0.0; d];
    let mut err = None;
    nbox.for_each(|n| {
        if err.is_some() {
            return;
        }
        let mut w = 1.0;
        for a in 0..d {
            xi[a] = nodes[n[a] as usize];
            w *= weights[n[a] as usize];
        }
        let fh = f.hat(&xi);
        if fh == 0.0 {
            return;
        }
        let mut ms = Vec::with_capacity(lbox.len());
        let mut shifted = vec![0.0; d];
        lbox.for_each(|l| {
            for a in 0..d {
                shifted[a] = xi[a] + period * l[a] as f64;
            }
            match cardinal_spectrum_with_period(&unit, &shifted, period, &cfg.periodization) {
                Ok(v) => ms.push(v),
                Err(e) => {
                    err.get_or_insert(e);
                    ms.push(0.0);
                }
            }
        });
        rows.push((xi.clone(), w * fh, ms));
    });
    if let Some(e) = err {
        return Err(e);
    }
    let norm = pow(2.0 * PI, -(d as f64));
    let fourier_side = |x: &[f64]| -> f64 {
        let mut acc = Accumulator::new();
        for (xi0, wf, ms) in &rows {
            let mut li = 0;
            lbox.for_each(|l| {
                let mut phase = 0.0;
                for a in 0..d {
                    phase += x[a] * (xi0[a] + period * l[a] as f64);
                }
                acc.add(wf * ms[li] * libm::cos(phase));
                li += 1;
            });
        }
        norm * acc.value()
    };

    let window = Window::cube(d, cfg.window);
    let step = h / q as f64;
    let diff = lp_error(|x| interp.eval(x), |x| Ok(fourier_side(x)), 2.0, &window, step)?;
    let reference = lp_norm(|x| Ok(fourier_side(x)), 2.0, &window, step)?;
    Ok(IdentityReport {
        residual: diff / reference,
        reference_norm: reference,
        table_accuracy: table.accuracy_estimate(),
        samples_used: interp.active.len(),
    })
}
