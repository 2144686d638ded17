//! Test functions, convergence experiments and log-log fits.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use libm::{exp, log, pow, sqrt};

use crate::cardinal::{synthesize_with, CardinalTable, SynthesisConfig};
use crate::interp::{bspline, lp_error, sample, Interpolant, Window};
use crate::kernel::MultiquadricParams;
use crate::lattice::IndexBox;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    /// Tensor product of centered B-splines of degree `n`.
    BsplineDegree,
    /// Radial `(1 − |x|²/R²)₊^k`.
    TruncatedPower,
    /// Radial `exp(1 − 1/(1 − |x|²/R²))`, smooth; the order is only declared.
    GaussianBump,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::BsplineDegree => "bspline_degree",
            Family::TruncatedPower => "truncated_power",
            Family::GaussianBump => "gaussian_bump",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bspline" | "bspline_degree" => Some(Family::BsplineDegree),
            "truncated_power" | "truncated" => Some(Family::TruncatedPower),
            "gaussian_bump" | "bump" => Some(Family::GaussianBump),
            _ => None,
        }
    }
}

/// Anything `run_convergence` can interpolate.
pub trait TargetFunction {
    fn eval(&self, x: &[f64]) -> f64;
    /// Declared `k` with `g ∈ W^k_∞`.
    fn smoothness_order(&self) -> usize;
    fn support_radius(&self) -> f64;
    fn dim(&self) -> usize;
    fn family_name(&self) -> &str;
    fn id(&self) -> String;
}

/// Compactly supported test function with peak value 1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFunction {
    pub family: Family,
    pub order: usize,
    pub dim: usize,
    pub support_radius: f64,
    peak: f64,
}

pub fn make_test_function(family: Family, order: usize, dim: usize, support_radius: f64) -> Result<TestFunction> {
    if order == 0 {
        return Err(Error::Unsupported("test functions need order >= 1"));
    }
    if dim == 0 || dim > 3 {
        return Err(Error::Unsupported("test functions are provided for dimensions 1 to 3"));
    }
    if !(support_radius > 0.0) || !support_radius.is_finite() {
        return Err(Error::Domain { what: "support radius", value: support_radius });
    }
    let peak = match family {
        Family::BsplineDegree if order > 12 => return Err(Error::Unsupported("B-spline degree above 12")),
        Family::BsplineDegree => bspline(order + 1, 0.0),
        Family::TruncatedPower if order > 16 => return Err(Error::Unsupported("truncated power above 16")),
        _ => 1.0,
    };
    Ok(TestFunction { family, order, dim, support_radius, peak })
}

impl TargetFunction for TestFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        let r = self.support_radius;
        match self.family {
            Family::BsplineDegree => {
                let m = self.order + 1;
                let s = m as f64 / (2.0 * r);
                x.iter().map(|&xi| bspline(m, xi * s) / self.peak).product()
            }
            Family::TruncatedPower => {
                let t = 1.0 - x.iter().map(|v| v * v).sum::<f64>() / (r * r);
                if t <= 0.0 {
                    0.0
                } else {
                    pow(t, self.order as f64)
                }
            }
            Family::GaussianBump => {
                let t = 1.0 - x.iter().map(|v| v * v).sum::<f64>() / (r * r);
                if t <= 0.0 {
                    0.0
                } else {
                    exp(1.0 - 1.0 / t)
                }
            }
        }
    }

    fn smoothness_order(&self) -> usize {
        self.order
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn family_name(&self) -> &str {
        self.family.name()
    }

    fn id(&self) -> String {
        format!("{}_{}", self.family.name(), self.order)
    }
}

/// `g ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFunction {
    pub dim: usize,
    pub support_radius: f64,
}

impl TargetFunction for ZeroFunction {
    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn smoothness_order(&self) -> usize {
        usize::MAX
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn family_name(&self) -> &str {
        "zero"
    }

    fn id(&self) -> String {
        String::from("zero")
    }
}

/// Supplies cardinal tables; implementations may cache.
pub trait TableSource {
    fn table(&mut self, params: &MultiquadricParams, cfg: &SynthesisConfig) -> Result<Arc<CardinalTable>>;
}

/// Synthesizes every request afresh.
#[derive(Debug, Default, Clone, Copy)]
pub struct Synthesizer;

impl TableSource for Synthesizer {
    fn table(&mut self, params: &MultiquadricParams, cfg: &SynthesisConfig) -> Result<Arc<CardinalTable>> {
        synthesize_with(params, cfg).map(Arc::new)
    }
}

/// Millisecond clock; the core crate has no time source of its own.
pub trait Clock {
    fn now_ms(&mut self) -> f64;
}

/// Always reads zero, so reports are reproducible.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&mut self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceOptions {
    /// Window half-width as a multiple of the support radius.
    pub window_factor: f64,
    /// Error grid points per lattice step; also the table oversampling.
    pub points_per_h: usize,
    pub table_accuracy: f64,
    /// Upper bound on table work, in complex entries.
    pub max_grid_points: usize,
}

impl ConvergenceOptions {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            Self { window_factor: 1.5, points_per_h: 16, table_accuracy: 1e-10, max_grid_points: 1 << 24 }
        } else {
            Self { window_factor: 1.5, points_per_h: 4, table_accuracy: 1e-7, max_grid_points: 1 << 25 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    pub table_accuracy: f64,
    pub grid_step: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EocPair {
    pub h_from: f64,
    pub h_to: f64,
    /// `None` when either error is zero.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub dim: usize,
    #[cfg_attr(feature = "serde", serde(with = "norm_exponent"))]
    pub p: f64,
    pub test_function: String,
    pub family: String,
    pub smoothness_order: usize,
    pub window: Window,
    pub rows: Vec<ConvergenceRow>,
    pub eoc_pairs: Vec<EocPair>,
    pub fitted_slope: Option<f64>,
    pub fit_residual: Option<f64>,
}

impl ConvergenceReport {
    /// One-sided rate gate: `fitted_slope ≥ k − margin`.
    pub fn meets_rate(&self, margin: f64) -> bool {
        match self.fitted_slope {
            Some(s) => s >= self.smoothness_order as f64 - margin,
            None => false,
        }
    }

    /// Nonincreasing errors, allowing one inversion of at most 5%.
    pub fn errors_monotone(&self) -> bool {
        let mut inversions = 0;
        for w in self.rows.windows(2) {
            if w[1].error > w[0].error {
                if w[1].error > 1.05 * w[0].error {
                    return false;
                }
                inversions += 1;
            }
        }
        inversions <= 1
    }

    pub fn last_eoc(&self) -> Option<f64> {
        self.eoc_pairs.last().and_then(|e| e.order)
    }
}

/// Serializes `p = ∞` as the string `"inf"`.
#[cfg(feature = "serde")]
pub mod norm_exponent {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> core::result::Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<'a> {
            Num(f64),
            Str(&'a str),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str("inf") => Ok(f64::INFINITY),
            Repr::Str(_) => Err(D::Error::custom("expected a number or \"inf\"")),
        }
    }
}

/// `L_p` error of the scale-matched interpolant for each `h`, with EOCs
/// and a log-log slope fit.
pub fn run_convergence(
    alpha: f64,
    p: f64,
    tf: &dyn TargetFunction,
    h_list: &[f64],
    opts: &ConvergenceOptions,
    tables: &mut dyn TableSource,
    clock: &mut dyn Clock,
) -> Result<ConvergenceReport> {
    let d = tf.dim();
    if !(p >= 1.0) {
        return Err(Error::Domain { what: "norm exponent p", value: p });
    }
    if h_list.len() < 4 && !(d > 1 && h_list.len() >= 3) {
        return Err(Error::InvalidParams("need at least four lattice spacings (three in d > 1)"));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) || h_list.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
        return Err(Error::InvalidParams("lattice spacings must lie in (0, 1] and strictly decrease"));
    }
    if !(tf.smoothness_order() as f64 > d as f64 / p) {
        return Err(Error::Unsupported("smoothness order must exceed d/p"));
    }
    let probe = MultiquadricParams::new(alpha, 1.0, d)?;
    if !probe.in_convergence_range() && !(alpha == -1.0 && d == 1) {
        return Err(Error::ParameterRange { alpha, requirement: "alpha >= 1/2, alpha < -d - 1/2, or the univariate Poisson case" });
    }
    let support = tf.support_radius();
    let half = support * opts.window_factor;
    let window = Window::cube(d, half);
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let start = clock.now_ms();
        let params = MultiquadricParams::new(alpha, 1.0 / h, d)?;
        let jmax = libm::floor(support / h + 1e-9) as i64;
        let samples = sample(|x| tf.eval(x), h, IndexBox::symmetric(d, jmax))?;
        let radius = half / h + jmax as f64 + 1.0;
        let mut cfg = SynthesisConfig::new(opts.table_accuracy, radius).with_points_per_unit(opts.points_per_h);
        cfg.max_grid_points = opts.max_grid_points;
        let table = tables.table(&params, &cfg)?;
        let interp = Interpolant::with_table(table, samples)?;
        let step = h / opts.points_per_h as f64;
        let error = lp_error(|x| interp.eval(x), |x| Ok(tf.eval(x)), p, &window, step)?;
        let runtime_ms = clock.now_ms() - start;
        rows.push(ConvergenceRow { h, error, table_accuracy: interp.accuracy(), grid_step: step, runtime_ms });
    }
    let eoc_pairs = rows
        .windows(2)
        .map(|w| EocPair {
            h_from: w[0].h,
            h_to: w[1].h,
            order: if w[0].error > 0.0 && w[1].error > 0.0 {
                Some(log(w[0].error / w[1].error) / log(w[0].h / w[1].h))
            } else {
                None
            },
        })
        .collect();
    let fit = if rows.iter().all(|r| r.error > 0.0) {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.error)).collect();
        loglog_slope(&pts).ok()
    } else {
        None
    };
    Ok(ConvergenceReport {
        alpha,
        dim: d,
        p,
        test_function: tf.id(),
        family: String::from(tf.family_name()),
        smoothness_order: tf.smoothness_order(),
        window,
        rows,
        eoc_pairs,
        fitted_slope: fit.map(|f| f.0),
        fit_residual: fit.map(|f| f.1),
    })
}

/// Least-squares slope of `ln y` against `ln x`, with the residual norm.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::DegenerateAbscissa);
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::Domain { what: "log-log fit needs positive finite data", value: f64::NAN });
    }
    let lx: Vec<f64> = points.iter().map(|p| log(p.0)).collect();
    let ly: Vec<f64> = points.iter().map(|p| log(p.1)).collect();
    let n = lx.len() as f64;
    let mx = crate::sum::sum(lx.iter().copied()) / n;
    let my = crate::sum::sum(ly.iter().copied()) / n;
    let sxx = crate::sum::sum(lx.iter().map(|x| (x - mx) * (x - mx)));
    if !(sxx > 1e-24) {
        return Err(Error::DegenerateAbscissa);
    }
    let sxy = crate::sum::sum(lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let res = crate::sum::sum(lx.iter().zip(&ly).map(|(x, y)| {
        let r = y - my - slope * (x - mx);
        r * r
    }));
    Ok((slope, sqrt(res)))
}
