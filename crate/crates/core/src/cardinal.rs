//! Spatial cardinal functions `L_{α,c}` and the coefficient sequences of the
//! periodic symbol.
//!
//! Synthesis folds the spectrum into the fundamental cell. With `T` offset
//! samples per axis, `ξ0_n = (n + 1/2 − T/2)·2π/T`, the inverse transform at
//! `x = u + s/q` (integer `u`, sub-offset `s ∈ [0, q)`) becomes
//!
//! `L(x) ≈ T^{-d} Σ_n e^{i ξ0_n·x} Σ_{|k|_∞ ≤ K} L̂(ξ0_n + 2πk) e^{2πi k·s/q}`,
//!
//! one size-`T` FFT per sub-offset. The discretization error is the sum of
//! the images `L(x + mT)`, which vanish at integer `x` up to band truncation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{exp, fabs, floor, log, pow, sqrt};

use crate::bench::loglog_slope;
use crate::fft::{inverse_nd, Complex, Plan};
use crate::kernel::{cardinal_spectrum, norm, periodic_symbol_p, MultiquadricParams, PeriodizationConfig};
use crate::lattice::{for_each_in_shell, shell_count, IndexBox};
use crate::sum::Accumulator;
use crate::{Error, Result};

/// Knobs for [`synthesize_with`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthesisConfig {
    /// Bound on the tabulated error at grid nodes.
    pub target_accuracy: f64,
    /// Half-width of the tabulated box.
    pub spatial_radius: f64,
    /// Table nodes per unit length; `None` picks the smallest power of two
    /// with step at most `π/(4Ξ)`.
    pub points_per_unit: Option<usize>,
    /// Cap on complex transform buffer entries, `q^d·T^d`.
    pub max_grid_points: usize,
    /// Extra spectral cells beyond the automatically chosen band.
    pub band_extra: usize,
    /// Multiplier (power of two) on the automatically chosen period.
    pub period_factor: usize,
    pub periodization: PeriodizationConfig,
}

impl SynthesisConfig {
    pub fn new(target_accuracy: f64, spatial_radius: f64) -> Self {
        Self {
            target_accuracy,
            spatial_radius,
            points_per_unit: None,
            max_grid_points: 1 << 24,
            band_extra: 0,
            period_factor: 1,
            periodization: PeriodizationConfig::default(),
        }
    }

    pub fn with_points_per_unit(mut self, q: usize) -> Self {
        self.points_per_unit = Some(q);
        self
    }
}

/// Tabulated `L_{α,c}` on `[-R', R']^d` with step `1/q`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CardinalTable {
    params: MultiquadricParams,
    points_per_unit: usize,
    spatial_radius: f64,
    half_nodes: usize,
    #[cfg_attr(feature = "serde", serde(skip))]
    samples: Vec<f64>,
    fourier_cutoff: f64,
    alias_period: f64,
    accuracy_estimate: f64,
    tail_estimate: f64,
    alias_estimate: f64,
    decay_constant: f64,
    interpolation_bound: f64,
}

/// Everything needed to rebuild a [`CardinalTable`] without resynthesis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TableParts {
    pub alpha: f64,
    pub c: f64,
    pub dim: usize,
    pub points_per_unit: usize,
    pub spatial_radius: f64,
    pub half_nodes: usize,
    pub fourier_cutoff: f64,
    pub alias_period: f64,
    pub accuracy_estimate: f64,
    pub tail_estimate: f64,
    pub alias_estimate: f64,
    pub decay_constant: f64,
    pub interpolation_bound: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub samples: Vec<f64>,
}

impl CardinalTable {
    pub fn from_parts(p: TableParts) -> Result<Self> {
        let params = MultiquadricParams::new(p.alpha, p.c, p.dim)?;
        let side = 2 * p.half_nodes + 1;
        if p.points_per_unit == 0 || p.samples.len() != side.pow(p.dim as u32) {
            return Err(Error::InvalidParams("table sample count does not match its header"));
        }
        Ok(Self {
            params,
            points_per_unit: p.points_per_unit,
            spatial_radius: p.spatial_radius,
            half_nodes: p.half_nodes,
            samples: p.samples,
            fourier_cutoff: p.fourier_cutoff,
            alias_period: p.alias_period,
            accuracy_estimate: p.accuracy_estimate,
            tail_estimate: p.tail_estimate,
            alias_estimate: p.alias_estimate,
            decay_constant: p.decay_constant,
            interpolation_bound: p.interpolation_bound,
        })
    }

    pub fn to_parts(&self) -> TableParts {
        TableParts {
            alpha: self.params.alpha(),
            c: self.params.c(),
            dim: self.params.dim(),
            points_per_unit: self.points_per_unit,
            spatial_radius: self.spatial_radius,
            half_nodes: self.half_nodes,
            fourier_cutoff: self.fourier_cutoff,
            alias_period: self.alias_period,
            accuracy_estimate: self.accuracy_estimate,
            tail_estimate: self.tail_estimate,
            alias_estimate: self.alias_estimate,
            decay_constant: self.decay_constant,
            interpolation_bound: self.interpolation_bound,
            samples: self.samples.clone(),
        }
    }

    pub fn params(&self) -> &MultiquadricParams {
        &self.params
    }

    pub fn spatial_step(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    pub fn spatial_radius(&self) -> f64 {
        self.spatial_radius
    }

    /// Nodes per half axis; indices run over `[-half_nodes, half_nodes]^d`.
    pub fn half_nodes(&self) -> usize {
        self.half_nodes
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `Ξ`: the spectrum is kept on `|ξ|_∞ ≤ Ξ`.
    pub fn fourier_cutoff(&self) -> f64 {
        self.fourier_cutoff
    }

    /// Spatial period of the discrete transform.
    pub fn alias_period(&self) -> f64 {
        self.alias_period
    }

    pub fn accuracy_estimate(&self) -> f64 {
        self.accuracy_estimate
    }

    pub fn tail_estimate(&self) -> f64 {
        self.tail_estimate
    }

    pub fn alias_estimate(&self) -> f64 {
        self.alias_estimate
    }

    /// `A` in the far-field bound `|L(x)| ≤ A |x|^{-(d+2|ν|)}` measured by the pilot run.
    pub fn decay_constant(&self) -> f64 {
        self.decay_constant
    }

    /// Cubic-interpolation error bound from fourth differences.
    pub fn interpolation_bound(&self) -> f64 {
        self.interpolation_bound
    }

    fn side(&self) -> usize {
        2 * self.half_nodes + 1
    }

    /// Sample at node index `i` (units of the step); `None` outside the table.
    pub fn node(&self, i: &[i64]) -> Option<f64> {
        let h = self.half_nodes as i64;
        let mut idx = 0usize;
        for &v in i {
            if v.abs() > h {
                return None;
            }
            idx = idx * self.side() + (v + h) as usize;
        }
        Some(self.samples[idx])
    }

    /// `L` at an integer point `k`.
    pub fn at_integer(&self, k: &[i64]) -> Option<f64> {
        let q = self.points_per_unit as i64;
        let idx: Vec<i64> = k.iter().map(|v| v * q).collect();
        self.node(&idx)
    }

    /// `max |L(k) − δ_{0,k}|` over `|k|_∞ ≤ radius`.
    pub fn node_residual(&self, radius: i64) -> f64 {
        let mut worst: f64 = 0.0;
        IndexBox::symmetric(self.params.dim(), radius).for_each(|k| {
            if let Some(v) = self.at_integer(k) {
                let delta = if k.iter().all(|&x| x == 0) { 1.0 } else { 0.0 };
                worst = worst.max(fabs(v - delta));
            }
        });
        worst
    }

    /// Least-squares slope of the running-max envelope of `|L|` along the
    /// first axis over `lo ≤ x ≤ hi`.
    pub fn decay_slope(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let q = self.points_per_unit as f64;
        let top = self.half_nodes as i64;
        let d = self.params.dim();
        let mut idx = vec![0i64; d];
        // Envelope from the far end inwards.
        let mut env = vec![0.0; top as usize + 1];
        let mut run: f64 = 0.0;
        for i in (0..=top).rev() {
            idx[0] = i;
            run = run.max(fabs(self.node(&idx).unwrap_or(0.0)));
            env[i as usize] = run;
        }
        let mut pts = Vec::new();
        let n = 40;
        for m in 0..=n {
            let x = lo * pow(hi / lo, m as f64 / n as f64);
            let i = libm::round(x * q) as i64;
            if i > top {
                return Err(Error::OutOfRange { coordinate: x, limit: self.spatial_radius });
            }
            pts.push((i as f64 / q, env[i as usize]));
        }
        pts.dedup_by(|a, b| a.0 == b.0);
        loglog_slope(&pts)
    }
}

/// Cubic Lagrange weights for nodes `-1, 0, 1, 2` at `t ∈ [0, 1)`.
fn cubic_weights(t: f64) -> [f64; 4] {
    let (a, b, c, e) = (t + 1.0, t, t - 1.0, t - 2.0);
    [-b * c * e / 6.0, a * c * e / 2.0, -a * b * e / 2.0, a * b * c / 6.0]
}

/// `L(x)` from the table by tensor-product cubic interpolation. Exact at
/// nodes; even by construction since it works on `|x_i|`.
pub fn eval_cardinal(table: &CardinalTable, x: &[f64]) -> Result<f64> {
    let d = table.params.dim();
    if x.len() != d {
        return Err(Error::InvalidParams("point dimension does not match table"));
    }
    let q = table.points_per_unit as f64;
    let limit = table.spatial_radius + table.spatial_step();
    let mut base = [0i64; 8];
    let mut weights = [[0.0; 4]; 8];
    let mut exact = [false; 8];
    if d > 8 {
        return Err(Error::InvalidParams("tables support at most 8 dimensions"));
    }
    for a in 0..d {
        let v = fabs(x[a]);
        if !(v <= limit) {
            return Err(Error::OutOfRange { coordinate: x[a], limit });
        }
        let u = v * q;
        let i0 = floor(u);
        let t = u - i0;
        base[a] = i0 as i64;
        if t == 0.0 {
            exact[a] = true;
        } else {
            weights[a] = cubic_weights(t);
        }
    }
    let side = table.side();
    let h = table.half_nodes as i64;
    let mut acc = Accumulator::new();
    // Odometer over the 4^d (or 1 for exact axes) stencil.
    let mut off = [0usize; 8];
    loop {
        let mut w = 1.0;
        let mut idx = 0usize;
        for a in 0..d {
            let (node, wa) = if exact[a] { (base[a], 1.0) } else { (base[a] + off[a] as i64 - 1, weights[a][off[a]]) };
            // Negative node indices mirror by evenness.
            let node = node.abs();
            if node > h {
                return Err(Error::OutOfRange { coordinate: x[a], limit });
            }
            idx = idx * side + (node + h) as usize;
            w *= wa;
        }
        acc.add(w * table.samples[idx]);
        let mut a = d;
        loop {
            if a == 0 {
                return Ok(acc.value());
            }
            a -= 1;
            let top = if exact[a] { 0 } else { 3 };
            if off[a] < top {
                off[a] += 1;
                break;
            }
            off[a] = 0;
        }
    }
}

/// Synthesize with default settings.
pub fn synthesize(params: &MultiquadricParams, target_accuracy: f64, spatial_radius: f64) -> Result<CardinalTable> {
    synthesize_with(params, &SynthesisConfig::new(target_accuracy, spatial_radius))
}

/// Representative `L̂` on the inner face of the shell-`n` cells.
fn face_values(params: &MultiquadricParams, cfg: &PeriodizationConfig, floor_value: f64) -> Result<Vec<f64>> {
    let d = params.dim();
    let mut v = vec![1.0];
    for n in 1..=cfg.max_shell {
        let mut xi = vec![0.0; d];
        xi[0] = (2 * n - 1) as f64 * PI * (1.0 + 1e-12);
        let val = cardinal_spectrum(params, &xi, cfg)?;
        v.push(val);
        if val * shell_count(d, n) as f64 <= floor_value {
            return Ok(v);
        }
    }
    Err(Error::TruncationNotConverged { shells: cfg.max_shell, log_contribution: log(v[v.len() - 1]) })
}

/// Smallest `K` with `Σ_{n>K} shell(n)·v_n ≤ bound`.
fn band_for(v: &[f64], d: usize, bound: f64) -> (usize, f64) {
    let tail = |k: usize| -> f64 { (k + 1..v.len()).map(|n| shell_count(d, n) as f64 * v[n]).sum() };
    let mut k = 0;
    while k + 1 < v.len() && tail(k) > bound {
        k += 1;
    }
    (k, tail(k))
}

/// Radial envelope of `|L|`: measured suffix maxima out to `rmax`, then
/// `A r^{-p}` with `p = d + 2|ν|`, the decay set by the non-smooth term of
/// `L̂` at the nonzero lattice points.
struct Envelope {
    step: f64,
    profile: Vec<f64>,
    rmax: f64,
    a: f64,
    p: f64,
}

impl Envelope {
    fn at(&self, r: f64) -> f64 {
        let tail = self.a * pow(r.max(1e-300), -self.p);
        if r >= self.rmax {
            return tail;
        }
        let bin = (r.max(0.0) / self.step) as usize;
        self.profile[bin.min(self.profile.len() - 1)].max(tail)
    }
}

/// Image sum bound `Σ_{n≥1} shell(n)·env(nT − R)`.
fn alias_bound(env: &Envelope, t: f64, r: f64, d: usize) -> f64 {
    let mut acc = 0.0;
    let nmax = 4000;
    for n in 1..=nmax {
        let dist = n as f64 * t - r;
        if dist <= 0.0 {
            return f64::INFINITY;
        }
        acc += shell_count(d, n) as f64 * env.at(dist);
    }
    // Integral remainder of the shell sum past nmax.
    let n = nmax as f64;
    let p = env.p;
    acc + env.a * 2.0 * d as f64 * pow(2.0 * n, (d - 1) as f64) * pow(n * t, -p) * n / (p - d as f64).max(0.5)
}

struct Plan2 {
    dim: usize,
    band: usize,
    den_band: usize,
    period: usize,
    q: usize,
    half_nodes: usize,
}

/// Run the folded transform and return samples on `[-H, H]^d` (node units),
/// symmetrized over coordinate reflections.
///
/// The spectrum is streamed: for each cell point in the positive orthant the
/// band values `L̂(ξ0 + 2πk)` are computed once and immediately folded into
/// the phase-weighted sums of every sub-offset and every mirror image.
fn transform(params: &MultiquadricParams, p: &Plan2) -> Result<Vec<f64>> {
    let d = p.dim;
    let t = p.period;
    let q = p.q;
    let cells = t.pow(d as u32);
    let nsub = q.pow(d as u32);
    let kb = 2 * p.band + 1;
    let bsz = kb.pow(d as u32);
    let step = 2.0 * PI / t as f64;
    let half = t / 2;
    let band = p.band as i64;
    let h = p.half_nodes as i64;
    let umax = (h / q as i64) + 1;
    if 2 * umax + 2 >= t as i64 {
        return Err(Error::InvalidParams("transform period too small for the table radius"));
    }

    let sub = IndexBox::new(vec![0; d], vec![q as i64 - 1; d])?;
    let kbox = IndexBox::symmetric(d, band);
    let den_box = IndexBox::symmetric(d, p.den_band as i64);
    // kphase[s][k] = e^{2πi k·s/q}.
    let mut kphase = vec![Complex::ZERO; nsub * bsz];
    let mut si = 0;
    sub.for_each(|s| {
        let mut ki = 0;
        kbox.for_each(|k| {
            let dot: i64 = k.iter().zip(s).map(|(a, b)| a * b).sum();
            kphase[si * bsz + ki] = Complex::cis(2.0 * PI * dot.rem_euclid(q as i64) as f64 / q as f64);
            ki += 1;
        });
        si += 1;
    });
    // Index of the reflected k for every reflection mask.
    let nmask = 1usize << d;
    let mut refl = vec![0usize; nmask * bsz];
    for mask in 0..nmask {
        let mut ki = 0;
        kbox.for_each(|k| {
            let mut kk = 0usize;
            for a in 0..d {
                let ka = if mask >> a & 1 == 1 { -k[a] } else { k[a] };
                kk = kk * kb + (ka + band) as usize;
            }
            refl[mask * bsz + ki] = kk;
            ki += 1;
        });
    }
    // xphase[a][s_a][n_a] = e^{i ξ0_n s_a / q}, identical on every axis.
    let mut xphase = vec![Complex::ZERO; q * t];
    for s in 0..q {
        for n in 0..t {
            let xi0 = (n as f64 + 0.5 - half as f64) * step;
            xphase[s * t + n] = Complex::cis(xi0 * s as f64 / q as f64);
        }
    }

    let mut g = vec![Complex::ZERO; nsub * cells];
    let mut terms = vec![0.0; den_box.len()];
    let mut lhat = vec![0.0; bsz];
    let mut xi = vec![0.0; d];
    let mut shifted = vec![0.0; d];
    let mut mirrored = vec![0usize; d];
    let pos = IndexBox::new(vec![half as i64; d], vec![t as i64 - 1; d])?;
    let mut err = None;
    pos.for_each(|n| {
        if err.is_some() {
            return;
        }
        for a in 0..d {
            xi[a] = (n[a] as f64 + 0.5 - half as f64) * step;
        }
        let l0 = match params.log_abs_phi_hat(norm(&xi)) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let mut den = Accumulator::new();
        let mut slot = 0;
        den_box.for_each(|k| {
            let v = if k.iter().all(|&x| x == 0) {
                1.0
            } else {
                for a in 0..d {
                    shifted[a] = xi[a] + 2.0 * PI * k[a] as f64;
                }
                match params.log_abs_phi_hat(norm(&shifted)) {
                    Ok(l) => exp(l - l0),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            };
            terms[slot] = v;
            den.add(v);
            slot += 1;
        });
        let inv = 1.0 / den.value();
        let mut slot = 0;
        let mut ki = 0;
        den_box.for_each(|k| {
            if k.iter().all(|&x| x.abs() <= band) {
                lhat[ki] = terms[slot] * inv;
                ki += 1;
            }
            slot += 1;
        });
        for mask in 0..nmask {
            let mut cell = 0usize;
            for a in 0..d {
                mirrored[a] = if mask >> a & 1 == 1 { t - 1 - n[a] as usize } else { n[a] as usize };
                cell = cell * t + mirrored[a];
            }
            let rf = &refl[mask * bsz..(mask + 1) * bsz];
            let mut si = 0;
            sub.for_each(|s| {
                let kp = &kphase[si * bsz..(si + 1) * bsz];
                let mut re = Accumulator::new();
                let mut im = Accumulator::new();
                for (ki, &v) in lhat.iter().enumerate() {
                    let w = kp[rf[ki]];
                    re.add(v * w.re);
                    im.add(v * w.im);
                }
                let mut val = Complex::new(re.value(), im.value());
                for a in 0..d {
                    val = val * xphase[s[a] as usize * t + mirrored[a]];
                }
                g[si * cells + cell] = val;
                si += 1;
            });
        }
    });
    if let Some(e) = err {
        return Err(e);
    }

    let side = 2 * p.half_nodes + 1;
    let mut samples = vec![0.0; side.pow(d as u32)];
    let plan = Plan::new(t);
    let norm_factor = 1.0 / cells as f64;
    let ubox = IndexBox::symmetric(d, umax);
    let mut uphase = vec![Complex::ZERO; 2 * umax as usize + 1];
    for (j, u) in (-umax..=umax).enumerate() {
        let sign = if u.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        uphase[j] = Complex::cis(PI * u as f64 / t as f64).scale(sign);
    }
    let mut si = 0;
    sub.for_each(|s| {
        let data = &mut g[si * cells..(si + 1) * cells];
        inverse_nd(&plan, d, data);
        ubox.for_each(|u| {
            let mut idx = 0usize;
            let mut src = 0usize;
            let mut ph = Complex::new(norm_factor, 0.0);
            for a in 0..d {
                let i = u[a] * q as i64 + s[a];
                if i.abs() > h {
                    return;
                }
                idx = idx * side + (i + h) as usize;
                src = src * t + u[a].rem_euclid(t as i64) as usize;
                ph = ph * uphase[(u[a] + umax) as usize];
            }
            samples[idx] = (data[src] * ph).re;
        });
        si += 1;
    });
    symmetrize(&mut samples, d, p.half_nodes);
    Ok(samples)
}

/// Replace each sample by the mean over its orbit under coordinate
/// reflections, summed in a fixed order so mirrored entries are identical.
fn symmetrize(samples: &mut [f64], d: usize, half_nodes: usize) {
    let side = 2 * half_nodes + 1;
    let h = half_nodes as i64;
    let pos = IndexBox::new(vec![0; d], vec![h; d]).expect("nonempty box");
    let count = (1usize << d) as f64;
    pos.for_each(|i| {
        let lin = |mask: usize| -> usize {
            let mut idx = 0usize;
            for a in 0..d {
                let v = if mask >> a & 1 == 1 { -i[a] } else { i[a] };
                idx = idx * side + (v + h) as usize;
            }
            idx
        };
        let mut acc = Accumulator::new();
        for mask in 0..(1usize << d) {
            acc.add(samples[lin(mask)]);
        }
        let mean = acc.value() / count;
        for mask in 0..(1usize << d) {
            samples[lin(mask)] = mean;
        }
    });
}

fn fourth_difference_bound(samples: &[f64], d: usize, half_nodes: usize) -> f64 {
    let side = 2 * half_nodes + 1;
    if side < 5 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for axis in 0..d {
        let stride = side.pow((d - 1 - axis) as u32);
        for start in 0..samples.len() {
            let pos = start / stride % side;
            if pos + 4 >= side {
                continue;
            }
            let f = |k: usize| samples[start + k * stride];
            let d4 = f(0) - 4.0 * f(1) + 6.0 * f(2) - 4.0 * f(3) + f(4);
            worst = worst.max(fabs(d4));
        }
    }
    // max |(t+1)t(t-1)(t-2)| / 4! on [0, 1] is 9/384.
    worst * 9.0 / 384.0 * d as f64
}

/// Synthesize a cardinal table.
///
/// Band `K` comes from `L̂` on the inner faces of the outer cells, the period
/// `T` from the decay envelope measured by a small pilot transform.
pub fn synthesize_with(params: &MultiquadricParams, cfg: &SynthesisConfig) -> Result<CardinalTable> {
    let d = params.dim();
    let target = cfg.target_accuracy;
    if !(target >= 1e-13) || !target.is_finite() {
        return Err(Error::Domain { what: "target accuracy", value: target });
    }
    if !(cfg.spatial_radius >= 0.0) || !cfg.spatial_radius.is_finite() {
        return Err(Error::Domain { what: "spatial radius", value: cfg.spatial_radius });
    }
    if cfg.period_factor == 0 || !cfg.period_factor.is_power_of_two() {
        return Err(Error::InvalidParams("period_factor must be a power of two"));
    }
    let pcfg = &cfg.periodization;
    let v = face_values(params, pcfg, target * 1e-4)?;
    let (band0, _) = band_for(&v, d, target / 4.0);
    let band = band0 + cfg.band_extra;
    let tail = (band + 1..v.len()).map(|n| shell_count(d, n) as f64 * v[n]).sum::<f64>();
    // Denominator shells: neglected ratios below 1e-2 of the target.
    let (den0, _) = band_for(&v, d, target * 5e-3);
    let den_band = den0.max(band).max(1);
    let fourier_cutoff = (2 * band + 1) as f64 * PI;
    let (mut q, auto_q) = match cfg.points_per_unit {
        Some(q) if q >= 1 => (q, false),
        Some(_) => return Err(Error::InvalidParams("points_per_unit must be positive")),
        None => ((4 * (2 * band + 1)).next_power_of_two(), true),
    };
    let radius = cfg.spatial_radius;

    let budget = cfg.max_grid_points;
    let block = (2 * band + 1).pow(d as u32);
    let check_budget = |t: usize, q: usize| -> Result<()> {
        let need = t.checked_pow(d as u32).and_then(|c| c.checked_mul(q.pow(d as u32))).unwrap_or(usize::MAX);
        if need > budget {
            Err(Error::Resource { requested: need, budget })
        } else {
            Ok(())
        }
    };

    // Pilot: coarse table out to a quarter of its own period, wide enough
    // to pass the hump of width O(c) before the power tail.
    let c = params.c();
    let pilot_t = ((if d == 1 { 64.0 } else { 32.0 } * c.max(1.0)) as usize).next_power_of_two().max(64);
    check_budget(pilot_t, 2)?;
    let pilot_half = pilot_t / 4 * 2;
    let pilot = Plan2 { dim: d, band, den_band, period: pilot_t, q: 2, half_nodes: pilot_half };
    let ps = transform(params, &pilot)?;
    let decay_power = d as f64 + 2.0 * fabs(params.nu());
    let env = measure_envelope(&ps, d, pilot_half, 2, decay_power);
    let decay_constant = env.a;

    let goal = target / 4.0;
    let choose_period = |q: usize| -> Result<(usize, usize)> {
        let half_nodes = libm::ceil(radius * q as f64) as usize + 3;
        let reach = half_nodes as f64 / q as f64 + 2.0;
        let mut t = ((2.0 * reach + 4.0).max(16.0) as usize).next_power_of_two();
        while alias_bound(&env, t as f64, reach, d) > goal {
            t *= 2;
            check_budget(t, q)?;
        }
        t *= cfg.period_factor;
        check_budget(t, q)?;
        Ok((t, half_nodes))
    };
    // An automatic oversampling gives way to the budget before failing.
    let (t, half_nodes) = loop {
        match choose_period(q) {
            Err(Error::Resource { .. }) if auto_q && q > 1 => q /= 2,
            other => break other?,
        }
    };
    let reach = half_nodes as f64 / q as f64 + 2.0;
    let alias = alias_bound(&env, t as f64, reach, d);
    let plan = Plan2 { dim: d, band, den_band, period: t, q, half_nodes };
    let samples = transform(params, &plan)?;
    let roundoff = 1e-15 * (1.0 + log(t.pow(d as u32) as f64)) * sqrt(1.0 + block as f64);
    let interpolation_bound = fourth_difference_bound(&samples, d, half_nodes);
    Ok(CardinalTable {
        params: *params,
        points_per_unit: q,
        spatial_radius: radius,
        half_nodes,
        samples,
        fourier_cutoff,
        alias_period: t as f64,
        accuracy_estimate: tail + alias + roundoff,
        tail_estimate: tail,
        alias_estimate: alias,
        decay_constant,
        interpolation_bound,
    })
}

/// Measure the envelope from pilot samples. Values within `floor` of zero
/// are roundoff and do not constrain the tail constant.
fn measure_envelope(samples: &[f64], d: usize, half_nodes: usize, q: usize, p: f64) -> Envelope {
    let side = 2 * half_nodes + 1;
    let h = half_nodes as i64;
    let rmax = half_nodes as f64 / q as f64;
    let step = 1.0 / q as f64;
    let bins = half_nodes + 1;
    let mut profile = vec![0.0f64; bins];
    let floor = 1e-15;
    let mut a: f64 = 0.0;
    IndexBox::symmetric(d, h).for_each(|i| {
        let mut idx = 0usize;
        let mut r2 = 0.0;
        for t in 0..d {
            idx = idx * side + (i[t] + h) as usize;
            let x = i[t] as f64 / q as f64;
            r2 += x * x;
        }
        let r = sqrt(r2);
        // Only the inscribed ball is free of corner effects.
        if r > rmax {
            return;
        }
        let v = fabs(samples[idx]);
        let bin = ((r / step) as usize).min(bins - 1);
        profile[bin] = profile[bin].max(2.0 * v);
        if r >= 0.5 * rmax {
            a = a.max(2.0 * (v - floor).max(0.0) * pow(r, p));
        }
    });
    for b in (0..bins - 1).rev() {
        profile[b] = profile[b].max(profile[b + 1]);
    }
    Envelope { step, profile, rmax, a: a.max(1e-300), p }
}

/// Which Fourier-coefficient sequence to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientKind {
    /// `a_j`, coefficients of `P_α`: `L = Σ a_j φ(· − j)`.
    SymbolP,
    /// `d_j`, coefficients of `1/P_α`: the convolution inverse of `a`.
    SymbolPInverse,
}

/// Coefficients on `[-N, N]^d`, row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CoefficientSequence {
    pub kind: CoefficientKind,
    pub dim: usize,
    pub index_radius: usize,
    pub dft_size: usize,
    pub values: Vec<f64>,
    /// Largest change when the DFT size is doubled, relative to `max |value|`.
    pub aliasing_change: f64,
    pub aliasing_warning: bool,
    /// ℓ₁ mass of the outermost shell relative to the total.
    pub tail_fraction: f64,
}

impl CoefficientSequence {
    pub fn index_box(&self) -> IndexBox {
        IndexBox::symmetric(self.dim, self.index_radius as i64)
    }

    pub fn get(&self, j: &[i64]) -> Option<f64> {
        self.index_box().linear(j).map(|i| self.values[i])
    }

    pub fn l1_norm(&self) -> f64 {
        crate::sum::sum(self.values.iter().map(|v| fabs(*v)))
    }

    /// Largest `|value|` on the shell `|j|_∞ = n`.
    pub fn shell_max(&self, n: usize) -> f64 {
        let mut m: f64 = 0.0;
        for_each_in_shell(self.dim, n as i64, |j| {
            if let Some(v) = self.get(j) {
                m = m.max(fabs(v));
            }
        });
        m
    }

    /// Log-log slope of the tail envelope `max_{|i| ≥ n} |c_i|` along the
    /// first axis for `lo ≤ n ≤ hi`.
    pub fn decay_slope(&self, lo: usize, hi: usize) -> Result<(f64, f64)> {
        if hi > self.index_radius || lo == 0 || lo >= hi {
            return Err(Error::InvalidParams("decay window must satisfy 1 <= lo < hi <= index_radius"));
        }
        let mut j = vec![0i64; self.dim];
        let mut env = vec![0.0; self.index_radius + 1];
        let mut run: f64 = 0.0;
        for n in (0..=self.index_radius).rev() {
            j[0] = n as i64;
            run = run.max(fabs(self.get(&j).unwrap_or(0.0)));
            env[n] = run;
        }
        let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| (n as f64, env[n])).collect();
        loglog_slope(&pts)
    }
}

fn symbol_values(params: &MultiquadricParams, kind: CoefficientKind, m: usize, cfg: &PeriodizationConfig) -> Result<Vec<f64>> {
    let d = params.dim();
    let true_scale = pow(2.0 * PI, -(d as f64) / 2.0);
    let step = 2.0 * PI / m as f64;
    let mut vals = vec![0.0; m.pow(d as u32)];
    let half = m / 2;
    let pos = IndexBox::new(vec![half as i64; d], vec![m as i64 - 1; d])?;
    let mut xi = vec![0.0; d];
    let mut err = None;
    pos.for_each(|n| {
        if err.is_some() {
            return;
        }
        for a in 0..d {
            xi[a] = -PI + (n[a] as f64 + 0.5) * step;
        }
        let p = match periodic_symbol_p(params, &xi, cfg) {
            Ok(p) => p * true_scale,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let v = match kind {
            CoefficientKind::SymbolP => p,
            CoefficientKind::SymbolPInverse => 1.0 / p,
        };
        for mask in 0..(1usize << d) {
            let mut idx = 0usize;
            for a in 0..d {
                let na = if mask >> a & 1 == 1 { m - 1 - n[a] as usize } else { n[a] as usize };
                idx = idx * m + na;
            }
            vals[idx] = v;
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(vals),
    }
}

fn coefficients_at(params: &MultiquadricParams, kind: CoefficientKind, radius: usize, m: usize, cfg: &PeriodizationConfig) -> Result<Vec<f64>> {
    let d = params.dim();
    let vals = symbol_values(params, kind, m, cfg)?;
    let mut data: Vec<Complex> = vals.iter().map(|&v| Complex::new(v, 0.0)).collect();
    inverse_nd(&Plan::new(m), d, &mut data);
    let scale = 1.0 / m.pow(d as u32) as f64;
    let bx = IndexBox::symmetric(d, radius as i64);
    let mut out = vec![0.0; bx.len()];
    let mut slot = 0;
    bx.for_each(|j| {
        let mut src = 0usize;
        let mut ph = Complex::new(scale, 0.0);
        for a in 0..d {
            src = src * m + j[a].rem_euclid(m as i64) as usize;
            let sign = if j[a].rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            ph = ph * Complex::cis(PI * j[a] as f64 / m as f64).scale(sign);
        }
        out[slot] = (data[src] * ph).re;
        slot += 1;
    });
    symmetrize(&mut out, d, radius);
    Ok(out)
}

/// Fourier coefficients of `P_α` (or `1/P_α`) on `[-N, N]^d`.
///
/// The transform constant is taken as `(2π)^{d/2}` times the printed one, so
/// that `Σ a_j φ(x − j)` reproduces `L` itself and `a ⋆ d = δ`. Values come
/// from a DFT of size `2M`; the change against size `M` is reported.
pub fn symbol_coefficients(
    params: &MultiquadricParams,
    kind: CoefficientKind,
    index_radius: usize,
    dft_size: usize,
) -> Result<CoefficientSequence> {
    symbol_coefficients_with(params, kind, index_radius, dft_size, &PeriodizationConfig::default())
}

pub fn symbol_coefficients_with(
    params: &MultiquadricParams,
    kind: CoefficientKind,
    index_radius: usize,
    dft_size: usize,
    cfg: &PeriodizationConfig,
) -> Result<CoefficientSequence> {
    if !params.has_periodic_symbol() {
        return Err(Error::ParameterRange { alpha: params.alpha(), requirement: "alpha < -d - 1/2" });
    }
    if index_radius == 0 {
        return Err(Error::InvalidParams("index radius must be positive"));
    }
    if dft_size < 8 * index_radius {
        return Err(Error::InvalidParams("dft_size must be at least 8 * index_radius"));
    }
    let m = dft_size.next_power_of_two();
    let coarse = coefficients_at(params, kind, index_radius, m, cfg)?;
    let fine = coefficients_at(params, kind, index_radius, 2 * m, cfg)?;
    let scale = fine.iter().fold(0.0f64, |a, v| a.max(fabs(*v)));
    let change = coarse.iter().zip(&fine).fold(0.0f64, |a, (x, y)| a.max(fabs(x - y))) / scale;
    let mut seq = CoefficientSequence {
        kind,
        dim: params.dim(),
        index_radius,
        dft_size: 2 * m,
        values: fine,
        aliasing_change: change,
        aliasing_warning: change > 1e-10,
        tail_fraction: 0.0,
    };
    let mut last = Accumulator::new();
    for_each_in_shell(seq.dim, index_radius as i64, |j| last.add(fabs(seq.get(j).unwrap_or(0.0))));
    seq.tail_fraction = last.value() / seq.l1_norm();
    Ok(seq)
}

/// Result of comparing `L` with its φ-series.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesCheck {
    pub max_abs_residual: f64,
    /// Estimated size of the omitted terms `|j|_∞ > N`.
    pub tail_bound: f64,
}

/// `Σ_{|j|_∞ ≤ N} a_j φ(x − j)`.
pub fn phi_series(params: &MultiquadricParams, coeffs: &CoefficientSequence, x: &[f64]) -> f64 {
    let d = params.dim();
    let mut acc = Accumulator::new();
    let mut y = vec![0.0; d];
    let mut slot = 0;
    coeffs.index_box().for_each(|j| {
        for a in 0..d {
            y[a] = x[a] - j[a] as f64;
        }
        acc.add(coeffs.values[slot] * params.phi(&y));
        slot += 1;
    });
    acc.value()
}

/// Omitted mass of a φ-series beyond the coefficient box, assuming the
/// coefficients do not grow past the outermost shell.
pub fn phi_series_tail(params: &MultiquadricParams, coeffs: &CoefficientSequence, reach: f64, weight: f64) -> f64 {
    let d = params.dim();
    let n0 = coeffs.index_radius;
    let amax = coeffs.shell_max(n0);
    let mut acc = 0.0;
    let mut y = vec![0.0; d];
    for n in n0 + 1..=n0 * 64 {
        y[0] = (n as f64 - reach).max(0.0);
        acc += shell_count(d, n) as f64 * params.phi(&y);
    }
    amax * weight * acc
}

/// `max |eval_cardinal(x) − Σ a_j φ(x − j)|` over the probes.
pub fn check_series_representation(
    params: &MultiquadricParams,
    table: &CardinalTable,
    coeffs: &CoefficientSequence,
    probes: &[Vec<f64>],
) -> Result<SeriesCheck> {
    if !params.has_periodic_symbol() {
        return Err(Error::ParameterRange { alpha: params.alpha(), requirement: "alpha < -d - 1/2" });
    }
    if coeffs.kind != CoefficientKind::SymbolP || coeffs.dim != params.dim() {
        return Err(Error::InvalidParams("series check needs symbol_P coefficients of matching dimension"));
    }
    let mut worst: f64 = 0.0;
    let mut reach: f64 = 0.0;
    for x in probes {
        let l = eval_cardinal(table, x)?;
        let s = phi_series(params, coeffs, x);
        worst = worst.max(fabs(l - s));
        reach = reach.max(x.iter().fold(0.0f64, |m, v| m.max(fabs(*v))));
    }
    Ok(SeriesCheck { max_abs_residual: worst, tail_bound: phi_series_tail(params, coeffs, reach, 1.0) })
}

/// Full discrete convolution of two sequences on index boxes.
pub fn convolve(a_box: &IndexBox, a: &[f64], b_box: &IndexBox, b: &[f64]) -> (IndexBox, Vec<f64>) {
    let out_box = a_box.minkowski(b_box);
    let mut out = vec![Accumulator::new(); out_box.len()];
    let d = a_box.dim();
    let mut m = vec![0i64; d];
    let mut ia = 0;
    a_box.for_each(|i| {
        let av = a[ia];
        ia += 1;
        if av == 0.0 {
            return;
        }
        let mut ib = 0;
        b_box.for_each(|j| {
            for t in 0..d {
                m[t] = i[t] + j[t];
            }
            let k = out_box.linear(&m).expect("sum lies in the Minkowski box");
            out[k].add(av * b[ib]);
            ib += 1;
        });
    });
    (out_box, out.iter().map(|s| s.value()).collect())
}

/// `Σ_{|m|_∞ ≤ N} |(a ⋆ d)_m − δ_{0,m}|`.
pub fn convolution_identity_defect(a: &CoefficientSequence, d: &CoefficientSequence) -> Result<f64> {
    if a.dim != d.dim {
        return Err(Error::InvalidParams("sequences differ in dimension"));
    }
    let (bx, conv) = convolve(&a.index_box(), &a.values, &d.index_box(), &d.values);
    let n = a.index_radius.min(d.index_radius) as i64;
    let mut acc = Accumulator::new();
    IndexBox::symmetric(a.dim, n).for_each(|m| {
        let v = conv[bx.linear(m).expect("inside")];
        let delta = if m.iter().all(|&x| x == 0) { 1.0 } else { 0.0 };
        acc.add(fabs(v - delta));
    });
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_weights_reproduce_cubics() {
        for &t in &[0.1, 0.5, 0.77] {
            let w = cubic_weights(t);
            let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
            let got = w[0] * f(-1.0) + w[1] * f(0.0) + w[2] * f(1.0) + w[3] * f(2.0);
            assert!(fabs(got - f(t)) < 1e-14);
        }
    }

    #[test]
    fn alias_bound_decreases_with_period() {
        let env = Envelope { step: 0.5, profile: vec![1.0; 8], rmax: 4.0, a: 1.0, p: 2.0 };
        let a = alias_bound(&env, 1024.0, 10.0, 1);
        let b = alias_bound(&env, 2048.0, 10.0, 1);
        assert!(b < a && a < 1e-5);
        assert!(alias_bound(&env, 8.0, 10.0, 2).is_infinite());
    }

    #[test]
    fn symmetrize_is_exactly_even() {
        let mut s: Vec<f64> = (0..25).map(|i| libm::sin(i as f64)).collect();
        symmetrize(&mut s, 2, 2);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(s[i * 5 + j], s[(4 - i) * 5 + j]);
                assert_eq!(s[i * 5 + j], s[i * 5 + 4 - j]);
            }
        }
    }
}
