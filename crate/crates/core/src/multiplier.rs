//! The multiplier `m_{α,h}(ξ) = φ̂₁(ξ)/Σ_j φ̂₁(ξ + 2πj/h)`: values, finite
//! difference derivatives, `L₁` norms of `D^γ m` and their `h`-scaling.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{exp, fabs, floor, log, pow};

use crate::bench::loglog_slope;
use crate::kernel::{cardinal_spectrum_with_period, MultiquadricParams, PeriodizationConfig};
use crate::lattice::{for_each_in_shell, IndexBox};
use crate::quad::composite;
use crate::sum::Accumulator;
use crate::{Error, Result};

/// Base finite-difference step as a fraction of `min(2π/h, 2π)`: the cell
/// width, capped at the width scale of the face transition layer of `m`,
/// which does not shrink with `h`.
pub const STEP_FRACTION: f64 = 1e-3;
/// Relative agreement required between the two Richardson levels.
pub const CONSISTENCY_REL: f64 = 1e-5;
/// Absolute floor of the same test, for derivatives near zero.
pub const CONSISTENCY_ABS: f64 = 1e-9;

/// `m_{α,h}` for fixed `(α, d, h)`.
#[derive(Debug, Clone, Copy)]
pub struct Multiplier {
    params: MultiquadricParams,
    h: f64,
    period: f64,
    step: f64,
    cfg: PeriodizationConfig,
}

/// A finite-difference derivative with its Richardson consistency gap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Derivative {
    pub value: f64,
    /// `|R₁ − R₂|` between the two Richardson levels.
    pub consistency: f64,
    pub consistent: bool,
}

fn order(gamma: &[usize]) -> usize {
    gamma.iter().sum()
}

impl Multiplier {
    pub fn new(alpha: f64, dim: usize, h: f64) -> Result<Self> {
        Self::with_config(alpha, dim, h, PeriodizationConfig::default())
    }

    pub fn with_config(alpha: f64, dim: usize, h: f64, cfg: PeriodizationConfig) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::Domain { what: "lattice spacing h", value: h });
        }
        let params = MultiquadricParams::new(alpha, 1.0, dim)?;
        let period = 2.0 * PI / h;
        Ok(Self { params, h, period, step: STEP_FRACTION * period.min(2.0 * PI), cfg })
    }

    pub fn params(&self) -> &MultiquadricParams {
        &self.params
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell width `2π/h`.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Largest stencil half-width.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        cardinal_spectrum_with_period(&self.params, xi, self.period, &self.cfg)
    }

    /// Distance from `ξ` to the nearest cell face, over all coordinates.
    pub fn face_distance(&self, xi: &[f64]) -> f64 {
        let half = 0.5 * self.period;
        xi.iter()
            .map(|&x| {
                let k = floor(x / self.period + 0.5);
                half - fabs(x - k * self.period)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `D^γ m(ξ)` for `1 ≤ [γ] ≤ 2` by central differences at steps
    /// `s, s/2, s/4` and two Richardson levels.
    pub fn partial(&self, gamma: &[usize], xi: &[f64]) -> Result<Derivative> {
        let d = self.params.dim();
        if gamma.len() != d || xi.len() != d {
            return Err(Error::InvalidParams("multi-index and point must match the dimension"));
        }
        let g = order(gamma);
        if g == 0 || g > 2 {
            return Err(Error::Unsupported("finite differences are provided for orders 1 and 2"));
        }
        let dist = self.face_distance(xi);
        if dist < self.step {
            return Err(Error::StencilCrossesFace { xi: xi[0], face: dist });
        }
        let axes: Vec<usize> = (0..d).flat_map(|a| core::iter::repeat(a).take(gamma[a])).collect();
        let mut p = xi.to_vec();
        let mut f = |shift: &[(usize, f64)]| -> Result<f64> {
            p.copy_from_slice(xi);
            for &(a, s) in shift {
                p[a] += s;
            }
            self.eval(&p)
        };
        let mut center = None;
        let mut diff = |s: f64| -> Result<f64> {
            match axes.as_slice() {
                [a] => Ok((f(&[(*a, s)])? - f(&[(*a, -s)])?) / (2.0 * s)),
                [a, b] if a == b => {
                    let c = match center {
                        Some(c) => c,
                        None => {
                            let c = f(&[])?;
                            center = Some(c);
                            c
                        }
                    };
                    Ok((f(&[(*a, s)])? - 2.0 * c + f(&[(*a, -s)])?) / (s * s))
                }
                [a, b] => {
                    let pp = f(&[(*a, s), (*b, s)])?;
                    let pm = f(&[(*a, s), (*b, -s)])?;
                    let mp = f(&[(*a, -s), (*b, s)])?;
                    let mm = f(&[(*a, -s), (*b, -s)])?;
                    Ok((pp - pm - mp + mm) / (4.0 * s * s))
                }
                _ => unreachable!(),
            }
        };
        let s = self.step;
        let d1 = diff(s)?;
        let d2 = diff(0.5 * s)?;
        let d3 = diff(0.25 * s)?;
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        let gap = fabs(r1 - r2);
        Ok(Derivative { value: r2, consistency: gap, consistent: gap <= CONSISTENCY_REL * fabs(r2) + CONSISTENCY_ABS })
    }

    /// `D^γ m` with `γ = 0` meaning the value itself.
    fn derivative(&self, gamma: &[usize], xi: &[f64]) -> Result<Derivative> {
        if order(gamma) == 0 {
            return Ok(Derivative { value: self.eval(xi)?, consistency: 0.0, consistent: true });
        }
        self.partial(gamma, xi)
    }
}

pub fn m_eval(alpha: f64, dim: usize, h: f64, xi: &[f64]) -> Result<f64> {
    Multiplier::new(alpha, dim, h)?.eval(xi)
}

pub fn m_partial(alpha: f64, dim: usize, h: f64, gamma: &[usize], xi: &[f64]) -> Result<Derivative> {
    Multiplier::new(alpha, dim, h)?.partial(gamma, xi)
}

/// Quadrature and sampling layout inside each cell.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadConfig {
    pub gauss_order: usize,
    /// Width of the fine panels next to each face, in `ξ` units.
    pub face_panel_width: f64,
    pub face_panels: usize,
    /// Finest panel next to the cell center, as a power of two.
    pub center_levels: usize,
    /// Stop adding shells once a shell contributes below this fraction.
    pub tail_tol: f64,
    pub min_shells: usize,
    pub max_shell: usize,
}

impl QuadConfig {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            Self { gauss_order: 8, face_panel_width: 0.25, face_panels: 24, center_levels: 12, tail_tol: 1e-10, min_shells: 3, max_shell: 12 }
        } else {
            Self { gauss_order: 4, face_panel_width: 0.5, face_panels: 10, center_levels: 6, tail_tol: 1e-8, min_shells: 3, max_shell: 8 }
        }
    }
}

/// Panel breakpoints on `[-half + band, half − band]`, graded toward the
/// faces (the transition layer of `m`) and toward the center (where `m`
/// is only finitely smooth).
fn cell_breaks(half: f64, band: f64, q: &QuadConfig) -> Vec<f64> {
    let lim = half - band;
    let mut dist = vec![0.0, lim];
    for k in 0..=q.center_levels {
        dist.push(pow(0.5, k as f64));
    }
    for k in 0..=q.face_panels {
        dist.push(lim - k as f64 * q.face_panel_width);
    }
    let mut g = q.face_panels as f64 * q.face_panel_width;
    while g < lim {
        dist.push(lim - g);
        g *= 2.0;
    }
    let mut c = 1.0;
    while c < lim {
        dist.push(c);
        c *= 2.0;
    }
    dist.retain(|&v| v >= 0.0 && v <= lim);
    dist.sort_by(f64::total_cmp);
    dist.dedup_by(|a, b| fabs(*a - *b) < 1e-9 * (1.0 + lim));
    let mut out: Vec<f64> = dist.iter().rev().filter(|&&v| v > 0.0).map(|v| -v).collect();
    out.extend(dist.iter().copied());
    out
}

/// Shell representatives with nonnegative indices and their sign-orbit sizes.
fn shell_representatives(d: usize, n: usize) -> Vec<(Vec<i64>, f64)> {
    let mut reps = Vec::new();
    for_each_in_shell(d, n as i64, |j| {
        if j.iter().all(|&v| v >= 0) {
            let mult = j.iter().filter(|&&v| v != 0).count();
            reps.push((j.to_vec(), pow(2.0, mult as f64)));
        }
    });
    reps
}

/// Per-shell integral of `|D^γ m|` and its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct L1Norm {
    pub value: f64,
    pub error_bar: f64,
    /// Integral over each `|j|_∞ = n` shell of cells.
    pub shells: Vec<f64>,
    /// `sup |D^γ m|` over the nodes of each shell.
    pub shell_sups: Vec<f64>,
    pub samples: usize,
    pub inconsistent: usize,
    /// Measure of the face bands left out of the quadrature.
    pub excluded_measure: f64,
}

impl L1Norm {
    pub fn inconsistent_fraction(&self) -> f64 {
        self.inconsistent as f64 / self.samples.max(1) as f64
    }
}

/// Admissible derivative orders for the `L₁` scaling law.
pub fn gamma_admissible(alpha: f64, dim: usize, gamma_order: usize) -> bool {
    let d = dim as f64;
    let g = gamma_order as f64;
    if alpha > 0.0 {
        g <= 2.0 * alpha + d
    } else if alpha < -d - 0.5 {
        g < 2.0 * fabs(alpha) - d
    } else {
        false
    }
}

/// `‖D^γ m_{α,h}‖_{L₁}` by tensor Gauss panels over cells, shell by shell.
pub fn l1_norm_dgamma(alpha: f64, dim: usize, h: f64, gamma: &[usize], quad: &QuadConfig) -> Result<L1Norm> {
    let m = Multiplier::new(alpha, dim, h)?;
    if gamma.len() != dim {
        return Err(Error::InvalidParams("multi-index must match the dimension"));
    }
    let g = order(gamma);
    if g > 2 || !gamma_admissible(alpha, dim, g) {
        return Err(Error::ParameterRange { alpha, requirement: "[gamma] <= 2 within the admissible range" });
    }
    let half = 0.5 * m.period;
    let band = 2.0 * m.step;
    let (nodes, weights) = composite(&cell_breaks(half, band, quad), quad.gauss_order);
    let cell_measure = pow(m.period, dim as f64);
    let covered = pow(2.0 * (half - band), dim as f64);
    let local = IndexBox::new(vec![0; dim], vec![nodes.len() as i64 - 1; dim])?;

    let mut total = Accumulator::new();
    let mut bar = Accumulator::new();
    let mut shells = Vec::new();
    let mut sups = Vec::new();
    let mut samples = 0usize;
    let mut inconsistent = 0usize;
    let mut excluded = 0.0;
    let mut xi = vec![0.0; dim];
    let mut n = 0usize;
    loop {
        let mut shell = Accumulator::new();
        let mut sup: f64 = 0.0;
        let mut err = None;
        for (j, mult) in shell_representatives(dim, n) {
            let mut cell = Accumulator::new();
            let mut lost = Accumulator::new();
            local.for_each(|i| {
                if err.is_some() {
                    return;
                }
                let mut w = mult;
                for a in 0..dim {
                    xi[a] = j[a] as f64 * m.period + nodes[i[a] as usize];
                    w *= weights[i[a] as usize];
                }
                match m.derivative(gamma, &xi) {
                    Ok(dv) => {
                        samples += 1;
                        let v = fabs(dv.value);
                        if dv.consistent {
                            cell.add(w * v);
                            sup = sup.max(v);
                        } else {
                            inconsistent += 1;
                            lost.add(w * v);
                        }
                    }
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            shell.add(cell.value());
            bar.add(lost.value());
            excluded += mult * (cell_measure - covered);
        }
        let sv = shell.value();
        // Face bands are bounded by the largest value seen in the shell.
        bar.add(sup * excluded_shell(dim, n, cell_measure - covered));
        total.add(sv);
        shells.push(sv);
        sups.push(sup);
        n += 1;
        let t = total.value();
        if n >= quad.min_shells && sv <= quad.tail_tol * t {
            // Geometric remainder from the last two shells.
            let prev = shells[shells.len() - 2];
            if prev > 0.0 && sv > 0.0 && sv < prev {
                let r = sv / prev;
                bar.add(sv * r / (1.0 - r));
            }
            break;
        }
        if n > quad.max_shell {
            let last = if sv > 0.0 && t > 0.0 { log(sv / t) } else { f64::NEG_INFINITY };
            return Err(Error::TruncationNotConverged { shells: quad.max_shell, log_contribution: last });
        }
    }
    Ok(L1Norm { value: total.value(), error_bar: bar.value(), shells, shell_sups: sups, samples, inconsistent, excluded_measure: excluded })
}

fn excluded_shell(dim: usize, n: usize, per_cell: f64) -> f64 {
    crate::lattice::shell_count(dim, n) as f64 * per_cell
}

/// Suprema of `|D^γ m|` by region: the fundamental cell, the first shell
/// of neighbours, and each further shell.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionSups {
    pub h: f64,
    pub gamma: Vec<usize>,
    pub region_i: f64,
    pub region_ii: f64,
    pub region_iii: Vec<f64>,
}

impl RegionSups {
    fn from_norm(h: f64, gamma: &[usize], n: &L1Norm) -> Self {
        Self {
            h,
            gamma: gamma.to_vec(),
            region_i: n.shell_sups.first().copied().unwrap_or(0.0),
            region_ii: n.shell_sups.get(1).copied().unwrap_or(0.0),
            region_iii: n.shell_sups.iter().skip(2).copied().collect(),
        }
    }

    /// One-sided check that shells `n ≥ 2` stay under
    /// `sup_{n=1} · e^{−2π(n−1)/(3dh)}`.
    pub fn region_iii_within_envelope(&self, dim: usize) -> bool {
        let rate = 2.0 * PI / (3.0 * dim as f64 * self.h);
        self.region_iii.iter().enumerate().all(|(i, &s)| s <= self.region_ii * exp(-rate * (i + 1) as f64) + 1e-300)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlopeFit {
    pub gamma: Vec<usize>,
    pub slope: f64,
    pub residual: f64,
}

impl SlopeFit {
    /// One-sided gate `slope ≥ [γ] − margin`.
    pub fn passes(&self, margin: f64) -> bool {
        self.slope >= order(&self.gamma) as f64 - margin
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiplierProfile {
    pub alpha: f64,
    pub dim: usize,
    pub h_list: Vec<f64>,
    pub gamma_list: Vec<Vec<usize>>,
    /// `l1_norms[i][g]` for `h_list[i]` and `gamma_list[g]`.
    pub l1_norms: Vec<Vec<f64>>,
    pub l1_error_bars: Vec<Vec<f64>>,
    pub region_sups: Vec<RegionSups>,
    pub fitted_slopes: Vec<SlopeFit>,
    pub inconsistent_fraction: f64,
}

/// Norms for every `(h, γ)` and a log-log slope per `γ`.
pub fn scaling_fit(alpha: f64, dim: usize, h_list: &[f64], gamma_list: &[Vec<usize>], quad: &QuadConfig) -> Result<MultiplierProfile> {
    if h_list.len() < 4 {
        return Err(Error::DegenerateAbscissa);
    }
    let hmax = h_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hmin = h_list.iter().copied().fold(f64::INFINITY, f64::min);
    if !(hmax / hmin >= 8.0 * (1.0 - 1e-12)) {
        return Err(Error::DegenerateAbscissa);
    }
    let mut l1_norms = Vec::with_capacity(h_list.len());
    let mut bars = Vec::with_capacity(h_list.len());
    let mut region_sups = Vec::new();
    let mut samples = 0usize;
    let mut bad = 0usize;
    for &h in h_list {
        let mut row = Vec::with_capacity(gamma_list.len());
        let mut brow = Vec::with_capacity(gamma_list.len());
        for gamma in gamma_list {
            let n = l1_norm_dgamma(alpha, dim, h, gamma, quad)?;
            samples += n.samples;
            bad += n.inconsistent;
            region_sups.push(RegionSups::from_norm(h, gamma, &n));
            row.push(n.value);
            brow.push(n.error_bar);
        }
        l1_norms.push(row);
        bars.push(brow);
    }
    let mut fitted_slopes = Vec::with_capacity(gamma_list.len());
    for (g, gamma) in gamma_list.iter().enumerate() {
        let pts: Vec<(f64, f64)> = h_list.iter().zip(&l1_norms).map(|(&h, row)| (h, row[g])).collect();
        let (slope, residual) = loglog_slope(&pts)?;
        fitted_slopes.push(SlopeFit { gamma: gamma.clone(), slope, residual });
    }
    Ok(MultiplierProfile {
        alpha,
        dim,
        h_list: h_list.to_vec(),
        gamma_list: gamma_list.to_vec(),
        l1_norms,
        l1_error_bars: bars,
        region_sups,
        fitted_slopes,
        inconsistent_fraction: bad as f64 / samples.max(1) as f64,
    })
}

/// Every multi-index with `[γ] ≤ max_order`, in graded lexicographic order.
pub fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=max_order {
        let b = IndexBox::new(vec![0; dim], vec![total as i64; dim]).expect("valid box");
        b.for_each(|g| {
            if g.iter().sum::<i64>() == total as i64 {
                out.push(g.iter().rev().map(|&v| v as usize).collect());
            }
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MikhlinEntry {
    pub gamma: Vec<usize>,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MikhlinReport {
    pub h: f64,
    pub entries: Vec<MikhlinEntry>,
    pub samples: usize,
    pub inconsistent: usize,
}

/// `sup |ξ|^{[γ]} |D^γ m(ξ)|` for all `[γ] ≤ d` over the face-avoiding
/// nodes of the cells with `|j|_∞ ≤ shells`, restricted to the closed
/// positive orthant (`|D^γ m|` is even in each coordinate).
pub fn mikhlin_check(alpha: f64, dim: usize, h: f64, shells: usize, quad: &QuadConfig) -> Result<MikhlinReport> {
    let m = Multiplier::new(alpha, dim, h)?;
    let half = 0.5 * m.period;
    let band = 2.0 * m.step;
    let breaks = cell_breaks(half, band, quad);
    let (cell_nodes, _) = composite(&breaks, quad.gauss_order);
    let mut axis = Vec::new();
    for j in 0..=shells as i64 {
        for &u in &cell_nodes {
            let x = j as f64 * m.period + u;
            if x >= 0.0 {
                axis.push(x);
            }
        }
    }
    let gammas = multi_indices(dim, dim.min(2));
    let grid = IndexBox::new(vec![0; dim], vec![axis.len() as i64 - 1; dim])?;
    let mut sups = vec![0.0f64; gammas.len()];
    let mut samples = 0usize;
    let mut inconsistent = 0usize;
    let mut xi = vec![0.0; dim];
    let mut err = None;
    grid.for_each(|i| {
        if err.is_some() {
            return;
        }
        for a in 0..dim {
            xi[a] = axis[i[a] as usize];
        }
        let r = crate::kernel::norm(&xi);
        for (g, gamma) in gammas.iter().enumerate() {
            match m.derivative(gamma, &xi) {
                Ok(dv) => {
                    samples += 1;
                    if dv.consistent {
                        sups[g] = sups[g].max(pow(r, order(gamma) as f64) * fabs(dv.value));
                    } else {
                        inconsistent += 1;
                    }
                }
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let entries = gammas.into_iter().zip(sups).map(|(gamma, sup)| MikhlinEntry { gamma, sup }).collect();
    Ok(MikhlinReport { h, entries, samples, inconsistent })
}

/// Per-γ ratio `max_h sup / min_h sup` across reports for several `h`.
pub fn mikhlin_spread(reports: &[MikhlinReport]) -> Vec<(Vec<usize>, f64)> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    first
        .entries
        .iter()
        .enumerate()
        .map(|(g, e)| {
            let vals = reports.iter().map(|r| r.entries[g].sup);
            let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.fold(f64::INFINITY, f64::min);
            (e.gamma.clone(), if lo > 0.0 { hi / lo } else { f64::INFINITY })
        })
        .collect()
}
