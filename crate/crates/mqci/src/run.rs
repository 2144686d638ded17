//! Command implementations.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use mqci_core::bench::{
    make_test_function, run_convergence, Clock, ConvergenceOptions, ConvergenceReport, NoClock, Synthesizer,
    TableSource, TargetFunction,
};
use mqci_core::cardinal::{symbol_coefficients, CoefficientKind, SynthesisConfig, TableParts};
use mqci_core::interp::{sample, Interpolant};
use mqci_core::kernel::{cardinal_spectrum, periodic_symbol_p, MultiquadricParams, PeriodizationConfig};
use mqci_core::lattice::IndexBox;
use mqci_core::multiplier::{
    m_eval, mikhlin_check, mikhlin_spread, multi_indices, scaling_fit, MikhlinReport, MultiplierProfile, QuadConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cache::DiskCache;
use crate::cli::{parse_gamma, Cli, CoeffKind, Command, Format, SpectrumKind};
use crate::error::{AppError, Result};
use crate::format::{csv_f64, to_json, write_atomic, Csv};
use crate::tablefile::{table_csv, write_table};
use crate::verify::{self, checks_csv, VerifyContext, CRITERIA};

pub struct StdClock(Instant);

impl Default for StdClock {
    fn default() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn now_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    mqci_version: &'static str,
    config: &'a Cli,
    result: &'a T,
}

fn preamble(cli: &Cli) -> Result<Vec<String>> {
    Ok(vec![format!("mqci {}", env!("CARGO_PKG_VERSION")), format!("config {}", serde_json::to_string(cli)?)])
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| AppError::io("<stdout>", e))?;
            out.flush().map_err(|e| AppError::io("<stdout>", e))
        }
    }
}

fn emit_csv(cli: &Cli, csv: &Csv, extra: &[String]) -> Result<()> {
    let mut pre = preamble(cli)?;
    pre.extend_from_slice(extra);
    emit(cli, &csv.render(&pre))
}

fn emit_json<T: Serialize>(cli: &Cli, result: &T) -> Result<()> {
    emit(cli, &to_json(&Envelope { mqci_version: env!("CARGO_PKG_VERSION"), config: cli, result })?)
}

pub fn table_source(cli: &Cli) -> Result<Box<dyn TableSource>> {
    match DiskCache::resolve(cli.cache_dir.as_deref()) {
        Some(dir) => Ok(Box::new(DiskCache::new(&dir).map_err(|e| AppError::io(dir, e))?)),
        None => Ok(Box::new(Synthesizer)),
    }
}

fn config_error(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

/// Map parameter-level core failures to configuration errors.
fn params(alpha: f64, c: f64, dim: usize) -> Result<MultiquadricParams> {
    MultiquadricParams::new(alpha, c, dim).map_err(|e| config_error(e.to_string()))
}

fn gamma_label(g: &[usize]) -> String {
    g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Spectrum { alpha, c, dim, kind, h, xi_max, points } => {
            spectrum(cli, *alpha, *c, *dim, *kind, *h, *xi_max, *points)
        }
        Command::Cardinal { alpha, c, dim, accuracy, radius, points_per_unit, residual_radius, export } => {
            let p = params(*alpha, *c, *dim)?;
            let mut cfg = SynthesisConfig::new(*accuracy, *radius);
            cfg.points_per_unit = *points_per_unit;
            if *residual_radius < 0 || *residual_radius as f64 > *radius {
                return Err(config_error("residual radius must lie in [0, radius]"));
            }
            cardinal(cli, &p, &cfg, *residual_radius, export.as_deref())
        }
        Command::Coeffs { alpha, dim, radius, dft_size, kind, fit_lo, fit_hi } => {
            coeffs(cli, *alpha, *dim, *radius, dft_size.unwrap_or(8 * radius), *kind, *fit_lo, fit_hi.unwrap_or(*radius))
        }
        Command::Interp { .. } => interp(cli),
        Command::Converge { .. } => converge(cli),
        Command::Multiplier { alpha, dim, h, gamma, mikhlin, shells } => {
            let gammas = if gamma.is_empty() {
                if *dim == 1 {
                    vec![vec![1], vec![2]]
                } else {
                    multi_indices(*dim, 2).into_iter().filter(|g| g.iter().sum::<usize>() >= 1).collect()
                }
            } else {
                gamma.iter().map(|s| parse_gamma(s).map_err(config_error)).collect::<Result<Vec<_>>>()?
            };
            if gammas.iter().any(|g| g.len() != *dim) {
                return Err(config_error("every --gamma needs one entry per dimension"));
            }
            multiplier(cli, *alpha, *dim, h, &gammas, *mikhlin, *shells)
        }
        Command::Verify { only } => {
            let ids: Vec<usize> = if only.is_empty() { (1..=CRITERIA).collect() } else { only.clone() };
            if ids.iter().any(|&i| i == 0 || i > CRITERIA) {
                return Err(config_error(format!("criteria are numbered 1 to {CRITERIA}")));
            }
            run_verify(cli, &ids)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn spectrum(cli: &Cli, alpha: f64, c: f64, dim: usize, kind: SpectrumKind, h: f64, xi_max: Option<f64>, n: usize) -> Result<()> {
    if n < 2 {
        return Err(config_error("need at least two points"));
    }
    let pcfg = PeriodizationConfig::default();
    let (p, half_period) = match kind {
        SpectrumKind::Multiplier => {
            if !(h > 0.0 && h <= 1.0) {
                return Err(config_error("h must lie in (0, 1]"));
            }
            (params(alpha, 1.0, dim)?, PI / h)
        }
        _ => (params(alpha, c, dim)?, PI),
    };
    if kind == SpectrumKind::Symbol && !p.has_periodic_symbol() {
        return Err(config_error("the periodic symbol needs alpha < -d - 1/2"));
    }
    let top = xi_max.unwrap_or(3.0 * half_period);
    let mut csv = Csv::new(&["xi", "value"]);
    let mut rows = Vec::with_capacity(n);
    let mut xi = vec![0.0; dim];
    for i in 0..n {
        xi[0] = top * i as f64 / (n - 1) as f64;
        let v = match kind {
            SpectrumKind::Cardinal => cardinal_spectrum(&p, &xi, &pcfg)?,
            SpectrumKind::Multiplier => m_eval(alpha, dim, h, &xi)?,
            SpectrumKind::Symbol => periodic_symbol_p(&p, &xi, &pcfg)?,
        };
        csv.push(vec![csv_f64(xi[0]), csv_f64(v)]);
        rows.push([xi[0], v]);
    }
    match cli.format_or(Format::Csv) {
        Format::Csv => emit_csv(cli, &csv, &[]),
        Format::Json => emit_json(cli, &rows),
    }
}

#[derive(Serialize)]
struct NodeRow {
    k: Vec<i64>,
    value: f64,
    residual: f64,
}

#[derive(Serialize)]
struct CardinalResult {
    table: TableParts,
    max_residual: f64,
    nodes: Vec<NodeRow>,
}

fn cardinal(
    cli: &Cli,
    p: &MultiquadricParams,
    cfg: &SynthesisConfig,
    radius: i64,
    export: Option<&std::path::Path>,
) -> Result<()> {
    let table = table_source(cli)?.table(p, cfg)?;
    let d = p.dim();
    let mut nodes = Vec::new();
    let mut worst: f64 = 0.0;
    IndexBox::symmetric(d, radius).for_each(|k| {
        let value = table.at_integer(k).expect("residual radius inside the table");
        let delta = if k.iter().all(|&v| v == 0) { 1.0 } else { 0.0 };
        let residual = (value - delta).abs();
        worst = worst.max(residual);
        nodes.push(NodeRow { k: k.to_vec(), value, residual });
    });
    if let Some(path) = export {
        if path.extension().is_some_and(|e| e == "csv") {
            write_atomic(path, table_csv(&table).render(&preamble(cli)?).as_bytes())?;
        } else {
            write_table(path, &table)?;
        }
    }
    let mut parts = table.to_parts();
    parts.samples.clear();
    let summary = vec![
        format!("max_residual {}", csv_f64(worst)),
        format!("accuracy_estimate {}", csv_f64(parts.accuracy_estimate)),
        format!("points_per_unit {} half_nodes {}", parts.points_per_unit, parts.half_nodes),
    ];
    match cli.format_or(Format::Csv) {
        Format::Csv => {
            let names: Vec<String> = (0..d).map(|a| format!("k{a}")).chain(["value".into(), "residual".into()]).collect();
            let mut csv = Csv::new(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            for n in &nodes {
                let mut row: Vec<String> = n.k.iter().map(|v| v.to_string()).collect();
                row.push(csv_f64(n.value));
                row.push(csv_f64(n.residual));
                csv.push(row);
            }
            emit_csv(cli, &csv, &summary)
        }
        Format::Json => emit_json(cli, &CardinalResult { table: parts, max_residual: worst, nodes }),
    }
}

#[derive(Serialize)]
struct CoeffResult {
    kind: CoefficientKind,
    index_radius: usize,
    dft_size: usize,
    decay_slope: f64,
    fit_residual: f64,
    fit_range: [usize; 2],
    symmetry_defect: f64,
    aliasing_change: f64,
    aliasing_warning: bool,
    tail_fraction: f64,
    l1_norm: f64,
    values: Vec<(Vec<i64>, f64)>,
}

#[allow(clippy::too_many_arguments)]
fn coeffs(cli: &Cli, alpha: f64, dim: usize, radius: usize, dft: usize, kind: CoeffKind, lo: usize, hi: usize) -> Result<()> {
    let p = params(alpha, 1.0, dim)?;
    if !p.has_periodic_symbol() {
        return Err(config_error("coefficients need alpha < -d - 1/2"));
    }
    let kind = match kind {
        CoeffKind::P => CoefficientKind::SymbolP,
        CoeffKind::PInverse => CoefficientKind::SymbolPInverse,
    };
    let seq = symbol_coefficients(&p, kind, radius, dft).map_err(|e| config_error(e.to_string()))?;
    let (slope, resid) = seq.decay_slope(lo, hi).map_err(|e| config_error(e.to_string()))?;
    let mut values = Vec::new();
    let mut asym: f64 = 0.0;
    seq.index_box().for_each(|j| {
        let v = seq.get(j).expect("index inside the box");
        let mirror: Vec<i64> = j.iter().map(|x| -x).collect();
        asym = asym.max((v - seq.get(&mirror).expect("box is symmetric")).abs());
        values.push((j.to_vec(), v));
    });
    let res = CoeffResult {
        kind,
        index_radius: radius,
        dft_size: seq.dft_size,
        decay_slope: slope,
        fit_residual: resid,
        fit_range: [lo, hi],
        symmetry_defect: asym,
        aliasing_change: seq.aliasing_change,
        aliasing_warning: seq.aliasing_warning,
        tail_fraction: seq.tail_fraction,
        l1_norm: seq.l1_norm(),
        values,
    };
    if res.aliasing_warning {
        eprintln!("mqci: warning: coefficients changed by {:.3e} when the DFT was doubled", res.aliasing_change);
    }
    match cli.format_or(Format::Csv) {
        Format::Csv => {
            let names: Vec<String> = (0..dim).map(|a| format!("j{a}")).chain(["value".into()]).collect();
            let mut csv = Csv::new(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            for (j, v) in &res.values {
                let mut row: Vec<String> = j.iter().map(|x| x.to_string()).collect();
                row.push(csv_f64(*v));
                csv.push(row);
            }
            let summary = vec![
                format!("decay_slope {} over {lo}..{hi} (fit residual {})", csv_f64(slope), csv_f64(resid)),
                format!("symmetry_defect {}", csv_f64(asym)),
                format!("aliasing_change {}", csv_f64(res.aliasing_change)),
            ];
            emit_csv(cli, &csv, &summary)
        }
        Format::Json => emit_json(cli, &res),
    }
}

#[derive(Serialize)]
struct InterpRow {
    x: Vec<f64>,
    g: f64,
    interpolant: f64,
    error: f64,
}

#[derive(Serialize)]
struct InterpResult {
    test_function: String,
    h: f64,
    accuracy: f64,
    max_node_residual: f64,
    max_error: f64,
    points: Vec<InterpRow>,
}

fn interp(cli: &Cli) -> Result<()> {
    let Command::Interp { alpha, dim, h, family, order, support_radius, accuracy, points, probes, window_factor } =
        &cli.command
    else {
        unreachable!()
    };
    let (d, h) = (*dim, *h);
    if !(h > 0.0 && h <= 1.0) {
        return Err(config_error("h must lie in (0, 1]"));
    }
    if *points < 2 {
        return Err(config_error("need at least two points"));
    }
    let tf = make_test_function(*family, *order, d, *support_radius).map_err(|e| config_error(e.to_string()))?;
    let p = params(*alpha, 1.0 / h, d)?;
    if !p.in_convergence_range() && !(*alpha == -1.0 && d == 1) {
        return Err(config_error(format!("alpha = {alpha} is outside the supported range")));
    }
    let half = window_factor * support_radius;
    let jmax = (support_radius / h).floor() as i64;
    let samples = sample(|x| tf.eval(x), h, IndexBox::symmetric(d, jmax))?;
    let cfg = SynthesisConfig::new(*accuracy, Interpolant::required_table_radius(&samples, half));
    let table = table_source(cli)?.table(&p, &cfg)?;
    let it = Interpolant::with_table(table, samples)?;

    let mut residual: f64 = 0.0;
    let reach = (half / h).floor() as i64;
    let mut node_err = None;
    IndexBox::symmetric(d, reach.min(jmax + 2)).for_each(|j| {
        let x: Vec<f64> = j.iter().map(|&v| v as f64 * h).collect();
        match it.eval(&x) {
            Ok(v) => residual = residual.max((v - tf.eval(&x)).abs()),
            Err(e) => node_err = Some(e),
        }
    });
    if let Some(e) = node_err {
        return Err(e.into());
    }

    let mut xs: Vec<Vec<f64>> = (0..*points)
        .map(|i| {
            let mut x = vec![0.0; d];
            x[0] = -half + 2.0 * half * i as f64 / (*points - 1) as f64;
            x
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    xs.extend((0..*probes).map(|_| (0..d).map(|_| rng.gen_range(-half..half)).collect::<Vec<f64>>()));
    let mut rows = Vec::with_capacity(xs.len());
    let mut worst: f64 = 0.0;
    for x in xs {
        let v = it.eval(&x)?;
        let g = tf.eval(&x);
        worst = worst.max((v - g).abs());
        rows.push(InterpRow { x, g, interpolant: v, error: v - g });
    }
    let res = InterpResult {
        test_function: tf.id(),
        h,
        accuracy: it.accuracy(),
        max_node_residual: residual,
        max_error: worst,
        points: rows,
    };
    match cli.format_or(Format::Csv) {
        Format::Csv => {
            let names: Vec<String> =
                (0..d).map(|a| format!("x{a}")).chain(["g".into(), "interpolant".into(), "error".into()]).collect();
            let mut csv = Csv::new(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
            for r in &res.points {
                let mut row: Vec<String> = r.x.iter().map(|v| csv_f64(*v)).collect();
                row.extend([csv_f64(r.g), csv_f64(r.interpolant), csv_f64(r.error)]);
                csv.push(row);
            }
            let summary = vec![
                format!("max_node_residual {}", csv_f64(residual)),
                format!("max_error {}", csv_f64(worst)),
                format!("accuracy {}", csv_f64(res.accuracy)),
            ];
            emit_csv(cli, &csv, &summary)
        }
        Format::Json => emit_json(cli, &res),
    }
}

/// The converge table: one row per spacing.
pub fn convergence_csv(r: &ConvergenceReport, timing: bool) -> Csv {
    let mut header = vec!["alpha", "dim", "p", "family", "k", "h", "error", "eoc"];
    if timing {
        header.push("runtime_ms");
    }
    let mut csv = Csv::new(&header);
    let p = if r.p.is_infinite() { "inf".to_string() } else { csv_f64(r.p) };
    for (i, row) in r.rows.iter().enumerate() {
        let eoc = match i.checked_sub(1).and_then(|k| r.eoc_pairs[k].order) {
            Some(v) => csv_f64(v),
            None => String::new(),
        };
        let mut cells = vec![
            csv_f64(r.alpha),
            r.dim.to_string(),
            p.clone(),
            r.family.clone(),
            r.smoothness_order.to_string(),
            csv_f64(row.h),
            csv_f64(row.error),
            eoc,
        ];
        if timing {
            cells.push(format!("{:.3}", row.runtime_ms));
        }
        csv.push(cells);
    }
    csv
}

fn converge(cli: &Cli) -> Result<()> {
    let Command::Converge { alpha, dim, p, family, order, h, support_radius, points_per_h, accuracy, window_factor } =
        &cli.command
    else {
        unreachable!()
    };
    let tf = make_test_function(*family, *order, *dim, *support_radius).map_err(|e| config_error(e.to_string()))?;
    let mut opts = ConvergenceOptions::for_dim(*dim);
    if let Some(v) = points_per_h {
        opts.points_per_h = *v;
    }
    if let Some(v) = accuracy {
        opts.table_accuracy = *v;
    }
    if let Some(v) = window_factor {
        opts.window_factor = *v;
    }
    let mut tables = table_source(cli)?;
    let report = if cli.timing {
        run_convergence(*alpha, *p, &tf, h, &opts, tables.as_mut(), &mut StdClock::default())
    } else {
        run_convergence(*alpha, *p, &tf, h, &opts, tables.as_mut(), &mut NoClock)
    }
    .map_err(|e| match e {
        mqci_core::Error::Resource { .. } => AppError::Core(e),
        other => config_error(other.to_string()),
    })?;
    match cli.format_or(Format::Json) {
        Format::Csv => {
            let slope = report.fitted_slope.map_or("none".to_string(), csv_f64);
            emit_csv(cli, &convergence_csv(&report, cli.timing), &[format!("fitted_slope {slope}")])
        }
        Format::Json => emit_json(cli, &report),
    }
}

#[derive(Serialize)]
struct MikhlinResult {
    reports: Vec<MikhlinReport>,
    spread: Vec<(Vec<usize>, f64)>,
}

#[derive(Serialize)]
struct MultiplierResult {
    profile: MultiplierProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    mikhlin: Option<MikhlinResult>,
}

fn multiplier(cli: &Cli, alpha: f64, dim: usize, h: &[f64], gammas: &[Vec<usize>], mikhlin: bool, shells: usize) -> Result<()> {
    if h.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(config_error("every h must lie in (0, 1]"));
    }
    let quad = QuadConfig::for_dim(dim);
    let profile = scaling_fit(alpha, dim, h, gammas, &quad).map_err(|e| config_error(e.to_string()))?;
    let mikhlin = if mikhlin {
        let reports = h.iter().map(|&v| mikhlin_check(alpha, dim, v, shells, &quad)).collect::<mqci_core::Result<Vec<_>>>()?;
        let spread = mikhlin_spread(&reports);
        Some(MikhlinResult { reports, spread })
    } else {
        None
    };
    let res = MultiplierResult { profile, mikhlin };
    match cli.format_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["quantity", "h", "gamma", "value", "error_bar"]);
            let prof = &res.profile;
            for (i, &hv) in prof.h_list.iter().enumerate() {
                for (g, gamma) in prof.gamma_list.iter().enumerate() {
                    csv.push(vec![
                        "l1_norm".into(),
                        csv_f64(hv),
                        gamma_label(gamma),
                        csv_f64(prof.l1_norms[i][g]),
                        csv_f64(prof.l1_error_bars[i][g]),
                    ]);
                }
            }
            if let Some(m) = &res.mikhlin {
                for r in &m.reports {
                    for e in &r.entries {
                        csv.push(vec!["mikhlin_sup".into(), csv_f64(r.h), gamma_label(&e.gamma), csv_f64(e.sup), String::new()]);
                    }
                }
            }
            let summary: Vec<String> = prof
                .fitted_slopes
                .iter()
                .map(|f| format!("slope gamma={} {} (residual {})", gamma_label(&f.gamma), csv_f64(f.slope), csv_f64(f.residual)))
                .collect();
            emit_csv(cli, &csv, &summary)
        }
        Format::Json => emit_json(cli, &res),
    }
}

fn run_verify(cli: &Cli, ids: &[usize]) -> Result<()> {
    let mut tables = table_source(cli)?;
    let mut ctx = VerifyContext { seed: cli.seed, tables: tables.as_mut() };
    let mut results = verify::run_suite(ids, &mut ctx);
    let lines: Vec<String> = results.iter().map(|r| r.summary_line()).collect();
    let timings: Vec<String> = results
        .iter()
        .map(|r| format!("runtime criterion {} {:.3} s", r.id, r.runtime_s.unwrap_or(0.0)))
        .collect();
    if !cli.timing {
        for r in &mut results {
            r.runtime_s = None;
        }
    }
    match cli.format_or(Format::Csv) {
        Format::Csv => emit_csv(cli, &checks_csv(&results), if cli.timing { &timings } else { &[] })?,
        Format::Json => emit_json(cli, &results)?,
    }
    for line in &lines {
        if cli.output.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed()).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(AppError::VerifyFailed(format!("criteria {} did not pass", failed.join(", "))))
    }
}
