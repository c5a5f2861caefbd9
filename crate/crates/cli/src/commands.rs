//! Subcommand implementations. Each returns the CSV text it produced so the
//! binary and the tests share one code path.

use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use wva_core::optimizer::projected_gradient_norm;
use wva_core::probe::{recommended_support_points, FourierSeries, PositionSamples};
use wva_core::{
    compute_weak_value, final_probe_position, gauge_fix, gaussian_exact_shifts, gaussian_grid,
    gaussian_probe, mach_zehnder_setup, mach_zehnder_weak_value, max_shift, maximize,
    optimal_probe_on_grid, shift_report, smoothed_grid, smoothed_optimal_probe,
    to_position_density, Amplitude, Initialization, MomentumGrid, Observable, OptimizerConfig,
    PostSelectedEvolution, ProbeWavefunction, ShiftReport, SystemState, WeakValue, WvaError,
};

use crate::config::{
    Axis, ConfigError, InitChoice, ProbeChoice, ScenarioConfig, Selection, SweepConfig,
};
use crate::format::{fmt_num, fmt_opt};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Domain(WvaError),
    Io(String),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Domain(e) => e.name(),
            CliError::Io(_) => "IoError",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<WvaError> for CliError {
    fn from(e: WvaError) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    fn finish(self) -> CliResult<String> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// The two-level family used when sweeping the post-selection angle
/// without explicit states: `pre = (1,1)/√2`, `obs = diag(1,-1)`.
fn default_family() -> (Vec<Amplitude>, Vec<Vec<Amplitude>>) {
    let one = Amplitude::new(1.0, 0.0);
    let zero = Amplitude::new(0.0, 0.0);
    (vec![one, one], vec![vec![one, zero], vec![zero, -one]])
}

pub fn weak_value(selection: &Selection) -> CliResult<WeakValue> {
    Ok(match selection {
        Selection::WeakValue(aw) => WeakValue::from_value(*aw)?,
        Selection::MachZehnder { chi, phi } => mach_zehnder_weak_value(*chi, *phi)?.affine(2.0, -1.0),
        Selection::States { pre, post, obs } => {
            let pre = SystemState::new(pre.clone())?;
            let post = SystemState::new(post.clone())?;
            let obs = Observable::new(obs.clone())?;
            compute_weak_value(&pre, &post, &obs)?
        }
    })
}

pub fn build_probe(config: &ScenarioConfig, aw: Amplitude) -> CliResult<ProbeWavefunction> {
    let g = config.g;
    Ok(match &config.probe {
        ProbeChoice::Gaussian { w } => {
            let grid = match config.n_points {
                Some(n) => MomentumGrid::symmetric(10.0 * w, n)?,
                None => gaussian_grid(*w, g)?,
            };
            gaussian_probe(*w, &grid)?
        }
        ProbeChoice::Optimal => {
            let n = config
                .n_points
                .unwrap_or_else(|| recommended_support_points(aw, config.support));
            let grid = MomentumGrid::optimal_support(g, config.support, n)?;
            optimal_probe_on_grid(g, aw, &grid)?
        }
        ProbeChoice::Smoothed { s } => {
            let grid = smoothed_grid(g, aw, *s)?;
            smoothed_optimal_probe(g, aw, *s, &grid)?
        }
        ProbeChoice::File { path } => read_probe_file(path)?,
    })
}

/// Reads the `p_initial` (and, when present, `dp_initial`) family of a
/// `space,coordinate,re,im` CSV written by `dump`.
pub fn read_probe_file(path: &Path) -> CliResult<ProbeWavefunction> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["space", "coordinate", "re", "im"] {
        return Err(CliError::Io(format!(
            "{}: expected header space,coordinate,re,im",
            path.display()
        )));
    }
    let mut coords = Vec::new();
    let mut values = Vec::new();
    let mut derivative = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |k: usize| -> CliResult<f64> {
            record
                .get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Io(format!("{}: bad number on row {}", path.display(), row + 2)))
        };
        match &record[0] {
            "p_initial" => {
                coords.push(field(1)?);
                values.push(Amplitude::new(field(2)?, field(3)?));
            }
            "dp_initial" => derivative.push(Amplitude::new(field(2)?, field(3)?)),
            _ => {}
        }
    }
    if coords.len() < 5 {
        return Err(WvaError::InvalidGrid(format!(
            "{}: needs at least 5 p_initial samples",
            path.display()
        ))
        .into());
    }
    let grid = MomentumGrid::new(coords[0], coords[coords.len() - 1], coords.len())?;
    let scale = grid.p_max().abs().max(grid.p_min().abs());
    for (i, p) in coords.iter().enumerate() {
        if (p - grid.point(i)).abs() > 1e-9 * scale.max(grid.spacing()) {
            return Err(WvaError::InvalidGrid(format!(
                "{}: momentum samples are not uniformly spaced",
                path.display()
            ))
            .into());
        }
    }
    let derivative = match derivative.len() {
        0 => None,
        n if n == values.len() => Some(derivative),
        n => {
            return Err(WvaError::DimensionMismatch {
                expected: values.len(),
                found: n,
            }
            .into())
        }
    };
    Ok(ProbeWavefunction::new(grid, values, derivative, "file")?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analytic {
    pub delta_q: Option<f64>,
    pub delta_p: Option<f64>,
}

pub fn analytic_reference(config: &ScenarioConfig, aw: Amplitude) -> Analytic {
    match config.probe {
        ProbeChoice::Gaussian { w } => match gaussian_exact_shifts(config.g, w, aw) {
            Ok(r) => Analytic {
                delta_q: Some(r.delta_q),
                delta_p: Some(r.delta_p),
            },
            Err(_) => Analytic {
                delta_q: None,
                delta_p: None,
            },
        },
        ProbeChoice::Optimal | ProbeChoice::Smoothed { .. } => Analytic {
            delta_q: max_shift(config.g, aw).ok(),
            delta_p: None,
        },
        ProbeChoice::File { .. } => Analytic {
            delta_q: None,
            delta_p: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome {
    pub weak: WeakValue,
    pub report: ShiftReport,
    pub analytic: Analytic,
}

pub fn evaluate_shift(config: &ScenarioConfig) -> CliResult<ShiftOutcome> {
    let weak = weak_value(&config.selection)?;
    let evo = PostSelectedEvolution::new(config.g, weak)?;
    let probe = build_probe(config, weak.value())?;
    let report = shift_report(&evo, &probe)?;
    Ok(ShiftOutcome {
        weak,
        report,
        analytic: analytic_reference(config, weak.value()),
    })
}

pub const SHIFT_HEADER: &[&str] = &[
    "q_initial",
    "q_final",
    "delta_q",
    "delta_p",
    "weight",
    "analytic_delta_q",
    "analytic_delta_p",
    "abs_diff_delta_q",
    "abs_diff_delta_p",
];

pub fn cmd_shift(config: &ScenarioConfig) -> CliResult<String> {
    let out = evaluate_shift(config)?;
    let r = &out.report;
    let diff = |a: Option<f64>, x: f64| a.map(|a| (x - a).abs());
    let mut table = Table::new(SHIFT_HEADER)?;
    table.row([
        fmt_num(r.q_initial),
        fmt_num(r.q_final),
        fmt_num(r.delta_q),
        fmt_num(r.delta_p),
        fmt_num(r.weight),
        fmt_opt(out.analytic.delta_q),
        fmt_opt(out.analytic.delta_p),
        fmt_opt(diff(out.analytic.delta_q, r.delta_q)),
        fmt_opt(diff(out.analytic.delta_p, r.delta_p)),
    ])?;
    table.finish()
}

fn push_samples(table: &mut Table, space: &str, coords: &[f64], values: &[Amplitude]) -> CliResult<()> {
    for (c, v) in coords.iter().zip(values) {
        table.row([space.to_string(), fmt_num(*c), fmt_num(v.re), fmt_num(v.im)])?;
    }
    Ok(())
}

fn push_position(table: &mut Table, space: &str, samples: &PositionSamples) -> CliResult<()> {
    push_samples(table, space, &samples.positions, &samples.values)
}

/// Momentum samples of the initial probe (`p_initial`, with its derivative
/// as `dp_initial`) and of the normalized post-selected probe (`p_final`),
/// followed by position-space samples. Probes on the optimal support get the
/// discrete lattice `q = 2πk/L` (`q_initial`, `q_final`); Gaussian probes
/// get continuous densities (`q_initial_density`, `q_final_density`).
pub fn cmd_dump(config: &ScenarioConfig) -> CliResult<String> {
    let weak = weak_value(&config.selection)?;
    let aw = weak.value();
    let evo = PostSelectedEvolution::new(config.g, weak)?;
    let probe = build_probe(config, aw)?;
    let grid = probe.grid().clone();
    let coords: Vec<f64> = grid.points().collect();
    let evolved = evo.apply_postselection(&probe);
    let scale = 1.0 / evolved.weight.sqrt();
    let final_values: Vec<Amplitude> = evolved.values.iter().map(|v| v * scale).collect();

    let mut table = Table::new(&["space", "coordinate", "re", "im"])?;
    push_samples(&mut table, "p_initial", &coords, probe.values())?;
    push_samples(&mut table, "dp_initial", &coords, &probe.derivative())?;
    push_samples(&mut table, "p_final", &coords, &final_values)?;

    match config.probe {
        ProbeChoice::Optimal => {
            let initial = FourierSeries::from_probe(&probe).position_samples(config.n_range);
            push_position(&mut table, "q_initial", &initial)?;
            let final_samples = if config.support == 1 {
                final_probe_position(config.g, aw, config.n_range)?
            } else {
                let final_probe = ProbeWavefunction::new(grid, final_values, None, "final")?;
                FourierSeries::from_probe(&final_probe).position_samples(config.n_range)
            };
            push_position(&mut table, "q_final", &final_samples)?;
        }
        ProbeChoice::Gaussian { w } => {
            let report = shift_report(&evo, &probe)?;
            let half = 8.0 / w + 2.0 * config.g * (aw.norm() + 1.0) + report.delta_q.abs();
            let q_grid = MomentumGrid::symmetric(half, 1201)?;
            let final_probe = ProbeWavefunction::new(grid, final_values, None, "final")?;
            for (space, p) in [("q_initial_density", &probe), ("q_final_density", &final_probe)] {
                let density = to_position_density(p, &q_grid);
                for (q, d) in q_grid.points().zip(&density.density) {
                    table.row([space.to_string(), fmt_num(q), fmt_num(*d), "0".to_string()])?;
                }
            }
        }
        ProbeChoice::Smoothed { .. } | ProbeChoice::File { .. } => {}
    }
    table.finish()
}

fn with_axis_value(base: &ScenarioConfig, axis: Axis, value: f64) -> CliResult<ScenarioConfig> {
    let mut c = base.clone();
    c.sweep = None;
    match axis {
        Axis::PostselectionAngle => {
            let post = vec![Amplitude::new(value.cos(), 0.0), Amplitude::new(value.sin(), 0.0)];
            c.selection = match &base.selection {
                Selection::MachZehnder { chi, .. } => Selection::MachZehnder { chi: *chi, phi: value },
                Selection::States { pre, obs, .. } => Selection::States {
                    pre: pre.clone(),
                    post,
                    obs: obs.clone(),
                },
                Selection::WeakValue(_) => {
                    let (pre, obs) = default_family();
                    Selection::States { pre, post, obs }
                }
            };
        }
        Axis::SmoothingS => c.probe = ProbeChoice::Smoothed { s: value },
        Axis::CouplingG => c.g = value,
        Axis::GridN => {
            if value.fract() != 0.0 || value < 5.0 || value % 2.0 == 0.0 {
                return Err(WvaError::InvalidGrid(format!(
                    "grid_n must be an odd integer of at least 5, got {value}"
                ))
                .into());
            }
            c.n_points = Some(value as usize);
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<ShiftOutcome, String>,
}

fn threads() -> usize {
    std::env::var("WVA_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

pub fn evaluate_sweep(config: &ScenarioConfig, sweep: &SweepConfig) -> CliResult<Vec<SweepRow>> {
    let values = sweep.values.expand();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads())
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let rows = pool.install(|| {
        values
            .par_iter()
            .map(|&value| SweepRow {
                value,
                outcome: with_axis_value(config, sweep.axis, value)
                    .and_then(|c| evaluate_shift(&c))
                    .map_err(|e| e.name().to_string()),
            })
            .collect()
    });
    Ok(rows)
}

/// Returns the CSV and the number of rows that failed.
pub fn cmd_sweep(config: &ScenarioConfig) -> CliResult<(String, usize)> {
    let sweep = config.sweep.as_ref().ok_or_else(|| {
        CliError::Config(ConfigError {
            source: crate::config::Source::Default,
            field: "axis".into(),
            message: "sweep needs an axis".into(),
        })
    })?;
    let rows = evaluate_sweep(config, sweep)?;
    let mut table = Table::new(&[
        sweep.axis.name(),
        "delta_q",
        "delta_p",
        "weight",
        "analytic_delta_q",
        "overlap_times_q_final",
        "error",
    ])?;
    let mut failures = 0;
    for row in &rows {
        match &row.outcome {
            Ok(o) => {
                let product = (sweep.axis == Axis::PostselectionAngle)
                    .then(|| o.report.q_final * o.weak.overlap().norm());
                table.row([
                    fmt_num(row.value),
                    fmt_num(o.report.delta_q),
                    fmt_num(o.report.delta_p),
                    fmt_num(o.report.weight),
                    fmt_opt(o.analytic.delta_q),
                    fmt_opt(product),
                    String::new(),
                ])?;
            }
            Err(name) => {
                failures += 1;
                let mut fields = vec![fmt_num(row.value)];
                fields.extend(std::iter::repeat_n(String::new(), 5));
                fields.push(name.clone());
                table.row(fields)?;
            }
        }
    }
    Ok((table.finish()?, failures))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutput {
    pub trace_csv: String,
    pub probe_csv: String,
    pub comparison_csv: String,
    pub converged: bool,
}

pub const DEFAULT_OPTIMIZER_POINTS: usize = 401;

pub fn optimizer_config(config: &ScenarioConfig) -> CliResult<OptimizerConfig> {
    let n = config.n_points.unwrap_or(DEFAULT_OPTIMIZER_POINTS);
    let grid = MomentumGrid::optimal_support(config.g, config.support, n)?;
    let init = match config.optimize.init {
        InitChoice::Gaussian => Initialization::Gaussian {
            width: match config.probe {
                ProbeChoice::Gaussian { w } => w,
                _ => 1.0,
            },
        },
        InitChoice::Random => Initialization::Random,
    };
    Ok(OptimizerConfig {
        grid,
        max_iters: config.optimize.max_iters,
        step: config.optimize.step,
        tol: config.optimize.tol,
        seed: config.optimize.seed,
        init,
    })
}

pub fn cmd_optimize(config: &ScenarioConfig) -> CliResult<OptimizeOutput> {
    let weak = weak_value(&config.selection)?;
    let aw = weak.value();
    let evo = PostSelectedEvolution::new(config.g, weak)?;
    let opt = optimizer_config(config)?;
    let trace = maximize(&opt, &evo)?;

    let mut table = Table::new(&["iter", "objective", "grad_norm"])?;
    for r in &trace.iterations {
        table.row([r.iteration.to_string(), fmt_num(r.objective), fmt_num(r.gradient_norm)])?;
    }
    let trace_csv = table.finish()?;

    let fixed = gauge_fix(&trace.final_probe)?;
    let coords: Vec<f64> = fixed.grid().points().collect();
    let mut table = Table::new(&["space", "coordinate", "re", "im"])?;
    push_samples(&mut table, "p_initial", &coords, fixed.values())?;
    let probe_csv = table.finish()?;

    let target = max_shift(config.g, aw).ok();
    let objective = trace.final_objective();
    let (deviation, optimum_gradient) = match optimal_probe_on_grid(config.g, aw, &opt.grid) {
        Ok(reference) => {
            let reference = gauge_fix(&reference)?;
            let dev = reference
                .values()
                .iter()
                .zip(fixed.values())
                .map(|(a, b)| (a.norm() - b.norm()).abs())
                .fold(0.0, f64::max);
            let grad = projected_gradient_norm(reference.values(), &opt.grid, &evo)?;
            (Some(dev), Some(grad))
        }
        Err(_) => (None, None),
    };
    let mut table = Table::new(&[
        "converged",
        "iterations",
        "final_objective",
        "max_objective",
        "max_shift",
        "abs_gap",
        "profile_deviation",
        "optimum_gradient_norm",
    ])?;
    table.row([
        trace.converged.to_string(),
        trace.iterations.len().to_string(),
        fmt_num(objective),
        fmt_num(trace.max_objective()),
        fmt_opt(target),
        fmt_opt(target.map(|t| (objective - t).abs())),
        fmt_opt(deviation),
        fmt_opt(optimum_gradient),
    ])?;
    Ok(OptimizeOutput {
        trace_csv,
        probe_csv,
        comparison_csv: table.finish()?,
        converged: trace.converged,
    })
}

/// Path weak value `C_w` from the closed form and from the matrix element,
/// and the observable weak value `A_w = 2C_w - 1`.
pub fn cmd_mach_zehnder(chi: f64, phi: f64) -> CliResult<String> {
    let setup = mach_zehnder_setup(chi, phi)?;
    let matrix = wva_core::system::operator_weak_value(
        &setup.pre,
        &setup.post,
        &setup.projector,
        wva_core::system::DEFAULT_ORTHOGONALITY_EPS,
    )?;
    let c_w = mach_zehnder_weak_value(chi, phi)?;
    let a_w = c_w.affine(2.0, -1.0);
    let mut table = Table::new(&[
        "chi",
        "phi",
        "c_w_re",
        "c_w_im",
        "c_w_matrix_re",
        "c_w_matrix_im",
        "a_w_re",
        "a_w_im",
        "overlap",
    ])?;
    table.row([
        fmt_num(chi),
        fmt_num(phi),
        fmt_num(c_w.value().re),
        fmt_num(c_w.value().im),
        fmt_num(matrix.value().re),
        fmt_num(matrix.value().im),
        fmt_num(a_w.value().re),
        fmt_num(a_w.value().im),
        fmt_num(c_w.overlap().re),
    ])?;
    table.finish()
}
