//! Projected gradient ascent of the position shift over discretized probes.
//!
//! The objective is the normalization-free quotient
//! `Re[i⟨y,y'⟩]/⟨y,y⟩ - Re[i⟨z,z'⟩]/⟨z,z⟩` with `y = B∘z`, evaluated with the
//! grid's Simpson weights and 4th-order derivative stencils, so it agrees
//! with [`crate::expectation::shift_report`] on probes without an analytic
//! derivative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WvaError};
use crate::evolution::PostSelectedEvolution;
use crate::expectation::expect_q;
use crate::grid::MomentumGrid;
use crate::probe::ProbeWavefunction;
use crate::system::Amplitude;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const RANDOM_MODES: i32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    Gaussian { width: f64 },
    Random,
    Custom(ProbeWavefunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub grid: MomentumGrid,
    pub max_iters: usize,
    pub step: f64,
    pub tol: f64,
    pub seed: u64,
    pub init: Initialization,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(WvaError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(WvaError::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(WvaError::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.grid.len() < 5 {
            return Err(WvaError::InvalidGrid("optimizer needs at least 5 nodes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerTrace {
    pub iterations: Vec<IterationRecord>,
    pub final_probe: ProbeWavefunction,
    pub converged: bool,
}

impl OptimizerTrace {
    pub fn final_objective(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn max_objective(&self) -> f64 {
        self.iterations
            .iter()
            .map(|r| r.objective)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Terms {
    n0: f64,
    r0: f64,
    n1: f64,
    r1: f64,
}

impl Terms {
    fn objective(&self) -> f64 {
        self.n1 / self.r1 - self.n0 / self.r0
    }
}

fn b_samples(grid: &MomentumGrid, evo: &PostSelectedEvolution) -> (Vec<Amplitude>, Vec<Amplitude>) {
    grid.points()
        .map(|p| (evo.b_factor(p), evo.b_derivative(p)))
        .unzip()
}

fn terms(
    values: &[Amplitude],
    derivative: &[Amplitude],
    weights: &[f64],
    b: &[Amplitude],
    db: &[Amplitude],
) -> Result<Terms> {
    let (mut n0, mut r0, mut n1, mut r1) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..values.len() {
        let (z, dz, w) = (values[i], derivative[i], weights[i]);
        let y = b[i] * z;
        let dy = db[i] * z + b[i] * dz;
        n0 += w * (Amplitude::i() * z.conj() * dz).re;
        r0 += w * z.norm_sqr();
        n1 += w * (Amplitude::i() * y.conj() * dy).re;
        r1 += w * y.norm_sqr();
    }
    if !(r0 > 0.0) || !(r1 > 0.0) {
        return Err(WvaError::ZeroNorm);
    }
    let t = Terms { n0, r0, n1, r1 };
    if !t.objective().is_finite() {
        return Err(WvaError::NonFinite("optimizer objective".into()));
    }
    Ok(t)
}

fn check_len(values: &[Amplitude], grid: &MomentumGrid) -> Result<()> {
    if values.len() != grid.len() {
        return Err(WvaError::DimensionMismatch {
            expected: grid.len(),
            found: values.len(),
        });
    }
    Ok(())
}

/// `⟨q̂⟩_f - ⟨q̂⟩_i` for unnormalized samples and a supplied derivative.
pub fn objective(
    values: &[Amplitude],
    derivative: &[Amplitude],
    grid: &MomentumGrid,
    evo: &PostSelectedEvolution,
) -> Result<f64> {
    check_len(values, grid)?;
    check_len(derivative, grid)?;
    let (b, db) = b_samples(grid, evo);
    Ok(terms(values, derivative, &grid.simpson_weights(), &b, &db)?.objective())
}

/// [`objective`] with the stencil derivative of `values`.
pub fn discrete_objective(
    values: &[Amplitude],
    grid: &MomentumGrid,
    evo: &PostSelectedEvolution,
) -> Result<f64> {
    check_len(values, grid)?;
    objective(values, &grid.derivative(values), grid, evo)
}

/// Wirtinger derivative `∂f/∂z̄ₖ` of [`discrete_objective`], so that
/// `∂f/∂Re zₖ = 2 Re gₖ` and `∂f/∂Im zₖ = 2 Im gₖ`.
pub fn gradient(
    values: &[Amplitude],
    grid: &MomentumGrid,
    evo: &PostSelectedEvolution,
) -> Result<Vec<Amplitude>> {
    check_len(values, grid)?;
    let (b, db) = b_samples(grid, evo);
    gradient_with(values, grid, &grid.simpson_weights(), &b, &db).map(|(g, _)| g)
}

fn gradient_with(
    values: &[Amplitude],
    grid: &MomentumGrid,
    weights: &[f64],
    b: &[Amplitude],
    db: &[Amplitude],
) -> Result<(Vec<Amplitude>, f64)> {
    let i = Amplitude::i();
    let dz = grid.derivative(values);
    let t = terms(values, &dz, weights, b, db)?;
    let n = values.len();

    let wz: Vec<Amplitude> = (0..n).map(|k| values[k] * weights[k]).collect();
    let wby: Vec<Amplitude> = (0..n)
        .map(|k| b[k].conj() * b[k] * values[k] * weights[k])
        .collect();
    let dt_wz = grid.derivative_transpose(&wz);
    let dt_wby = grid.derivative_transpose(&wby);

    let mut grad = Vec::with_capacity(n);
    for k in 0..n {
        let w = weights[k];
        let y = b[k] * values[k];
        let dy = db[k] * values[k] + b[k] * dz[k];
        // Each term is the full gradient ∂/∂Re + i∂/∂Im of a quadratic form.
        let g_n0 = i * w * dz[k] - i * dt_wz[k];
        let g_r0 = 2.0 * w * values[k];
        let g_n1 = i * w * b[k].conj() * dy - i * w * db[k].conj() * y - i * dt_wby[k];
        let g_r1 = 2.0 * w * b[k].norm_sqr() * values[k];
        let full = g_n1 / t.r1 - g_r1 * (t.n1 / (t.r1 * t.r1)) - g_n0 / t.r0
            + g_r0 * (t.n0 / (t.r0 * t.r0));
        grad.push(full * 0.5);
    }
    Ok((grad, t.objective()))
}

fn weighted_dot(a: &[Amplitude], b: &[Amplitude], weights: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| w * (x.conj() * y).re)
        .sum()
}

/// Function-space ascent direction: the Wirtinger gradient divided by the
/// quadrature weights and projected off the gauge directions `z`, `iz` and
/// `-ipz` (scale, global phase, translation) in the real `L²` metric.
fn projected_direction(
    grad: &[Amplitude],
    values: &[Amplitude],
    grid: &MomentumGrid,
    weights: &[f64],
) -> (Vec<Amplitude>, f64) {
    let mut dir: Vec<Amplitude> = grad
        .iter()
        .zip(weights)
        .map(|(g, w)| g * (2.0 / w))
        .collect();
    let gauges = [
        values.to_vec(),
        values.iter().map(|z| Amplitude::i() * z).collect::<Vec<_>>(),
        grid.points()
            .zip(values)
            .map(|(p, z)| -Amplitude::i() * p * z)
            .collect::<Vec<_>>(),
    ];
    let mut basis: Vec<Vec<Amplitude>> = Vec::with_capacity(3);
    for mut v in gauges {
        for e in &basis {
            let c = weighted_dot(e, &v, weights);
            v.iter_mut().zip(e).for_each(|(x, y)| *x -= y * c);
        }
        let norm = weighted_dot(&v, &v, weights).sqrt();
        if norm > 1e-300 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    for e in &basis {
        let c = weighted_dot(e, &dir, weights);
        dir.iter_mut().zip(e).for_each(|(x, y)| *x -= y * c);
    }
    let norm = weighted_dot(&dir, &dir, weights).max(0.0).sqrt();
    (dir, norm)
}

/// Norm of the gauge-projected gradient in the quadrature `L²` metric.
pub fn projected_gradient_norm(
    values: &[Amplitude],
    grid: &MomentumGrid,
    evo: &PostSelectedEvolution,
) -> Result<f64> {
    check_len(values, grid)?;
    let weights = grid.simpson_weights();
    let (b, db) = b_samples(grid, evo);
    let (grad, _) = gradient_with(values, grid, &weights, &b, &db)?;
    Ok(projected_direction(&grad, values, grid, &weights).1)
}

fn normalize(values: &mut [Amplitude], weights: &[f64]) -> Result<()> {
    let norm = weighted_dot(values, values, weights).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(WvaError::ZeroNorm);
    }
    values.iter_mut().for_each(|z| *z /= norm);
    Ok(())
}

fn initial_values(config: &OptimizerConfig) -> Result<Vec<Amplitude>> {
    let grid = &config.grid;
    match &config.init {
        Initialization::Gaussian { width } => {
            if !(*width > 0.0) || !width.is_finite() {
                return Err(WvaError::InvalidParameter(format!(
                    "Gaussian width must be positive, got {width}"
                )));
            }
            Ok(grid
                .points()
                .map(|p| Amplitude::new((-p * p / (4.0 * width * width)).exp(), 0.0))
                .collect())
        }
        Initialization::Random => {
            // Low-frequency Fourier modes on the support plus a constant, so
            // the start is smooth and well away from zero norm.
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let coefficients: Vec<(i32, Amplitude)> = (-RANDOM_MODES..=RANDOM_MODES)
                .map(|k| {
                    let scale = 1.0 / (1.0 + f64::from(k * k));
                    let c = Amplitude::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    (k, c * scale)
                })
                .collect();
            let length = grid.p_max() - grid.p_min();
            Ok(grid
                .points()
                .map(|p| {
                    let x = std::f64::consts::PI * (p - grid.p_min()) / length;
                    coefficients
                        .iter()
                        .fold(Amplitude::new(1.5, 0.0), |acc, (k, c)| {
                            acc + c * Amplitude::from_polar(1.0, f64::from(*k) * x)
                        })
                })
                .collect())
        }
        Initialization::Custom(probe) => {
            if probe.grid() != grid {
                return Err(WvaError::InvalidGrid(
                    "custom initial probe must live on the optimizer grid".into(),
                ));
            }
            Ok(probe.values().to_vec())
        }
    }
}

/// Armijo-backtracked ascent with renormalization after every step. Stops
/// when the projected gradient norm falls below `tol` or after `max_iters`
/// gradient evaluations; `iterations` records the objective and gradient
/// norm at every evaluated iterate.
pub fn maximize(config: &OptimizerConfig, evo: &PostSelectedEvolution) -> Result<OptimizerTrace> {
    config.validate()?;
    let grid = &config.grid;
    let weights = grid.simpson_weights();
    let (b, db) = b_samples(grid, evo);

    let mut z = initial_values(config)?;
    normalize(&mut z, &weights)?;
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut step = config.step;

    for iteration in 0..config.max_iters {
        let (grad, f) = gradient_with(&z, grid, &weights, &b, &db)?;
        let (dir, norm) = projected_direction(&grad, &z, grid, &weights);
        iterations.push(IterationRecord {
            iteration,
            objective: f,
            gradient_norm: norm,
        });
        if norm < config.tol {
            converged = true;
            break;
        }
        if iteration + 1 == config.max_iters {
            break;
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..MAX_HALVINGS {
            let mut trial: Vec<Amplitude> = z.iter().zip(&dir).map(|(x, d)| x + d * t).collect();
            normalize(&mut trial, &weights)?;
            let dtrial = grid.derivative(&trial);
            let ft = terms(&trial, &dtrial, &weights, &b, &db)?.objective();
            if ft >= f + ARMIJO * t * norm * norm {
                accepted = Some((trial, t));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, t)) => {
                z = trial;
                step = 2.0 * t;
            }
            None => break,
        }
    }

    let final_probe = ProbeWavefunction::new(grid.clone(), z, None, "optimized".to_string())?;
    Ok(OptimizerTrace {
        iterations,
        final_probe,
        converged,
    })
}

/// Translates to `⟨q̂⟩ = 0` and rotates the global phase so the sample
/// nearest `p = 0` is real and positive.
pub fn gauge_fix(probe: &ProbeWavefunction) -> Result<ProbeWavefunction> {
    let grid = probe.grid();
    let q = expect_q(probe.values(), &probe.derivative(), grid)?;
    let moved = probe.with_linear_phase(-q.value);
    let centre = ((0.0 - grid.p_min()) / grid.spacing())
        .round()
        .clamp(0.0, (grid.len() - 1) as f64) as usize;
    let phase = moved.values()[centre].arg();
    Ok(moved.with_global_phase(-phase))
}
