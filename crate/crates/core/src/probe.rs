//! Momentum-space probe wavefunctions: Gaussian, optimal, smoothed optimal,
//! the post-selected final state, and transforms to position space.

use std::borrow::Cow;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, WvaError};
use crate::evolution::b_factor_raw;
use crate::grid::{odd_at_least, MomentumGrid};
use crate::system::Amplitude;

/// Maximum deviation of `∫|ξ|²dp` from one accepted after renormalization.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Truncated tail mass allowed for probes with unbounded support.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;
/// Default node count on the optimal support.
pub const DEFAULT_SUPPORT_POINTS: usize = 4097;

const ZERO_REAL_PART_EPS: f64 = 1e-12;

/// Normalized momentum-space wavefunction `ξ(p)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeWavefunction {
    grid: MomentumGrid,
    values: Vec<Amplitude>,
    derivative: Option<Vec<Amplitude>>,
    label: String,
}

impl ProbeWavefunction {
    /// Builds a probe from samples and renormalizes it on the grid. When no
    /// analytic derivative is supplied the fourth-order stencils are used.
    pub fn new(
        grid: MomentumGrid,
        values: Vec<Amplitude>,
        derivative: Option<Vec<Amplitude>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(WvaError::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(d) = &derivative {
            if d.len() != grid.len() {
                return Err(WvaError::DimensionMismatch {
                    expected: grid.len(),
                    found: d.len(),
                });
            }
        }
        let finite = |v: &[Amplitude]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&values) || !derivative.as_deref().is_none_or(finite) {
            return Err(WvaError::NonFinite("probe samples".into()));
        }
        let norm = grid
            .integrate(&values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
            .sqrt();
        if !(norm > 1e-7) {
            return Err(WvaError::ZeroNorm);
        }
        let scale = 1.0 / norm;
        let values = values.into_iter().map(|z| z * scale).collect();
        let derivative = derivative.map(|d| d.into_iter().map(|z| z * scale).collect());
        Ok(Self {
            grid,
            values,
            derivative,
            label: label.into(),
        })
    }

    pub fn from_samples(
        grid: MomentumGrid,
        values: Vec<Amplitude>,
        label: impl Into<String>,
    ) -> Result<Self> {
        Self::new(grid, values, None, label)
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Amplitude] {
        &self.values
    }

    pub fn analytic_derivative(&self) -> Option<&[Amplitude]> {
        self.derivative.as_deref()
    }

    /// Analytic derivative when available, otherwise the stencil estimate.
    pub fn derivative(&self) -> Cow<'_, [Amplitude]> {
        match &self.derivative {
            Some(d) => Cow::Borrowed(d),
            None => Cow::Owned(self.grid.derivative(&self.values)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid
            .integrate(&self.values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
    }

    /// `ξ(p)·e^{-iap}`, i.e. the probe translated by `a` in position.
    pub fn with_linear_phase(&self, a: f64) -> Self {
        let phases: Vec<Amplitude> = self
            .grid
            .points()
            .map(|p| Amplitude::from_polar(1.0, -a * p))
            .collect();
        let values: Vec<Amplitude> = self.values.iter().zip(&phases).map(|(v, e)| v * e).collect();
        let derivative = self.derivative.as_ref().map(|d| {
            d.iter()
                .zip(&self.values)
                .zip(&phases)
                .map(|((d, v), e)| (d - Amplitude::new(0.0, a) * v) * e)
                .collect()
        });
        Self {
            grid: self.grid.clone(),
            values,
            derivative,
            label: self.label.clone(),
        }
    }

    /// Multiplies by a constant phase `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let e = Amplitude::from_polar(1.0, phi);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * e).collect(),
            derivative: self
                .derivative
                .as_ref()
                .map(|d| d.iter().map(|v| v * e).collect()),
            label: self.label.clone(),
        }
    }

    /// Drops the analytic derivative so that consumers fall back to stencils.
    pub fn without_derivative(mut self) -> Self {
        self.derivative = None;
        self
    }
}

fn require_real_part(aw: Amplitude) -> Result<()> {
    if aw.re.abs() < ZERO_REAL_PART_EPS {
        Err(WvaError::ZeroRealPart)
    } else {
        Ok(())
    }
}

fn require_coupling(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(WvaError::InvalidParameter(format!(
            "coupling g must be positive and finite, got {g}"
        )))
    }
}

/// `g(|A_w|²+1)/(2 Re A_w)`, the final position of the optimal probe.
pub(crate) fn optimal_final_position(g: f64, aw: Amplitude) -> f64 {
    g * (aw.norm_sqr() + 1.0) / (2.0 * aw.re)
}

fn b_derivative_raw(g: f64, aw: Amplitude, p: f64) -> Amplitude {
    let (s, c) = (g * p).sin_cos();
    Amplitude::new(-g * s, 0.0) - Amplitude::new(0.0, g) * aw * c
}

/// Upper bound on the Gaussian mass outside `[p_min, p_max]`.
fn gaussian_tail_bound(w: f64, p_min: f64, p_max: f64) -> f64 {
    let side = |edge: f64| {
        if edge <= 0.0 {
            return 1.0;
        }
        let x = edge / (std::f64::consts::SQRT_2 * w);
        // ½ erfc(x) <= e^{-x²} / (2x√π)
        (-x * x).exp() / (2.0 * x * PI.sqrt())
    };
    side(p_max) + side(-p_min)
}

/// Momentum-space Gaussian whose position-space form is
/// `(2W²/π)^{1/4} e^{-W²q²}`; `|ξ(p)|²` has standard deviation `W`.
pub fn gaussian_probe(w: f64, grid: &MomentumGrid) -> Result<ProbeWavefunction> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(WvaError::InvalidParameter(format!(
            "Gaussian width W must be positive, got {w}"
        )));
    }
    let tail = gaussian_tail_bound(w, grid.p_min(), grid.p_max());
    if tail > TAIL_MASS_LIMIT {
        return Err(WvaError::TailMassTooLarge {
            mass: tail,
            limit: TAIL_MASS_LIMIT,
        });
    }
    let amp = (2.0 * PI * w * w).powf(-0.25);
    let values: Vec<Amplitude> = grid
        .points()
        .map(|p| Amplitude::new(amp * (-p * p / (4.0 * w * w)).exp(), 0.0))
        .collect();
    let derivative = grid
        .points()
        .zip(&values)
        .map(|(p, v)| v * (-p / (2.0 * w * w)))
        .collect();
    ProbeWavefunction::new(grid.clone(), values, Some(derivative), format!("gaussian(W={w})"))
}

/// Grid for a Gaussian of width `w` that resolves both the envelope and the
/// `B(p)` oscillation at coupling `g` (period `π/g` in `|B|²`).
pub fn gaussian_grid(w: f64, g: f64) -> Result<MomentumGrid> {
    let half_width = 10.0 * w;
    let mut h = w / 40.0;
    if g > 0.0 {
        h = h.min(PI / (64.0 * g));
    }
    let intervals = (2.0 * half_width / h).ceil() as usize;
    MomentumGrid::symmetric(half_width, odd_at_least(intervals + 1).max(801))
}

/// Upper limit of [`recommended_support_points`].
pub const MAX_SUPPORT_POINTS: usize = (1 << 22) + 1;

/// Node count that resolves the narrowest feature of `|B(p)|^{-2}` on the
/// optimal support with at least 32 nodes per half-width, capped at
/// [`MAX_SUPPORT_POINTS`].
pub fn recommended_support_points(aw: Amplitude, multiplier: u32) -> usize {
    let mean = 0.5 * (aw.norm_sqr() + 1.0);
    let amplitude = ((0.5 * (aw.norm_sqr() - 1.0)).powi(2) + aw.im * aw.im).sqrt();
    // min |B|² = (Re A_w)² / (mean + amplitude); curvature 2·amplitude in x = gp.
    let min_b2 = aw.re * aw.re / (mean + amplitude);
    let width = if amplitude > 0.0 {
        (min_b2 / (2.0 * amplitude)).sqrt().min(1.0)
    } else {
        1.0
    };
    let intervals = (32.0 * PI * f64::from(multiplier.max(1)) / width).ceil();
    if !(intervals < MAX_SUPPORT_POINTS as f64) {
        return MAX_SUPPORT_POINTS;
    }
    odd_at_least((intervals as usize + 1).max(DEFAULT_SUPPORT_POINTS))
}

/// Closed-form optimal probe
/// `ξ(p) = √(g|Re A_w|/π) · B⁻¹(p) · e^{-i⟨q̂⟩_f p}` on `[-π/2g, π/2g]`.
pub fn optimal_probe(g: f64, aw: Amplitude, grid_points: usize) -> Result<ProbeWavefunction> {
    require_coupling(g)?;
    optimal_probe_on_grid(g, aw, &MomentumGrid::optimal_support(g, 1, grid_points)?)
}

/// The optimal closed form evaluated on an arbitrary grid (e.g. an extended
/// support `[-πm/2g, πm/2g]`), renormalized there.
pub fn optimal_probe_on_grid(
    g: f64,
    aw: Amplitude,
    grid: &MomentumGrid,
) -> Result<ProbeWavefunction> {
    require_coupling(g)?;
    require_real_part(aw)?;
    let q_final = optimal_final_position(g, aw);
    let c = (g * aw.re.abs() / PI).sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut derivative = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let b = b_factor_raw(g, aw, p);
        let db = b_derivative_raw(g, aw, p);
        let xi = Amplitude::from_polar(c, -q_final * p) / b;
        values.push(xi);
        derivative.push(xi * (-db / b - Amplitude::new(0.0, q_final)));
    }
    ProbeWavefunction::new(
        grid.clone(),
        values,
        Some(derivative),
        format!("optimal(g={g},A_w={aw})"),
    )
}

/// Grid for [`smoothed_optimal_probe`]: the edges `±π/2g` fall on even
/// nodes, the spacing resolves the `e^{-s|p∓π/2g|}` tails, and the grid
/// extends until the tail factor drops below `1e-14`.
pub fn smoothed_grid(g: f64, aw: Amplitude, s: f64) -> Result<MomentumGrid> {
    require_coupling(g)?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(WvaError::InvalidParameter(format!(
            "smoothing s must be positive, got {s}"
        )));
    }
    let edge = PI / (2.0 * g);
    let core_points = recommended_support_points(aw, 1);
    let h_target = (2.0 * edge / (core_points - 1) as f64).min(1.0 / (16.0 * s));
    let mut core = (2.0 * edge / h_target).ceil() as usize;
    core += core % 2;
    let h = 2.0 * edge / core as f64;
    let tail_len = (1e14f64).ln() / s;
    let mut tail = (tail_len / h).ceil() as usize;
    tail += tail % 2;
    let half = edge + tail as f64 * h;
    MomentumGrid::symmetric(half, core + 2 * tail + 1)
}

/// Optimal probe with exponential tails `ξ(±π/2g) e^{-s|p ∓ π/2g|}` outside
/// the support. Where `±π/2g` are grid nodes the stored derivative is the
/// mean of the one-sided values, which keeps Simpson sums equal to the
/// piecewise integrals.
pub fn smoothed_optimal_probe(
    g: f64,
    aw: Amplitude,
    s: f64,
    grid: &MomentumGrid,
) -> Result<ProbeWavefunction> {
    require_coupling(g)?;
    require_real_part(aw)?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(WvaError::InvalidParameter(format!(
            "smoothing s must be positive, got {s}"
        )));
    }
    let edge = PI / (2.0 * g);
    let q_final = optimal_final_position(g, aw);
    let c = (g * aw.re.abs() / PI).sqrt();
    let core = |p: f64| {
        let b = b_factor_raw(g, aw, p);
        let db = b_derivative_raw(g, aw, p);
        let xi = Amplitude::from_polar(c, -q_final * p) / b;
        (xi, xi * (-db / b - Amplitude::new(0.0, q_final)))
    };
    let (upper, upper_d) = core(edge);
    let (lower, lower_d) = core(-edge);

    // Norm carried by the tails beyond the grid, relative to the total (≈1).
    let beyond = |dist: f64, v: Amplitude| {
        if dist < 0.0 {
            f64::INFINITY
        } else {
            v.norm_sqr() * (-2.0 * s * dist).exp() / (2.0 * s)
        }
    };
    let tail = beyond(grid.p_max() - edge, upper) + beyond(-edge - grid.p_min(), lower);
    if tail > TAIL_MASS_LIMIT {
        return Err(WvaError::TailMassTooLarge {
            mass: tail,
            limit: TAIL_MASS_LIMIT,
        });
    }

    let mut values = Vec::with_capacity(grid.len());
    let mut derivative = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let (v, d) = if p > edge {
            let v = upper * (-(p - edge) * s).exp();
            (v, -v * s)
        } else if p < -edge {
            let v = lower * ((p + edge) * s).exp();
            (v, v * s)
        } else {
            core(p)
        };
        values.push(v);
        derivative.push(d);
    }
    for (node, inner, outer) in [
        (grid.node_index(edge), upper_d, -upper * s),
        (grid.node_index(-edge), lower_d, lower * s),
    ] {
        if let Some(i) = node {
            derivative[i] = (inner + outer) * 0.5;
        }
    }
    ProbeWavefunction::new(
        grid.clone(),
        values,
        Some(derivative),
        format!("smoothed(g={g},A_w={aw},s={s})"),
    )
}

/// Normalized final state `ξ_f(p) = √(g/π) e^{-i⟨q̂⟩_f p}` on the support.
pub fn final_probe_momentum(
    g: f64,
    aw: Amplitude,
    grid_points: usize,
) -> Result<ProbeWavefunction> {
    require_coupling(g)?;
    require_real_part(aw)?;
    let grid = MomentumGrid::optimal_support(g, 1, grid_points)?;
    let q_final = optimal_final_position(g, aw);
    let amp = (g / PI).sqrt();
    let values: Vec<Amplitude> = grid
        .points()
        .map(|p| Amplitude::from_polar(amp, -q_final * p))
        .collect();
    let derivative = values
        .iter()
        .map(|v| v * Amplitude::new(0.0, -q_final))
        .collect();
    ProbeWavefunction::new(grid, values, Some(derivative), format!("final(g={g},A_w={aw})"))
}

/// Position-space samples on the lattice `q = 2gn`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSamples {
    pub offsets: Vec<i64>,
    pub positions: Vec<f64>,
    pub values: Vec<Amplitude>,
    /// Fourier-series coefficients `c_n = ∫ξ(p) e^{iq_n p} dp / √L` on the
    /// support of length `L = π/g`; `ξ̃(q_n) = c_n / √(2g)`.
    pub coefficients: Vec<Amplitude>,
}

impl PositionSamples {
    /// Offset `n` whose sample has the largest modulus.
    pub fn peak_offset(&self) -> i64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v.norm() > best.1 {
                    (i, v.norm())
                } else {
                    best
                }
            });
        self.offsets[i]
    }

    pub fn coefficient_norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Final-state position wavefunction
/// `ξ̃_f(q) = (√(2g)/π) sin[π(q - ⟨q̂⟩_f)/2g] / (q - ⟨q̂⟩_f)` at `q = 2gn`,
/// `|n| <= n_range`.
pub fn final_probe_position(g: f64, aw: Amplitude, n_range: usize) -> Result<PositionSamples> {
    require_coupling(g)?;
    require_real_part(aw)?;
    if n_range < 1 {
        return Err(WvaError::InvalidParameter("n_range must be >= 1".into()));
    }
    let q_final = optimal_final_position(g, aw);
    let n = n_range as i64;
    let offsets: Vec<i64> = (-n..=n).collect();
    let positions: Vec<f64> = offsets.iter().map(|&k| 2.0 * g * k as f64).collect();
    let values: Vec<Amplitude> = positions
        .iter()
        .map(|&q| Amplitude::new(final_position_value(g, q_final, q), 0.0))
        .collect();
    let coefficients = values.iter().map(|v| v * (2.0 * g).sqrt()).collect();
    Ok(PositionSamples {
        offsets,
        positions,
        values,
        coefficients,
    })
}

fn final_position_value(g: f64, q_final: f64, q: f64) -> f64 {
    let d = q - q_final;
    let x = PI * d / (2.0 * g);
    if x.abs() < 1e-8 {
        // sin(x)/d → π/(2g)
        (2.0 * g).sqrt() / (2.0 * g)
    } else {
        (2.0 * g).sqrt() / PI * x.sin() / d
    }
}

/// `Σ_{|n|>n_range} |c_n|²` for the final state, from
/// `|c_n|² = sin²(πδ) / (π²(n-δ)²)`, `δ = ⟨q̂⟩_f / 2g`, using the asymptotic
/// series of the trigamma function for each one-sided remainder.
pub fn final_series_remainder(g: f64, aw: Amplitude, n_range: usize) -> Result<f64> {
    require_coupling(g)?;
    require_real_part(aw)?;
    let delta = optimal_final_position(g, aw) / (2.0 * g);
    let s2 = (PI * delta).sin().powi(2) / (PI * PI);
    let n = n_range as f64;
    // Σ_{n>N} (n-δ)^{-2} = ψ'(N+1-δ);  Σ_{n<-N} (n-δ)^{-2} = ψ'(N+1+δ)
    Ok(s2 * (trigamma(n + 1.0 - delta) + trigamma(n + 1.0 + delta)))
}

fn trigamma(mut z: f64) -> f64 {
    let mut acc = 0.0;
    while z < 20.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let z2 = z * z;
    acc + 1.0 / z + 1.0 / (2.0 * z2)
        + 1.0 / (6.0 * z2 * z)
        - 1.0 / (30.0 * z2 * z2 * z)
        + 1.0 / (42.0 * z2 * z2 * z2 * z)
        - 1.0 / (30.0 * z2 * z2 * z2 * z2 * z)
}

/// Discrete Fourier-series coefficients of a probe on its (full) grid,
/// treating `[p_min, p_max)` as one period of length `L`. Returned for
/// `n ∈ [-M/2, M/2)`, `M = n_points - 1`, at `q_n = 2πn/L`. The transform is
/// unitary: `Σ|c_n|² = (L/M) Σ_k |ξ(p_k)|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub offsets: Vec<i64>,
    pub positions: Vec<f64>,
    pub coefficients: Vec<Amplitude>,
    pub period: f64,
}

impl FourierSeries {
    pub fn from_probe(probe: &ProbeWavefunction) -> Self {
        let grid = probe.grid();
        let m = grid.len() - 1;
        let period = grid.p_max() - grid.p_min();
        let mut buf: Vec<Complex64> = probe.values()[..m].to_vec();
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        let scale = period.sqrt() / m as f64;
        let half = (m / 2) as i64;
        let mut offsets = Vec::with_capacity(m);
        let mut positions = Vec::with_capacity(m);
        let mut coefficients = Vec::with_capacity(m);
        for n in -half..(m as i64 - half) {
            let idx = n.rem_euclid(m as i64) as usize;
            let q = 2.0 * PI * n as f64 / period;
            // e^{i q_n p_k} = e^{i q_n p_min} e^{2πikn/M}
            let shift = Amplitude::from_polar(1.0, q * grid.p_min());
            offsets.push(n);
            positions.push(q);
            coefficients.push(buf[idx] * shift * scale);
        }
        Self {
            offsets,
            positions,
            coefficients,
            period,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Position samples `ξ̃(q_n) = c_n √(L/2π)` for `|n| <= n_range`.
    pub fn position_samples(&self, n_range: usize) -> PositionSamples {
        let factor = (self.period / (2.0 * PI)).sqrt();
        let mut out = PositionSamples {
            offsets: Vec::new(),
            positions: Vec::new(),
            values: Vec::new(),
            coefficients: Vec::new(),
        };
        for ((&n, &q), &c) in self
            .offsets
            .iter()
            .zip(&self.positions)
            .zip(&self.coefficients)
        {
            if n.unsigned_abs() as usize <= n_range {
                out.offsets.push(n);
                out.positions.push(q);
                out.values.push(c * factor);
                out.coefficients.push(c);
            }
        }
        out
    }
}

/// Position-space probability density on a uniform `q` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionDensity {
    pub grid: MomentumGrid,
    pub density: Vec<f64>,
}

impl PositionDensity {
    pub fn total(&self) -> f64 {
        self.grid.integrate(&self.density)
    }

    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .points()
            .zip(&self.density)
            .map(|(q, d)| q * d)
            .collect();
        self.grid.integrate(&weighted) / self.total()
    }
}

/// `|ξ̃(q)|²` with `ξ̃(q) = (2π)^{-1/2} ∫ ξ(p) e^{ipq} dp`, evaluated by
/// Filon–Simpson quadrature at every node of `q_grid`.
pub fn to_position_density(probe: &ProbeWavefunction, q_grid: &MomentumGrid) -> PositionDensity {
    let norm = 1.0 / (2.0 * PI);
    let density = q_grid
        .points()
        .map(|q| probe.grid().fourier_integral(probe.values(), q).norm_sqr() * norm)
        .collect();
    PositionDensity {
        grid: q_grid.clone(),
        density,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn showcase_weak_value() -> Amplitude {
        Amplitude::new(3f64.sqrt(), 2.0 * 3f64.sqrt())
    }

    fn moments(probe: &ProbeWavefunction) -> (f64, f64) {
        let grid = probe.grid();
        let rho: Vec<f64> = probe.values().iter().map(|v| v.norm_sqr()).collect();
        let n = grid.integrate(&rho);
        let m1 = grid.integrate(&grid.points().zip(&rho).map(|(p, r)| p * r).collect::<Vec<_>>()) / n;
        let m2 = grid.integrate(&grid.points().zip(&rho).map(|(p, r)| p * p * r).collect::<Vec<_>>())
            / n;
        (m1, (m2 - m1 * m1).sqrt())
    }

    #[test]
    fn support_points_are_bounded() {
        assert_eq!(recommended_support_points(Amplitude::new(1.0, 0.0), 1), DEFAULT_SUPPORT_POINTS);
        assert_eq!(recommended_support_points(Amplitude::new(0.0, 2.0), 1), MAX_SUPPORT_POINTS);
        let n = recommended_support_points(Amplitude::new(1000.0, 0.0), 1);
        assert!(n % 2 == 1 && n > 50_000 && n < MAX_SUPPORT_POINTS);
    }

    #[test]
    fn gaussian_is_normalized_and_centered() {
        let grid = MomentumGrid::symmetric(20.0, 4001).unwrap();
        let probe = gaussian_probe(1.0, &grid).unwrap();
        assert!((probe.norm_sqr() - 1.0).abs() < 1e-10);
        let (mean, sd) = moments(&probe);
        assert!(mean.abs() < 1e-12);
        assert!((sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_momentum_width_scales_with_w() {
        let grid = MomentumGrid::symmetric(40.0, 8001).unwrap();
        let (_, sd1) = moments(&gaussian_probe(1.0, &grid).unwrap());
        let (_, sd2) = moments(&gaussian_probe(2.0, &grid).unwrap());
        assert!((sd2 / sd1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_rejects_truncating_grid() {
        let grid = MomentumGrid::symmetric(3.0, 601).unwrap();
        let err = gaussian_probe(1.0, &grid).unwrap_err();
        assert_eq!(err.name(), "TailMassTooLarge");
    }

    #[test]
    fn optimal_probe_has_flat_density_for_unit_weak_value() {
        let g = 0.1;
        let probe = optimal_probe(g, Amplitude::new(1.0, 0.0), 401).unwrap();
        for v in probe.values() {
            assert!((v.norm_sqr() - g / PI).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_probe_normalization_constant_matches_closed_form() {
        // Renormalization must be a no-op when |C|² = g|Re A_w|/π.
        let g = 0.1;
        let aw = showcase_weak_value();
        let grid = MomentumGrid::optimal_support(g, 1, DEFAULT_SUPPORT_POINTS).unwrap();
        let c2 = g * aw.re.abs() / PI;
        let raw: Vec<f64> = grid
            .points()
            .map(|p| c2 / b_factor_raw(g, aw, p).norm_sqr())
            .collect();
        assert!((grid.integrate(&raw) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn optimal_probe_edges_have_equal_modulus() {
        for aw in [showcase_weak_value(), Amplitude::new(-0.7, 2.5), Amplitude::new(3.0, -1.0)] {
            let probe = optimal_probe(0.2, aw, 1001).unwrap();
            let v = probe.values();
            assert!((v[0].norm_sqr() - v[v.len() - 1].norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn optimal_probe_rejects_imaginary_weak_value() {
        let err = optimal_probe(0.1, Amplitude::new(0.0, 2.0), 401).unwrap_err();
        assert_eq!(err, WvaError::ZeroRealPart);
    }

    #[test]
    fn analytic_derivative_agrees_with_stencils() {
        let probe = optimal_probe(0.1, showcase_weak_value(), DEFAULT_SUPPORT_POINTS).unwrap();
        let analytic = probe.analytic_derivative().unwrap();
        let numeric = probe.grid().derivative(probe.values());
        let max_err = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-8, "max_err {max_err}");
    }

    #[test]
    fn final_state_is_flat_with_showcase_phase_slope() {
        let g = 0.1;
        let aw = showcase_weak_value();
        let probe = final_probe_momentum(g, aw, 401).unwrap();
        for v in probe.values() {
            assert!((v.norm_sqr() - g / PI).abs() < 1e-12);
        }
        let d = probe.analytic_derivative().unwrap();
        let slope = (d[200] / probe.values()[200]).im;
        assert!((slope + 0.461_880_215_351_700_6).abs() < 1e-12);
    }

    #[test]
    fn final_state_equals_normalized_b_times_optimal() {
        let g = 0.1;
        let aw = showcase_weak_value();
        let initial = optimal_probe(g, aw, 1001).unwrap();
        let fin = final_probe_momentum(g, aw, 1001).unwrap();
        let product: Vec<Amplitude> = initial
            .grid()
            .points()
            .zip(initial.values())
            .map(|(p, v)| b_factor_raw(g, aw, p) * v)
            .collect();
        let norm = initial
            .grid()
            .integrate(&product.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
            .sqrt();
        for (a, b) in product.iter().zip(fin.values()) {
            assert!((a / norm - b).norm() < 1e-10);
        }
    }

    #[test]
    fn final_position_peaks_at_nearest_lattice_point() {
        let g = 0.1;
        let aw = showcase_weak_value();
        let samples = final_probe_position(g, aw, 25).unwrap();
        let qf = optimal_final_position(g, aw);
        assert_eq!(samples.peak_offset(), (qf / (2.0 * g)).round() as i64);
        for (&n, &q) in samples.offsets.iter().zip(&samples.positions) {
            assert_eq!(q, 2.0 * g * n as f64);
        }
    }

    #[test]
    fn final_series_parseval_with_remainder() {
        let g = 0.1;
        let aw = showcase_weak_value();
        for n_range in [10, 200, 2000] {
            let samples = final_probe_position(g, aw, n_range).unwrap();
            let total = samples.coefficient_norm_sqr() + final_series_remainder(g, aw, n_range).unwrap();
            assert!((total - 1.0).abs() < 1e-10, "n_range {n_range}: {total}");
        }
    }

    #[test]
    fn fft_series_matches_closed_form_coefficients() {
        let g = 0.1;
        let aw = showcase_weak_value();
        let fin = final_probe_momentum(g, aw, DEFAULT_SUPPORT_POINTS).unwrap();
        let series = FourierSeries::from_probe(&fin);
        assert!((series.norm_sqr() - 1.0).abs() < 1e-12);
        let numeric = series.position_samples(10);
        let closed = final_probe_position(g, aw, 10).unwrap();
        assert_eq!(numeric.offsets, closed.offsets);
        for (a, b) in numeric.values.iter().zip(&closed.values) {
            assert!((a - b).norm() < 2e-3, "{a} vs {b}");
        }
        for (a, b) in numeric.positions.iter().zip(&closed.positions) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothed_probe_is_continuous_and_converges_to_optimal() {
        let g = 0.1;
        let aw = showcase_weak_value();
        let edge = FRAC_PI_2 / g;
        let optimal = optimal_probe(g, aw, DEFAULT_SUPPORT_POINTS).unwrap();
        let mut last_gap = f64::INFINITY;
        for sg in [1.0, 10.0, 100.0] {
            let s = sg / g;
            let grid = smoothed_grid(g, aw, s).unwrap();
            let probe = smoothed_optimal_probe(g, aw, s, &grid).unwrap();
            let i = grid.node_index(edge).expect("edge on a node");
            let j = grid.node_index(-edge).expect("edge on a node");
            assert_eq!(i % 2, 0);
            assert_eq!(j % 2, 0);
            // Just outside the edge the value continues from the edge value.
            let ratio = probe.values()[i + 1] / probe.values()[i];
            assert!((ratio - (-s * grid.spacing()).exp()).norm() < 1e-10);
            // Interior samples approach the optimal probe as s grows.
            let interior = probe.values()[grid.len() / 2];
            let gap = (interior - optimal.values()[optimal.grid().len() / 2]).norm();
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1e-3);
    }

    #[test]
    fn smoothed_probe_rejects_short_grid() {
        let g = 0.1;
        let aw = showcase_weak_value();
        let grid = MomentumGrid::optimal_support(g, 1, 1001).unwrap();
        let err = smoothed_optimal_probe(g, aw, 10.0, &grid).unwrap_err();
        assert_eq!(err.name(), "TailMassTooLarge");
    }

    #[test]
    fn gaussian_position_density() {
        let w = 1.0;
        let probe = gaussian_probe(w, &MomentumGrid::symmetric(12.0, 961).unwrap()).unwrap();
        let q_grid = MomentumGrid::symmetric(6.0, 601).unwrap();
        let density = to_position_density(&probe, &q_grid);
        assert!((density.total() - 1.0).abs() < 1e-6);
        assert!(density.mean().abs() < 1e-10);
        for (q, d) in q_grid.points().zip(&density.density) {
            let exact = (2.0 * w * w / PI).sqrt() * (-2.0 * w * w * q * q).exp();
            assert!((d - exact).abs() < 1e-8);
        }
        let shifted = to_position_density(&probe.with_linear_phase(0.75), &q_grid);
        assert!((shifted.mean() - 0.75).abs() < 1e-7);
    }

    #[test]
    fn optimal_position_density_integrates_to_one() {
        // The jump at ±π/2g leaves a 1/q² tail in the density; a window of
        // ±2·10⁴ leaves ≈5·10⁻⁷ of the mass outside.
        let g = 0.1;
        let probe = optimal_probe(g, Amplitude::new(2.0, 0.0), 1025).unwrap();
        let q_grid = MomentumGrid::symmetric(2e4, 800_001).unwrap();
        let density = to_position_density(&probe, &q_grid);
        assert!((density.total() - 1.0).abs() < 1e-6, "{}", density.total());
    }
}
