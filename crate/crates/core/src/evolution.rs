//! Post-selected von Neumann evolution of the probe for observables with
//! `Â² = 1`: the exact factor `B(p) = cos gp - i A_w sin gp` and the
//! first-order weak-coupling approximation `e^{-igA_w p}`.

use num_complex::Complex64;

use crate::error::{Result, WvaError};
use crate::grid::MomentumGrid;
use crate::probe::ProbeWavefunction;
use crate::system::{Amplitude, WeakValue};

pub(crate) fn b_factor_raw(g: f64, aw: Amplitude, p: f64) -> Amplitude {
    let (s, c) = (g * p).sin_cos();
    Amplitude::new(c, 0.0) - Complex64::i() * aw * s
}

/// Impulsive coupling of strength `g` followed by post-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelectedEvolution {
    g: f64,
    weak: WeakValue,
}

/// Evolved, unnormalized probe. `weight` is `∫|ξ_out|²dp`, the
/// post-selection success weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedProbe {
    pub grid: MomentumGrid,
    pub values: Vec<Amplitude>,
    pub derivative: Vec<Amplitude>,
    pub weight: f64,
}

impl PostSelectedEvolution {
    /// `g = 0` is accepted and describes the uncoupled limit.
    pub fn new(g: f64, weak: WeakValue) -> Result<Self> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(WvaError::InvalidParameter(format!(
                "coupling g must be non-negative and finite, got {g}"
            )));
        }
        Ok(Self { g, weak })
    }

    /// Shorthand for a scenario given only by `A_w` (unit overlap).
    pub fn from_weak_value(g: f64, aw: Amplitude) -> Result<Self> {
        Self::new(g, WeakValue::from_value(aw)?)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn weak(&self) -> &WeakValue {
        &self.weak
    }

    pub fn weak_value(&self) -> Amplitude {
        self.weak.value()
    }

    pub fn b_factor(&self, p: f64) -> Amplitude {
        b_factor_raw(self.g, self.weak.value(), p)
    }

    /// `B'(p) = -g sin gp - i g A_w cos gp`
    pub fn b_derivative(&self, p: f64) -> Amplitude {
        let (s, c) = (self.g * p).sin_cos();
        Amplitude::new(-self.g * s, 0.0) - Complex64::i() * self.weak.value() * (self.g * c)
    }

    /// `|B(p)|² = 1 + (|A_w|²-1) sin² gp + Im A_w sin 2gp`
    pub fn b_norm_sqr(&self, p: f64) -> f64 {
        let aw = self.weak.value();
        let s = (self.g * p).sin();
        1.0 + (aw.norm_sqr() - 1.0) * s * s + aw.im * (2.0 * self.g * p).sin()
    }

    /// `[|B(p)|²]' = (|A_w|²-1) g sin 2gp + 2g Im A_w cos 2gp`
    pub fn b_norm_sqr_derivative(&self, p: f64) -> f64 {
        let aw = self.weak.value();
        let x = 2.0 * self.g * p;
        self.g * ((aw.norm_sqr() - 1.0) * x.sin() + 2.0 * aw.im * x.cos())
    }

    /// `⟨φ_f|φ_i⟩ B(p) ξ(p)`, derivative by the product rule with analytic `B'`.
    pub fn apply_postselection(&self, probe: &ProbeWavefunction) -> PostSelectedProbe {
        let overlap = self.weak.overlap();
        self.apply_factor(probe, |p| {
            (
                overlap * self.b_factor(p),
                overlap * self.b_derivative(p),
            )
        })
    }

    /// `⟨φ_f|φ_i⟩ e^{-igA_w p} ξ(p)`: the first-order (weak) evolution. For
    /// complex `A_w` this is not unitary and reweights `|ξ|²` by
    /// `e^{2g Im A_w p}`.
    pub fn apply_weak_order(&self, probe: &ProbeWavefunction) -> PostSelectedProbe {
        let overlap = self.weak.overlap();
        let k = Complex64::i() * self.weak.value() * self.g;
        self.apply_factor(probe, |p| {
            let f = overlap * (-k * p).exp();
            (f, -k * f)
        })
    }

    fn apply_factor<F>(&self, probe: &ProbeWavefunction, factor: F) -> PostSelectedProbe
    where
        F: Fn(f64) -> (Amplitude, Amplitude),
    {
        let grid = probe.grid().clone();
        let input_derivative = probe.derivative();
        let mut values = Vec::with_capacity(grid.len());
        let mut derivative = Vec::with_capacity(grid.len());
        for ((p, v), d) in grid.points().zip(probe.values()).zip(input_derivative.iter()) {
            let (f, df) = factor(p);
            values.push(f * v);
            derivative.push(df * v + f * d);
        }
        let weight = grid.integrate(&values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        PostSelectedProbe {
            grid,
            values,
            derivative,
            weight,
        }
    }
}
