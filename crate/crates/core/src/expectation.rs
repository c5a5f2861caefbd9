//! Position and momentum expectation values of momentum-space wavefunctions
//! and the shifts produced by post-selection.
//!
//! Position acts as `q̂ = i ∂/∂p`, so `⟨q̂⟩ = Re[i∫ξ*ξ'dp] / ∫|ξ|²dp`. The
//! imaginary part of the same quotient is the integration-by-parts boundary
//! residue; it vanishes for probes whose `|ξ|²` takes equal values at both
//! ends of the grid and is reported rather than subtracted.

use crate::error::{Result, WvaError};
use crate::evolution::PostSelectedEvolution;
use crate::grid::MomentumGrid;
use crate::probe::ProbeWavefunction;
use crate::system::Amplitude;

const ZERO_NORM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionExpectation {
    pub value: f64,
    pub imag_residual: f64,
}

fn norm_sqr(values: &[Amplitude], grid: &MomentumGrid) -> Result<f64> {
    let n = grid.integrate(&values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
    if !(n >= ZERO_NORM) {
        return Err(WvaError::ZeroNorm);
    }
    Ok(n)
}

pub fn expect_q(
    values: &[Amplitude],
    derivative: &[Amplitude],
    grid: &MomentumGrid,
) -> Result<PositionExpectation> {
    let norm = norm_sqr(values, grid)?;
    let integrand: Vec<Amplitude> = values
        .iter()
        .zip(derivative)
        .map(|(v, d)| Amplitude::i() * v.conj() * d)
        .collect();
    let z = grid.integrate_complex(&integrand) / norm;
    Ok(PositionExpectation {
        value: z.re,
        imag_residual: z.im,
    })
}

pub fn expect_p(values: &[Amplitude], grid: &MomentumGrid) -> Result<f64> {
    let norm = norm_sqr(values, grid)?;
    let weighted: Vec<f64> = grid
        .points()
        .zip(values)
        .map(|(p, v)| p * v.norm_sqr())
        .collect();
    Ok(grid.integrate(&weighted) / norm)
}

/// Initial and final expectation values and their differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftReport {
    pub q_initial: f64,
    pub q_final: f64,
    pub p_initial: f64,
    pub p_final: f64,
    pub delta_q: f64,
    pub delta_p: f64,
    /// Post-selection success weight `∫|⟨φ_f|φ_i⟩B(p)ξ(p)|²dp`.
    pub weight: f64,
    pub q_initial_residual: f64,
    pub q_final_residual: f64,
}

pub fn shift_report(
    evo: &PostSelectedEvolution,
    probe: &ProbeWavefunction,
) -> Result<ShiftReport> {
    let grid = probe.grid();
    let initial_derivative = probe.derivative();
    let q_i = expect_q(probe.values(), &initial_derivative, grid)?;
    let p_initial = expect_p(probe.values(), grid)?;

    let evolved = evo.apply_postselection(probe);
    let q_f = expect_q(&evolved.values, &evolved.derivative, grid)?;
    let p_final = expect_p(&evolved.values, grid)?;

    let report = ShiftReport {
        q_initial: q_i.value,
        q_final: q_f.value,
        p_initial,
        p_final,
        delta_q: q_f.value - q_i.value,
        delta_p: p_final - p_initial,
        weight: evolved.weight,
        q_initial_residual: q_i.imag_residual,
        q_final_residual: q_f.imag_residual,
    };
    let finite = [
        report.q_initial,
        report.q_final,
        report.p_initial,
        report.p_final,
        report.weight,
    ]
    .iter()
    .all(|x| x.is_finite());
    if !finite {
        return Err(WvaError::NonFinite("shift report".into()));
    }
    Ok(report)
}
