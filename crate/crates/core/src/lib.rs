//! Weak-value amplification with a single probe: weak values, post-selected
//! probe evolution, position/momentum shifts, the optimal probe that
//! maximizes the position shift, and a variational optimizer to cross-check
//! it.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod evolution;
pub mod expectation;
pub mod grid;
pub mod optimizer;
pub mod probe;
pub mod system;

pub use analytic::{
    extrapolate_to_zero, gaussian_exact_shifts, integral_b_minus2, integral_b_minus4, max_shift,
    orthogonality_limit_check, shift_lower_bound, GaussianShiftPrediction, OrthogonalityLimit,
    OrthogonalitySample,
};
pub use error::{Result, WvaError};
pub use evolution::{PostSelectedEvolution, PostSelectedProbe};
pub use expectation::{expect_p, expect_q, shift_report, PositionExpectation, ShiftReport};
pub use grid::MomentumGrid;
pub use optimizer::{
    gauge_fix, maximize, Initialization, IterationRecord, OptimizerConfig, OptimizerTrace,
};
pub use probe::{
    final_probe_momentum, final_probe_position, gaussian_grid, gaussian_probe, optimal_probe,
    optimal_probe_on_grid, smoothed_grid, smoothed_optimal_probe, to_position_density,
    FourierSeries, PositionDensity, PositionSamples, ProbeWavefunction,
};
pub use system::{
    compute_weak_value, mach_zehnder_setup, mach_zehnder_weak_value, Amplitude, MachZehnderSetup,
    Observable, Operator, SystemState, WeakValue,
};
