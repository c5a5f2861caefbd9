//! Uniform momentum grids, composite Simpson quadrature and the
//! finite-difference stencils shared by every numerical path.

use num_complex::Complex64;

use crate::error::{Result, WvaError};

/// Uniform grid on `[p_min, p_max]` with an odd number of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    p_min: f64,
    p_max: f64,
    n_points: usize,
}

impl MomentumGrid {
    pub fn new(p_min: f64, p_max: f64, n_points: usize) -> Result<Self> {
        if !p_min.is_finite() || !p_max.is_finite() {
            return Err(WvaError::InvalidGrid("bounds must be finite".into()));
        }
        if p_max <= p_min {
            return Err(WvaError::InvalidGrid(format!(
                "p_max ({p_max}) must exceed p_min ({p_min})"
            )));
        }
        if n_points < 3 || n_points.is_multiple_of(2) {
            return Err(WvaError::InvalidGrid(format!(
                "n_points must be odd and >= 3, got {n_points}"
            )));
        }
        Ok(Self {
            p_min,
            p_max,
            n_points,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// Grid on the optimal-probe support `[-pi m / 2g, pi m / 2g]`.
    pub fn optimal_support(g: f64, multiplier: u32, n_points: usize) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(WvaError::InvalidParameter(format!(
                "coupling g must be positive, got {g}"
            )));
        }
        if multiplier == 0 {
            return Err(WvaError::InvalidParameter(
                "support multiplier must be >= 1".into(),
            ));
        }
        Self::symmetric(
            std::f64::consts::PI * f64::from(multiplier) / (2.0 * g),
            n_points,
        )
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.p_max
        } else {
            self.p_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Index of the node equal to `p` (to within a small fraction of the
    /// spacing), if there is one.
    pub fn node_index(&self, p: f64) -> Option<usize> {
        let h = self.spacing();
        let x = (p - self.p_min) / h;
        let i = x.round();
        if i < 0.0 || i >= self.n_points as f64 || (x - i).abs() > 1e-9 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Composite Simpson weights (h/3 · [1, 4, 2, 4, …, 4, 1]).
    pub fn simpson_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let n = self.n_points;
        (0..n)
            .map(|i| {
                let c = if i == 0 || i + 1 == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points);
        simpson_sum(self.spacing(), f.iter().copied(), 0.0)
    }

    pub fn integrate_complex(&self, f: &[Complex64]) -> Complex64 {
        debug_assert_eq!(f.len(), self.n_points);
        simpson_sum(self.spacing(), f.iter().copied(), Complex64::new(0.0, 0.0))
    }

    /// Fourth-order accurate derivative of sampled values: five-point
    /// central differences in the interior, one-sided five-point stencils
    /// on the first and last two nodes.
    pub fn derivative(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        assert_eq!(n, self.n_points, "sample count does not match grid");
        assert!(n >= 5, "fourth-order stencils need at least five nodes");
        let inv = 1.0 / (12.0 * self.spacing());
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for i in 2..n - 2 {
            d[i] = (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * inv;
        }
        d[0] = (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * inv;
        d[1] = (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * inv;
        d[n - 1] = (f[n - 1] * 25.0 - f[n - 2] * 48.0 + f[n - 3] * 36.0 - f[n - 4] * 16.0
            + f[n - 5] * 3.0)
            * inv;
        d[n - 2] = (f[n - 1] * 3.0 + f[n - 2] * 10.0 - f[n - 3] * 18.0 + f[n - 4] * 6.0
            - f[n - 5])
            * inv;
        d
    }

    /// Adjoint (transpose) of [`MomentumGrid::derivative`], i.e. `Dᵀ v`.
    pub fn derivative_transpose(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        assert_eq!(n, self.n_points, "sample count does not match grid");
        assert!(n >= 5, "fourth-order stencils need at least five nodes");
        let inv = 1.0 / (12.0 * self.spacing());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut scatter = |row: usize, stencil: &[(usize, f64)]| {
            for &(j, c) in stencil {
                out[j] += v[row] * (c * inv);
            }
        };
        for i in 2..n - 2 {
            scatter(
                i,
                &[(i - 2, 1.0), (i - 1, -8.0), (i + 1, 8.0), (i + 2, -1.0)],
            );
        }
        scatter(0, &[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)]);
        scatter(1, &[(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)]);
        scatter(
            n - 1,
            &[
                (n - 1, 25.0),
                (n - 2, -48.0),
                (n - 3, 36.0),
                (n - 4, -16.0),
                (n - 5, 3.0),
            ],
        );
        scatter(
            n - 2,
            &[
                (n - 1, 3.0),
                (n - 2, 10.0),
                (n - 3, -18.0),
                (n - 4, 6.0),
                (n - 5, -1.0),
            ],
        );
        out
    }

    /// Filon–Simpson evaluation of `∫ f(p) e^{ipq} dp` over the grid: the
    /// samples are interpolated piecewise-quadratically (the Simpson
    /// interpolant) and the oscillatory factor is integrated exactly, so the
    /// result stays accurate when `q·h` is not small.
    pub fn fourier_integral(&self, f: &[Complex64], q: f64) -> Complex64 {
        let n = f.len();
        debug_assert_eq!(n, self.n_points);
        let h = self.spacing();
        let theta = q * h;
        let (alpha, beta, gamma) = filon_coefficients(theta);
        let step = Complex64::from_polar(1.0, theta);
        let mut phase = Complex64::from_polar(1.0, q * self.p_min);
        let mut even = Complex64::new(0.0, 0.0);
        let mut odd = Complex64::new(0.0, 0.0);
        let first = f[0] * phase;
        let mut last = first;
        for (i, &fi) in f.iter().enumerate() {
            // Re-anchor the phase periodically to bound recurrence drift.
            if i % 256 == 0 {
                phase = Complex64::from_polar(1.0, q * self.point(i));
            }
            let term = fi * phase;
            if i % 2 == 1 {
                odd += term;
            } else if i == 0 || i + 1 == n {
                even += term * 0.5;
            } else {
                even += term;
            }
            last = term;
            phase *= step;
        }
        let i_unit = Complex64::new(0.0, 1.0);
        (-i_unit * alpha * (last - first) + even * beta + odd * gamma) * h
    }
}

fn simpson_sum<T>(h: f64, values: impl ExactSizeIterator<Item = T>, zero: T) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = values.len();
    let mut ends = zero;
    let mut odd = zero;
    let mut even = zero;
    for (i, v) in values.enumerate() {
        if i == 0 || i + 1 == n {
            ends = ends + v;
        } else if i % 2 == 1 {
            odd = odd + v;
        } else {
            even = even + v;
        }
    }
    (ends + odd * 4.0 + even * 2.0) * (h / 3.0)
}

fn filon_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < 0.1 {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let t4 = t2 * t2;
        let t6 = t4 * t2;
        let alpha = 2.0 * t3 / 45.0 - 2.0 * t3 * t2 / 315.0 + 2.0 * t3 * t4 / 4725.0;
        let beta = 2.0 / 3.0 + 2.0 * t2 / 15.0 - 4.0 * t4 / 105.0 + 2.0 * t6 / 567.0;
        let gamma = 4.0 / 3.0 - 2.0 * t2 / 15.0 + t4 / 210.0 - t6 / 11340.0;
        (alpha, beta, gamma)
    } else {
        let (s, c) = theta.sin_cos();
        let t3 = theta * theta * theta;
        let alpha = (theta * theta + theta * s * c - 2.0 * s * s) / t3;
        let beta = 2.0 * (theta * (1.0 + c * c) - 2.0 * s * c) / t3;
        let gamma = 4.0 * (s - theta * c) / t3;
        (alpha, beta, gamma)
    }
}

/// Smallest odd integer that is `>= n` (and at least 3).
pub fn odd_at_least(n: usize) -> usize {
    let n = n.max(3);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_or_tiny_point_counts() {
        assert!(MomentumGrid::new(0.0, 1.0, 4).is_err());
        assert!(MomentumGrid::new(0.0, 1.0, 1).is_err());
        assert!(MomentumGrid::new(1.0, 0.0, 5).is_err());
        assert!(MomentumGrid::new(0.0, 1.0, 5).is_ok());
    }

    #[test]
    fn last_point_is_exact() {
        let grid = MomentumGrid::new(-0.3, 0.7, 101).unwrap();
        assert_eq!(grid.point(100), 0.7);
        assert_eq!(grid.points().len(), 101);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let grid = MomentumGrid::new(-1.0, 2.0, 7).unwrap();
        let f: Vec<f64> = grid.points().map(|p| 3.0 * p * p * p - p + 2.0).collect();
        // ∫_{-1}^{2} (3p³ - p + 2) dp = 3·(16-1)/4 - (4-1)/2 + 6
        let exact = 45.0 / 4.0 - 1.5 + 6.0;
        assert!((grid.integrate(&f) - exact).abs() < 1e-12);
        let w = grid.simpson_weights();
        let via_weights: f64 = w.iter().zip(&f).map(|(w, f)| w * f).sum();
        assert!((via_weights - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_error_falls_sixteenfold_per_halving() {
        let err = |n| {
            let grid = MomentumGrid::new(0.0, 2.0, n).unwrap();
            let f: Vec<f64> = grid.points().map(f64::exp).collect();
            (grid.integrate(&f) - (2.0f64.exp() - 1.0)).abs()
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 15.0 && ratio < 17.0, "ratio {ratio}");
    }

    #[test]
    fn derivative_is_exact_for_quartics() {
        let grid = MomentumGrid::new(-1.0, 1.5, 11).unwrap();
        let f: Vec<Complex64> = grid
            .points()
            .map(|p| Complex64::new(p.powi(4) - 2.0 * p, 0.5 * p * p * p))
            .collect();
        let d = grid.derivative(&f);
        for (i, p) in grid.points().enumerate() {
            let exact = Complex64::new(4.0 * p.powi(3) - 2.0, 1.5 * p * p);
            assert!((d[i] - exact).norm() < 1e-10, "node {i}: {} vs {exact}", d[i]);
        }
    }

    #[test]
    fn derivative_transpose_is_the_adjoint() {
        let grid = MomentumGrid::new(0.0, 1.0, 9).unwrap();
        let u: Vec<Complex64> = (0..9)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let v: Vec<Complex64> = (0..9)
            .map(|i| Complex64::new((i as f64 * 1.7).cos(), i as f64 * 0.1))
            .collect();
        let du = grid.derivative(&u);
        let dtv = grid.derivative_transpose(&v);
        let lhs: Complex64 = v.iter().zip(&du).map(|(a, b)| a * b).sum();
        let rhs: Complex64 = dtv.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn filon_matches_gaussian_transform_at_large_frequency() {
        // ∫ e^{-p²/2} e^{ipq} dp = √(2π) e^{-q²/2}
        let grid = MomentumGrid::symmetric(12.0, 481).unwrap();
        let f: Vec<Complex64> = grid
            .points()
            .map(|p| Complex64::new((-0.5 * p * p).exp(), 0.0))
            .collect();
        for q in [0.0f64, 0.7, 3.0, 5.5] {
            let exact = (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * q * q).exp();
            let got = grid.fourier_integral(&f, q);
            assert!((got.re - exact).abs() < 1e-6, "q={q}: {got} vs {exact}");
            assert!(got.im.abs() < 1e-9);
        }
    }

    #[test]
    fn filon_reduces_to_simpson_at_zero_frequency() {
        let grid = MomentumGrid::new(-1.0, 3.0, 17).unwrap();
        let f: Vec<Complex64> = grid.points().map(|p| Complex64::new(p.cos(), p)).collect();
        let a = grid.fourier_integral(&f, 0.0);
        let b = grid.integrate_complex(&f);
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn filon_is_exact_for_piecewise_quadratic_box() {
        // f = 1 on [-a, a]: ∫ e^{ipq} = 2 sin(qa)/q for any q.
        let a = 2.0;
        let grid = MomentumGrid::symmetric(a, 9).unwrap();
        let f = vec![Complex64::new(1.0, 0.0); 9];
        for q in [0.05, 1.0, 40.0, 333.3] {
            let got = grid.fourier_integral(&f, q);
            let exact = 2.0 * (q * a).sin() / q;
            assert!((got.re - exact).abs() < 1e-12, "q={q}");
            assert!(got.im.abs() < 1e-12);
        }
    }
}
