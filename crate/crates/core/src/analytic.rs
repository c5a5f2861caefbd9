//! Closed-form reference values for the Gaussian and optimal probes.

use std::f64::consts::PI;

use crate::error::{Result, WvaError};
use crate::evolution::PostSelectedEvolution;
use crate::expectation::shift_report;
use crate::probe::{optimal_probe, recommended_support_points};
use crate::system::{compute_weak_value, Amplitude, Observable, SystemState};

const DEGENERATE_DENOMINATOR: f64 = 1e-12;
const ZERO_REAL_PART: f64 = 1e-12;
const EXTRAPOLATION_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianShiftPrediction {
    pub delta_q: f64,
    pub delta_p: f64,
    /// `D = 1 + ½(1-|A_w|²)(e^{-2g²W²}-1)`, the success weight relative to
    /// `|⟨φ_f|φ_i⟩|²`.
    pub denominator: f64,
}

/// Exact shifts of a Gaussian probe of momentum width `w`.
pub fn gaussian_exact_shifts(g: f64, w: f64, aw: Amplitude) -> Result<GaussianShiftPrediction> {
    let decay = (-2.0 * g * g * w * w).exp();
    let denominator = 1.0 + 0.5 * (1.0 - aw.norm_sqr()) * (decay - 1.0);
    if !(denominator.abs() >= DEGENERATE_DENOMINATOR) {
        return Err(WvaError::DegenerateDenominator { denominator });
    }
    Ok(GaussianShiftPrediction {
        delta_q: g * aw.re / denominator,
        delta_p: 2.0 * g * w * w * aw.im * decay / denominator,
        denominator,
    })
}

fn require_real_part(aw: Amplitude) -> Result<()> {
    if aw.re.abs() < ZERO_REAL_PART {
        Err(WvaError::ZeroRealPart)
    } else {
        Ok(())
    }
}

/// `g(|A_w|²+1) / (2 Re A_w)`
pub fn max_shift(g: f64, aw: Amplitude) -> Result<f64> {
    require_real_part(aw)?;
    Ok(g * (aw.norm_sqr() + 1.0) / (2.0 * aw.re))
}

/// `g√((Im A_w)²+1)`; never larger than `|max_shift|`.
pub fn shift_lower_bound(g: f64, aw: Amplitude) -> Result<f64> {
    require_real_part(aw)?;
    Ok(g * (aw.im * aw.im + 1.0).sqrt())
}

/// `∫|B(p)|⁻²dp` over `[-π/2g, π/2g]`.
pub fn integral_b_minus2(g: f64, aw: Amplitude) -> Result<f64> {
    require_real_part(aw)?;
    Ok(PI / (g * aw.re.abs()))
}

/// `∫|B(p)|⁻⁴dp` over `[-π/2g, π/2g]`.
pub fn integral_b_minus4(g: f64, aw: Amplitude) -> Result<f64> {
    let base = integral_b_minus2(g, aw)?;
    Ok((aw.norm_sqr() + 1.0) / (2.0 * aw.re * aw.re) * base)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalitySample {
    pub theta: f64,
    pub overlap: f64,
    pub q_final: f64,
    /// `⟨q̂⟩_f · |⟨φ_f|φ_i⟩|`
    pub product: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityLimit {
    pub samples: Vec<OrthogonalitySample>,
    /// Intercept at zero overlap of a least-squares line through the
    /// samples with the smallest overlaps.
    pub limit: f64,
}

/// Runs the optimal probe through the full pipeline along a family of
/// post-selections approaching orthogonality. Exactly orthogonal members are
/// skipped.
pub fn orthogonality_limit_check<F>(
    pre: &SystemState,
    post_family: F,
    thetas: &[f64],
    obs: &Observable,
    g: f64,
) -> Result<OrthogonalityLimit>
where
    F: Fn(f64) -> Result<SystemState>,
{
    let mut samples = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let post = post_family(theta)?;
        let weak = match compute_weak_value(pre, &post, obs) {
            Ok(w) => w,
            Err(WvaError::OrthogonalSelection { .. }) => continue,
            Err(e) => return Err(e),
        };
        let aw = weak.value();
        let evo = PostSelectedEvolution::new(g, weak)?;
        let probe = optimal_probe(g, aw, recommended_support_points(aw, 1))?;
        let report = shift_report(&evo, &probe)?;
        let overlap = weak.overlap().norm();
        samples.push(OrthogonalitySample {
            theta,
            overlap,
            q_final: report.q_final,
            product: report.q_final * overlap,
        });
    }
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.overlap, s.product)).collect();
    let limit = extrapolate_to_zero(&points)?;
    Ok(OrthogonalityLimit { samples, limit })
}

/// Intercept at zero of the least-squares line through the (up to) five
/// `(overlap, product)` pairs with the smallest overlaps.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> Result<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let used = &sorted[..sorted.len().min(EXTRAPOLATION_POINTS)];
    match used.len() {
        0 => Err(WvaError::InvalidParameter(
            "no non-orthogonal samples to extrapolate".into(),
        )),
        1 => Ok(used[0].1),
        n => {
            let n = n as f64;
            let mx = used.iter().map(|s| s.0).sum::<f64>() / n;
            let my = used.iter().map(|s| s.1).sum::<f64>() / n;
            let sxx: f64 = used.iter().map(|s| (s.0 - mx).powi(2)).sum();
            let sxy: f64 = used.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
            if sxx == 0.0 {
                return Ok(my);
            }
            Ok(my - sxy / sxx * mx)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MomentumGrid;
    use crate::probe::optimal_probe;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn showcase() -> Amplitude {
        Amplitude::new(3f64.sqrt(), 2.0 * 3f64.sqrt())
    }

    fn quadrature_b_power(g: f64, aw: Amplitude, power: i32, n: usize) -> f64 {
        let evo = PostSelectedEvolution::from_weak_value(g, aw).unwrap();
        let grid = MomentumGrid::optimal_support(g, 1, n).unwrap();
        let f: Vec<f64> = grid.points().map(|p| evo.b_norm_sqr(p).powi(-power)).collect();
        grid.integrate(&f)
    }

    #[test]
    fn gaussian_examples() {
        let r = gaussian_exact_shifts(0.1, 1.0, Amplitude::new(2.0, 0.0)).unwrap();
        assert!((r.delta_q - 0.194_231).abs() < 1e-6);
        assert_eq!(r.delta_p, 0.0);

        let aw = Amplitude::from_polar(1.0, 1.1);
        let r = gaussian_exact_shifts(0.4, 3.0, aw).unwrap();
        assert!((r.denominator - 1.0).abs() < 1e-15);
        assert!((r.delta_q - 0.4 * aw.re).abs() < 1e-15);

        let r = gaussian_exact_shifts(0.5, 1e-9, Amplitude::new(50.0, 3.0)).unwrap();
        assert!((r.delta_q - 25.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_denominator_bounds() {
        // D ≥ ½(1+e^{-2g²W²}) for every A_w, so only non-finite input degenerates.
        for aw in [Amplitude::new(0.0, 0.0), Amplitude::new(0.01, 0.0), Amplitude::new(40.0, -9.0)] {
            let r = gaussian_exact_shifts(3.0, 2.0, aw).unwrap();
            assert!(r.denominator >= 0.5);
        }
        let err = gaussian_exact_shifts(f64::NAN, 1.0, Amplitude::new(2.0, 0.0)).unwrap_err();
        assert!(matches!(err, WvaError::DegenerateDenominator { .. }));
    }

    #[test]
    fn max_shift_examples() {
        assert!((max_shift(0.1, Amplitude::new(1.0, 0.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!((max_shift(0.1, showcase()).unwrap() - 0.461_880_2).abs() < 1e-7);
        assert!((max_shift(0.1, Amplitude::new(2.0, 0.0)).unwrap() - 0.125).abs() < 1e-15);
        let a = max_shift(0.2, showcase()).unwrap();
        let b = max_shift(0.1, showcase()).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert_eq!(max_shift(0.1, Amplitude::new(0.0, 2.0)), Err(WvaError::ZeroRealPart));
    }

    #[test]
    fn lower_bound_examples() {
        let one = Amplitude::new(1.0, 0.0);
        assert_eq!(shift_lower_bound(0.3, one).unwrap(), 0.3);
        assert_eq!(max_shift(0.3, one).unwrap(), 0.3);
        let lb = shift_lower_bound(0.1, showcase()).unwrap();
        assert!((lb - 0.360_555_1).abs() < 1e-7);
        assert!(lb <= max_shift(0.1, showcase()).unwrap());
        assert_eq!(shift_lower_bound(0.1, Amplitude::new(0.0, 1.0)), Err(WvaError::ZeroRealPart));
    }

    #[test]
    fn integral_examples() {
        let one = Amplitude::new(1.0, 0.0);
        assert!((integral_b_minus2(0.1, one).unwrap() - 31.415_93).abs() < 1e-5);
        assert!((quadrature_b_power(0.1, one, 1, 101) - PI / 0.1).abs() < 1e-12);
        assert!((integral_b_minus4(0.1, one).unwrap() - PI / 0.1).abs() < 1e-12);

        let closed2 = integral_b_minus2(0.1, showcase()).unwrap();
        assert!((closed2 - 18.137_99).abs() < 1e-5);
        let quad2 = quadrature_b_power(0.1, showcase(), 1, 8193);
        assert!(((quad2 - closed2) / closed2).abs() < 1e-8);

        let closed4 = integral_b_minus4(0.1, showcase()).unwrap();
        assert!((closed4 - 48.367_983).abs() < 1e-6);
        let quad4 = quadrature_b_power(0.1, showcase(), 2, 8193);
        assert!(((quad4 - closed4) / closed4).abs() < 1e-7);

        let r = 2.5;
        let real = Amplitude::new(r, 0.0);
        let expected = (r * r + 1.0) / (2.0 * r * r) * PI / (0.1 * r);
        assert!((integral_b_minus4(0.1, real).unwrap() - expected).abs() < 1e-12);
        assert_eq!(
            integral_b_minus2(0.1, Amplitude::new(-1.5, 4.0)),
            integral_b_minus2(0.1, Amplitude::new(1.5, -2.0))
        );
    }

    #[test]
    fn normalization_constant_identity() {
        for aw in [showcase(), Amplitude::new(0.3, -2.0), Amplitude::new(-4.0, 1.0)] {
            let g = 0.25;
            let c2 = g * aw.re.abs() / PI;
            assert!((c2 * integral_b_minus2(g, aw).unwrap() - 1.0).abs() < 1e-14);
            // |ξ(0)|² of the normalized optimal probe is |C|² since B(0) = 1.
            let probe = optimal_probe(g, aw, recommended_support_points(aw, 1)).unwrap();
            let mid = probe.grid().len() / 2;
            assert!((probe.values()[mid].norm_sqr() / c2 - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn extrapolation_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (1..9).map(|k| (k as f64, 0.5 - 2.0 * k as f64)).collect();
        assert!((extrapolate_to_zero(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert!(extrapolate_to_zero(&[]).is_err());
        assert_eq!(extrapolate_to_zero(&[(0.1, 3.0)]).unwrap(), 3.0);
    }

    #[test]
    fn orthogonality_product_tends_to_half_coupling() {
        let g = 0.1;
        let pre = SystemState::from_real(&[1.0, 1.0]).unwrap();
        let obs = Observable::diagonal(&[1.0, -1.0]).unwrap();
        let family = |t: f64| SystemState::from_real(&[t.cos(), t.sin()]);
        let theta0 = 3.0 * FRAC_PI_4;
        // |overlap| = |sin δ| for θ = 3π/4 + δ.
        let thetas: Vec<f64> = [0.0, 1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2]
            .iter()
            .map(|d: &f64| theta0 + d)
            .collect();
        let out = orthogonality_limit_check(&pre, family, &thetas, &obs, g).unwrap();
        assert_eq!(out.samples.len(), thetas.len() - 1);
        assert!((out.limit - g / 2.0).abs() < 0.01 * g / 2.0, "{}", out.limit);
        for s in &out.samples {
            let d = s.theta - theta0;
            let exact = g / (2.0 * d.cos());
            assert!(((s.product - exact) / exact).abs() < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn bound_chain_holds(re in 0.05f64..5.0, sign in prop::bool::ANY, im in -5.0f64..5.0, g in 0.01f64..2.0) {
            let aw = Amplitude::new(if sign { re } else { -re }, im);
            let upper = max_shift(g, aw).unwrap().abs();
            let lower = shift_lower_bound(g, aw).unwrap();
            prop_assert!(upper >= lower * (1.0 - 1e-15));
            prop_assert!(lower >= g);
        }
    }
}
